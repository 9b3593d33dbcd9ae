// Draft persistence: annotations and chain drafts survive page reloads
// until explicitly submitted or discarded.

export interface StorageLike {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

export class MemoryStorage implements StorageLike {
  private map = new Map<string, string>();

  getItem(key: string): string | null {
    return this.map.has(key) ? (this.map.get(key) as string) : null;
  }

  setItem(key: string, value: string): void {
    this.map.set(key, value);
  }

  removeItem(key: string): void {
    this.map.delete(key);
  }
}

export class DraftStore {
  constructor(
    private storage: StorageLike,
    private namespace = 'scoreloop',
  ) {}

  private key(kind: string, id: string): string {
    return `${this.namespace}:${kind}:${id}`;
  }

  save<T>(kind: string, id: string, draft: T): void {
    this.storage.setItem(this.key(kind, id), JSON.stringify(draft));
  }

  load<T>(kind: string, id: string): T | null {
    const raw = this.storage.getItem(this.key(kind, id));
    if (raw === null) return null;
    try {
      return JSON.parse(raw) as T;
    } catch {
      return null;
    }
  }

  discard(kind: string, id: string): void {
    this.storage.removeItem(this.key(kind, id));
  }
}

export function defaultDraftStore(): DraftStore {
  const storage =
    typeof localStorage !== 'undefined' ? localStorage : new MemoryStorage();
  return new DraftStore(storage);
}
