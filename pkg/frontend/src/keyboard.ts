// Minimal keymap so every screen is drivable without a pointer.

export interface Binding {
  key: string;
  description: string;
  handler: () => void;
}

export class Keymap {
  private bindings = new Map<string, Binding>();

  bind(key: string, description: string, handler: () => void): this {
    this.bindings.set(key, { key, description, handler });
    return this;
  }

  handle(event: Pick<KeyboardEvent, 'key' | 'target' | 'preventDefault'>): boolean {
    const target = event.target as { tagName?: string } | null;
    const tag = target?.tagName?.toLowerCase();
    if (tag === 'input' || tag === 'textarea' || tag === 'select') {
      return false; // never steal keys from form fields
    }
    const binding = this.bindings.get(event.key);
    if (!binding) return false;
    event.preventDefault();
    binding.handler();
    return true;
  }

  attach(target: { addEventListener(type: string, cb: (ev: KeyboardEvent) => void): void }): void {
    target.addEventListener('keydown', (ev) => this.handle(ev));
  }

  help(): string[] {
    return [...this.bindings.values()].map((b) => `${b.key}: ${b.description}`);
  }
}
