// View state: current run/session selection, the instance cursor, and
// pending job ids. The cursor is always clamped into the loaded result
// list, and nothing here ever talks to the network.

export interface ViewState {
  runId: string | null;
  sessionId: string | null;
  resultIds: string[];
  cursor: number;
  pendingJobs: string[];
}

export class AppState {
  private state: ViewState = {
    runId: null,
    sessionId: null,
    resultIds: [],
    cursor: 0,
    pendingJobs: [],
  };

  private listeners: ((state: ViewState) => void)[] = [];

  snapshot(): ViewState {
    return {
      ...this.state,
      resultIds: [...this.state.resultIds],
      pendingJobs: [...this.state.pendingJobs],
    };
  }

  subscribe(listener: (state: ViewState) => void): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private emit(): void {
    for (const listener of this.listeners) listener(this.snapshot());
  }

  private clampCursor(): void {
    const max = Math.max(0, this.state.resultIds.length - 1);
    this.state.cursor = Math.min(Math.max(0, this.state.cursor), max);
  }

  selectRun(runId: string | null, resultIds: string[] = []): void {
    this.state.runId = runId;
    this.state.resultIds = [...resultIds];
    this.state.cursor = 0;
    this.emit();
  }

  selectSession(sessionId: string | null): void {
    this.state.sessionId = sessionId;
    this.emit();
  }

  setResults(resultIds: string[]): void {
    this.state.resultIds = [...resultIds];
    this.clampCursor();
    this.emit();
  }

  moveCursor(delta: number): string | null {
    this.state.cursor += delta;
    this.clampCursor();
    this.emit();
    return this.currentResult();
  }

  currentResult(): string | null {
    return this.state.resultIds[this.state.cursor] ?? null;
  }

  addJob(jobId: string): void {
    if (!this.state.pendingJobs.includes(jobId)) {
      this.state.pendingJobs.push(jobId);
      this.emit();
    }
  }

  settleJob(jobId: string): void {
    this.state.pendingJobs = this.state.pendingJobs.filter((j) => j !== jobId);
    this.emit();
  }
}
