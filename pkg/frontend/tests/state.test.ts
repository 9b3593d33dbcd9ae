import { describe, expect, it } from 'vitest';

import { DraftStore, MemoryStorage } from '../src/drafts.js';
import { Keymap } from '../src/keyboard.js';
import { AppState } from '../src/state.js';

describe('AppState cursor', () => {
  it('stays within the loaded result list', () => {
    const state = new AppState();
    state.selectRun('r1', ['a', 'b', 'c']);
    expect(state.currentResult()).toBe('a');
    state.moveCursor(5);
    expect(state.currentResult()).toBe('c');
    state.moveCursor(-99);
    expect(state.currentResult()).toBe('a');
  });

  it('clamps the cursor when the result list shrinks', () => {
    const state = new AppState();
    state.selectRun('r1', ['a', 'b', 'c']);
    state.moveCursor(2);
    state.setResults(['a']);
    expect(state.currentResult()).toBe('a');
    state.setResults([]);
    expect(state.currentResult()).toBeNull();
  });

  it('tracks pending jobs without duplicates', () => {
    const state = new AppState();
    state.addJob('job-1');
    state.addJob('job-1');
    expect(state.snapshot().pendingJobs).toEqual(['job-1']);
    state.settleJob('job-1');
    expect(state.snapshot().pendingJobs).toEqual([]);
  });

  it('notifies subscribers with immutable snapshots', () => {
    const state = new AppState();
    const seen: string[][] = [];
    state.subscribe((s) => seen.push(s.resultIds));
    state.selectRun('r1', ['a']);
    seen[0].push('mutated');
    expect(state.snapshot().resultIds).toEqual(['a']);
  });
});

describe('DraftStore', () => {
  it('round-trips drafts and discards them', () => {
    const drafts = new DraftStore(new MemoryStorage());
    drafts.save('promotion', 'run:resp', { R2: { citation: 'x', text: 'y' } });
    expect(drafts.load('promotion', 'run:resp')).toEqual({
      R2: { citation: 'x', text: 'y' },
    });
    drafts.discard('promotion', 'run:resp');
    expect(drafts.load('promotion', 'run:resp')).toBeNull();
  });

  it('treats corrupted payloads as missing', () => {
    const storage = new MemoryStorage();
    storage.setItem('scoreloop:promotion:k', '{nope');
    const drafts = new DraftStore(storage);
    expect(drafts.load('promotion', 'k')).toBeNull();
  });
});

describe('Keymap', () => {
  const fakeEvent = (key: string, tagName?: string) => {
    let prevented = false;
    return {
      key,
      target: tagName ? { tagName } : null,
      preventDefault: () => {
        prevented = true;
      },
      get prevented() {
        return prevented;
      },
    };
  };

  it('dispatches bound keys and reports help text', () => {
    let hits = 0;
    const keymap = new Keymap().bind('j', 'next', () => {
      hits += 1;
    });
    const ev = fakeEvent('j');
    expect(keymap.handle(ev)).toBe(true);
    expect(hits).toBe(1);
    expect(ev.prevented).toBe(true);
    expect(keymap.help()).toEqual(['j: next']);
  });

  it('never steals keys from form fields', () => {
    let hits = 0;
    const keymap = new Keymap().bind('j', 'next', () => {
      hits += 1;
    });
    expect(keymap.handle(fakeEvent('j', 'INPUT'))).toBe(false);
    expect(keymap.handle(fakeEvent('j', 'TEXTAREA'))).toBe(false);
    expect(hits).toBe(0);
  });
});
