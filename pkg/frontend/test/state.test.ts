import { describe, expect, it } from 'vitest';

import { ChatApi } from '../src/api.js';
import { ChatSession } from '../src/state.js';
import { chatScript, mockServer } from './mock_server.js';

const QUESTION = 'Please recommend me the rule about 3050 GFX card in M70t Gen5';

function session(script = chatScript()) {
  const server = mockServer(script);
  const api = new ChatApi('http://svc', server.fetchImpl);
  return { session: new ChatSession(api), requests: server.requests };
}

describe('submit_question', () => {
  it('appends the user message then the assistant answer with its table', async () => {
    const { session: s } = session();
    await s.submitQuestion(QUESTION);
    const history = s.getState().history;
    expect(history).toHaveLength(2);
    expect(history[0]).toMatchObject({ role: 'user', text: QUESTION });
    expect(history[1].role).toBe('assistant');
    expect(history[1].table?.columns).toHaveLength(6);
    expect(history[1].table?.rows).toHaveLength(10);
    expect(s.getState().pending).toBe(false);
  });

  it('sends the current mode in the request body', async () => {
    const { session: s, requests } = session();
    await s.submitQuestion(QUESTION);
    expect(requests[0].body).toEqual({ question: QUESTION, mode: 'GraphAgent' });
  });

  it('is a no-op on whitespace-only input', async () => {
    const { session: s, requests } = session();
    await s.submitQuestion('   \n ');
    expect(requests).toHaveLength(0);
    expect(s.getState().history).toHaveLength(0);
  });

  it('never issues a second request while one is pending', async () => {
    let release: (value: { status: number; body: unknown }) => void = () => {};
    const gate = new Promise<{ status: number; body: unknown }>((resolve) => {
      release = resolve;
    });
    const { session: s, requests } = session(() => gate);
    const first = s.submitQuestion(QUESTION);
    expect(s.getState().pending).toBe(true);
    const second = s.submitQuestion('another question while pending');
    await second;
    expect(requests).toHaveLength(1);
    release({ status: 200, body: { question: QUESTION, mode: 'GraphAgent', answer: 'ok', table: null, trace: { keywords: null, generated_query: null, attempts: 0, fallback_used: false, notes: [] } } });
    await first;
    expect(s.getState().pending).toBe(false);
    expect(requests).toHaveLength(1);
  });

  it('renders an ApiError inline as an assistant message and clears pending', async () => {
    const { session: s } = session(() => ({
      status: 409,
      body: { code: 'NoGraph', message: 'no graph loaded; ingest rules first' },
    }));
    await s.submitQuestion(QUESTION);
    const last = s.getState().history.at(-1)!;
    expect(last.role).toBe('assistant');
    expect(last.isError).toBe(true);
    expect(last.text).toContain('NoGraph');
    expect(s.getState().pending).toBe(false);
    expect(s.getRetryCandidate()).toBeNull();
  });

  it('keeps the question for retry on a network failure and preserves history', async () => {
    let failures = 0;
    const server = mockServer(chatScript());
    const flaky = (async (input: RequestInfo | URL, init?: RequestInit) => {
      if (failures === 0) {
        failures += 1;
        throw new TypeError('fetch failed');
      }
      return server.fetchImpl(input, init);
    }) as typeof fetch;
    const s = new ChatSession(new ChatApi('http://svc', flaky));
    await s.submitQuestion(QUESTION);
    expect(s.getState().history).toHaveLength(2);
    expect(s.getState().history[1].isError).toBe(true);
    expect(s.getRetryCandidate()).toBe(QUESTION);
    await s.retry();
    expect(s.getRetryCandidate()).toBeNull();
    const history = s.getState().history;
    expect(history).toHaveLength(4);
    expect(history[3].table?.rows).toHaveLength(10);
  });

  it('annotates empty graph-agent results with an explicit notice', async () => {
    const { session: s } = session((request) => {
      const body = request.body as { question: string; mode: string };
      return {
        status: 200,
        body: {
          question: body.question,
          mode: 'GraphAgent',
          answer: '',
          table: null,
          trace: { keywords: null, generated_query: null, attempts: 1, fallback_used: false, notes: [] },
        },
      };
    });
    await s.submitQuestion(QUESTION);
    expect(s.getState().history[1].text).toContain('No matching rules');
  });
});

describe('toggle_mode', () => {
  it('flips the mode field carried by the next request', async () => {
    const { session: s, requests } = session();
    s.toggleMode();
    await s.submitQuestion(QUESTION);
    expect((requests[0].body as { mode: string }).mode).toBe('DocAgent');
  });

  it('double toggle restores the original mode', () => {
    const { session: s } = session();
    const original = s.getState().mode;
    s.toggleMode();
    s.toggleMode();
    expect(s.getState().mode).toBe(original);
  });

  it('mode persists across messages within a session', async () => {
    const { session: s, requests } = session();
    s.toggleMode();
    await s.submitQuestion('first');
    await s.submitQuestion('second');
    expect(requests.map((r) => (r.body as { mode: string }).mode)).toEqual([
      'DocAgent',
      'DocAgent',
    ]);
  });

  it('is blocked while a request is pending', async () => {
    let release: (value: { status: number; body: unknown }) => void = () => {};
    const gate = new Promise<{ status: number; body: unknown }>((resolve) => {
      release = resolve;
    });
    const { session: s } = session(() => gate);
    const inflight = s.submitQuestion(QUESTION);
    expect(s.getState().pending).toBe(true);
    s.toggleMode();
    expect(s.getState().mode).toBe('GraphAgent');
    release({ status: 200, body: { question: QUESTION, mode: 'GraphAgent', answer: 'ok', table: null, trace: { keywords: null, generated_query: null, attempts: 0, fallback_used: false, notes: [] } } });
    await inflight;
  });
});

describe('history', () => {
  it('is append-only across operations', async () => {
    const { session: s } = session();
    const snapshots: number[] = [];
    s.subscribe((state) => snapshots.push(state.history.length));
    await s.submitQuestion('one');
    s.toggleMode();
    await s.submitQuestion('two');
    for (let i = 1; i < snapshots.length; i += 1) {
      expect(snapshots[i]).toBeGreaterThanOrEqual(snapshots[i - 1]);
    }
  });
});
