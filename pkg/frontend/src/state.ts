import { ApiRequestError, ChatApi } from './api.js';
import type { AgentMode, UiMessage, UiState } from './types.js';

export type StateListener = (state: UiState) => void;

const EMPTY_RESULT_NOTICE = 'No matching rules were returned for this question.';

/** Chat session state machine.
 *
 *  Invariants kept here rather than in the DOM layer:
 *  - at most one in-flight request (`pending`); submit and toggle are
 *    no-ops while a request is out;
 *  - history is append-only;
 *  - the mode field sent to the server is always the mode shown in the UI.
 */
export class ChatSession {
  private state: UiState = {
    mode: 'GraphAgent',
    history: [],
    pending: false,
    selectedNode: null,
  };
  private listeners: StateListener[] = [];
  private lastFailed: string | null = null;

  constructor(private readonly api: ChatApi) {}

  getState(): UiState {
    return this.state;
  }

  /** The question to offer for retry after a network failure, if any. */
  getRetryCandidate(): string | null {
    return this.lastFailed;
  }

  subscribe(listener: StateListener): void {
    this.listeners.push(listener);
  }

  private publish(next: Partial<UiState>): void {
    this.state = { ...this.state, ...next };
    for (const listener of this.listeners) listener(this.state);
  }

  toggleMode(): AgentMode {
    if (!this.state.pending) {
      this.publish({ mode: this.state.mode === 'GraphAgent' ? 'DocAgent' : 'GraphAgent' });
    }
    return this.state.mode;
  }

  selectNode(nodeId: string | null): void {
    this.publish({ selectedNode: nodeId });
  }

  async submitQuestion(text: string): Promise<void> {
    const question = text.trim();
    if (!question || this.state.pending) return;
    const mode = this.state.mode;
    const userMessage: UiMessage = { role: 'user', text: question };
    this.publish({ history: [...this.state.history, userMessage], pending: true });
    let assistant: UiMessage;
    try {
      const turn = await this.api.chat(question, mode);
      assistant = {
        role: 'assistant',
        text: turn.answer || EMPTY_RESULT_NOTICE,
        trace: turn.trace,
      };
      if (turn.table) {
        assistant.table = turn.table;
      } else if (turn.mode === 'GraphAgent') {
        assistant.text = `${assistant.text}\n${EMPTY_RESULT_NOTICE}`;
      }
      this.lastFailed = null;
    } catch (err) {
      if (err instanceof ApiRequestError) {
        assistant = {
          role: 'assistant',
          text: `${err.code}: ${err.message}`,
          isError: true,
        };
        this.lastFailed = null;
      } else {
        // transport-level failure: keep the question around for a retry
        assistant = {
          role: 'assistant',
          text: 'Network error; the question was not answered. Use retry to send it again.',
          isError: true,
        };
        this.lastFailed = question;
      }
    }
    this.publish({ history: [...this.state.history, assistant], pending: false });
  }

  async retry(): Promise<void> {
    const question = this.lastFailed;
    if (question === null) return;
    this.lastFailed = null;
    await this.submitQuestion(question);
  }
}
