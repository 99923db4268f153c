import type {
  AgentMode,
  ChatTurnPayload,
  NeighborhoodPayload,
  ResultTable,
} from './types.js';

/** Error body returned by every failing endpoint: {code, message}. */
export class ApiRequestError extends Error {
  constructor(
    public readonly code: string,
    message: string,
    public readonly status: number,
  ) {
    super(message);
    this.name = 'ApiRequestError';
  }
}

declare global {
  interface Window {
    COMPATKG_API?: string;
  }
}

/** Base URL resolution: explicit argument, then the runtime global, then
 *  same-origin relative paths. */
export function resolveBaseUrl(explicit?: string): string {
  if (explicit !== undefined) return explicit.replace(/\/$/, '');
  if (typeof window !== 'undefined' && window.COMPATKG_API) {
    return window.COMPATKG_API.replace(/\/$/, '');
  }
  return '';
}

export class ChatApi {
  private readonly baseUrl: string;
  private readonly fetchImpl: typeof fetch;

  constructor(baseUrl?: string, fetchImpl?: typeof fetch) {
    this.baseUrl = resolveBaseUrl(baseUrl);
    this.fetchImpl = fetchImpl ?? fetch.bind(globalThis);
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    let body: unknown = null;
    try {
      body = await response.json();
    } catch {
      // non-JSON bodies only happen when something other than the API answered
    }
    if (!response.ok) {
      const err = (body ?? {}) as { code?: string; message?: string };
      throw new ApiRequestError(
        err.code ?? 'Internal',
        err.message ?? `request failed with status ${response.status}`,
        response.status,
      );
    }
    return body as T;
  }

  chat(question: string, mode: AgentMode): Promise<ChatTurnPayload> {
    return this.request<ChatTurnPayload>('/chat', {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ question, mode }),
    });
  }

  query(text: string): Promise<ResultTable> {
    return this.request<ResultTable>('/query', {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ query: text }),
    });
  }

  /** Resolve a display name to its node id via the query endpoint. */
  async nodeIdByName(name: string): Promise<string | null> {
    const literal = name.replace(/\\/g, '\\\\').replace(/'/g, "\\'");
    const table = await this.query(`MATCH (n) WHERE n.name = '${literal}' RETURN n.id`);
    return table.rows.length ? table.rows[0][0] : null;
  }

  neighbors(nodeId: string): Promise<NeighborhoodPayload> {
    return this.request<NeighborhoodPayload>(
      `/graph/nodes/${encodeURIComponent(nodeId)}/neighbors?direction=both`,
    );
  }

  stats(): Promise<Record<string, unknown>> {
    return this.request('/graph/stats');
  }
}
