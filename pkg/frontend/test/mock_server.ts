import type { ChatTurnPayload, ResultTable } from '../src/types.js';

export interface RecordedRequest {
  url: string;
  method: string;
  body: unknown;
}

export const FIG10_COLUMNS = [
  'n.name',
  'n.original_rule',
  'n.project_name',
  'n.category',
  'n.owner',
  'n.date',
];

export function fig10Table(rowCount = 10): ResultTable {
  const rows: string[][] = [];
  for (let i = 0; i < rowCount; i += 1) {
    rows.push([
      'RTX3050 6GB G6 96b DVI++DP',
      "If select A310 GPU/RTX 3050 GPU, PSU can't be 180w.",
      'ThinkCentre M70T Gen5',
      'VA',
      'huanghx11',
      '2024-05-16',
    ]);
  }
  return { columns: FIG10_COLUMNS, rows };
}

export function fig10Turn(question: string, mode: string): ChatTurnPayload {
  return {
    question,
    mode: mode as ChatTurnPayload['mode'],
    answer: 'Found 10 matching rule row(s). Projects: ThinkCentre M70T Gen5.',
    table: fig10Table(),
    trace: {
      keywords: { name_keys: ['3050'], project_keys: ['M70t Gen5'] },
      generated_query: "MATCH (n:Component) WHERE n.name CONTAINS '3050' RETURN n.name",
      attempts: 1,
      fallback_used: false,
      notes: [],
    },
  };
}

type Script = (request: RecordedRequest) => { status: number; body: unknown } | Promise<{ status: number; body: unknown }>;

/** Scripted stand-in for the rules service: records every request and
 *  answers from the provided script function. */
export function mockServer(script: Script) {
  const requests: RecordedRequest[] = [];
  const fetchImpl = (async (input: RequestInfo | URL, init?: RequestInit) => {
    const recorded: RecordedRequest = {
      url: String(input),
      method: init?.method ?? 'GET',
      body: init?.body ? JSON.parse(String(init.body)) : null,
    };
    requests.push(recorded);
    const reply = await script(recorded);
    return new Response(JSON.stringify(reply.body), {
      status: reply.status,
      headers: { 'Content-Type': 'application/json' },
    });
  }) as typeof fetch;
  return { requests, fetchImpl };
}

export function chatScript(): Script {
  return (request) => {
    if (request.url.endsWith('/chat')) {
      const body = request.body as { question: string; mode: string };
      return { status: 200, body: fig10Turn(body.question, body.mode) };
    }
    return { status: 404, body: { code: 'NotFound', message: 'no route' } };
  };
}
