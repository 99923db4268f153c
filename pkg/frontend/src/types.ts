export type AgentMode = 'GraphAgent' | 'DocAgent';

export interface ResultTable {
  columns: string[];
  rows: string[][];
}

export interface KeywordSet {
  name_keys: string[];
  project_keys: string[];
}

export interface Trace {
  keywords: KeywordSet | null;
  generated_query: string | null;
  attempts: number;
  fallback_used: boolean;
  notes: string[];
}

export interface ChatTurnPayload {
  question: string;
  mode: AgentMode;
  answer: string;
  table: ResultTable | null;
  trace: Trace;
}

export interface GraphNode {
  id: string;
  name: string;
  original_rule: string;
  rule_index: number;
  rule_type: string;
  project_name: string;
  date: string;
  owner: string;
  category: string;
}

export interface NeighborEntry {
  edge: {
    src: string;
    dst: string;
    polarity: 'Should' | 'ShouldNot';
    provenance_rule_index: number;
  };
  node: GraphNode;
}

export interface NeighborhoodPayload {
  node: GraphNode;
  neighbors: NeighborEntry[];
}

export interface UiMessage {
  role: 'user' | 'assistant';
  text: string;
  table?: ResultTable;
  trace?: Trace;
  isError?: boolean;
}

export interface UiState {
  mode: AgentMode;
  history: UiMessage[];
  pending: boolean;
  selectedNode: string | null;
}
