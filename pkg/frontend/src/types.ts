// Shapes of the service's JSON payloads (the `data` member of envelopes).

export interface Interval {
  start: number;
  end: number;
}

export interface EventRow {
  ts: number;
  type: string;
  location: string;
  count: number;
  message: string;
  attributes: Record<string, string>;
}

export interface AppRow {
  job_id: string;
  user: string;
  app_name: string;
  start_ts: number;
  end_ts: number;
  nodes: string[];
  exit_status: string;
}

export interface QueryData {
  interval: Interval;
  events: EventRow[];
  apps: AppRow[];
  truncated: boolean;
  limit: number;
}

export interface HeatmapData {
  cells: { node: string; count: number }[];
  max: number;
  total: number;
  topology_nodes: number;
}

export interface HistogramData {
  bin_width_ms: number;
  start: number;
  bins: { start: number; count: number }[];
  total: number;
}

export interface DistributionData {
  group_by: string;
  buckets: { key: string; count: number }[];
  total: number;
  double_counted: boolean;
}

export interface TeWindow {
  start: number;
  te_a_to_b: number;
  te_b_to_a: number;
  n_samples: number;
  low_support: boolean;
}

export interface TeData {
  type_a: string;
  type_b: string;
  window_ms: number;
  step_ms: number;
  bin_width_ms: number;
  windows: TeWindow[];
}

export interface TermRow {
  term: string;
  count: number;
  docs: number;
  score?: number;
}

export interface TermsData {
  total_docs: number;
  total_tokens?: number;
  terms: TermRow[];
}

export interface TypeInfo {
  type_id: string;
  display_name: string;
  category: string;
  severity: string;
}

export interface TopologyData {
  rows: number;
  cols: number;
  cages_per_cabinet: number;
  slots_per_cage: number;
  nodes_per_slot: number;
  total_nodes: number;
}

export interface PlacementsData {
  ts: number;
  placements: AppRow[];
}

export interface StreamFrame {
  kind: "events" | "heartbeat" | "overflow";
  seq?: number;
  events?: EventRow[];
}

export interface Envelope<T> {
  status: "ok" | "error";
  data?: T;
  truncated?: boolean;
  error?: { code: string; message: string };
}
