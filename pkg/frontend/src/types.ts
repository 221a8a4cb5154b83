// Wire types for the session API. These mirror the server's JSON exactly;
// everything crossing the wire is validated in schema.ts before use.

export type Polarity = "more" | "less" | "equal";
export type RequestKind = "freeform" | "question" | "sketch";

export interface ItemDoc {
  id: number;
  image_uri: string | null;
  attrs: number[];
  features?: number[];
}

export interface SessionDoc {
  session_id: string;
  mode: "live" | "simulated";
  policy: string;
  target_id: number | null;
  n_items: number;
  page_size: number;
  attribute_names: string[];
  iteration: number;
  top_page: ItemDoc[];
}

export interface RequestDoc {
  session_id: string;
  iteration: number;
  finished: boolean;
  request: {
    kind: RequestKind;
    attr?: number;
    attribute_name?: string;
    pivot?: ItemDoc;
  };
  top_page: ItemDoc[];
}

export interface FeedbackResult {
  session_id: string;
  iteration: number;
  action: string;
  kind: RequestKind;
  top_page: ItemDoc[];
  percentile_rank: number | null;
  reward: number | null;
  success: boolean;
  finished: boolean;
}

export interface HistoryRecord {
  iteration: number;
  action: string;
  kind: RequestKind;
  top_page: number[];
  percentile_rank: number | null;
  reward: number | null;
  success: boolean;
}

export interface HistoryDoc {
  session_id: string;
  mode: string;
  policy: string;
  target_id: number | null;
  iteration: number;
  finished: boolean;
  succeeded: boolean;
  initial_top_page: number[];
  initial_percentile_rank: number | null;
  records: HistoryRecord[];
}

export type FeedbackPayload =
  | { kind: "freeform"; attr: number; ref_id: number; polarity: Polarity }
  | { kind: "question"; response: Polarity }
  | { kind: "sketch"; exemplar_id: number }
  | { kind: "sketch"; embedding: number[] }
  | Record<string, never>; // simulated sessions post an empty body

export interface ApiErrorBody {
  error: string;
  detail: string;
}
