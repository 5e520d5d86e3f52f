// Wire types for the screenflow session service.

export interface SessionInfo {
  session_id: string;
  welcome: string;
}

export interface ChatReply {
  prompt: string;
  phase: string;
  armed: boolean;
  steps?: number;
  trace?: [string, string][];
  error?: string;
}

export type PointerEventMsg =
  | { kind: "move"; x: number; y: number }
  | { kind: "activate" }
  | { kind: "release" };

export interface FrameRecord {
  type: "frame";
  seq: number;
  png_b64: string;
  sim: { state: string; kind: string; transitioned: boolean; pressed: string | null };
}

export interface TrackRecord {
  type: "track";
  seq: number;
  frame_index: number;
  state: string | null;
  transitioned: boolean;
  touchpoint: [number, number] | null;
  framing_ok: boolean;
  candidates_evaluated: number;
  elapsed_ms: number;
}

export interface GuidanceRecord {
  type: "guidance";
  seq: number;
  kind: string;
  text: string;
  slow?: boolean;
  direction?: string;
  target_element?: string;
  plan_cursor?: number;
  plan_len?: number;
  plan_done?: boolean;
}

export interface ErrorRecord {
  type: "error";
  seq: number;
  detail: string;
}

export type ServerRecord = FrameRecord | TrackRecord | GuidanceRecord | ErrorRecord;

export function parseRecord(data: string): ServerRecord {
  const obj = JSON.parse(data);
  if (!obj || typeof obj.type !== "string" || typeof obj.seq !== "number") {
    throw new Error(`malformed server record: ${data.slice(0, 80)}`);
  }
  return obj as ServerRecord;
}
