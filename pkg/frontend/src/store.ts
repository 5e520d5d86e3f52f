// Console state: a pure reducer over server records. The console makes no
// decisions of its own; everything on screen is a render of this store.
//
// Records may arrive out of order (or duplicated) on flaky transports; the
// store buffers by sequence number and releases them strictly ordered, so the
// rendered log always equals the server's ordering.

import type { GuidanceRecord, ServerRecord } from "./protocol.js";

export interface LogEntry {
  seq: number;
  source: "guidance" | "chat-user" | "chat-agent" | "system";
  kind: string;
  text: string;
}

export interface ConsoleState {
  sessionId: string | null;
  connection: "idle" | "connecting" | "open" | "closed" | "error";
  latestFramePngB64: string | null;
  simState: string | null;
  trackedState: string | null;
  pointer: { x: number; y: number };
  planCursor: number;
  planLen: number;
  planDone: boolean;
  log: LogEntry[];
  lastSeq: number;
}

export function initialState(): ConsoleState {
  return {
    sessionId: null,
    connection: "idle",
    latestFramePngB64: null,
    simState: null,
    trackedState: null,
    pointer: { x: 0, y: 0 },
    planCursor: 0,
    planLen: 0,
    planDone: false,
    log: [],
    lastSeq: 0,
  };
}

let chatCounter = 0;

export function pushChat(state: ConsoleState, who: "chat-user" | "chat-agent",
                         text: string): ConsoleState {
  chatCounter += 1;
  return {
    ...state,
    log: [...state.log, { seq: -chatCounter, source: who, kind: "chat", text }],
  };
}

export function pushSystem(state: ConsoleState, text: string): ConsoleState {
  chatCounter += 1;
  return {
    ...state,
    log: [...state.log, { seq: -chatCounter, source: "system", kind: "system", text }],
  };
}

function applyOne(state: ConsoleState, record: ServerRecord): ConsoleState {
  const next = { ...state, lastSeq: record.seq };
  switch (record.type) {
    case "frame":
      next.latestFramePngB64 = record.png_b64;
      next.simState = record.sim.state;
      return next;
    case "track":
      next.trackedState = record.state;
      return next;
    case "guidance": {
      const g = record as GuidanceRecord;
      if (typeof g.plan_cursor === "number") next.planCursor = g.plan_cursor;
      if (typeof g.plan_len === "number") next.planLen = g.plan_len;
      if (typeof g.plan_done === "boolean") next.planDone = g.plan_done;
      next.log = [...state.log,
        { seq: g.seq, source: "guidance", kind: g.kind, text: g.text }];
      return next;
    }
    case "error":
      next.log = [...state.log,
        { seq: record.seq, source: "system", kind: "error", text: record.detail }];
      return next;
  }
}

export class RecordBuffer {
  private pending = new Map<number, ServerRecord>();
  private nextSeq = 1;

  // Returns records that are ready to apply, in exact sequence order.
  push(record: ServerRecord): ServerRecord[] {
    if (record.seq < this.nextSeq) return []; // duplicate
    this.pending.set(record.seq, record);
    const ready: ServerRecord[] = [];
    while (this.pending.has(this.nextSeq)) {
      ready.push(this.pending.get(this.nextSeq)!);
      this.pending.delete(this.nextSeq);
      this.nextSeq += 1;
    }
    return ready;
  }

  reset(): void {
    this.pending.clear();
    this.nextSeq = 1;
  }
}

export function applyRecords(state: ConsoleState, records: ServerRecord[]): ConsoleState {
  return records.reduce(applyOne, state);
}

export function guidanceLog(state: ConsoleState): LogEntry[] {
  return state.log.filter((e) => e.source === "guidance");
}
