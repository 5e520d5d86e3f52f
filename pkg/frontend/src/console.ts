// ConsoleCore: everything the console does apart from painting the DOM.
// The browser entry point and the scripted round-trip test share this class,
// so the tested behavior is exactly what the page runs.

import { SessionClient, StreamConnection, WebSocketFactory } from "./client.js";
import type { GuidanceRecord, PointerEventMsg, ServerRecord } from "./protocol.js";
import {
  ConsoleState,
  RecordBuffer,
  applyRecords,
  initialState,
  pushChat,
  pushSystem,
} from "./store.js";

const HEADINGS: Record<string, [number, number]> = {
  right: [1, 0],
  left: [-1, 0],
  down: [0, 1],
  up: [0, -1],
  "down-right": [Math.SQRT1_2, Math.SQRT1_2],
  "down-left": [-Math.SQRT1_2, Math.SQRT1_2],
  "up-right": [Math.SQRT1_2, -Math.SQRT1_2],
  "up-left": [-Math.SQRT1_2, -Math.SQRT1_2],
};

export class ConsoleCore {
  state: ConsoleState = initialState();
  private buffer = new RecordBuffer();
  private stream: StreamConnection | null = null;
  private waiters: ((g: GuidanceRecord) => void)[] = [];
  onChange: (state: ConsoleState) => void = () => {};

  constructor(private client: SessionClient) {}

  static forBaseUrl(baseUrl: string, wsFactory?: WebSocketFactory): ConsoleCore {
    return new ConsoleCore(new SessionClient(baseUrl, wsFactory));
  }

  private update(state: ConsoleState): void {
    this.state = state;
    this.onChange(state);
  }

  async connect(device: string, seed = 0): Promise<void> {
    this.update({ ...this.state, connection: "connecting" });
    try {
      const info = await this.client.createSession(device, "stationary", seed);
      this.buffer.reset();
      let next: ConsoleState = { ...initialState(), sessionId: info.session_id };
      next = pushChat(next, "chat-agent", info.welcome);
      this.update(next);
      this.stream = this.client.openStream(info.session_id, {
        onRecord: (record) => this.ingest(record),
        onClose: () => this.update({ ...this.state, connection: "closed" }),
        onError: () => this.update({ ...this.state, connection: "error" }),
      });
      await this.stream.ready();
      this.update({ ...this.state, connection: "open" });
    } catch (err) {
      this.update(pushSystem({ ...this.state, connection: "error" },
        `connection failed: ${(err as Error).message}`));
      throw err;
    }
  }

  ingest(record: ServerRecord): void {
    const ready = this.buffer.push(record);
    if (ready.length === 0) return;
    this.update(applyRecords(this.state, ready));
    for (const r of ready) {
      if (r.type === "guidance") {
        const waiter = this.waiters.shift();
        waiter?.(r as GuidanceRecord);
      }
    }
  }

  // One pointer event in, one guidance record out (after frame and track).
  sendPointer(event: PointerEventMsg): Promise<GuidanceRecord> {
    if (!this.stream) return Promise.reject(new Error("not connected"));
    const promise = new Promise<GuidanceRecord>((resolve) => {
      this.waiters.push(resolve);
    });
    if (event.kind === "move") {
      this.update({ ...this.state, pointer: { x: event.x, y: event.y } });
    }
    this.stream.sendPointer(event);
    return promise;
  }

  async chat(text: string): Promise<void> {
    if (!this.state.sessionId) throw new Error("not connected");
    this.update(pushChat(this.state, "chat-user", text));
    const reply = await this.client.chat(this.state.sessionId, text);
    let next = pushChat(this.state, "chat-agent", reply.prompt);
    if (reply.armed && reply.steps) {
      next = { ...next, planLen: reply.steps, planCursor: 0, planDone: false };
      next = pushSystem(next, `plan armed: ${reply.steps} steps`);
    }
    this.update(next);
  }

  // Follow guidance arrows with a fixed step until the plan completes.
  // This is the scripted stand-in for a user steering by the messages.
  async steerUntilDone(stepPx = 10, maxEvents = 400): Promise<GuidanceRecord[]> {
    let pos = { ...this.state.pointer };
    let event: PointerEventMsg = { kind: "move", x: pos.x, y: pos.y };
    const seen: GuidanceRecord[] = [];
    for (let i = 0; i < maxEvents; i += 1) {
      const g = await this.sendPointer(event);
      seen.push(g);
      if (g.plan_done) break;
      if (g.kind === "direction" && g.direction && HEADINGS[g.direction]) {
        const [hx, hy] = HEADINGS[g.direction];
        pos = { x: pos.x + hx * stepPx, y: pos.y + hy * stepPx };
        event = { kind: "move", x: pos.x, y: pos.y };
      } else if (g.kind === "at_target") {
        event = { kind: "activate" };
      } else {
        event = { kind: "move", x: pos.x, y: pos.y };
      }
    }
    return seen;
  }

  disconnect(): void {
    this.stream?.close();
    this.stream = null;
  }
}
