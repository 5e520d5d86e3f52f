// Thin client over the session service: REST for lifecycle and chat, a
// websocket for the pointer/guidance stream. The WebSocket constructor is
// injectable so the same client runs in browsers and in node tests.

import type { ChatReply, PointerEventMsg, ServerRecord, SessionInfo } from "./protocol.js";
import { parseRecord } from "./protocol.js";

export interface WebSocketLike {
  send(data: string): void;
  close(): void;
  onopen: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
}

export type WebSocketFactory = (url: string) => WebSocketLike;

export interface StreamHandlers {
  onRecord: (record: ServerRecord) => void;
  onOpen?: () => void;
  onClose?: () => void;
  onError?: (detail: string) => void;
}

export class SessionClient {
  constructor(
    private baseUrl: string,
    private wsFactory: WebSocketFactory = (url) =>
      new WebSocket(url) as unknown as WebSocketLike,
  ) {}

  async devices(): Promise<string[]> {
    const res = await fetch(`${this.baseUrl}/devices`);
    if (!res.ok) throw new Error(`devices failed: ${res.status}`);
    return (await res.json()).devices;
  }

  async createSession(device: string, profile = "stationary",
                      seed = 0): Promise<SessionInfo> {
    const res = await fetch(`${this.baseUrl}/sessions`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ device, profile, seed }),
    });
    if (!res.ok) {
      const body = await res.json().catch(() => ({}));
      throw new Error(body.detail ?? `create session failed: ${res.status}`);
    }
    return (await res.json()) as SessionInfo;
  }

  async chat(sessionId: string, text: string): Promise<ChatReply> {
    const res = await fetch(`${this.baseUrl}/sessions/${sessionId}/chat`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ text }),
    });
    if (!res.ok) {
      const body = await res.json().catch(() => ({}));
      throw new Error(body.detail ?? `chat failed: ${res.status}`);
    }
    return (await res.json()) as ChatReply;
  }

  openStream(sessionId: string, handlers: StreamHandlers): StreamConnection {
    const wsUrl = this.baseUrl.replace(/^http/, "ws") + `/sessions/${sessionId}/stream`;
    return new StreamConnection(this.wsFactory(wsUrl), handlers);
  }
}

export class StreamConnection {
  private openPromise: Promise<void>;

  constructor(private ws: WebSocketLike, handlers: StreamHandlers) {
    this.openPromise = new Promise((resolve, reject) => {
      ws.onopen = () => {
        handlers.onOpen?.();
        resolve();
      };
      ws.onerror = () => {
        handlers.onError?.("stream error");
        reject(new Error("stream error"));
      };
    });
    ws.onmessage = (ev) => handlers.onRecord(parseRecord(String(ev.data)));
    ws.onclose = () => handlers.onClose?.();
  }

  ready(): Promise<void> {
    return this.openPromise;
  }

  sendPointer(event: PointerEventMsg): void {
    this.ws.send(JSON.stringify(event));
  }

  close(): void {
    this.ws.close();
  }
}
