// Browser entry point: wires ConsoleCore to the canvas, pointer, chat panel
// and guidance log. The page is a pure render of the store; no decisions
// happen here.

import { ConsoleCore } from "./console.js";
import { SpeechOutput } from "./speech.js";
import type { ConsoleState, LogEntry } from "./store.js";

const SERVICE_URL = (window as unknown as { SCREENFLOW_URL?: string })
  .SCREENFLOW_URL ?? "http://127.0.0.1:8787";
const MOVE_INTERVAL_MS = 100; // session fps

const core = ConsoleCore.forBaseUrl(SERVICE_URL);
const speech = new SpeechOutput();

const canvas = document.getElementById("screen") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const banner = document.getElementById("banner")!;
const deviceSelect = document.getElementById("device") as HTMLSelectElement;
const connectBtn = document.getElementById("connect") as HTMLButtonElement;
const speechToggle = document.getElementById("speech") as HTMLInputElement;
const chatLog = document.getElementById("chat-log")!;
const chatInput = document.getElementById("chat-input") as HTMLInputElement;
const chatSend = document.getElementById("chat-send") as HTMLButtonElement;
const guidanceLogEl = document.getElementById("guidance-log")!;
const progress = document.getElementById("progress")!;
const statusEl = document.getElementById("status")!;

let lastSpokenSeq = 0;
let lastMoveSent = 0;

function renderLog(el: HTMLElement, entries: LogEntry[]): void {
  el.replaceChildren(
    ...entries.map((e) => {
      const div = document.createElement("div");
      div.className = `entry ${e.source} ${e.kind}`;
      div.textContent = e.text;
      return div;
    }),
  );
  el.scrollTop = el.scrollHeight;
}

function render(state: ConsoleState): void {
  statusEl.textContent = state.connection;
  banner.classList.toggle("hidden", state.connection !== "error");
  if (state.latestFramePngB64) {
    const img = new Image();
    img.onload = () => ctx.drawImage(img, 0, 0, canvas.width, canvas.height);
    img.src = `data:image/png;base64,${state.latestFramePngB64}`;
  }
  renderLog(chatLog, state.log.filter((e) => e.source !== "guidance"));
  const guidance = state.log.filter((e) => e.source === "guidance");
  renderLog(guidanceLogEl, guidance.slice(-50));
  progress.textContent = state.planLen
    ? `plan ${state.planDone ? "complete" : `step ${state.planCursor + 1}/${state.planLen}`}`
    : "no plan armed";
  const newest = guidance[guidance.length - 1];
  if (newest && newest.seq > lastSpokenSeq) {
    lastSpokenSeq = newest.seq;
    speech.speak(newest.text);
  }
}

core.onChange = render;

async function populateDevices(): Promise<void> {
  try {
    const devices = await new (await import("./client.js")).SessionClient(SERVICE_URL)
      .devices();
    deviceSelect.replaceChildren(
      ...devices.map((d) => {
        const opt = document.createElement("option");
        opt.value = d;
        opt.textContent = d;
        return opt;
      }),
    );
  } catch {
    banner.classList.remove("hidden");
  }
}

connectBtn.addEventListener("click", () => {
  core.disconnect();
  core.connect(deviceSelect.value).catch(() => undefined);
});

speechToggle.addEventListener("change", () => {
  speech.enabled = speechToggle.checked;
});

function canvasToScreen(ev: MouseEvent): { x: number; y: number } {
  const rect = canvas.getBoundingClientRect();
  // frames are 320x240 with the screen plane warped inside; the simulator
  // clamps marker coordinates, so a simple proportional map suffices
  const fx = ((ev.clientX - rect.left) / rect.width) * 320;
  const fy = ((ev.clientY - rect.top) / rect.height) * 240;
  // undo the stationary base placement of the screen quad (approximate)
  const x = ((fx - 34) / (286 - 34)) * 256;
  const y = ((fy - 26) / (215 - 26)) * 192;
  return { x, y };
}

canvas.addEventListener("mousemove", (ev) => {
  const now = Date.now();
  if (now - lastMoveSent < MOVE_INTERVAL_MS || core.state.connection !== "open") return;
  lastMoveSent = now;
  const { x, y } = canvasToScreen(ev);
  core.sendPointer({ kind: "move", x, y }).catch(() => undefined);
});

canvas.addEventListener("click", () => {
  if (core.state.connection !== "open") return;
  core.sendPointer({ kind: "activate" }).catch(() => undefined);
});

async function sendChat(): Promise<void> {
  const text = chatInput.value.trim();
  if (!text) return; // empty send ignored
  chatInput.value = "";
  await core.chat(text).catch(() => undefined);
}

chatSend.addEventListener("click", () => void sendChat());
chatInput.addEventListener("keydown", (ev) => {
  if (ev.key === "Enter") void sendChat();
});

void populateDevices();
