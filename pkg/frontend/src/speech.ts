// Optional speech output via the browser's built-in synthesis. Off by
// default; guidance text is spoken only while the toggle is on.

export class SpeechOutput {
  enabled = false;

  speak(text: string): void {
    if (!this.enabled) return;
    if (typeof window === "undefined" || !("speechSynthesis" in window)) return;
    window.speechSynthesis.cancel();
    window.speechSynthesis.speak(new SpeechSynthesisUtterance(text));
  }
}
