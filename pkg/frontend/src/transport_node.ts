// Node-side channel speaking the primary transport (newline-delimited JSON
// over TCP). Used by the test suite to drive the view model against a live
// server; never imported by the browser bundle.

import net from "node:net";

import type { ClientMessage } from "./protocol";
import type { Channel } from "./transport";

export class NdjsonChannel implements Channel {
  onMessage: (raw: unknown) => void = () => {};
  onOpen: () => void = () => {};
  onClose: () => void = () => {};
  private socket: net.Socket;
  private buffer = "";

  constructor(host: string, port: number) {
    this.socket = net.createConnection({ host, port });
    this.socket.setEncoding("utf-8");
    this.socket.on("connect", () => this.onOpen());
    this.socket.on("close", () => this.onClose());
    this.socket.on("data", (chunk: string) => {
      this.buffer += chunk;
      let idx: number;
      while ((idx = this.buffer.indexOf("\n")) >= 0) {
        const line = this.buffer.slice(0, idx).trim();
        this.buffer = this.buffer.slice(idx + 1);
        if (line) this.onMessage(line);
      }
    });
  }

  send(message: ClientMessage): void {
    this.socket.write(JSON.stringify(message) + "\n");
  }

  close(): void {
    this.socket.destroy();
  }
}
