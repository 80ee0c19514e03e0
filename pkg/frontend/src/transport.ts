// Browser transport: the server's WebSocket bridge carries the same JSON
// messages as the TCP NDJSON port, one per text frame.

import type { ClientMessage } from "./protocol";

export interface Channel {
  send(message: ClientMessage): void;
  close(): void;
  onMessage: (raw: unknown) => void;
  onOpen: () => void;
  onClose: () => void;
}

export class WsChannel implements Channel {
  onMessage: (raw: unknown) => void = () => {};
  onOpen: () => void = () => {};
  onClose: () => void = () => {};
  private socket: WebSocket;

  constructor(url: string) {
    this.socket = new WebSocket(url);
    this.socket.onopen = () => this.onOpen();
    this.socket.onclose = () => this.onClose();
    this.socket.onmessage = (event: MessageEvent) => this.onMessage(event.data);
  }

  send(message: ClientMessage): void {
    this.socket.send(JSON.stringify(message));
  }

  close(): void {
    this.socket.close();
  }
}
