// Console state. All render state is written exclusively by apply(), which
// folds validated server messages, so replaying a captured message log
// reproduces the display exactly (the console is a pure view).

import {
  command,
  hello,
  parseServerMessage,
  selectGrasp,
  stop,
  type Candidate,
  type ClientMessage,
  type Sdc,
  type ServerMessage,
  type Tick,
  type Tree,
  type Trigger,
  type World,
  type WorldObject,
} from "./protocol";

export interface LogEntry {
  label: string;
  detail: string;
}

export interface MenuState {
  object: string;
  eps: number;
  candidates: Candidate[];
  stale: boolean;
}

export type Outbound = (message: ClientMessage) => void;

export class ConsoleViewModel {
  connection: "idle" | "open" | "closed" = "idle";
  session: string | null = null;
  banner: string | null = null;
  world: World | null = null;
  tree: Tree | null = null;
  sdcs: Array<Sdc | Trigger> = [];
  menu: MenuState | null = null;
  joints: number[] | null = null;
  ee: [number, number, number] | null = null;
  gripper = "open";
  objects: WorldObject[] = [];
  executing = false;
  halted = false;
  lastTickTime: number | null = null;
  log: LogEntry[] = [];

  private seq = 0;

  constructor(private readonly out: Outbound) {}

  // -- outbound ---------------------------------------------------------------

  connect(): void {
    this.out(hello());
  }

  submitCommand(text: string): void {
    const trimmed = text.trim();
    if (!trimmed) return;
    this.out(command(++this.seq, trimmed));
  }

  /** Click path and keyboard path both come through here, so the emitted
   * wire message is identical for either interaction. */
  selectGraspIndex(index: number): ClientMessage | null {
    if (!this.menu || this.menu.stale) return null;
    if (index < 1 || index > this.menu.candidates.length) return null;
    const message = selectGrasp(++this.seq, index);
    this.out(message);
    return message;
  }

  menuKey(key: string): ClientMessage | null {
    if (!/^[1-9]$/.test(key)) return null;
    return this.selectGraspIndex(Number(key));
  }

  /** Always enabled; sent immediately, independent of any render batching. */
  pressStop(): void {
    this.out(stop(++this.seq));
  }

  // -- inbound ----------------------------------------------------------------

  apply(raw: unknown): void {
    const parsed = parseServerMessage(raw);
    if (!parsed.ok) {
      this.banner = `bad message: ${parsed.error}`;
      this.log.push({ label: "protocol", detail: parsed.error });
      return;
    }
    this.banner = null;
    const message = parsed.message;
    switch (message.kind) {
      case "welcome":
        this.connection = "open";
        this.session = message.payload.session;
        this.world = message.payload.world;
        this.objects = message.payload.world.objects;
        this.log.push({ label: "session", detail: message.payload.session });
        break;
      case "sdc_result":
        this.tree = message.payload.tree;
        this.sdcs = message.payload.sdcs;
        this.halted = false;
        break;
      case "trajectory":
        this.executing = true;
        this.log.push({
          label: "trajectory",
          detail: `${message.payload.level}, ${message.payload.samples} samples`,
        });
        break;
      case "grasp_menu":
        this.menu = {
          object: message.payload.object,
          eps: message.payload.eps,
          candidates: message.payload.candidates,
          stale: false,
        };
        this.log.push({
          label: "menu",
          detail: `${message.payload.candidates.length} grasps on ${message.payload.object}`,
        });
        break;
      case "tick":
        this.applyTick(message.payload);
        break;
      case "error":
        this.log.push({
          label: `error/${message.payload.stage}`,
          detail: `${message.payload.error}: ${message.payload.detail}`,
        });
        if (message.payload.error === "NoPendingMenu" && this.menu) {
          this.menu.stale = true;
        }
        break;
      case "lexicon_update":
        this.log.push({
          label: "lexicon",
          detail: `${message.payload.new_word} -> ${message.payload.target}`,
        });
        break;
      case "stop":
        this.log.push({ label: "stop", detail: "acknowledged" });
        break;
    }
  }

  applyAll(messages: unknown[]): void {
    for (const message of messages) this.apply(message);
  }

  private applyTick(tick: Tick): void {
    this.executing = true;
    this.joints = tick.joints;
    this.ee = tick.ee.position;
    this.gripper = tick.gripper;
    this.lastTickTime = tick.time;
    if (tick.objects) this.objects = tick.objects;
    for (const event of tick.events) {
      switch (event.type) {
        case "grasped":
          // selection is executing: the server has consumed the menu
          if (this.menu && this.menu.object === event["object"]) {
            this.menu.stale = true;
          }
          this.log.push({ label: "grasped", detail: String(event["object"]) });
          break;
        case "released":
          this.log.push({ label: "released", detail: String(event["object"]) });
          break;
        case "stopped":
          this.halted = true;
          this.executing = false;
          this.log.push({ label: "stopped", detail: `t=${tick.time.toFixed(2)}s` });
          break;
        case "completed":
          this.executing = false;
          break;
        case "fault":
          this.executing = false;
          this.log.push({ label: "fault", detail: String(event["text"] ?? "") });
          break;
      }
    }
  }

  /** Serializable snapshot used by the replay-purity tests. */
  snapshot(): string {
    return JSON.stringify({
      connection: this.connection,
      session: this.session,
      banner: this.banner,
      world: this.world,
      tree: this.tree,
      sdcs: this.sdcs,
      menu: this.menu,
      joints: this.joints,
      ee: this.ee,
      gripper: this.gripper,
      objects: this.objects,
      executing: this.executing,
      halted: this.halted,
      lastTickTime: this.lastTickTime,
      log: this.log,
    });
  }
}

export type { ServerMessage };
