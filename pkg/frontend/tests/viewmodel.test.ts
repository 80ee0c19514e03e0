import { describe, expect, it } from "vitest";

import type { ClientMessage } from "../src/protocol";
import { ConsoleViewModel } from "../src/viewmodel";
import { graspMenu, sdcResult, tick, welcome } from "./fixtures";

function vmWithLog(): { vm: ConsoleViewModel; sent: ClientMessage[] } {
  const sent: ClientMessage[] = [];
  const vm = new ConsoleViewModel((m) => sent.push(m));
  return { vm, sent };
}

describe("view model reducer", () => {
  it("welcome opens the session and loads the world", () => {
    const { vm } = vmWithLog();
    vm.apply(welcome("abc"));
    expect(vm.connection).toBe("open");
    expect(vm.session).toBe("abc");
    expect(vm.world!.objects).toHaveLength(2);
  });

  it("sdc_result sets tree and clauses", () => {
    const { vm } = vmWithLog();
    vm.apply(welcome());
    vm.apply(sdcResult());
    expect(vm.tree!.tokens).toHaveLength(5);
    expect(vm.sdcs).toHaveLength(1);
  });

  it("ticks drive joints, ee and object poses", () => {
    const { vm } = vmWithLog();
    vm.apply(welcome());
    vm.apply(tick("s1", 2, 0.3));
    expect(vm.joints).toHaveLength(7);
    expect(vm.ee).toEqual([0.3, 0, 0.5]);
    expect(vm.lastTickTime).toBe(0.3);
  });

  it("stopped event halts the view", () => {
    const { vm } = vmWithLog();
    vm.apply(welcome());
    vm.apply(tick("s1", 2, 0.5, [{ type: "stopped" }]));
    expect(vm.halted).toBe(true);
    expect(vm.executing).toBe(false);
  });

  it("invalid message raises the banner and changes nothing else", () => {
    const { vm } = vmWithLog();
    vm.apply(welcome());
    const before = JSON.parse(vm.snapshot());
    vm.apply({ kind: "garbage" });
    expect(vm.banner).toContain("bad message");
    const after = JSON.parse(vm.snapshot());
    for (const key of Object.keys(before)) {
      if (key === "banner" || key === "log") continue;
      expect(after[key]).toEqual(before[key]);
    }
  });
});

describe("grasp menu interaction", () => {
  it("click and keyboard paths emit identical select_grasp messages", () => {
    const a = vmWithLog();
    a.vm.apply(welcome());
    a.vm.apply(graspMenu());
    const clicked = a.vm.selectGraspIndex(3);

    const b = vmWithLog();
    b.vm.apply(welcome());
    b.vm.apply(graspMenu());
    const typed = b.vm.menuKey("3");

    expect(clicked).not.toBeNull();
    expect(typed).toEqual(clicked);
    expect(a.sent[a.sent.length - 1]).toEqual(b.sent[b.sent.length - 1]);
    expect(clicked!.kind).toBe("select_grasp");
    expect(clicked!.payload).toEqual({ index: 3 });
  });

  it("menu of k renders k overlays downstream", () => {
    const { vm } = vmWithLog();
    vm.apply(welcome());
    vm.apply(graspMenu("s1", 3, 4));
    expect(vm.menu!.candidates).toHaveLength(4);
  });

  it("out-of-range selection emits nothing", () => {
    const { vm, sent } = vmWithLog();
    vm.apply(welcome());
    vm.apply(graspMenu("s1", 3, 2));
    expect(vm.selectGraspIndex(5)).toBeNull();
    expect(sent.filter((m) => m.kind === "select_grasp")).toHaveLength(0);
  });

  it("menu goes stale once the server starts the grasp", () => {
    const { vm } = vmWithLog();
    vm.apply(welcome());
    vm.apply(graspMenu());
    vm.apply(tick("s1", 4, 1.2, [{ type: "grasped", object: "bottle-1" }]));
    expect(vm.menu!.stale).toBe(true);
    expect(vm.selectGraspIndex(1)).toBeNull();
  });

  it("NoPendingMenu error also disables the menu", () => {
    const { vm } = vmWithLog();
    vm.apply(welcome());
    vm.apply(graspMenu());
    vm.apply({
      session: "s1",
      seq: 9,
      kind: "error",
      payload: { stage: "server", error: "NoPendingMenu", detail: "" },
    });
    expect(vm.menu!.stale).toBe(true);
  });
});

describe("stop button", () => {
  it("always emits immediately, even with no menu or execution", () => {
    const { vm, sent } = vmWithLog();
    vm.apply(welcome());
    vm.pressStop();
    vm.pressStop();
    const stops = sent.filter((m) => m.kind === "stop");
    expect(stops).toHaveLength(2); // server side is idempotent
  });
});

describe("pure view replay", () => {
  it("replaying the message log reproduces the display", () => {
    const log = [
      welcome(),
      sdcResult(),
      graspMenu(),
      tick("s1", 4, 0.1, []),
      tick("s1", 5, 0.2, [{ type: "grasped", object: "bottle-1" }]),
      tick("s1", 6, 0.3, [{ type: "completed" }]),
    ];
    const a = vmWithLog();
    a.vm.applyAll(log);
    const b = vmWithLog();
    b.vm.applyAll(log);
    expect(a.vm.snapshot()).toBe(b.vm.snapshot());

    // outbound traffic does not change what is rendered
    const c = vmWithLog();
    c.vm.applyAll(log.slice(0, 3));
    c.vm.submitCommand("move up");
    c.vm.applyAll(log.slice(3));
    expect(c.vm.snapshot()).toBe(a.vm.snapshot());
  });
});
