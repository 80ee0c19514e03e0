import { describe, expect, it } from "vitest";

import { paintOps } from "../src/canvas_view";
import { ConsoleViewModel } from "../src/viewmodel";
import { graspMenu, tick, welcome } from "./fixtures";

function vm(): ConsoleViewModel {
  return new ConsoleViewModel(() => {});
}

describe("top-down canvas painting", () => {
  it("draws table, bins and both objects after welcome", () => {
    const view = vm();
    view.apply(welcome());
    const ops = paintOps(view);
    const tags = ops.map((o) => o.tag);
    expect(tags).toContain("table");
    expect(tags).toContain("bin:bin-1");
    expect(tags).toContain("object:teddy-1");
    expect(tags).toContain("object:bottle-1");
  });

  it("a menu of k yields k grasp overlays", () => {
    const view = vm();
    view.apply(welcome());
    view.apply(graspMenu("s1", 2, 4));
    const overlays = paintOps(view).filter((o) => o.tag.startsWith("grasp:"));
    expect(overlays).toHaveLength(4);
    // each overlay is a jaw segment centered at the candidate position
    const first = overlays[0];
    expect(first.op).toBe("segment");
    expect((first.x! + first.x2!) / 2).toBeCloseTo(0.45, 6);
  });

  it("stale menus draw no overlays", () => {
    const view = vm();
    view.apply(welcome());
    view.apply(graspMenu());
    view.apply(tick("s1", 4, 0.2, [{ type: "grasped", object: "bottle-1" }]));
    const overlays = paintOps(view).filter((o) => o.tag.startsWith("grasp:"));
    expect(overlays).toHaveLength(0);
  });

  it("halted view shows the stop marker and ee crosshair follows ticks", () => {
    const view = vm();
    view.apply(welcome());
    view.apply(tick("s1", 2, 0.4, [{ type: "stopped" }]));
    const ops = paintOps(view);
    expect(ops.some((o) => o.tag === "halted")).toBe(true);
    const ee = ops.find((o) => o.tag === "ee")!;
    expect([ee.x, ee.y]).toEqual([0.3, 0]);
  });

  it("is deterministic for the same state", () => {
    const view = vm();
    view.apply(welcome());
    view.apply(graspMenu());
    expect(JSON.stringify(paintOps(view))).toBe(JSON.stringify(paintOps(view)));
  });
});
