import { describe, expect, it } from "vitest";

import { parseServerMessage } from "../src/protocol";
import { graspMenu, sdcResult, tick, welcome } from "./fixtures";

describe("protocol validation", () => {
  it("accepts every well-formed server message", () => {
    for (const message of [welcome(), sdcResult(), graspMenu(), tick()]) {
      const parsed = parseServerMessage(message);
      expect(parsed.ok, JSON.stringify(parsed)).toBe(true);
    }
  });

  it("accepts serialized lines too", () => {
    const parsed = parseServerMessage(JSON.stringify(tick()));
    expect(parsed.ok).toBe(true);
  });

  it("rejects unknown kinds", () => {
    const parsed = parseServerMessage({
      session: "s",
      seq: 1,
      kind: "telemetry",
      payload: {},
    });
    expect(parsed.ok).toBe(false);
  });

  it("rejects a tick with the wrong joint count", () => {
    const bad = tick();
    bad.payload.joints = [0, 0, 0];
    expect(parseServerMessage(bad).ok).toBe(false);
  });

  it("rejects malformed JSON text", () => {
    expect(parseServerMessage("{nope").ok).toBe(false);
  });

  it("rejects a grasp candidate with q outside [0,1]", () => {
    const bad = graspMenu();
    bad.payload.candidates[0].q = 1.5;
    expect(parseServerMessage(bad).ok).toBe(false);
  });
});
