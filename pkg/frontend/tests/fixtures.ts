// Shared message fixtures mirroring the server wire format.

import type { Token } from "../src/protocol";

// "Move forward by 30 centimetres" as the server parses it
export const CANONICAL_TOKENS: Token[] = [
  { index: 1, text: "move", pos: "VB", head: 0, dep: "root" },
  { index: 2, text: "forward", pos: "RB", head: 1, dep: "advmod" },
  { index: 3, text: "by", pos: "IN", head: 1, dep: "prep" },
  { index: 4, text: "30", pos: "CD", head: 5, dep: "nummod" },
  { index: 5, text: "centimetres", pos: "NNS", head: 3, dep: "pobj" },
];

export const WORLD = {
  table_z: 0,
  objects: [
    {
      id: "teddy-1",
      name: "TeddyBear",
      shape: "box" as const,
      dims: [0.12, 0.08, 0.2],
      pose: { position: [0.45, 0.18, 0] as [number, number, number], yaw: 0 },
    },
    {
      id: "bottle-1",
      name: "Bottle",
      shape: "cylinder" as const,
      dims: [0.035, 0.22],
      pose: { position: [0.45, -0.18, 0] as [number, number, number], yaw: 0 },
    },
  ],
  bins: [
    {
      id: "bin-1",
      region: {
        min: [0.12, -0.5, 0] as [number, number, number],
        max: [0.38, -0.3, 0.32] as [number, number, number],
      },
    },
  ],
};

export function welcome(session = "s1") {
  return {
    session,
    seq: 1,
    kind: "welcome",
    payload: { session, world: WORLD, menu_size: 5, eps: 0.05 },
  };
}

export function sdcResult(session = "s1", seq = 2) {
  return {
    session,
    seq,
    kind: "sdc_result",
    payload: {
      tree: {
        sentence: "Move forward by 30 centimetres",
        tokens: CANONICAL_TOKENS,
        conllu: "",
      },
      sdcs: [
        {
          event: "Move",
          object: null,
          place: "Forward",
          path: { magnitude: 30, unit: "Centimetres" },
        },
      ],
    },
  };
}

export function graspMenu(session = "s1", seq = 3, k = 3) {
  return {
    session,
    seq,
    kind: "grasp_menu",
    payload: {
      object: "bottle-1",
      clause: 0,
      eps: 0.05,
      candidates: Array.from({ length: k }, (_, i) => ({
        index: i + 1,
        center: [0.45 + i * 0.01, -0.18] as [number, number],
        depth: 0.2,
        angle: (i * Math.PI) / 6,
        width: 0.09,
        q: 0.9 - i * 0.1,
      })),
    },
  };
}

export function tick(
  session = "s1",
  seq = 4,
  time = 0.1,
  events: Array<Record<string, unknown>> = [],
) {
  return {
    session,
    seq,
    kind: "tick",
    payload: {
      time,
      joints: [0, 0, 0, 0, 0, 0, 0],
      ee: {
        position: [0.3, 0, 0.5] as [number, number, number],
        orientation: [0, 1, 0, 0] as [number, number, number, number],
      },
      gripper: "open",
      events,
      objects: WORLD.objects,
    },
  };
}
