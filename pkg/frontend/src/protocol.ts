// Wire protocol: one JSON envelope per NDJSON line / WebSocket text frame.
// Every inbound message is validated here before any state is rendered.

import { z } from "zod";

export const TokenSchema = z.object({
  index: z.number().int().min(1),
  text: z.string(),
  pos: z.string(),
  head: z.number().int().min(0),
  dep: z.string(),
});
export type Token = z.infer<typeof TokenSchema>;

export const TreeSchema = z.object({
  sentence: z.string(),
  tokens: z.array(TokenSchema).min(1),
  conllu: z.string(),
});
export type Tree = z.infer<typeof TreeSchema>;

export const PathSchema = z.object({
  magnitude: z.number(),
  unit: z.string(),
});

export const SdcSchema = z.object({
  event: z.string(),
  object: z.string().nullable(),
  place: z.string().nullable(),
  path: PathSchema.nullable(),
});
export type Sdc = z.infer<typeof SdcSchema>;

export const TriggerSchema = z.object({
  trigger: z.string(),
  new_word: z.string().optional(),
  target: z.string().optional(),
});
export type Trigger = z.infer<typeof TriggerSchema>;

export const ClauseSchema = z.union([SdcSchema, TriggerSchema]);

export const CandidateSchema = z.object({
  index: z.number().int().min(1),
  center: z.tuple([z.number(), z.number()]),
  depth: z.number(),
  angle: z.number(),
  width: z.number(),
  q: z.number().min(0).max(1),
});
export type Candidate = z.infer<typeof CandidateSchema>;

export const WorldObjectSchema = z.object({
  id: z.string(),
  name: z.string(),
  shape: z.enum(["box", "cylinder", "sphere"]),
  dims: z.array(z.number()).min(1),
  pose: z.object({
    position: z.tuple([z.number(), z.number(), z.number()]),
    yaw: z.number(),
  }),
});
export type WorldObject = z.infer<typeof WorldObjectSchema>;

export const WorldSchema = z.object({
  table_z: z.number(),
  objects: z.array(WorldObjectSchema),
  bins: z.array(
    z.object({
      id: z.string(),
      region: z.object({
        min: z.tuple([z.number(), z.number(), z.number()]),
        max: z.tuple([z.number(), z.number(), z.number()]),
      }),
    }),
  ),
});
export type World = z.infer<typeof WorldSchema>;

export const EventSchema = z
  .object({ type: z.string() })
  .catchall(z.unknown());

export const TickSchema = z.object({
  time: z.number(),
  joints: z.array(z.number()).length(7),
  ee: z.object({
    position: z.tuple([z.number(), z.number(), z.number()]),
    orientation: z.tuple([z.number(), z.number(), z.number(), z.number()]),
  }),
  gripper: z.string(),
  events: z.array(EventSchema),
  clause: z.number().optional(),
  objects: z.array(WorldObjectSchema).optional(),
});
export type Tick = z.infer<typeof TickSchema>;

const envelopeBase = {
  session: z.string(),
  seq: z.number().int(),
};

export const ServerMessageSchema = z.discriminatedUnion("kind", [
  z.object({
    ...envelopeBase,
    kind: z.literal("welcome"),
    payload: z.object({
      session: z.string(),
      world: WorldSchema,
      menu_size: z.number().int(),
      eps: z.number(),
    }),
  }),
  z.object({
    ...envelopeBase,
    kind: z.literal("sdc_result"),
    payload: z.object({ tree: TreeSchema, sdcs: z.array(ClauseSchema) }),
  }),
  z.object({
    ...envelopeBase,
    kind: z.literal("trajectory"),
    payload: z.object({
      clause: z.number(),
      level: z.string(),
      samples: z.number(),
      duration: z.number(),
    }),
  }),
  z.object({
    ...envelopeBase,
    kind: z.literal("grasp_menu"),
    payload: z.object({
      object: z.string(),
      clause: z.number().optional(),
      eps: z.number(),
      candidates: z.array(CandidateSchema),
    }),
  }),
  z.object({ ...envelopeBase, kind: z.literal("tick"), payload: TickSchema }),
  z.object({
    ...envelopeBase,
    kind: z.literal("error"),
    payload: z.object({
      stage: z.string(),
      error: z.string(),
      detail: z.string(),
    }),
  }),
  z.object({
    ...envelopeBase,
    kind: z.literal("lexicon_update"),
    payload: z.object({ new_word: z.string(), target: z.string() }),
  }),
  z.object({
    ...envelopeBase,
    kind: z.literal("stop"),
    payload: z.object({ acknowledged: z.boolean() }),
  }),
]);
export type ServerMessage = z.infer<typeof ServerMessageSchema>;

export type ParseResult =
  | { ok: true; message: ServerMessage }
  | { ok: false; error: string };

export function parseServerMessage(raw: unknown): ParseResult {
  let value = raw;
  if (typeof raw === "string") {
    try {
      value = JSON.parse(raw);
    } catch (err) {
      return { ok: false, error: `bad JSON: ${String(err)}` };
    }
  }
  const parsed = ServerMessageSchema.safeParse(value);
  if (!parsed.success) {
    return { ok: false, error: parsed.error.issues.map((i) => i.message).join("; ") };
  }
  return { ok: true, message: parsed.data };
}

// -- client -> server ---------------------------------------------------------

export interface ClientMessage {
  seq?: number;
  kind: "hello" | "command" | "select_grasp" | "stop";
  payload?: Record<string, unknown>;
}

export const hello = (): ClientMessage => ({ kind: "hello" });
export const command = (seq: number, text: string): ClientMessage => ({
  seq,
  kind: "command",
  payload: { text },
});
export const selectGrasp = (seq: number, index: number): ClientMessage => ({
  seq,
  kind: "select_grasp",
  payload: { index },
});
export const stop = (seq: number): ClientMessage => ({ seq, kind: "stop" });
