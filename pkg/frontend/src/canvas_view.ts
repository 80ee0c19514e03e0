// Top-down table view. Scene painting is computed as a list of primitive
// draw operations (pure, deterministic) and applied to a 2D canvas; tests
// assert on the operation list without a DOM.

import type { ConsoleViewModel } from "./viewmodel";

export interface DrawOp {
  op: "clear" | "rect" | "poly" | "circle" | "segment" | "text" | "cross";
  tag: string;
  x?: number;
  y?: number;
  points?: Array<[number, number]>;
  r?: number;
  x2?: number;
  y2?: number;
  text?: string;
  filled?: boolean;
}

// world-space viewport (meters, table plane)
export const VIEW = { xMin: -0.15, xMax: 0.75, yMin: -0.65, yMax: 0.65 };

function boxCorners(
  cx: number,
  cy: number,
  lx: number,
  ly: number,
  yaw: number,
): Array<[number, number]> {
  const c = Math.cos(yaw);
  const s = Math.sin(yaw);
  const pts: Array<[number, number]> = [];
  for (const [dx, dy] of [
    [-lx / 2, -ly / 2],
    [lx / 2, -ly / 2],
    [lx / 2, ly / 2],
    [-lx / 2, ly / 2],
  ] as Array<[number, number]>) {
    pts.push([cx + c * dx - s * dy, cy + s * dx + c * dy]);
  }
  return pts;
}

export function paintOps(vm: ConsoleViewModel): DrawOp[] {
  const ops: DrawOp[] = [{ op: "clear", tag: "frame" }];
  if (!vm.world) return ops;
  ops.push({
    op: "rect",
    tag: "table",
    points: [
      [VIEW.xMin, VIEW.yMin],
      [VIEW.xMax, VIEW.yMax],
    ],
  });
  for (const bin of vm.world.bins) {
    ops.push({
      op: "rect",
      tag: `bin:${bin.id}`,
      points: [
        [bin.region.min[0], bin.region.min[1]],
        [bin.region.max[0], bin.region.max[1]],
      ],
    });
  }
  for (const obj of vm.objects) {
    const [x, y] = obj.pose.position;
    if (obj.shape === "box") {
      ops.push({
        op: "poly",
        tag: `object:${obj.id}`,
        points: boxCorners(x, y, obj.dims[0], obj.dims[1], obj.pose.yaw),
        filled: true,
      });
    } else {
      ops.push({
        op: "circle",
        tag: `object:${obj.id}`,
        x,
        y,
        r: obj.dims[0],
        filled: true,
      });
    }
    ops.push({ op: "text", tag: `label:${obj.id}`, x, y, text: obj.name });
  }
  if (vm.menu && !vm.menu.stale) {
    for (const cand of vm.menu.candidates) {
      const [cx, cy] = cand.center;
      const ux = Math.cos(cand.angle) * (cand.width / 2);
      const uy = Math.sin(cand.angle) * (cand.width / 2);
      ops.push({
        op: "segment",
        tag: `grasp:${cand.index}`,
        x: cx - ux,
        y: cy - uy,
        x2: cx + ux,
        y2: cy + uy,
      });
      ops.push({
        op: "text",
        tag: `grasp-label:${cand.index}`,
        x: cx,
        y: cy,
        text: `${cand.index}`,
      });
    }
  }
  if (vm.ee) {
    ops.push({ op: "cross", tag: "ee", x: vm.ee[0], y: vm.ee[1] });
  }
  if (vm.halted) {
    ops.push({ op: "text", tag: "halted", x: 0.3, y: 0, text: "STOPPED" });
  }
  return ops;
}

export function drawToCanvas(
  ctx: CanvasRenderingContext2D,
  ops: DrawOp[],
  widthPx: number,
  heightPx: number,
): void {
  const sx = widthPx / (VIEW.xMax - VIEW.xMin);
  const sy = heightPx / (VIEW.yMax - VIEW.yMin);
  // world x -> right, world y -> up
  const px = (x: number) => (x - VIEW.xMin) * sx;
  const py = (y: number) => heightPx - (y - VIEW.yMin) * sy;
  for (const op of ops) {
    switch (op.op) {
      case "clear":
        ctx.fillStyle = "#10141a";
        ctx.fillRect(0, 0, widthPx, heightPx);
        break;
      case "rect": {
        const [[x1, y1], [x2, y2]] = op.points!;
        ctx.strokeStyle = op.tag.startsWith("bin") ? "#e0b34c" : "#3a4354";
        ctx.lineWidth = 2;
        ctx.strokeRect(px(x1), py(y2), (x2 - x1) * sx, (y2 - y1) * sy);
        break;
      }
      case "poly": {
        ctx.beginPath();
        op.points!.forEach(([x, y], i) =>
          i === 0 ? ctx.moveTo(px(x), py(y)) : ctx.lineTo(px(x), py(y)),
        );
        ctx.closePath();
        ctx.fillStyle = "#4c7ee0cc";
        ctx.fill();
        break;
      }
      case "circle":
        ctx.beginPath();
        ctx.arc(px(op.x!), py(op.y!), op.r! * sx, 0, Math.PI * 2);
        ctx.fillStyle = "#4ce0a6cc";
        ctx.fill();
        break;
      case "segment":
        ctx.beginPath();
        ctx.moveTo(px(op.x!), py(op.y!));
        ctx.lineTo(px(op.x2!), py(op.y2!));
        ctx.strokeStyle = "#ff5d73";
        ctx.lineWidth = 3;
        ctx.stroke();
        break;
      case "cross": {
        const cx = px(op.x!);
        const cy = py(op.y!);
        ctx.strokeStyle = "#ffffff";
        ctx.lineWidth = 2;
        ctx.beginPath();
        ctx.moveTo(cx - 7, cy);
        ctx.lineTo(cx + 7, cy);
        ctx.moveTo(cx, cy - 7);
        ctx.lineTo(cx, cy + 7);
        ctx.stroke();
        break;
      }
      case "text":
        ctx.fillStyle = op.tag === "halted" ? "#ff5d73" : "#cfd6e4";
        ctx.font = op.tag === "halted" ? "bold 28px sans-serif" : "12px sans-serif";
        ctx.fillText(op.text!, px(op.x!) + 4, py(op.y!) - 4);
        break;
    }
  }
}
