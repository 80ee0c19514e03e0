// Browser wiring: one view model, one WebSocket channel, DOM rendering.
// Stop is sent straight from the click handler, outside the rAF batching
// that coalesces normal renders.

import { drawToCanvas, paintOps } from "./canvas_view";
import { treeToSvg } from "./deptree_view";
import { WsChannel } from "./transport";
import { ConsoleViewModel } from "./viewmodel";

const $ = <T extends HTMLElement>(id: string): T =>
  document.getElementById(id) as T;

const channel = new WsChannel(`ws://${window.location.host}/ws`);
const vm = new ConsoleViewModel((message) => channel.send(message));

let renderQueued = false;
function scheduleRender(): void {
  if (renderQueued) return;
  renderQueued = true;
  requestAnimationFrame(() => {
    renderQueued = false;
    render();
  });
}

channel.onOpen = () => {
  vm.connect();
  scheduleRender();
};
channel.onClose = () => {
  vm.connection = "closed";
  scheduleRender();
};
channel.onMessage = (raw) => {
  vm.apply(raw);
  scheduleRender();
};

function render(): void {
  $("status").textContent =
    vm.connection === "open"
      ? `session ${vm.session}`
      : vm.connection;
  $("status").className = `status ${vm.connection}`;

  const banner = $("banner");
  banner.textContent = vm.banner ?? "";
  banner.style.display = vm.banner ? "block" : "none";

  $("deptree").innerHTML = vm.tree ? treeToSvg(vm.tree.tokens) : "";
  $("sdcs").innerHTML = vm.sdcs
    .map((item) => `<code>${JSON.stringify(item)}</code>`)
    .join("");

  const menuBox = $("menu");
  if (vm.menu) {
    const stale = vm.menu.stale;
    menuBox.innerHTML =
      `<h3>grasps on ${vm.menu.object}${stale ? " (stale)" : ""}</h3>` +
      vm.menu.candidates
        .map(
          (c) =>
            `<button class="grasp-btn" data-index="${c.index}" ${stale ? "disabled" : ""}>` +
            `${c.index}: q=${c.q.toFixed(3)}</button>`,
        )
        .join("");
    for (const btn of menuBox.querySelectorAll<HTMLButtonElement>(".grasp-btn")) {
      btn.onclick = () => vm.selectGraspIndex(Number(btn.dataset.index));
    }
  } else {
    menuBox.innerHTML = "";
  }

  $("joints").innerHTML = (vm.joints ?? new Array(7).fill(0))
    .map((q, i) => `<span>q${i + 1}=${q.toFixed(3)}</span>`)
    .join(" ");

  const canvas = $("canvas") as unknown as HTMLCanvasElement;
  const ctx = canvas.getContext("2d");
  if (ctx) drawToCanvas(ctx, paintOps(vm), canvas.width, canvas.height);

  $("log").innerHTML = vm.log
    .slice(-60)
    .map((e) => `<div><b>${e.label}</b> ${e.detail}</div>`)
    .reverse()
    .join("");
}

const input = $("command") as unknown as HTMLInputElement;
$("send").onclick = () => {
  vm.submitCommand(input.value);
  input.value = "";
};
input.addEventListener("keydown", (event) => {
  if (event.key === "Enter") {
    vm.submitCommand(input.value);
    input.value = "";
  }
});

$("stop").onclick = () => vm.pressStop(); // immediate, unbatched

window.addEventListener("keydown", (event) => {
  if (document.activeElement === input) return;
  vm.menuKey(event.key);
});

scheduleRender();
