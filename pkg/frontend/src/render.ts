/** DOM/SVG rendering for the session view.
 *
 * Numeric fields are rendered with String(value), full precision: what
 * the API returned is what the page shows. Bar widths and chart
 * coordinates are the only rounded quantities, and they are purely
 * visual.
 */

import type {
  SessionViewModel,
  StepMarker,
  TrajectoryPoint,
} from "./viewmodel.js";

const SVG_NS = "http://www.w3.org/2000/svg";

export interface RenderHandlers {
  onAction?: (index: number) => void;
}

function el(
  tag: string,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElement {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

function svgEl(
  tag: string,
  attrs: Record<string, string> = {},
): SVGElement {
  const node = document.createElementNS(SVG_NS, tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  return node;
}

function beliefSection(vm: SessionViewModel): HTMLElement {
  const section = el("section", { class: "belief", "data-testid": "belief" });
  section.appendChild(el("h2", {}, "Defender belief"));
  for (const bar of vm.beliefBars) {
    const row = el("div", { class: "belief-row", "data-state": bar.state });
    row.appendChild(el("span", { class: "state-name" }, bar.state));
    const track = el("div", { class: "bar-track" });
    const fill = el("div", { class: "bar-fill" });
    fill.style.width = `${Math.min(100, Math.max(0, bar.prob * 100))}%`;
    track.appendChild(fill);
    row.appendChild(track);
    row.appendChild(
      el("span", { class: "prob", "data-testid": `belief-${bar.state}` },
        String(bar.prob)),
    );
    section.appendChild(row);
  }
  return section;
}

function statusSection(vm: SessionViewModel): HTMLElement {
  const section = el("section", { class: "status" });
  section.appendChild(el("h2", {}, `${vm.model} / step ${vm.step}`));
  const dl = el("dl");
  const pairs: Array<[string, string, string]> = [
    ["Observation", vm.observationText, "observation"],
    ["Last reward", vm.lastReward === null ? "none yet" : String(vm.lastReward),
      "last-reward"],
    ["Discounted return", String(vm.cumulativeReward), "cumulative-reward"],
    ["Suggested action", vm.suggested ?? "no strategy loaded", "suggested"],
  ];
  for (const [label, value, testid] of pairs) {
    dl.appendChild(el("dt", {}, label));
    dl.appendChild(el("dd", { "data-testid": testid }, value));
  }
  section.appendChild(dl);
  if (vm.done) {
    section.appendChild(
      el("div", { class: "finished", "data-testid": "finished" },
        `Episode finished after ${vm.step - 1} steps; ` +
        `discounted return ${String(vm.cumulativeReward)}. ` +
        "Restart with the same seed to replay it."),
    );
  }
  return section;
}

function attackerSection(vm: SessionViewModel): HTMLElement {
  const section = el("section", { class: "attacker" });
  section.appendChild(el("h2", {}, "Attacker view"));
  const dl = el("dl");
  dl.appendChild(el("dt", {}, "True state"));
  dl.appendChild(el("dd", { "data-testid": "attacker-state" }, vm.attackerState));
  dl.appendChild(el("dt", {}, "Last attacker action"));
  dl.appendChild(
    el("dd", { "data-testid": "attacker-action" },
      vm.attackerLastAction ?? "none yet"),
  );
  section.appendChild(dl);
  return section;
}

function actionSection(
  vm: SessionViewModel,
  handlers: RenderHandlers,
): HTMLElement {
  const section = el("section", { class: "actions", "data-testid": "actions" });
  section.appendChild(el("h2", {}, "Defender actions"));
  for (const action of vm.actions) {
    const button = el("button", {
      "data-action-index": String(action.index),
    }, action.name) as HTMLButtonElement;
    button.disabled = !action.enabled;
    if (action.reason !== null) {
      button.title = action.reason;
    }
    button.addEventListener("click", () => {
      if (action.enabled && handlers.onAction) {
        handlers.onAction(action.index);
      }
    });
    section.appendChild(button);
  }
  return section;
}

function chartSection(
  trajectory: TrajectoryPoint[],
  markers: StepMarker[],
  overlayOn: boolean,
): HTMLElement {
  const section = el("section", { class: "chart" });
  section.appendChild(el("h2", {}, "Intrusion-mass trajectory"));
  if (trajectory.length === 0) {
    section.appendChild(
      el("p", { "data-testid": "no-chart" },
        "This model has no intrusion states to track."),
    );
    return section;
  }
  const width = 420;
  const height = 140;
  const plotH = 100;
  const svg = svgEl("svg", {
    viewBox: `0 0 ${width} ${height}`,
    width: String(width),
    height: String(height),
    "data-testid": "trajectory",
  });
  const steps = trajectory.map((p) => p.step);
  const minStep = Math.min(...steps);
  const span = Math.max(1, Math.max(...steps) - minStep);
  const x = (step: number): number => 10 + ((step - minStep) / span) * (width - 20);
  const y = (mass: number): number => 10 + (1 - mass) * (plotH - 20);
  svg.appendChild(svgEl("line", {
    x1: "10", y1: String(y(0)), x2: String(width - 10), y2: String(y(0)),
    class: "axis",
  }));
  const points = trajectory
    .map((p) => `${x(p.step).toFixed(1)},${y(p.mass).toFixed(1)}`)
    .join(" ");
  svg.appendChild(svgEl("polyline", { points, class: "mass-line", fill: "none" }));
  for (const p of trajectory) {
    svg.appendChild(svgEl("circle", {
      cx: x(p.step).toFixed(1),
      cy: y(p.mass).toFixed(1),
      r: "2.5",
      class: "mass-point",
      "data-step": String(p.step),
      "data-mass": String(p.mass),
    }));
  }
  // Disagreements between the human and a loaded strategy always show;
  // the overlay toggle additionally reveals the agreeing steps.
  const visible = overlayOn ? markers : markers.filter((m) => m.agrees === false);
  if (visible.length > 0) {
    const group = svgEl("g", {
      "data-testid": overlayOn ? "overlay-markers" : "disagreement-markers",
    });
    for (const marker of visible) {
      group.appendChild(svgEl("rect", {
        x: (x(marker.step) - 4).toFixed(1),
        y: String(plotH + 8),
        width: "8",
        height: "8",
        class: `chosen action-${marker.chosen}`,
        "data-kind": "chosen",
        "data-step": String(marker.step),
        "data-action": marker.chosenName,
      }));
      if (marker.suggested !== null) {
        group.appendChild(svgEl("rect", {
          x: (x(marker.step) - 4).toFixed(1),
          y: String(plotH + 20),
          width: "8",
          height: "8",
          class: `suggested action-${marker.suggested}` +
            (marker.agrees ? " agrees" : " differs"),
          "data-kind": "suggested",
          "data-step": String(marker.step),
          "data-action": marker.suggestedName ?? "",
        }));
      }
    }
    svg.appendChild(group);
  }
  section.appendChild(svg);
  return section;
}

export function renderSession(
  root: HTMLElement,
  vm: SessionViewModel,
  trajectory: TrajectoryPoint[],
  markers: StepMarker[],
  overlayOn: boolean,
  handlers: RenderHandlers = {},
): void {
  root.innerHTML = "";
  root.appendChild(statusSection(vm));
  root.appendChild(beliefSection(vm));
  root.appendChild(chartSection(trajectory, markers, overlayOn));
  root.appendChild(actionSection(vm, handlers));
  root.appendChild(attackerSection(vm));
}

/** Error banner shown above the session area. */
export function renderBanner(root: HTMLElement, message: string | null): void {
  root.innerHTML = "";
  if (message !== null) {
    root.appendChild(
      el("div", { class: "banner", "data-testid": "banner" }, message),
    );
  }
}
