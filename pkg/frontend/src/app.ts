/** Session controller and page wiring for the episode debugger. */

import {
  ApiClient,
  ApiConnectionError,
  ApiRequestError,
  type CreatedSession,
  type ModelInfo,
  type Snapshot,
  type Spaces,
} from "./api.js";
import { renderBanner, renderSession } from "./render.js";
import {
  intrusionTrajectory,
  overlayMarkers,
  toViewModel,
  type SessionViewModel,
  type StepMarker,
  type TrajectoryPoint,
} from "./viewmodel.js";

/** Holds one live session and the snapshot history behind the charts.
 *
 * Requests are serialized: a step in flight disables further steps, which
 * matches the one-session-per-tab model.
 */
export class SessionController {
  spaces: Spaces | null = null;
  snapshots: Snapshot[] = [];
  createBody: Record<string, unknown> | null = null;
  overlayOn = false;
  strategyLoaded = false;
  private busy = false;

  constructor(public client: ApiClient) {}

  get sessionId(): string | null {
    const last = this.snapshots[this.snapshots.length - 1];
    return last === undefined ? null : last.id;
  }

  get current(): Snapshot | null {
    return this.snapshots[this.snapshots.length - 1] ?? null;
  }

  async start(body: Record<string, unknown>): Promise<CreatedSession> {
    const created = await this.client.createSession(body);
    this.createBody = body;
    this.spaces = created.spaces;
    this.snapshots = [created.snapshot];
    this.strategyLoaded = "defender" in body && body.defender != null;
    if (!this.strategyLoaded) {
      this.overlayOn = false;
    }
    return created;
  }

  async act(actionIndex: number): Promise<Snapshot> {
    const id = this.sessionId;
    if (id === null) {
      throw new Error("no live session");
    }
    if (this.busy) {
      throw new Error("a step is already in flight");
    }
    this.busy = true;
    try {
      const snapshot = await this.client.step(id, actionIndex);
      this.snapshots.push(snapshot);
      return snapshot;
    } finally {
      this.busy = false;
    }
  }

  /** Poll the server for the authoritative snapshot of the current step. */
  async refresh(): Promise<Snapshot> {
    const id = this.sessionId;
    if (id === null) {
      throw new Error("no live session");
    }
    const snapshot = await this.client.getSession(id);
    this.snapshots[this.snapshots.length - 1] = snapshot;
    return snapshot;
  }

  /** Re-create the session with the exact same request body (same seed). */
  async restartSameSeed(): Promise<CreatedSession> {
    if (this.createBody === null) {
      throw new Error("no session has been started yet");
    }
    return this.start(this.createBody);
  }

  /** Overlay is only meaningful when a defender strategy was loaded. */
  toggleOverlay(): boolean {
    if (!this.strategyLoaded) {
      return false;
    }
    this.overlayOn = !this.overlayOn;
    return this.overlayOn;
  }

  viewModel(): SessionViewModel {
    if (this.spaces === null || this.current === null) {
      throw new Error("no live session");
    }
    return toViewModel(this.spaces, this.current);
  }

  trajectory(): TrajectoryPoint[] {
    return this.spaces === null
      ? []
      : intrusionTrajectory(this.spaces, this.snapshots);
  }

  markers(): StepMarker[] {
    return this.spaces === null ? [] : overlayMarkers(this.spaces, this.snapshots);
  }
}

interface PageRoots {
  form: HTMLElement;
  banner: HTMLElement;
  session: HTMLElement;
}

function field(label: string, input: HTMLElement): HTMLElement {
  const wrap = document.createElement("label");
  wrap.className = "field";
  const span = document.createElement("span");
  span.textContent = label;
  wrap.appendChild(span);
  wrap.appendChild(input);
  return wrap;
}

/** Build the session form from the /models schema. */
export function buildModelForm(
  root: HTMLElement,
  models: ModelInfo[],
  onStart: (body: Record<string, unknown>) => void,
): void {
  root.innerHTML = "";
  const form = document.createElement("form");

  const modelSelect = document.createElement("select");
  modelSelect.setAttribute("data-testid", "model-select");
  for (const model of models) {
    const option = document.createElement("option");
    option.value = model.name;
    option.textContent = model.name;
    modelSelect.appendChild(option);
  }
  form.appendChild(field("Model", modelSelect));

  const paramsBox = document.createElement("div");
  paramsBox.setAttribute("data-testid", "params");
  form.appendChild(paramsBox);

  const attackerSelect = document.createElement("select");
  attackerSelect.setAttribute("data-testid", "attacker-select");
  form.appendChild(field("Attacker", attackerSelect));

  const seedInput = document.createElement("input");
  seedInput.type = "number";
  seedInput.min = "0";
  seedInput.value = "0";
  seedInput.setAttribute("data-testid", "seed");
  form.appendChild(field("Seed", seedInput));

  const strategyInput = document.createElement("textarea");
  strategyInput.placeholder = "optional defender strategy JSON";
  strategyInput.setAttribute("data-testid", "strategy");
  form.appendChild(field("Defender strategy", strategyInput));

  const errorOut = document.createElement("div");
  errorOut.className = "form-error";
  errorOut.setAttribute("data-testid", "form-error");
  form.appendChild(errorOut);

  const defaults = new Map<string, string>();

  const fillParams = (): void => {
    paramsBox.innerHTML = "";
    defaults.clear();
    const model = models.find((m) => m.name === modelSelect.value);
    if (model === undefined) {
      return;
    }
    attackerSelect.innerHTML = "";
    for (const name of model.attackers) {
      const option = document.createElement("option");
      option.value = name;
      option.textContent = name;
      attackerSelect.appendChild(option);
    }
    for (const [key, value] of Object.entries(model.params)) {
      const input = document.createElement("input");
      const encoded = JSON.stringify(value);
      input.value = encoded;
      input.setAttribute("data-param", key);
      defaults.set(key, encoded);
      paramsBox.appendChild(field(key, input));
    }
  };
  modelSelect.addEventListener("change", fillParams);
  fillParams();

  const startButton = document.createElement("button");
  startButton.type = "submit";
  startButton.textContent = "Start episode";
  startButton.setAttribute("data-testid", "start");
  form.appendChild(startButton);

  form.addEventListener("submit", (event) => {
    event.preventDefault();
    errorOut.textContent = "";
    const params: Record<string, unknown> = {};
    for (const input of paramsBox.querySelectorAll<HTMLInputElement>(
      "input[data-param]",
    )) {
      const key = input.getAttribute("data-param") ?? "";
      if (input.value === defaults.get(key)) {
        continue;
      }
      try {
        params[key] = JSON.parse(input.value);
      } catch {
        errorOut.textContent = `${key}: not valid JSON`;
        return;
      }
    }
    const body: Record<string, unknown> = {
      model: modelSelect.value,
      model_params: params,
      attacker: attackerSelect.value,
      seed: Number(seedInput.value),
    };
    if (strategyInput.value.trim() !== "") {
      try {
        body.defender = JSON.parse(strategyInput.value);
      } catch {
        errorOut.textContent = "defender strategy: not valid JSON";
        return;
      }
    }
    onStart(body);
  });

  root.appendChild(form);
}

/** Wire the whole page together against a live service. */
export async function initApp(
  roots: PageRoots,
  baseUrl: string,
): Promise<SessionController> {
  const controller = new SessionController(new ApiClient(baseUrl));

  const controls = document.createElement("div");
  controls.className = "controls";
  const restart = document.createElement("button");
  restart.textContent = "Restart with same seed";
  restart.setAttribute("data-testid", "restart");
  restart.disabled = true;
  const overlay = document.createElement("button");
  overlay.textContent = "Compare with strategy";
  overlay.setAttribute("data-testid", "overlay-toggle");
  overlay.disabled = true;
  controls.appendChild(restart);
  controls.appendChild(overlay);

  const sessionArea = document.createElement("div");

  const redraw = (): void => {
    renderSession(
      sessionArea,
      controller.viewModel(),
      controller.trajectory(),
      controller.markers(),
      controller.overlayOn,
      {
        onAction: (index) => {
          void takeAction(index);
        },
      },
    );
  };

  const showError = (error: unknown): void => {
    if (error instanceof ApiConnectionError) {
      renderBanner(roots.banner, error.message);
    } else if (error instanceof ApiRequestError) {
      renderBanner(roots.banner, `${error.body.error}: ${error.body.detail}`);
    } else {
      renderBanner(roots.banner, String(error));
    }
  };

  const takeAction = async (index: number): Promise<void> => {
    try {
      await controller.act(index);
      renderBanner(roots.banner, null);
      redraw();
    } catch (error) {
      if (error instanceof ApiRequestError && error.status === 409) {
        redraw();
      } else {
        showError(error);
      }
    }
  };

  const highlightField = (detail: string): void => {
    const inputs =
      roots.form.querySelectorAll<HTMLInputElement>("input[data-param]");
    for (const input of inputs) {
      const key = input.getAttribute("data-param") ?? "";
      input.classList.toggle(
        "field-invalid",
        key !== "" && detail.includes(key),
      );
    }
  };

  const startFromBody = async (body: Record<string, unknown>): Promise<void> => {
    const formError = roots.form.querySelector("[data-testid=form-error]");
    try {
      await controller.start(body);
      renderBanner(roots.banner, null);
      highlightField("");
      if (formError !== null) {
        formError.textContent = "";
      }
      restart.disabled = false;
      overlay.disabled = !controller.strategyLoaded;
      redraw();
    } catch (error) {
      if (error instanceof ApiRequestError && formError !== null) {
        formError.textContent = `${error.body.error}: ${error.body.detail}`;
        highlightField(error.body.detail);
      } else {
        showError(error);
      }
    }
  };

  restart.addEventListener("click", () => {
    void (async () => {
      try {
        await controller.restartSameSeed();
        redraw();
      } catch (error) {
        showError(error);
      }
    })();
  });
  overlay.addEventListener("click", () => {
    controller.toggleOverlay();
    redraw();
  });

  try {
    const listing = await controller.client.models();
    buildModelForm(roots.form, listing.models, (body) => {
      void startFromBody(body);
    });
    renderBanner(roots.banner, null);
  } catch (error) {
    showError(error);
  }

  roots.session.innerHTML = "";
  roots.session.appendChild(controls);
  roots.session.appendChild(sessionArea);
  return controller;
}
