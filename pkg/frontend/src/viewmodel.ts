/** Pure mapping from API snapshots to render-ready view state.
 *
 * Every number displayed comes verbatim from the snapshot; this module
 * never recomputes beliefs, rewards or returns. The only derived series
 * is the intrusion-mass chart, which sums snapshot belief coordinates
 * over the states whose names mark an ongoing intrusion.
 */

import type { Snapshot, Spaces } from "./api.js";

export interface BeliefBar {
  state: string;
  prob: number;
}

export interface ActionButton {
  name: string;
  index: number;
  enabled: boolean;
  reason: string | null;
}

export interface SessionViewModel {
  sessionId: string;
  model: string;
  step: number;
  done: boolean;
  beliefBars: BeliefBar[];
  observationText: string;
  lastReward: number | null;
  cumulativeReward: number;
  attackerState: string;
  attackerLastAction: string | null;
  suggested: string | null;
  actions: ActionButton[];
  intrusionMass: number | null;
}

export interface TrajectoryPoint {
  step: number;
  mass: number;
}

export interface StepMarker {
  step: number;
  chosen: number;
  chosenName: string;
  suggested: number | null;
  suggestedName: string | null;
  agrees: boolean | null;
}

/** States counted as "intrusion in progress", detected by name. */
export function intrusionStateIndices(states: string[]): number[] {
  const indices: number[] = [];
  states.forEach((name, i) => {
    if (/(^|_)intrusion/.test(name) && !name.startsWith("no_")) {
      indices.push(i);
    }
  });
  return indices;
}

function massAt(indices: number[], belief: number[]): number {
  return indices.reduce((sum, i) => sum + (belief[i] ?? 0), 0);
}

export function toViewModel(spaces: Spaces, snapshot: Snapshot): SessionViewModel {
  const intrusion = intrusionStateIndices(spaces.states);
  const last = snapshot.history[snapshot.history.length - 1];
  return {
    sessionId: snapshot.id,
    model: snapshot.model,
    step: snapshot.t,
    done: snapshot.done,
    beliefBars: spaces.states.map((state, i) => ({
      state,
      prob: snapshot.belief[i] ?? 0,
    })),
    observationText:
      snapshot.observation_name === null
        ? "none yet"
        : `${snapshot.observation_name} (#${snapshot.observation})`,
    lastReward: snapshot.reward,
    cumulativeReward: snapshot.discounted_return,
    attackerState: snapshot.attacker_view.state_name,
    attackerLastAction:
      last === undefined
        ? null
        : (spaces.attacker_actions[last.attacker_action] ?? String(last.attacker_action)),
    suggested:
      snapshot.suggested === null
        ? null
        : (spaces.defender_actions[snapshot.suggested] ?? String(snapshot.suggested)),
    actions: spaces.defender_actions.map((name, index) => ({
      name,
      index,
      enabled: !snapshot.done,
      reason: snapshot.done ? "episode finished" : null,
    })),
    intrusionMass:
      intrusion.length === 0 ? null : massAt(intrusion, snapshot.belief),
  };
}

/** Intrusion-mass time series over the stored snapshot history. */
export function intrusionTrajectory(
  spaces: Spaces,
  snapshots: Snapshot[],
): TrajectoryPoint[] {
  const intrusion = intrusionStateIndices(spaces.states);
  if (intrusion.length === 0) {
    return [];
  }
  return snapshots.map((snap) => ({
    step: snap.t,
    mass: massAt(intrusion, snap.belief),
  }));
}

/** Human choice vs. pre-step suggestion for every completed step.
 *
 * The suggestion the defender saw before acting lives on the previous
 * snapshot; the action actually taken is the newest history entry of the
 * following one.
 */
export function overlayMarkers(
  spaces: Spaces,
  snapshots: Snapshot[],
): StepMarker[] {
  const markers: StepMarker[] = [];
  for (let i = 1; i < snapshots.length; i += 1) {
    const before = snapshots[i - 1];
    const after = snapshots[i];
    if (before === undefined || after === undefined) {
      continue;
    }
    const entry = after.history[after.history.length - 1];
    if (entry === undefined) {
      continue;
    }
    const chosen = entry.defender_action;
    const suggested = before.suggested;
    markers.push({
      step: before.t,
      chosen,
      chosenName: spaces.defender_actions[chosen] ?? String(chosen),
      suggested,
      suggestedName:
        suggested === null
          ? null
          : (spaces.defender_actions[suggested] ?? String(suggested)),
      agrees: suggested === null ? null : suggested === chosen,
    });
  }
  return markers;
}
