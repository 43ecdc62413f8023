import { describe, expect, test } from "vitest";

import type { Snapshot, Spaces } from "../src/api.js";
import {
  intrusionStateIndices,
  intrusionTrajectory,
  overlayMarkers,
  toViewModel,
} from "../src/viewmodel.js";

const spaces: Spaces = {
  states: [
    "no_intrusion_l2",
    "intrusion_l2",
    "no_intrusion_l1",
    "intrusion_l1",
    "terminal",
  ],
  defender_actions: ["continue", "stop"],
  attacker_actions: ["none"],
  observations: ["count_0", "count_1", "count_2"],
  discount: 0.99,
  terminal_state: "terminal",
};

function snap(overrides: Partial<Snapshot> = {}): Snapshot {
  return {
    id: "abc123",
    model: "flow-pomdp",
    t: 1,
    done: false,
    belief: [1, 0, 0, 0, 0],
    observation: null,
    observation_name: null,
    reward: null,
    discounted_return: 0,
    suggested: null,
    attacker_view: { state: 0, state_name: "no_intrusion_l2" },
    history: [],
    ...overrides,
  };
}

describe("intrusionStateIndices", () => {
  test("matches intrusion states by name, excluding no_intrusion", () => {
    expect(intrusionStateIndices(spaces.states)).toEqual([1, 3]);
  });

  test("returns nothing for models without intrusion states", () => {
    expect(intrusionStateIndices(["r0", "r1", "r2", "r3"])).toEqual([]);
  });
});

describe("toViewModel", () => {
  test("passes belief coordinates through verbatim, even unnormalized", () => {
    const belief = [0.25, 0.30000000000000004, 0.2, 0.15, 0];
    const vm = toViewModel(spaces, snap({ belief }));
    expect(vm.beliefBars.map((b) => b.prob)).toEqual(belief);
    expect(vm.beliefBars.map((b) => b.state)).toEqual(spaces.states);
    expect(vm.intrusionMass).toBe(0.30000000000000004 + 0.15);
  });

  test("maps indices to names and keeps rewards untouched", () => {
    const vm = toViewModel(
      spaces,
      snap({
        t: 3,
        observation: 2,
        observation_name: "count_2",
        reward: -1.5,
        discounted_return: -2.4849,
        suggested: 1,
        attacker_view: { state: 3, state_name: "intrusion_l1" },
        history: [
          { defender_action: 0, attacker_action: 0, observation: 1, reward: -1 },
          { defender_action: 1, attacker_action: 0, observation: 2, reward: -1.5 },
        ],
      }),
    );
    expect(vm.step).toBe(3);
    expect(vm.observationText).toBe("count_2 (#2)");
    expect(vm.lastReward).toBe(-1.5);
    expect(vm.cumulativeReward).toBe(-2.4849);
    expect(vm.suggested).toBe("stop");
    expect(vm.attackerState).toBe("intrusion_l1");
    expect(vm.attackerLastAction).toBe("none");
  });

  test("initial snapshot shows placeholders", () => {
    const vm = toViewModel(spaces, snap());
    expect(vm.observationText).toBe("none yet");
    expect(vm.lastReward).toBeNull();
    expect(vm.suggested).toBeNull();
    expect(vm.attackerLastAction).toBeNull();
  });

  test("one action button per defender action, disabled once done", () => {
    const live = toViewModel(spaces, snap());
    expect(live.actions.map((a) => [a.name, a.index, a.enabled])).toEqual([
      ["continue", 0, true],
      ["stop", 1, true],
    ]);

    const done = toViewModel(spaces, snap({ done: true }));
    expect(done.actions.every((a) => !a.enabled)).toBe(true);
    expect(done.actions[0]?.reason).toBe("episode finished");
  });

  test("intrusion mass is null when the model has no intrusion states", () => {
    const mdpSpaces: Spaces = {
      ...spaces,
      states: ["r0", "r1", "r2"],
      terminal_state: null,
    };
    const vm = toViewModel(mdpSpaces, snap({ belief: [0.5, 0.5, 0] }));
    expect(vm.intrusionMass).toBeNull();
  });
});

describe("intrusionTrajectory", () => {
  test("sums belief mass over intrusion states per snapshot", () => {
    const snaps = [
      snap({ t: 1, belief: [1, 0, 0, 0, 0] }),
      snap({ t: 2, belief: [0.6, 0.3, 0, 0.1, 0] }),
      snap({ t: 3, belief: [0, 0.2, 0.3, 0.5, 0] }),
    ];
    expect(intrusionTrajectory(spaces, snaps)).toEqual([
      { step: 1, mass: 0 },
      { step: 2, mass: 0.3 + 0.1 },
      { step: 3, mass: 0.2 + 0.5 },
    ]);
  });

  test("is empty when no state tracks an intrusion", () => {
    const mdpSpaces: Spaces = { ...spaces, states: ["r0", "r1", "r2"] };
    expect(intrusionTrajectory(mdpSpaces, [snap()])).toEqual([]);
  });
});

describe("overlayMarkers", () => {
  test("pairs the pre-step suggestion with the action actually taken", () => {
    const s1 = snap({ t: 1, suggested: 1 });
    const s2 = snap({
      t: 2,
      suggested: 1,
      history: [{ defender_action: 0, attacker_action: 0, observation: 0, reward: -1 }],
    });
    const s3 = snap({
      t: 3,
      suggested: 0,
      history: [
        ...s2.history,
        { defender_action: 1, attacker_action: 0, observation: 1, reward: 5 },
      ],
    });
    expect(overlayMarkers(spaces, [s1, s2, s3])).toEqual([
      {
        step: 1,
        chosen: 0,
        chosenName: "continue",
        suggested: 1,
        suggestedName: "stop",
        agrees: false,
      },
      {
        step: 2,
        chosen: 1,
        chosenName: "stop",
        suggested: 1,
        suggestedName: "stop",
        agrees: true,
      },
    ]);
  });

  test("marks agreement as unknown when no suggestion was shown", () => {
    const s1 = snap({ t: 1, suggested: null });
    const s2 = snap({
      t: 2,
      history: [{ defender_action: 1, attacker_action: 0, observation: 2, reward: 0 }],
    });
    expect(overlayMarkers(spaces, [s1, s2])).toEqual([
      {
        step: 1,
        chosen: 1,
        chosenName: "stop",
        suggested: null,
        suggestedName: null,
        agrees: null,
      },
    ]);
  });

  test("returns nothing before the first step", () => {
    expect(overlayMarkers(spaces, [snap()])).toEqual([]);
  });
});
