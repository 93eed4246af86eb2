"""Explicit MDP for the collaboration-termination game.

Pre-punishment states are the (honest busy, attacker busy) splits; the
post-punishment states keep only the attackers' own count, with the flag
absorbing.  Solving this model is the behavioral cross-check for the
closed forms in the indirect module: both must produce the same numbers
from entirely different computations.

The action axis is ordered per state: the honest-equivalent profile
first, the rest by (report distortion, -transmitters, reports).  Actions
of equal value produce bit-identical rows, so a first-wins argmax
reproduces the one-shot tie-breaking exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import oneshot, posterior
from .model import ScenarioParams
from .oneshot import ActionProfile, SensingState

StateKey = tuple  # ("pre", honest_busy, attacker_busy) | ("post", attacker_busy)
Action = ActionProfile | int  # pre: report/transmit profile; post: transmitter count


@dataclass(frozen=True, eq=False)
class MdpModel:
    params: ScenarioParams
    states: tuple[StateKey, ...]
    actions_per_state: tuple[tuple[Action, ...], ...]
    transition: np.ndarray  # (max_actions, n_states, n_states)
    reward: np.ndarray      # (max_actions, n_states), -inf where padded
    discount: float

    @property
    def n_pre(self) -> int:
        return (self.params.n_honest + 1) * (self.params.n_attackers + 1)

    def state_index(self, state: StateKey) -> int:
        return self.states.index(state)


Policy = dict  # StateKey -> Action


def _pre_actions(state: SensingState, params: ScenarioParams) -> tuple[ActionProfile, ...]:
    m = params.n_attackers
    honest = oneshot.honest_equivalent_profile(state, params)
    rest = sorted(
        (ActionProfile(b, mt) for b in range(m + 1) for mt in range(m + 1)
         if ActionProfile(b, mt) != honest),
        key=lambda p: (abs(p.busy_reports - state.attacker_busy),
                       -p.transmitters, p.busy_reports))
    return (honest, *rest)


def _post_actions(params: ScenarioParams) -> tuple[int, ...]:
    # wait first (the non-attack analog), then transmitter counts high to low
    return (0, *range(params.n_attackers, 0, -1))


def build_mdp(params: ScenarioParams) -> MdpModel:
    """Assemble states, per-state ordered actions, transitions and rewards.

    Sensing is independent across slots, so every pre-to-pre row is the
    same split distribution and every row into punishment is the
    attackers-alone count distribution; only the trigger probability
    (busy posterior when they transmit through a busy announcement)
    depends on the current state and action.
    """
    n, m, rate = params.n_total, params.n_attackers, params.total_rate
    cp = params.cp_rate1
    pre_states = [("pre", kh, ka)
                  for kh in range(params.n_honest + 1) for ka in range(m + 1)]
    post_states = [("post", ka) for ka in range(m + 1)]
    states = tuple(pre_states + post_states)
    n_pre, n_states = len(pre_states), len(states)

    split = np.array([[posterior.report_split_pmf(kh, ka, params)
                       for ka in range(m + 1)]
                      for kh in range(params.n_honest + 1)]).reshape(-1)
    alone = np.array([posterior.report_count_pmf(m, ka, params)
                      for ka in range(m + 1)])

    actions: list[tuple[Action, ...]] = []
    for s in pre_states:
        actions.append(_pre_actions(SensingState(s[1], s[2]), params))
    post_acts = _post_actions(params)
    actions.extend([post_acts] * len(post_states))
    max_actions = max(len(a) for a in actions)

    transition = np.zeros((max_actions, n_states, n_states))
    reward = np.full((max_actions, n_states), -math.inf)
    for si, s in enumerate(states):
        for ai, act in enumerate(actions[si]):
            if s[0] == "pre":
                state = SensingState(s[1], s[2])
                breakdown = oneshot.evaluate_profile(state, act, params, False)
                reward[ai, si] = breakdown.attacker_aggregate
                announced_busy = state.honest_busy >= 1 or act.busy_reports >= 1
                if announced_busy and act.transmitters >= 1:
                    k = state.honest_busy + state.attacker_busy
                    trigger = posterior.posterior_idle(n, k, params).p_busy_given_reports
                else:
                    trigger = 0.0
                transition[ai, si, :n_pre] = (1.0 - trigger) * split
                transition[ai, si, n_pre:] = trigger * alone
            else:
                ka = s[1]
                if act == 0:
                    reward[ai, si] = 0.0
                else:
                    post = posterior.posterior_idle(m, ka, params)
                    reward[ai, si] = rate * (post.p_idle_given_reports
                                             - m * post.p_busy_given_reports * cp)
                transition[ai, si, n_pre:] = alone
        for ai in range(len(actions[si]), max_actions):
            transition[ai, si, si] = 1.0  # padded action: self-loop, -inf reward
    return MdpModel(params, states, tuple(actions), transition, reward,
                    params.discount)


def bellman_backup(model: MdpModel, values: np.ndarray) -> np.ndarray:
    """One optimality sweep: per state, best action value."""
    q = model.reward + model.discount * (model.transition @ values)
    return q.max(axis=0)


def value_iteration(model: MdpModel, tolerance: float
                    ) -> tuple[np.ndarray, Policy]:
    """Iterate to sup-norm residual below tolerance*(1-d)/(2d), then act
    greedily; first-wins argmax over the per-state action order.

    The tolerance is relative to the value scale (max(1, ||v||inf)), so
    the stopping rule works unchanged when penalties push values to 1e10.
    """
    if tolerance <= 0.0:
        raise ValueError("tolerance must be positive")
    d = model.discount
    base = tolerance * (1.0 - d) / (2.0 * d) if d > 0.0 else math.inf
    values = np.zeros(len(model.states))
    for _ in range(1_000_000):
        new_values = bellman_backup(model, values)
        residual = float(np.max(np.abs(new_values - values)))
        values = new_values
        if residual < base * max(1.0, float(np.max(np.abs(values)))):
            break
    q = model.reward + d * (model.transition @ values)
    greedy = q.argmax(axis=0)
    policy = {s: model.actions_per_state[si][greedy[si]]
              for si, s in enumerate(model.states)}
    return values, policy


def policy_value(model: MdpModel, policy: Policy) -> np.ndarray:
    """Fixed-policy value, solving (I - d*T_pi) v = r_pi directly."""
    idx = [model.actions_per_state[si].index(policy[s])
           for si, s in enumerate(model.states)]
    rows = np.arange(len(model.states))
    r_pi = model.reward[idx, rows]
    t_pi = model.transition[idx, rows, :]
    system = np.eye(len(model.states)) - model.discount * t_pi
    return np.linalg.solve(system, r_pi)


def honest_policy(model: MdpModel) -> Policy:
    out: Policy = {}
    for s in model.states:
        if s[0] == "pre":
            out[s] = oneshot.honest_equivalent_profile(
                SensingState(s[1], s[2]), model.params)
        else:
            out[s] = 0
    return out


def threshold_policy(model: MdpModel, z: int) -> Policy:
    """Attack when at most z sensors saw busy, else report busy and wait;
    after termination transmit exactly when the lone-sensing value is
    positive."""
    params = model.params
    m, cp = params.n_attackers, params.cp_rate1
    out: Policy = {}
    for s in model.states:
        if s[0] == "pre":
            kh, ka = s[1], s[2]
            if kh + ka <= z:
                out[s] = ActionProfile(max(ka, 1), m)
            else:
                out[s] = ActionProfile(max(ka, 1), 0)
        else:
            post = posterior.posterior_idle(m, s[1], params)
            pays = post.p_idle_given_reports - m * post.p_busy_given_reports * cp
            out[s] = m if pays > 0.0 else 0
    return out


def start_distribution(model: MdpModel) -> np.ndarray:
    """Slot-stationary weights over pre-punishment states (zero on post)."""
    params = model.params
    dist = np.zeros(len(model.states))
    i = 0
    for kh in range(params.n_honest + 1):
        for ka in range(params.n_attackers + 1):
            dist[i] = posterior.report_split_pmf(kh, ka, params)
            i += 1
    return dist


def start_value(model: MdpModel, values: np.ndarray) -> float:
    return float(start_distribution(model) @ values)


def _attacks(model: MdpModel, policy: Policy, state: StateKey) -> bool:
    honest = oneshot.honest_equivalent_profile(
        SensingState(state[1], state[2]), model.params)
    return policy[state] != honest


def verify_threshold_structure(model: MdpModel
                               ) -> tuple[bool, StateKey | None]:
    """Check the optimal attack set is downward-closed in total busy count.

    Returns (True, None), or (False, s) where s declines to attack while
    some state with at least as many busy sensors attacks.
    """
    _, policy = value_iteration(model, 1e-10)
    pre = [s for s in model.states if s[0] == "pre"]
    attacked = {s: _attacks(model, policy, s) for s in pre}
    max_attack_k = max((s[1] + s[2] for s in pre if attacked[s]), default=-1)
    for s in pre:
        if not attacked[s] and s[1] + s[2] <= max_attack_k:
            return False, s
    return True, None
