"""Slot-by-slot Monte Carlo simulation of the two-phase sensing game.

run_experiment is vectorized over slots inside each replication;
run_slot is the scalar reference for traces and tests.  Both feed the
same outcome rules, and a test pins the vector kernel to the scalar one
on shared draws.

Determinism contract: replication r draws from a stream derived from
(base_seed, r), and replication outputs are merged in index order, so
results are bit-identical for any worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import mdp as mdp_mod
from . import oneshot, posterior
from .fusion import Announcement
from .model import HeteroParams, ScenarioParams, validate, validate_hetero
from .oneshot import ActionProfile, SensingState

MODES = ("none", "direct", "indirect")


@dataclass(frozen=True, eq=False)
class PolicyTables:
    """Attacker decisions by observed counts.

    b and transmit are indexed [honest_busy, attacker_busy] (attacker own
    decision for the heterogeneous single attacker); post_transmit by the
    attackers' own count once collaboration has been terminated.
    """

    b: np.ndarray
    transmit: np.ndarray
    post_transmit: np.ndarray


@dataclass(frozen=True)
class SimConfig:
    params: ScenarioParams | HeteroParams
    punishment_mode: str = "none"
    attacker_policy: str | PolicyTables = "optimal"
    horizon: int = 10_000
    replications: int = 20
    base_seed: int = 0


@dataclass(frozen=True)
class StatBlock:
    mean: float
    variance: float
    ci_half_width: float


@dataclass(frozen=True)
class SimStats:
    per_slot_attacker: StatBlock
    per_slot_honest: StatBlock
    discounted_attacker: StatBlock
    discounted_honest: StatBlock
    discounted_tail_bound_attacker: float
    discounted_tail_bound_honest: float
    collision_count: int
    busy_slot_count: int
    empirical_gamma: float
    pu_utility: float
    punishment_trigger_slots: dict[int, int]
    punishment_never_count: int


@dataclass
class SlotRuntime:
    """Mutable per-episode state threaded through run_slot."""

    config: SimConfig
    tables: PolicyTables
    punishment_on: bool = False


@dataclass(frozen=True)
class SlotTrace:
    channel_busy: bool
    honest_busy: int
    attacker_busy: int
    announcement: Announcement | None  # None once reporting has stopped
    transmitters: int
    collision: bool
    attacker_reward: float
    honest_reward_per_su: float
    penalty_per_su: float
    punishment_on: bool


def validate_config(config: SimConfig) -> list[str]:
    problems = []
    if isinstance(config.params, HeteroParams):
        problems += validate_hetero(config.params)
    else:
        problems += validate(config.params)
    if config.punishment_mode not in MODES:
        problems.append(f"punishment_mode must be one of {MODES}")
    if isinstance(config.attacker_policy, str) \
            and config.attacker_policy not in ("optimal", "honest"):
        problems.append("attacker_policy must be 'optimal', 'honest', or tables")
    if config.horizon < 1:
        problems.append("horizon must be >= 1")
    if config.replications < 1:
        problems.append("replications must be >= 1")
    return problems


def _base(params: ScenarioParams | HeteroParams) -> ScenarioParams:
    return params.base if isinstance(params, HeteroParams) else params


def _post_transmit_table(params: ScenarioParams) -> np.ndarray:
    m, cp = params.n_attackers, params.cp_rate1
    table = np.zeros(m + 1, dtype=np.int64)
    for ka in range(m + 1):
        post = posterior.posterior_idle(m, ka, params)
        if post.p_idle_given_reports - m * post.p_busy_given_reports * cp > 0.0:
            table[ka] = m
    return table


def _homogeneous_tables(params: ScenarioParams, mode: str,
                        policy: str | PolicyTables) -> PolicyTables:
    if isinstance(policy, PolicyTables):
        return policy
    m, n_h = params.n_attackers, params.n_honest
    b = np.zeros((n_h + 1, m + 1), dtype=np.int64)
    mt = np.zeros((n_h + 1, m + 1), dtype=np.int64)
    if policy == "honest":
        for ka in range(m + 1):
            b[:, ka] = ka
        mt[0, 0] = m
        return PolicyTables(b, mt, np.zeros(m + 1, dtype=np.int64))
    if mode == "indirect":
        # long-run optimum: greedy policy of the termination-game MDP
        model = mdp_mod.build_mdp(params)
        _, pol = mdp_mod.value_iteration(model, 1e-10)
        post = np.zeros(m + 1, dtype=np.int64)
        for s, act in pol.items():
            if s[0] == "pre":
                b[s[1], s[2]] = act.busy_reports
                mt[s[1], s[2]] = act.transmitters
            else:
                post[s[1]] = act
        return PolicyTables(b, mt, post)
    include_cb = mode == "direct"
    for kh in range(n_h + 1):
        for ka in range(m + 1):
            profile, _ = oneshot.best_response(SensingState(kh, ka), params, include_cb)
            b[kh, ka] = profile.busy_reports
            mt[kh, ka] = profile.transmitters
    return PolicyTables(b, mt, _post_transmit_table(params))


def _hetero_attacker_posterior(hparams: HeteroParams, d: int):
    lone = replace(hparams.base,
                   p_false_alarm=hparams.p_false_alarm_attacker,
                   p_missed_detection=hparams.p_missed_detection_attacker)
    return posterior.posterior_idle(1, d, lone)


def _hetero_tables(hparams: HeteroParams, mode: str,
                   policy: str | PolicyTables) -> PolicyTables:
    if isinstance(policy, PolicyTables):
        return policy
    if mode == "indirect" and policy == "optimal":
        raise ValueError("optimal indirect policy is only built for "
                         "homogeneous attackers (no heterogeneous MDP)")
    base = hparams.base
    n_h = base.n_total - 1
    cp = base.collision_penalty
    cb = base.direct_punishment if mode == "direct" else 0.0
    r_a = hparams.rate_attacker
    b = np.zeros((n_h + 1, 2), dtype=np.int64)
    mt = np.zeros((n_h + 1, 2), dtype=np.int64)
    post_tab = np.zeros(2, dtype=np.int64)
    for d in (0, 1):
        lone = _hetero_attacker_posterior(hparams, d)
        if lone.p_idle_given_reports * r_a - lone.p_busy_given_reports * cp > 0.0:
            post_tab[d] = 1
    for kh in range(n_h + 1):
        for d in (0, 1):
            post = posterior.posterior_idle_hetero(kh, d, hparams)
            pi, pb = post.p_idle_given_reports, post.p_busy_given_reports
            honest = (d, 0 if (kh >= 1 or d >= 1) else 1)
            if policy == "honest":
                b[kh, d], mt[kh, d] = honest
                continue
            def value(profile: tuple[int, int]) -> float:
                rb, rmt = profile
                if kh >= 1 or rb >= 1:
                    return pi * r_a - pb * (cp + cb) if rmt else 0.0
                return rmt * r_a * pi / (n_h + rmt) - pb * cp
            options = [(0, 0), (0, 1), (1, 0), (1, 1)]
            best = max(value(p) for p in options)
            if value(honest) == best:
                b[kh, d], mt[kh, d] = honest
            else:
                pick = min((p for p in options if value(p) == best),
                           key=lambda p: (abs(p[0] - d), -p[1], p[0]))
                b[kh, d], mt[kh, d] = pick
    return PolicyTables(b, mt, post_tab)


def build_policy_tables(config: SimConfig) -> PolicyTables:
    if isinstance(config.params, HeteroParams):
        return _hetero_tables(config.params, config.punishment_mode,
                              config.attacker_policy)
    return _homogeneous_tables(config.params, config.punishment_mode,
                               config.attacker_policy)


def _reward_constants(config: SimConfig) -> tuple[float, float, float, float, int, int]:
    """(rate_attacker_side, rate_honest_side, cp, cb, m, n_honest_transmitters)"""
    if isinstance(config.params, HeteroParams):
        base = config.params.base
        r_att = config.params.rate_attacker
        r_hon = float(np.mean(config.params.rates_honest))
        m = 1
    else:
        base = config.params
        r_att = base.total_rate
        r_hon = base.total_rate
        m = base.n_attackers
    cb = base.direct_punishment if config.punishment_mode == "direct" else 0.0
    return r_att, r_hon, base.collision_penalty, cb, m, base.n_total - m


def _vector_outcomes(idle: np.ndarray, kh: np.ndarray, ka: np.ndarray,
                     config: SimConfig, tables: PolicyTables
                     ) -> tuple[np.ndarray, np.ndarray, np.ndarray, int]:
    """Per-slot realized rewards (attacker aggregate, honest per-SU),
    collision flags, and the punishment trigger slot (-1 when none)."""
    r_att, r_hon, cp, cb, m, n_h = _reward_constants(config)
    busy = ~idle
    b = tables.b[kh, ka]
    mt = tables.transmit[kh, ka]
    announced = (kh >= 1) | (b >= 1)
    h0 = ~announced
    t_total = np.where(h0, n_h + mt, mt)
    collision = busy & (t_total >= 1)

    att = np.zeros(idle.shape)
    hon = np.zeros(idle.shape)
    shared = idle & h0
    att[shared] = r_att * mt[shared] / t_total[shared]
    hon[shared] = r_hon / t_total[shared]
    att[idle & announced & (mt >= 1)] = r_att
    att[busy & h0] = -m * cp
    hon[busy & h0] = -cp
    exclusive_hit = busy & announced & (mt >= 1)
    att[exclusive_hit] = -m * (cp + cb)
    hon[exclusive_hit] = -(cp + cb)

    trigger_slot = -1
    if config.punishment_mode == "indirect" and exclusive_hit.any():
        trigger_slot = int(np.argmax(exclusive_hit))
        post = slice(trigger_slot + 1, None)
        pmt = tables.post_transmit[ka[post]]
        transmit = pmt >= 1
        att[post] = np.where(transmit, np.where(idle[post], r_att, -m * cp), 0.0)
        hon[post] = 0.0
        collision[post] = busy[post] & transmit
    return att, hon, collision, trigger_slot


def run_slot(rng: np.random.Generator, runtime: SlotRuntime) -> SlotTrace:
    """One slot, scalar path: sense, report, fuse, transmit, settle.

    Draw order (channel, honest count, attacker count) matches the
    vectorized kernel slot-for-slot.
    """
    config = runtime.config
    r_att, r_hon, cp, cb, m, n_h = _reward_constants(config)
    params = _base(config.params)
    idle = rng.random() < params.p_idle
    p_busy = params.p_false_alarm if idle else 1.0 - params.p_missed_detection
    if isinstance(config.params, HeteroParams):
        p_busy_a = (config.params.p_false_alarm_attacker if idle
                    else 1.0 - config.params.p_missed_detection_attacker)
    else:
        p_busy_a = p_busy
    kh = int(rng.binomial(n_h, p_busy))
    ka = int(rng.binomial(m, p_busy_a))

    if runtime.punishment_on:
        pmt = int(runtime.tables.post_transmit[ka])
        collision = (not idle) and pmt >= 1
        att = (r_att if idle else -m * cp) if pmt >= 1 else 0.0
        return SlotTrace(not idle, kh, ka, None, pmt, collision, att,
                         0.0, 0.0, True)

    b = int(runtime.tables.b[kh, ka])
    mt = int(runtime.tables.transmit[kh, ka])
    announced = kh >= 1 or b >= 1
    t_total = mt if announced else n_h + mt
    collision = (not idle) and t_total >= 1
    penalty = 0.0
    if announced and mt >= 1:
        att = r_att if idle else -m * (cp + cb)
        hon = 0.0 if idle else -(cp + cb)
        penalty = 0.0 if idle else cp + cb
        if config.punishment_mode == "indirect" and not idle:
            runtime.punishment_on = True
    elif announced:
        att = hon = 0.0
    elif idle:
        att = r_att * mt / t_total
        hon = r_hon / t_total
    else:
        att = -m * cp
        hon = -cp
        penalty = cp
    return SlotTrace(not idle, kh, ka,
                     Announcement.H1 if announced else Announcement.H0,
                     t_total, collision, att, hon, penalty,
                     runtime.punishment_on)


def _replication_rng(base_seed: int, r: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(
        np.random.SeedSequence(base_seed, spawn_key=(r,))))


def _draws(rng: np.random.Generator, config: SimConfig
           ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    params = _base(config.params)
    h = config.horizon
    idle = rng.random(h) < params.p_idle
    p_busy = np.where(idle, params.p_false_alarm, 1.0 - params.p_missed_detection)
    if isinstance(config.params, HeteroParams):
        kh = rng.binomial(params.n_total - 1, p_busy)
        p_busy_a = np.where(idle, config.params.p_false_alarm_attacker,
                            1.0 - config.params.p_missed_detection_attacker)
        ka = rng.binomial(1, p_busy_a)
    else:
        kh = rng.binomial(params.n_honest, p_busy)
        ka = rng.binomial(params.n_attackers, p_busy)
    return idle, kh, ka


def _replicate(r: int, config: SimConfig, tables: PolicyTables,
               weights: np.ndarray) -> tuple:
    rng = _replication_rng(config.base_seed, r)
    idle, kh, ka = _draws(rng, config)
    att, hon, collision, trigger_slot = _vector_outcomes(idle, kh, ka, config, tables)
    return (float(np.mean(att)), float(np.mean(hon)),
            float(np.sum(att * weights)), float(np.sum(hon * weights)),
            int(np.count_nonzero(collision)), int(np.count_nonzero(~idle)),
            trigger_slot)


def _stat_block(values: np.ndarray) -> StatBlock:
    n = values.size
    mean = float(np.mean(values))
    var = float(np.var(values, ddof=1)) if n > 1 else 0.0
    return StatBlock(mean, var, 1.96 * math.sqrt(var / n))


def run_experiment(config: SimConfig, workers: int = 1) -> SimStats:
    """Replicated episodes, merged in replication order regardless of the
    worker count."""
    problems = validate_config(config)
    if problems:
        raise ValueError("; ".join(problems))
    tables = build_policy_tables(config)
    params = _base(config.params)
    delta = params.discount
    weights = delta ** np.arange(config.horizon)
    reps = range(config.replications)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(
                lambda r: _replicate(r, config, tables, weights), reps))
    else:
        rows = [_replicate(r, config, tables, weights) for r in reps]

    cols = list(zip(*rows))
    per_att, per_hon = np.array(cols[0]), np.array(cols[1])
    disc_att, disc_hon = np.array(cols[2]), np.array(cols[3])
    collisions, busy_slots = sum(cols[4]), sum(cols[5])
    triggers = cols[6]

    r_att, r_hon, cp, cb, m, _ = _reward_constants(config)
    tail = delta ** config.horizon / (1.0 - delta)
    tail_att = tail * max(r_att, m * (cp + cb))
    tail_hon = tail * max(r_hon, cp + cb)

    gamma = collisions / busy_slots if busy_slots else 0.0
    pu = (1.0 - gamma) * 1.0 + gamma * params.n_total * params.collision_penalty

    trigger_hist: dict[int, int] = {}
    never = 0
    for t in triggers:
        if t < 0:
            never += 1
        else:
            trigger_hist[t] = trigger_hist.get(t, 0) + 1

    return SimStats(_stat_block(per_att), _stat_block(per_hon),
                    _stat_block(disc_att), _stat_block(disc_hon),
                    tail_att, tail_hon, collisions, busy_slots, gamma, pu,
                    dict(sorted(trigger_hist.items())), never)


def estimate_pu_metrics(config: SimConfig, v_function=None, r_pu: float = 1.0,
                        workers: int = 1) -> tuple[float, float]:
    """Empirical collision rate on busy slots and the licensed user's
    per-slot utility (collision fines count as revenue to it)."""
    stats = run_experiment(config, workers)
    gamma = stats.empirical_gamma
    v = v_function if v_function is not None else (lambda x: x)
    params = _base(config.params)
    utility = (1.0 - gamma) * v(r_pu) \
        + gamma * params.n_total * params.collision_penalty
    return gamma, utility


def run_trace(config: SimConfig, slots: int, replication: int = 0) -> list[SlotTrace]:
    """Scalar-path trace of one episode prefix (its own stream; traces are
    diagnostics, not the estimator)."""
    problems = validate_config(config)
    if problems:
        raise ValueError("; ".join(problems))
    runtime = SlotRuntime(config, build_policy_tables(config))
    rng = _replication_rng(config.base_seed, replication)
    return [run_slot(rng, runtime) for _ in range(slots)]
