"""Direct-punishment thresholds.

The smallest busy-announcement collision charge C_b that removes every
profitable attack, for M homogeneous attackers and for a single attacker
with its own sensing quality and rate.  Each closed form is the max of
the per-state deterrence constraints; direct_threshold_oracle re-derives
the homogeneous value behaviorally by bisecting over the best response.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from . import oneshot
from .model import HeteroParams, ScenarioParams
from .oneshot import SensingState


@dataclass(frozen=True)
class DirectThreshold:
    value: float
    log_value: float
    binding_constraint: str
    per_constraint_values: dict[str, float]


def _exp(x: float) -> float:
    if x > 709.0:
        return math.inf
    return math.exp(x)


def _exp_diff(la: float, lb: float) -> float:
    # exp(la) - exp(lb) without forming the near-cancelling pair
    if la == lb:
        return 0.0
    if la > lb:
        return _exp(la) * -math.expm1(lb - la)
    return _exp(lb) * math.expm1(la - lb)


def _package(constraints: dict[str, float]) -> DirectThreshold:
    value = max(0.0, max(constraints.values()))
    binding = "none"
    for name, c in constraints.items():
        if c == value:
            binding = name
            break
    log_value = math.log(value) if value > 0.0 else -math.inf
    return DirectThreshold(value, log_value, binding, constraints)


def direct_threshold(m_attackers: int, params: ScenarioParams) -> DirectThreshold:
    """Deterrence charge for m_attackers colluders (params' own count is
    ignored so one scenario can be swept over M).

    Two constraints survive the state-by-state analysis: the unanimous-idle
    state, where attacking must not beat the honest share, and the
    single-busy state, where transmitting through a busy announcement must
    not pay.  All other states are slacker versions of these two.
    """
    n = params.n_total
    if not 1 <= m_attackers < n:
        raise ValueError(f"m_attackers {m_attackers} outside [1, {n - 1}]")
    p_i, p_f, p_m = params.p_idle, params.p_false_alarm, params.p_missed_detection
    log_pref = (math.log(p_i) - math.log1p(-p_i)
                + n * (math.log1p(-p_f) - math.log(p_m)))
    log_q = (math.log(p_f) + math.log(p_m)
             - math.log1p(-p_f) - math.log1p(-p_m))
    log_rate = math.log(params.total_rate)
    all_idle = _exp(log_pref + math.log(1.0 / m_attackers - 1.0 / n) + log_rate)
    single_busy = _exp_diff(log_pref + log_q - math.log(m_attackers) + log_rate,
                            math.log(params.collision_penalty))
    return _package({"all_idle_deviation": all_idle,
                     "single_busy_transmission": single_busy})


def worst_case_threshold(params: ScenarioParams) -> DirectThreshold:
    """Charge that deters any attacker count: the M=1 threshold (the
    constraints are decreasing in M)."""
    return direct_threshold(1, params)


def threshold_sweep(params: ScenarioParams) -> list[tuple[int, DirectThreshold]]:
    return [(m, direct_threshold(m, params)) for m in range(1, params.n_total)]


def _any_attack(params: ScenarioParams) -> bool:
    for kh in range(params.n_honest + 1):
        for ka in range(params.n_attackers + 1):
            _, breakdown = oneshot.best_response(SensingState(kh, ka), params, True)
            if breakdown.is_attack:
                return True
    return False


def direct_threshold_oracle(m_attackers: int, params: ScenarioParams) -> float:
    """Behavioral threshold: bisection on C_b over the best-response scan.

    Meaningful inside the OR-rule penalty window; outside it some attacks
    are immune to C_b (no busy announcement is involved) and no finite
    charge empties the attack set.
    """
    n = params.n_total
    if not 1 <= m_attackers < n:
        raise ValueError(f"m_attackers {m_attackers} outside [1, {n - 1}]")

    def attacked(cb: float) -> bool:
        return _any_attack(replace(params, n_attackers=m_attackers,
                                   direct_punishment=cb))

    if not attacked(0.0):
        return 0.0
    hi = max(params.collision_penalty, params.total_rate)
    for _ in range(200):
        if not attacked(hi):
            break
        hi *= 2.0
    else:
        raise ValueError("no finite direct punishment deters every attack")
    lo = 0.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if attacked(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def direct_threshold_hetero(hparams: HeteroParams) -> DirectThreshold:
    """Deterrence charge for one attacker with its own P_f, P_m and rate.

    Three constraints: deviating in the unanimous-idle state, transmitting
    through a busy announcement that the attacker's own busy sensing would
    have caused, and doing so when an honest sensor saw the channel busy.
    """
    base = hparams.base
    n = base.n_total
    p_i, p_f, p_m = base.p_idle, base.p_false_alarm, base.p_missed_detection
    p_fa = hparams.p_false_alarm_attacker
    p_ma = hparams.p_missed_detection_attacker
    log_prior = math.log(p_i) - math.log1p(-p_i)
    log_honest = (n - 1) * (math.log1p(-p_f) - math.log(p_m))
    log_q = (math.log(p_f) + math.log(p_m)
             - math.log1p(-p_f) - math.log1p(-p_m))
    log_rate_a = math.log(hparams.rate_attacker)
    log_cp = math.log(base.collision_penalty)
    all_idle = _exp(log_prior + log_honest
                    + math.log1p(-p_fa) - math.log(p_ma)
                    + math.log((n - 1) / n) + log_rate_a)
    own_busy = _exp_diff(log_prior + log_honest
                         + math.log(p_fa) - math.log1p(-p_ma) + log_rate_a,
                         log_cp)
    honest_busy = _exp_diff(log_prior + log_honest + log_q
                            + math.log1p(-p_fa) - math.log(p_ma) + log_rate_a,
                            log_cp)
    return _package({"all_idle_deviation": all_idle,
                     "own_busy_transmission": own_busy,
                     "honest_busy_transmission": honest_busy})
