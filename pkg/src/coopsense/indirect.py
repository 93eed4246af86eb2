"""Long-run rewards under the collaboration-termination punishment.

Closed forms for the attackers' discounted value when they stay honest
versus when they attack below a busy-count threshold z, and the discount
factors at which honesty takes over.  Everything here is an expectation
over report counts; the mdp module re-derives the same numbers from an
explicit transition model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from . import posterior
from .model import (CooperationCase, ScenarioParams, TransmissionCase,
                    classify_cooperation_case, classify_transmission_case)


@dataclass(frozen=True)
class LongTermRewards:
    lr_honest: float
    lr_dishonest: float
    cooperation_case: CooperationCase
    transmission_case: TransmissionCase
    z_star: int | None
    attack_prevented: bool


@dataclass(frozen=True)
class DeltaThreshold:
    """Discount factor above which honesty beats attacking.

    raw_value is the unclamped closed form; value folds it into (0,1]
    with 1.0 meaning no discount factor below 1 deters (deterrable is
    False exactly then).
    """

    value: float
    raw_value: float
    deterrable: bool
    cooperation_case: CooperationCase


def _shared_slot_value(group_size: int, params: ScenarioParams) -> float:
    # per-attacker slot value of honest sharing on a unanimous idle vote,
    # at unit rate: m_idle/n - (C_p/r) * m_busy
    idle, busy = posterior.joint_report_mass(group_size, 0, params)
    return idle / group_size - params.cp_rate1 * busy


def lr_honest(params: ScenarioParams) -> float:
    """Discounted aggregate attacker value of behaving honestly forever."""
    a = _shared_slot_value(params.n_total, params)
    return params.total_rate * params.n_attackers * a / (1.0 - params.discount)


def _post_punishment_gain(params: ScenarioParams) -> float:
    """Expected per-slot aggregate value once the attackers sense alone.

    The attackers transmit only when their own posterior makes it pay, so
    each count contributes its positive part.  Inside the penalty window
    at most the all-idle count is positive, which is the printed special
    case; the flooring keeps the value right outside it too.
    """
    m, cp = params.n_attackers, params.cp_rate1
    gain = 0.0
    for ka in range(m + 1):
        idle, busy = posterior.joint_report_mass(m, ka, params)
        gain += max(idle - m * cp * busy, 0.0)
    return gain


def _attack_value(params: ScenarioParams, z: int) -> float:
    """Unit-rate value of attacking whenever at most z sensors say busy."""
    n, m = params.n_total, params.n_attackers
    cp, delta = params.cp_rate1, params.discount
    reward_sum = 0.0
    trigger_sum = 0.0
    for k in range(z + 1):
        idle, busy = posterior.joint_report_mass(n, k, params)
        reward_sum += idle - m * cp * busy
        trigger_sum += busy
    denom = 1.0 - delta * (1.0 - trigger_sum)
    w = _post_punishment_gain(params)
    return (reward_sum + delta / (1.0 - delta) * trigger_sum * w) / denom


def lr_dishonest(params: ScenarioParams) -> LongTermRewards:
    """Optimal attacking value, with the attack-count threshold it uses.

    Transmission case NT pins the attack set to the unanimous-idle state;
    case AT scans every busy-count cutoff and keeps the best (ties go to
    the smallest cutoff, i.e. the fewest attacking states).
    """
    t_case = classify_transmission_case(params)
    c_case = classify_cooperation_case(params)
    if t_case is TransmissionCase.NT:
        z_star: int | None = None
        value = _attack_value(params, 0)
    else:
        z_star = 0
        value = _attack_value(params, 0)
        for z in range(1, params.n_total + 1):
            candidate = _attack_value(params, z)
            if candidate > value:
                value, z_star = candidate, z
    honest = lr_honest(params)
    dishonest = params.total_rate * value
    return LongTermRewards(honest, dishonest, c_case, t_case, z_star,
                           honest >= dishonest)


def _exp_diff(la: float, lb: float) -> float:
    # exp(la) - exp(lb) without forming the near-cancelling pair
    if la == lb:
        return 0.0
    if la > lb:
        return math.exp(la) * -math.expm1(lb - la)
    return math.exp(lb) * math.expm1(la - lb)


def _log_mass_idle(group_size: int, params: ScenarioParams) -> float:
    return math.log(params.p_idle) + group_size * math.log1p(-params.p_false_alarm)


def _log_mass_busy(group_size: int, params: ScenarioParams) -> float:
    return math.log1p(-params.p_idle) + group_size * math.log(params.p_missed_detection)


def _threshold_x_wc(params: ScenarioParams) -> float:
    n, m = params.n_total, params.n_attackers
    a = _shared_slot_value(n, params)
    ratio = math.exp(_log_mass_busy(n, params) - _log_mass_idle(n, params))
    return a * ratio / (1.0 / m - 1.0 / n)


def _threshold_x_sc(params: ScenarioParams) -> float:
    n, m = params.n_total, params.n_attackers
    cp = params.cp_rate1
    # a - g pairs the idle-mass terms and the busy-mass terms separately:
    # both shrink like (1-P_f)^N and the direct subtraction cancels badly
    idle_part = _exp_diff(_log_mass_idle(n, params) - math.log(n),
                          _log_mass_idle(m, params) - math.log(m))
    busy_part = _exp_diff(_log_mass_busy(n, params), _log_mass_busy(m, params))
    a_minus_g = idle_part - cp * busy_part
    ratio = math.exp(_log_mass_busy(n, params) - _log_mass_idle(n, params))
    return a_minus_g * ratio / (1.0 / m - 1.0 / n)


def _threshold_from_x(x: float, case: CooperationCase) -> DeltaThreshold:
    raw = 1.0 / (1.0 + x)
    deterrable = x > 0.0
    return DeltaThreshold(raw if deterrable else 1.0, raw, deterrable, case)


def delta_threshold_wc(params: ScenarioParams) -> DeltaThreshold:
    """Closed-form discount threshold when post-punishment lone sensing
    never pays (attackers lose everything on termination)."""
    return _threshold_from_x(_threshold_x_wc(params), CooperationCase.WC)


def delta_threshold_sc(params: ScenarioParams) -> DeltaThreshold:
    """Closed-form discount threshold when the attackers keep transmitting
    on their own unanimous idle vote after termination."""
    return _threshold_from_x(_threshold_x_sc(params), CooperationCase.SC)


def delta_threshold(params: ScenarioParams) -> DeltaThreshold:
    """Threshold for the scenario's own cooperation case.

    Only meaningful when the transmission case is NT; under AT the attack
    set is not pinned to the unanimous-idle state and the closed forms do
    not apply.
    """
    if classify_transmission_case(params) is TransmissionCase.AT:
        raise ValueError("discount threshold closed forms require transmission case NT")
    if classify_cooperation_case(params) is CooperationCase.WC:
        return delta_threshold_wc(params)
    return delta_threshold_sc(params)


def delta_threshold_worst_case(params: ScenarioParams) -> tuple[int, DeltaThreshold]:
    """Max threshold over attacker counts 1..N-1, for a fusion center that
    does not know M.  Counts whose transmission case is AT are skipped."""
    best: tuple[int, DeltaThreshold] | None = None
    for m in range(1, params.n_total):
        candidate = replace(params, n_attackers=m)
        if classify_transmission_case(candidate) is TransmissionCase.AT:
            continue
        th = delta_threshold(candidate)
        if best is None or th.value > best[1].value:
            best = (m, th)
    if best is None:
        raise ValueError("no attacker count gives transmission case NT")
    return best


def delta_threshold_oracle(params: ScenarioParams) -> float | None:
    """Bisection for the discount factor where honesty overtakes attacking.

    Runs on the long-run value functions themselves, not on the threshold
    algebra, so it cross-checks the closed forms.  None when the sign of
    lr_honest - lr_dishonest never changes over (0,1).
    """

    def gap(delta: float) -> float:
        at_delta = replace(params, discount=delta)
        rewards = lr_dishonest(at_delta)
        return rewards.lr_honest - rewards.lr_dishonest

    lo, hi = 1e-12, 1.0 - 1e-12
    g_lo, g_hi = gap(lo), gap(hi)
    if not (g_lo < 0.0 < g_hi):
        return None
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if gap(mid) < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-13:
            break
    return 0.5 * (lo + hi)
