"""Single-slot rewards and the attackers' best response.

States count local busy decisions (honest, attacker); action profiles
count false busy reports b and Phase-II transmitters M_T.  Counts are
lossless here: rewards depend only on the OR of the reports and on how
many nodes transmit, never on which ones.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import posterior
from .fusion import Announcement
from .model import ScenarioParams


@dataclass(frozen=True)
class SensingState:
    honest_busy: int
    attacker_busy: int


@dataclass(frozen=True)
class ActionProfile:
    busy_reports: int
    transmitters: int


@dataclass(frozen=True)
class RewardBreakdown:
    attacker_aggregate: float
    honest_per_su: float
    announcement: Announcement
    is_attack: bool


CSV_COLUMNS = ("honest_busy", "attacker_busy", "b", "M_T", "announcement",
               "attacker_reward", "honest_reward", "is_attack")


def _check_state(state: SensingState, params: ScenarioParams) -> None:
    if not 0 <= state.honest_busy <= params.n_honest:
        raise ValueError(f"honest_busy {state.honest_busy} outside [0, {params.n_honest}]")
    if not 0 <= state.attacker_busy <= params.n_attackers:
        raise ValueError(
            f"attacker_busy {state.attacker_busy} outside [0, {params.n_attackers}]")


def _check_profile(profile: ActionProfile, params: ScenarioParams) -> None:
    m = params.n_attackers
    if not 0 <= profile.busy_reports <= m:
        raise ValueError(f"busy_reports {profile.busy_reports} outside [0, {m}]")
    if not 0 <= profile.transmitters <= m:
        raise ValueError(f"transmitters {profile.transmitters} outside [0, {m}]")


def honest_equivalent_profile(state: SensingState, params: ScenarioParams) -> ActionProfile:
    """Report truthfully, then transmit only on an idle announcement."""
    _check_state(state, params)
    announced_busy = state.honest_busy >= 1 or state.attacker_busy >= 1
    return ActionProfile(state.attacker_busy,
                         0 if announced_busy else params.n_attackers)


def evaluate_profile(state: SensingState, profile: ActionProfile,
                     params: ScenarioParams,
                     include_direct_punishment: bool) -> RewardBreakdown:
    """Expected rewards for one slot, conditional on the local decisions.

    The posterior conditions on the true sensing outcome k, not on the
    reports: falsifying a report changes the announcement, not the channel
    evidence the attackers hold.
    """
    _check_state(state, params)
    _check_profile(profile, params)
    n, m = params.n_total, params.n_attackers
    k = state.honest_busy + state.attacker_busy
    b, m_t = profile.busy_reports, profile.transmitters
    announced_busy = state.honest_busy >= 1 or b >= 1
    announcement = Announcement.H1 if announced_busy else Announcement.H0
    is_attack = profile != honest_equivalent_profile(state, params)

    post = posterior.posterior_idle(n, k, params)
    pi, pb = post.p_idle_given_reports, post.p_busy_given_reports
    cp = params.cp_rate1
    cb = params.cb_rate1 if include_direct_punishment else 0.0
    rate = params.total_rate

    if not announced_busy:
        # every honest SU transmits alongside the m_t attackers; a busy
        # channel collides all N transmissions but the penalty hits all N SUs
        share = pi / (n - m + m_t)
        attacker = m_t * share - m * pb * cp
        honest = share - pb * cp
    elif m_t >= 1:
        attacker = pi - m * pb * (cp + cb)
        honest = -pb * (cp + cb)
    else:
        attacker = 0.0
        honest = 0.0
    return RewardBreakdown(rate * attacker, rate * honest, announcement, is_attack)


def best_response(state: SensingState, params: ScenarioParams,
                  include_direct_punishment: bool) -> tuple[ActionProfile, RewardBreakdown]:
    """Exhaustive maximizer of the attackers' aggregate reward.

    Ties resolve to the honest-equivalent profile when it is maximal
    (punishment thresholds are strict, so the boundary counts as deterred);
    among attacking maximizers, to the least falsified report count, then
    the most transmitters, then fewer busy reports.
    """
    _check_state(state, params)
    m = params.n_attackers
    honest = honest_equivalent_profile(state, params)
    evaluated = {
        ActionProfile(b, mt): evaluate_profile(
            state, ActionProfile(b, mt), params, include_direct_punishment)
        for b in range(m + 1) for mt in range(m + 1)
    }
    best_value = max(r.attacker_aggregate for r in evaluated.values())
    if evaluated[honest].attacker_aggregate == best_value:
        return honest, evaluated[honest]
    pick = min(
        (p for p, r in evaluated.items() if r.attacker_aggregate == best_value),
        key=lambda p: (abs(p.busy_reports - state.attacker_busy),
                       -p.transmitters, p.busy_reports))
    return pick, evaluated[pick]


def behavior_table(params: ScenarioParams, include_direct_punishment: bool = True,
                   ) -> list[tuple[SensingState, ActionProfile, RewardBreakdown]]:
    """Best response in every sensing state, in lexicographic state order."""
    rows = []
    for kh in range(params.n_honest + 1):
        for ka in range(params.n_attackers + 1):
            state = SensingState(kh, ka)
            profile, breakdown = best_response(state, params, include_direct_punishment)
            rows.append((state, profile, breakdown))
    return rows


def expected_slot_rewards(params: ScenarioParams, include_direct_punishment: bool,
                          honest: bool = False) -> tuple[float, float]:
    """Slot-stationary expectation of (attacker aggregate, honest per-SU)
    under the best response, or under honest behavior when honest=True."""
    att = 0.0
    hon = 0.0
    for kh in range(params.n_honest + 1):
        for ka in range(params.n_attackers + 1):
            weight = posterior.report_split_pmf(kh, ka, params)
            state = SensingState(kh, ka)
            if honest:
                profile = honest_equivalent_profile(state, params)
                breakdown = evaluate_profile(state, profile, params,
                                             include_direct_punishment)
            else:
                _, breakdown = best_response(state, params,
                                             include_direct_punishment)
            att += weight * breakdown.attacker_aggregate
            hon += weight * breakdown.honest_per_su
    return att, hon


def csv_record(state: SensingState, profile: ActionProfile,
               breakdown: RewardBreakdown) -> tuple:
    return (state.honest_busy, state.attacker_busy,
            profile.busy_reports, profile.transmitters,
            breakdown.announcement.value,
            breakdown.attacker_aggregate, breakdown.honest_per_su,
            breakdown.is_attack)
