import dataclasses
import math

import numpy as np
import pytest

from coopsense.indirect import lr_dishonest, lr_honest
from coopsense.mdp import (build_mdp, bellman_backup, honest_policy,
                           policy_value, start_distribution, start_value,
                           threshold_policy, value_iteration,
                           verify_threshold_structure)
from coopsense.model import ScenarioParams
from coopsense.oneshot import ActionProfile

from conftest import region_ii_scenario, rel_err

AT_WC = ScenarioParams(6, 2, 0.6, 0.08, 0.08, 1e4, discount=0.9)


def test_state_space_layout():
    model = build_mdp(AT_WC)
    n_pre = (AT_WC.n_honest + 1) * (AT_WC.n_attackers + 1)
    assert len(model.states) == n_pre + AT_WC.n_attackers + 1
    assert model.n_pre == n_pre
    assert model.states[0] == ("pre", 0, 0)
    assert model.states[n_pre] == ("post", 0)
    # honest-equivalent action is always first in a pre state's order
    for si, s in enumerate(model.states[:n_pre]):
        first = model.actions_per_state[si][0]
        assert isinstance(first, ActionProfile)


def test_transition_rows_are_distributions():
    model = build_mdp(AT_WC)
    for si in range(len(model.states)):
        for ai, _ in enumerate(model.actions_per_state[si]):
            row = model.transition[ai, si]
            assert abs(row.sum() - 1.0) < 1e-12
            assert (row >= 0.0).all()
        for ai in range(len(model.actions_per_state[si]),
                        model.transition.shape[0]):
            assert model.transition[ai, si, si] == 1.0
            assert model.reward[ai, si] == -math.inf


def test_post_states_absorb():
    model = build_mdp(AT_WC)
    n_pre = model.n_pre
    for si in range(n_pre, len(model.states)):
        for ai, _ in enumerate(model.actions_per_state[si]):
            assert model.transition[ai, si, :n_pre].sum() == 0.0


def test_start_distribution_sums_to_one():
    model = build_mdp(AT_WC)
    dist = start_distribution(model)
    assert abs(dist.sum() - 1.0) < 1e-12
    assert (dist[model.n_pre:] == 0.0).all()


def test_honest_policy_matches_closed_form():
    for params in (AT_WC,
                   ScenarioParams(4, 3, 0.6, 0.05, 0.45, 4.0, discount=0.8),
                   ScenarioParams(7, 3, 0.45, 0.03, 0.25, 300.0,
                                  discount=0.7)):
        model = build_mdp(params)
        got = start_value(model, policy_value(model, honest_policy(model)))
        assert rel_err(got, lr_honest(params)) < 1e-12


def test_optimal_value_matches_closed_form_pinned():
    model = build_mdp(AT_WC)
    values, policy = value_iteration(model, 1e-12)
    got = start_value(model, values)
    out = lr_dishonest(AT_WC)
    best = max(out.lr_honest, out.lr_dishonest)
    assert rel_err(got, best) < 1e-10
    # the greedy policy attacks exactly the low-count states
    z_policy = threshold_policy(model, out.z_star)
    z_value = start_value(model, policy_value(model, z_policy))
    assert rel_err(z_value, out.lr_dishonest) < 1e-10


def test_optimal_value_matches_closed_form_sampled():
    rng = np.random.default_rng(41)
    for _ in range(15):
        params = region_ii_scenario(rng, n_range=(3, 8), max_attackers=4)
        model = build_mdp(params)
        values, _ = value_iteration(model, 1e-11)
        got = start_value(model, values)
        out = lr_dishonest(params)
        best = max(out.lr_honest, out.lr_dishonest)
        scale = max(abs(best), 1.0)
        assert abs(got - best) / scale < 1e-8


def test_bellman_backup_fixed_point():
    model = build_mdp(AT_WC)
    values, _ = value_iteration(model, 1e-12)
    backed = bellman_backup(model, values)
    scale = max(1.0, float(np.max(np.abs(values))))
    assert float(np.max(np.abs(backed - values))) / scale < 1e-11


def test_threshold_scan_peaks_at_reported_cutoff():
    model = build_mdp(AT_WC)
    out = lr_dishonest(AT_WC)
    scan = []
    for z in range(AT_WC.n_total + 1):
        v = start_value(model, policy_value(model, threshold_policy(model, z)))
        scan.append(v)
    assert int(np.argmax(scan)) == out.z_star


def test_threshold_structure_holds_in_window():
    rng = np.random.default_rng(43)
    for _ in range(10):
        params = region_ii_scenario(rng, n_range=(3, 7), max_attackers=3)
        model = build_mdp(params)
        ok, counterexample = verify_threshold_structure(model)
        assert ok, counterexample


def test_value_iteration_rejects_bad_tolerance():
    model = build_mdp(AT_WC)
    with pytest.raises(ValueError):
        value_iteration(model, 0.0)


def test_values_scale_with_rate():
    scaled = dataclasses.replace(AT_WC, total_rate=3.0, collision_penalty=3e4)
    base_v, _ = value_iteration(build_mdp(AT_WC), 1e-12)
    scaled_v, _ = value_iteration(build_mdp(scaled), 1e-12)
    model = build_mdp(AT_WC)
    assert rel_err(start_value(model, scaled_v),
                   3.0 * start_value(model, base_v)) < 1e-10
