import numpy as np
import pytest

from harmosep.errors import DomainError, OptimizationError
from harmosep.optim import AdamState, BoxSpec, adam_step, minimize_box


def quadratic(target):
    def objective(x):
        d = x - target
        return float(d @ d), 2.0 * d
    return objective


def test_minimize_box_unconstrained_minimum_inside():
    box = BoxSpec(np.full(3, -10.0), np.full(3, 10.0))
    x, f = minimize_box(quadratic(np.array([1.0, -2.0, 3.0])),
                        np.zeros(3), box)
    assert np.allclose(x, [1, -2, 3], atol=1e-6)
    assert f < 1e-10


def test_minimize_box_respects_bounds():
    box = BoxSpec(np.zeros(2), np.ones(2))
    x, f = minimize_box(quadratic(np.array([2.0, -1.0])),
                        np.array([0.5, 0.5]), box)
    assert np.allclose(x, [1.0, 0.0], atol=1e-8)


def test_minimize_box_never_worse_than_start():
    # a nasty objective: flat except for a narrow well
    def objective(x):
        v = float(np.sum(1.0 - np.exp(-50.0 * (x - 0.3) ** 2)))
        g = 100.0 * (x - 0.3) * np.exp(-50.0 * (x - 0.3) ** 2)
        return v, g
    box = BoxSpec(np.array([-5.0]), np.array([5.0]))
    x0 = np.array([4.0])
    _, f = minimize_box(objective, x0, box)
    assert f <= objective(x0)[0]


def test_minimize_box_nan_raises_with_best_iterate():
    calls = {"n": 0}

    def objective(x):
        calls["n"] += 1
        if calls["n"] > 3:
            return np.nan, np.zeros_like(x)
        d = x - 1.0
        return float(d @ d), 2.0 * d

    box = BoxSpec(np.array([-5.0]), np.array([5.0]))
    with pytest.raises(OptimizationError) as info:
        minimize_box(objective, np.array([0.0]), box)
    assert info.value.best_x is not None
    assert np.isfinite(info.value.best_f)


def test_box_validates_ordering():
    with pytest.raises(DomainError):
        BoxSpec(np.array([1.0]), np.array([0.0]))


def reference_adam(D, g, state_ref, kappa=1e-3, b1=0.9, b2=0.999,
                   eps=1e-8):
    """Textbook Adam for a single scalar parameter."""
    m, v, t = state_ref
    t += 1
    m = b1 * m + (1 - b1) * g
    v = b2 * v + (1 - b2) * g * g
    mh = m / (1 - b1**t)
    vh = v / (1 - b2**t)
    D = np.clip(D - kappa * mh / np.sqrt(vh + eps), 0.0, 1.0)
    return D, (m, v, t)


def test_adam_matches_textbook_for_single_entry_columns(rng):
    # with one harmonic per column the column-mean second moment is the
    # ordinary per-parameter second moment
    n_pat = 3
    D = rng.random((1, n_pat))
    state = AdamState.zeros(1, n_pat)
    refs = [(0.0, 0.0, 0) for _ in range(n_pat)]
    Dref = D.copy()
    for _ in range(50):
        g = rng.normal(size=(1, n_pat))
        adam_step(D, state, g)
        for eta in range(n_pat):
            Dref[0, eta], refs[eta] = reference_adam(Dref[0, eta],
                                                     g[0, eta], refs[eta])
    assert np.allclose(D, Dref, atol=1e-12)


def test_adam_constant_gradient_unit_ratio():
    # constant gradient: the bias-corrected ratio approaches
    # g / sqrt(mean(g^2)), so every entry moves by kappa * that ratio
    D = np.full((4, 1), 0.5)
    state = AdamState.zeros(4, 1)
    g = np.array([[3.0], [-3.0], [3.0], [-3.0]])
    prev = D.copy()
    for i in range(200):
        prev = D.copy()
        adam_step(D, state, g)
    step = prev - D
    expect = state.kappa * g[:, 0] / np.sqrt(np.mean(g[:, 0] ** 2))
    assert np.allclose(step[:, 0], expect, rtol=1e-4)


def test_adam_clamps_to_unit_box():
    D = np.array([[0.999], [0.001]])
    state = AdamState.zeros(2, 1)
    for _ in range(100):
        adam_step(D, state, np.array([[-10.0], [10.0]]))
    assert D[0, 0] == 1.0
    assert D[1, 0] == 0.0


def test_adam_active_columns_only():
    D = np.full((2, 2), 0.5)
    state = AdamState.zeros(2, 2)
    adam_step(D, state, np.ones((2, 2)), active_columns=[1])
    assert np.all(D[:, 0] == 0.5)
    assert state.tau[0] == 0 and state.tau[1] == 1


def test_adam_rejects_non_finite_gradient():
    D = np.full((2, 1), 0.5)
    state = AdamState.zeros(2, 1)
    with pytest.raises(DomainError):
        adam_step(D, state, np.array([[np.nan], [0.0]]))


def test_reset_column_zeroes_state():
    state = AdamState.zeros(2, 2)
    adam_step(np.full((2, 2), 0.5), state, np.ones((2, 2)))
    state.reset_column(0)
    assert state.tau[0] == 0 and np.all(state.v1[:, 0] == 0)
    assert state.v2[0] == 0 and state.tau[1] == 1
