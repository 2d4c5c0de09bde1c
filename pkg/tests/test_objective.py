import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mtsparse.core import CouplingGraph, DataError, Edge, HyperParams, ModelWeights, MultiTaskDataset, TaskDataset
from mtsparse.objective import (
    coupling_grad,
    coupling_penalty,
    full_objective,
    l21_norm,
    logistic_grad,
    logistic_loss,
)

from conftest import random_instance


def one_task(x, y):
    x = np.atleast_2d(np.asarray(x, dtype=float))
    return MultiTaskDataset((TaskDataset(x, y),), ("t",), tuple(f"f{k}" for k in range(x.shape[1])))


def central_diff(f, w, h=1e-5):
    g = np.zeros_like(w)
    for idx in np.ndindex(w.shape):
        e = np.zeros_like(w)
        e[idx] = h
        g[idx] = (f(w + e) - f(w - e)) / (2 * h)
    return g


def test_loss_at_zero_is_n_log2(small_ds):
    assert logistic_loss(small_ds, np.zeros((3, 2))) == pytest.approx(5 * math.log(2), rel=1e-15)


def test_loss_hand_value():
    # log(1 + exp(2))
    assert logistic_loss(one_task([[2.0]], [-1]), np.array([[1.0]])) == pytest.approx(2.1269280110429727, rel=1e-12)


def test_loss_is_stable_for_large_margins():
    assert logistic_loss(one_task([[1000.0]], [1]), np.array([[1.0]])) == pytest.approx(0.0, abs=1e-300)
    assert logistic_loss(one_task([[1000.0]], [-1]), np.array([[1.0]])) == pytest.approx(1000.0)


def test_loss_uses_bias():
    ds = one_task([[0.0]], [1])
    model = ModelWeights(np.zeros((1, 1)), ("f0",), ("t",), np.array([3.0]))
    assert logistic_loss(ds, model) == pytest.approx(math.log1p(math.exp(-3.0)))


def test_loss_dimension_mismatch_names_task(small_ds):
    ds = MultiTaskDataset((small_ds.tasks[0], TaskDataset(np.ones((1, 2)), [1])), ("LI", "FS"), small_ds.feature_names)
    with pytest.raises(DataError, match="FS"):
        logistic_loss(ds, np.zeros((3, 2)))


def test_grad_at_zero_is_minus_half_x():
    x = np.array([[0.3, -1.2, 4.0]])
    np.testing.assert_allclose(logistic_grad(one_task(x, [1]), np.zeros((3, 1)), 0), -0.5 * x[0], rtol=1e-15)


def test_grad_matches_finite_differences(rng):
    ds, w, _ = random_instance(rng, d=10, c=1, m_max=30)
    ds = MultiTaskDataset((TaskDataset(ds.tasks[0].x[:30], ds.tasks[0].y[:30]),), ds.task_names, ds.feature_names)
    w = w * 0.3
    num = central_diff(lambda v: logistic_loss(ds, v.reshape(-1, 1)), w[:, 0])
    ana = logistic_grad(ds, w, 0)
    assert np.max(np.abs(ana - num)) / max(np.max(np.abs(num)), 1e-12) < 1e-5


def test_grad_symmetry(rng):
    ds, w, _ = random_instance(rng, d=5, c=2, m_max=10)
    flipped = MultiTaskDataset(tuple(TaskDataset(t.x, -t.y) for t in ds.tasks), ds.task_names, ds.feature_names)
    for c in range(2):
        np.testing.assert_allclose(logistic_grad(flipped, -w, c), -logistic_grad(ds, w, c), rtol=1e-12, atol=1e-14)


def test_coupling_values():
    w = np.array([[1.0, 0.0], [0.0, 1.0]])
    assert coupling_penalty(w, CouplingGraph((Edge(0, 1, 2.0),))) == pytest.approx(4.0)
    assert coupling_penalty(w, CouplingGraph()) == 0.0
    same = np.array([[1.0, 1.0, 1.0], [2.0, 2.0, 2.0]])
    assert coupling_penalty(same, CouplingGraph.complete(3, 5.0)) == 0.0
    np.testing.assert_array_equal(coupling_grad(same, CouplingGraph.complete(3, 5.0), 1), np.zeros(2))


def test_coupling_grad_hand_value():
    np.testing.assert_allclose(coupling_grad(np.array([[1.0, 0.0]]), CouplingGraph((Edge(0, 1, 1.0),)), 0), [2.0])


def test_coupling_grad_matches_finite_differences(rng):
    _, w, g = random_instance(rng, d=6, c=4, m_max=3)
    g = CouplingGraph.complete(4, 1.3) if not g.edges else g
    for c in range(4):
        def f(col, c=c):
            v = w.copy()
            v[:, c] = col
            return coupling_penalty(v, g)
        num = central_diff(f, w[:, c])
        ana = coupling_grad(w, g, c)
        assert np.max(np.abs(ana - num)) <= 1e-6 * max(np.max(np.abs(num)), 1.0)


def test_coupling_rejects_out_of_range_edge():
    with pytest.raises(ValueError):
        coupling_penalty(np.zeros((2, 2)), CouplingGraph((Edge(0, 5, 1.0),)))


def test_l21_values():
    assert l21_norm(np.zeros((3, 2))) == 0.0
    assert l21_norm(np.array([[3.0, 4.0]])) == pytest.approx(5.0)
    assert l21_norm(np.array([[1.0, 0.0], [0.0, 1.0]])) == pytest.approx(2.0)


def test_full_objective_at_zero(small_ds):
    obj = full_objective(small_ds, np.zeros((3, 2)), CouplingGraph.complete(2), HyperParams(lambda_sparse=7.0))
    assert obj.loss == pytest.approx(5 * math.log(2))
    assert obj.coupling == 0.0 and obj.sparsity == 0.0


def test_full_objective_hand_instance():
    # one feature, two tasks, one sample each: x=1,y=+1 and x=2,y=-1; W=[0.5, -1]
    ds = MultiTaskDataset((TaskDataset([[1.0]], [1]), TaskDataset([[2.0]], [-1])), ("a", "b"), ("f",))
    w = np.array([[0.5, -1.0]])
    g = CouplingGraph((Edge(0, 1, 0.25),))
    obj = full_objective(ds, w, g, HyperParams(lambda_sparse=2.0))
    loss = math.log1p(math.exp(-0.5)) + math.log1p(math.exp(-2.0))
    coupling = 0.25 * 1.5 ** 2
    sparsity = 2.0 * math.sqrt(0.25 + 1.0)
    assert obj.loss == pytest.approx(loss, rel=1e-14)
    assert obj.coupling == pytest.approx(coupling, rel=1e-14)
    assert obj.sparsity == pytest.approx(sparsity, rel=1e-14)
    assert obj.total == pytest.approx(loss + coupling + sparsity, rel=1e-14)


def test_doubling_lambda_doubles_sparsity_only(rng):
    ds, w, g = random_instance(rng, d=4, c=3, m_max=8)
    a = full_objective(ds, w, g, HyperParams(lambda_sparse=1.5))
    b = full_objective(ds, w, g, HyperParams(lambda_sparse=3.0))
    assert b.sparsity == pytest.approx(2 * a.sparsity)
    assert (b.loss, b.coupling) == (a.loss, a.coupling)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), theta=st.floats(0.01, 0.99))
def test_smooth_part_is_convex(seed, theta):
    rng = np.random.default_rng(seed)
    ds, w1, g = random_instance(rng, d=5, c=3, m_max=10)
    w2 = rng.standard_normal(w1.shape) * 2

    def f(w):
        return logistic_loss(ds, w) + coupling_penalty(w, g)

    mid = theta * w1 + (1 - theta) * w2
    assert f(mid) <= theta * f(w1) + (1 - theta) * f(w2) + 1e-9


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), mag=st.floats(1.0, 1e6))
def test_finite_for_huge_margins(seed, mag):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((6, 3))
    x /= np.abs(x @ np.ones(3)).max()
    ds = one_task(x * mag, np.where(rng.random(6) < 0.5, -1, 1))
    w = np.ones((3, 1))
    assert math.isfinite(logistic_loss(ds, w))
    assert np.all(np.isfinite(logistic_grad(ds, w, 0)))
