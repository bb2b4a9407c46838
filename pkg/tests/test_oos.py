import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oos_ase import (
    ConfigError,
    EigenPairs,
    Embedding,
    FeasibilityError,
    LatentDistribution,
    SolverOptions,
    ase,
    embed_matrix,
    likelihood,
    lls_oos,
    lstsq,
    ml_oos,
    procrustes,
    sample_adjacency,
    sample_latents,
    sample_oos_edges,
)

MIX = LatentDistribution(2, [((0.2, 0.7), 0.4), ((0.65, 0.3), 0.6)])


def _embedding_from_positions(positions):
    """Build an Embedding directly from positions = U sqrt(S) pieces."""
    positions = np.asarray(positions, dtype=float)
    norms = np.linalg.norm(positions, axis=0)
    vectors = positions / norms
    values = norms**2
    order = np.argsort(values)[::-1]
    eig = EigenPairs(values=values[order], vectors=vectors[:, order])
    return Embedding(
        positions=eig.vectors * np.sqrt(eig.values),
        eig=eig,
        source_order=positions.shape[0],
    )


def _mix_embedding(n, seed):
    x = sample_latents(MIX, n, seed=seed)
    return x, ase(sample_adjacency(x, seed=seed + 100_000), 2)


# ---------------------------------------------------------------- least squares


def test_lls_consistent_system_returns_planted_w():
    _, emb = _mix_embedding(120, seed=70)
    w0 = np.array([0.4, 0.3])
    a = emb.positions @ w0  # fractional values, all inside [0, 1]
    assert np.all((a > 0) & (a < 1))
    est = lls_oos(emb, a)
    assert est.method == "LS"
    assert np.linalg.norm(est.w - w0) <= 1e-10


def test_lls_zero_vector():
    _, emb = _mix_embedding(60, seed=71)
    est = lls_oos(emb, np.zeros(60))
    assert np.allclose(est.w, 0.0)


def test_lls_matches_generic_lstsq():
    x, emb = _mix_embedding(200, seed=72)
    a = sample_oos_edges(x, MIX.points[1], seed=73)
    closed = lls_oos(emb, a).w
    generic = lstsq(emb.positions, a.a.astype(float))
    assert np.linalg.norm(closed - generic) <= 1e-10


def test_lls_fixture_estimates_second_atom():
    # frozen draw at n=500 with the new vertex at x2 = (0.65, 0.3)
    x, emb = _mix_embedding(500, seed=74)
    a = sample_oos_edges(x, MIX.points[1], seed=75)
    est = lls_oos(emb, a)
    rot = procrustes(emb.positions, x.rows).rotation
    assert np.linalg.norm(rot.T @ est.w - MIX.points[1]) <= 0.15


def test_lls_length_mismatch():
    _, emb = _mix_embedding(30, seed=76)
    with pytest.raises(ConfigError, match="length"):
        lls_oos(emb, np.zeros(31))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000), st.integers(20, 150), st.integers(1, 3))
def test_lls_closed_form_equals_lstsq_property(seed, n, d):
    rng = np.random.default_rng(seed)
    dist = LatentDistribution(
        d, [(np.full(d, 0.9 / np.sqrt(d)), 0.5), (np.full(d, 0.4 / np.sqrt(d)), 0.5)]
    )
    x = sample_latents(dist, n, seed=seed)
    emb = ase(sample_adjacency(x, seed=seed + 1), d)
    a = rng.integers(0, 2, size=n).astype(float)
    assert np.linalg.norm(lls_oos(emb, a).w - lstsq(emb.positions, a)) <= 1e-10


def test_lls_cost_scales_linearly():
    # O(d^2 n) contract: doubling n must not much more than double the time
    def timed(n, reps=9):
        rng = np.random.default_rng(7)
        q, _ = np.linalg.qr(rng.standard_normal((n, 2)))
        emb = _embedding_from_positions(q * np.sqrt([4.0, 1.0]))
        a = rng.integers(0, 2, size=n).astype(float)
        lls_oos(emb, a)  # warm-up
        samples = []
        for _ in range(reps):
            t0 = time.perf_counter()
            for _ in range(20):
                lls_oos(emb, a)
            samples.append(time.perf_counter() - t0)
        return min(samples)

    t1, t2 = timed(200_000), timed(400_000)
    assert t2 / t1 < 2.6


# ------------------------------------------------------------------ likelihood


def test_likelihood_single_term_hand_values():
    emb = _embedding_from_positions(np.array([[1.0]]))
    value, grad, hess = likelihood(emb, np.array([1.0]), np.array([0.5]))
    assert value == pytest.approx(np.log(0.5), abs=1e-15)
    assert grad == pytest.approx(np.array([2.0]), abs=1e-12)
    assert hess == pytest.approx(np.array([[-4.0]]), abs=1e-12)


def test_likelihood_domain_error():
    emb = _embedding_from_positions(np.array([[1.0]]))
    with pytest.raises(ConfigError, match="domain"):
        likelihood(emb, np.array([1.0]), np.array([1.0]))
    with pytest.raises(ConfigError, match="domain"):
        likelihood(emb, np.array([1.0]), np.array([0.0]))


def test_likelihood_gradient_matches_finite_differences():
    x, emb = _mix_embedding(80, seed=77)
    a = sample_oos_edges(x, MIX.points[0], seed=78)
    rng = np.random.default_rng(79)
    rot = procrustes(emb.positions, x.rows).rotation
    h = 1e-6
    for _ in range(20):
        w = rot @ (MIX.points[rng.integers(2)] + rng.uniform(-0.02, 0.02, 2))
        value, grad, hess = likelihood(emb, a, w)
        fd_grad = np.empty(2)
        fd_hess = np.empty((2, 2))
        for j in range(2):
            e = np.zeros(2)
            e[j] = h
            vp, gp, _ = likelihood(emb, a, w + e)
            vm, gm, _ = likelihood(emb, a, w - e)
            fd_grad[j] = (vp - vm) / (2 * h)
            fd_hess[:, j] = (gp - gm) / (2 * h)
        scale_g = max(1.0, np.linalg.norm(grad))
        scale_h = max(1.0, np.linalg.norm(hess))
        assert np.linalg.norm(grad - fd_grad) <= 1e-5 * scale_g
        assert np.linalg.norm(hess - 0.5 * (fd_hess + fd_hess.T)) <= 1e-4 * scale_h
        eigs = np.linalg.eigvalsh(hess)
        assert eigs[-1] <= 1e-8


# -------------------------------------------------------------------------- ML


def test_ml_boundary_maximizer_single_point():
    # one in-sample point at 1 in d=1: l(w) = log(w), maximized on
    # [0.1, 0.9] at the right endpoint
    emb = _embedding_from_positions(np.array([[1.0]]))
    est = ml_oos(emb, np.array([1.0]), eps=0.1)
    assert abs(est.w[0] - 0.9) <= 1e-8
    assert est.active_constraints == 1
    assert est.method == "ML"


def test_ml_interior_stationarity_against_grid_search():
    x, emb = _mix_embedding(50, seed=80)
    a = sample_oos_edges(x, MIX.points[0], seed=81)
    est = ml_oos(emb, a, eps=0.05)
    assert est.active_constraints == 0
    assert est.grad_norm <= 1e-8 * 50

    # dense grid over a feasible slab around the reported maximizer
    step = 1e-3
    g = np.arange(-0.05, 0.05 + step / 2, step)
    ww = np.stack(np.meshgrid(g, g), axis=-1).reshape(-1, 2) + est.w
    p = emb.positions @ ww.T
    feas = (p.min(axis=0) >= 0.05) & (p.max(axis=0) <= 0.95)
    ww, p = ww[feas], p[:, feas]
    av = a.a.astype(float)
    vals = av @ np.log(p) + (1 - av) @ np.log1p(-p)
    assert est.objective >= vals.max() - 1e-9
    assert np.linalg.norm(ww[np.argmax(vals)] - est.w) <= step * np.sqrt(2) + 1e-12


def test_ml_close_to_ls_on_fixture_trial():
    x, emb = _mix_embedding(500, seed=82)
    a = sample_oos_edges(x, MIX.points[0], seed=83)
    ls = lls_oos(emb, a)
    ml = ml_oos(emb, a)
    assert np.linalg.norm(ml.w - ls.w) <= 0.1


def test_ml_noiseless_recovery():
    x = sample_latents(MIX, 100, seed=84).rows
    emb = embed_matrix(x @ x.T, 2)
    w0 = procrustes(emb.positions, x).rotation @ MIX.points[0]
    a = emb.positions @ w0
    ls = lls_oos(emb, a)
    ml = ml_oos(emb, a)
    assert np.linalg.norm(ls.w - w0) <= 1e-8
    assert np.linalg.norm(ml.w - w0) <= 1e-8


def test_ml_empty_box_raises():
    # rows pointing in opposite directions make eps <= x_i^T w infeasible
    emb = _embedding_from_positions(
        np.array([[np.sqrt(0.5)], [-np.sqrt(0.5)]])
    )
    with pytest.raises(FeasibilityError, match="empty"):
        ml_oos(emb, np.array([1.0, 0.0]), eps=0.1)


def test_ml_eps_validation():
    _, emb = _mix_embedding(30, seed=85)
    for bad in (0.0, 0.5, -0.1, 0.7):
        with pytest.raises(ConfigError):
            ml_oos(emb, np.zeros(30), eps=bad)


def test_ml_feasible_start_from_infeasible_ls():
    # all-ones edge vector pushes the LS estimate outside the box; the
    # solver must recover via the interior point and still converge
    x, emb = _mix_embedding(200, seed=86)
    est = ml_oos(emb, np.ones(200), eps=0.05)
    p = emb.positions @ est.w
    assert p.min() >= 0.05 - 1e-9 and p.max() <= 0.95 + 1e-9


def test_ml_iteration_budget_respected():
    x, emb = _mix_embedding(150, seed=87)
    a = sample_oos_edges(x, MIX.points[1], seed=88)
    from oos_ase import NonConvergenceError

    with pytest.raises(NonConvergenceError) as exc:
        ml_oos(emb, a, opts=SolverOptions(tol=1e-300, max_iter=3))
    assert exc.value.iterations == 3
    assert exc.value.last_w is not None


def test_ml_feasibility_and_dominates_random_probes():
    rng = np.random.default_rng(90)
    for seed in (91, 92, 93):
        x, emb = _mix_embedding(120, seed=seed)
        a = sample_oos_edges(x, MIX.points[seed % 2], seed=seed + 10)
        est = ml_oos(emb, a, eps=0.05)
        p = emb.positions @ est.w
        assert p.min() >= 0.05 - 1e-9 and p.max() <= 0.95 + 1e-9
        # the reported objective beats 100 random feasible probes
        hits = 0
        while hits < 100:
            w_try = est.w + rng.uniform(-0.2, 0.2, size=2)
            pt = emb.positions @ w_try
            if pt.min() >= 0.05 and pt.max() <= 0.95:
                av = a.a.astype(float)
                val = float(av @ np.log(pt) + (1 - av) @ np.log1p(-pt))
                assert est.objective >= val - 1e-12
                hits += 1
