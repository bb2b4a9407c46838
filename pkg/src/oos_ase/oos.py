"""Out-of-sample extensions: embed a new vertex from its edge vector alone.

Given an embedding X-hat of the observed graph and the new vertex's edges
a in {0,1}^n, two estimators of its latent position are provided:

* least squares  w_LS = argmin_w sum_i (a_i - X-hat_i^T w)^2, computed in
  closed form as S_A^{-1/2} U_A^T a in O(d^2 n);
* constrained maximum likelihood  w_ML = argmax of
  l(w) = sum_i a_i log(X-hat_i^T w) + (1 - a_i) log(1 - X-hat_i^T w)
  over the box T_eps = {w : eps <= X-hat_i^T w <= 1 - eps for all i},
  solved by damped Newton ascent with a fraction-to-boundary rule.

Edge values may also be fractional (in [0, 1]); the noiseless diagnostic
path passes a = X w-bar directly and both estimators recover w-bar exactly.
"""

from dataclasses import dataclass

import numpy as np
import scipy.optimize

from .errors import (
    ConfigError,
    FeasibilityError,
    NonConvergenceError,
    SolverError,
)
from .model import EdgeVector


@dataclass(frozen=True, eq=False)
class OosEstimate:
    """A d-vector estimate with method tag and solver diagnostics."""

    w: np.ndarray
    method: str  # "LS" or "ML"
    iterations: int = 0
    grad_norm: float = 0.0  # final projected-gradient norm (ML)
    active_constraints: int = 0
    objective: float | None = None  # log-likelihood at w (ML only)

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float)
        if not np.isfinite(w).all():
            raise SolverError("estimate contains non-finite entries")
        object.__setattr__(self, "w", w)


@dataclass
class SolverOptions:
    """Knobs for the ML Newton ascent. tol=None means 1e-8 * n."""

    tol: float | None = None
    max_iter: int = 500
    cond_limit: float = 1e12  # Hessian condition estimate triggering gradient fallback
    boundary_fraction: float = 0.95  # fraction of the distance to the nearest constraint


def _edge_values(a, n):
    """Edge vector (or raw array of values in [0,1]) as a float vector."""
    if isinstance(a, EdgeVector):
        vec = a.a.astype(float)
    else:
        vec = np.asarray(a, dtype=float).ravel()
        if vec.size and (vec.min() < 0.0 or vec.max() > 1.0):
            raise ConfigError("edge values must lie in [0, 1]")
    if vec.shape[0] != n:
        raise ConfigError(f"edge vector length {vec.shape[0]} != embedding order {n}")
    return vec


def lls_oos(emb, a):
    """Least-squares out-of-sample estimate, S_A^{-1/2} U_A^T a.

    The closed form coincides with the generic least-squares solution
    because X-hat^T X-hat = S_A exactly. Cost is one (n x d)-vector
    product — no n x n work.
    """
    avec = _edge_values(a, emb.n)
    w = (emb.eig.vectors.T @ avec) / np.sqrt(emb.eig.values)
    return OosEstimate(w=w, method="LS")


def _loglik_value(positions, avec, w):
    p = positions @ w
    if p.min() <= 0.0 or p.max() >= 1.0:
        return -np.inf, p
    return float(avec @ np.log(p) + (1.0 - avec) @ np.log1p(-p)), p


def likelihood(emb, a, w):
    """Log-likelihood of the edge vector at w, with gradient and Hessian.

    value    = sum_i a_i log p_i + (1 - a_i) log(1 - p_i),  p_i = X-hat_i^T w
    gradient = sum_i (a_i - p_i) / (p_i (1 - p_i)) X-hat_i
    hessian  = -sum_i [a_i / p_i^2 + (1 - a_i) / (1 - p_i)^2] X-hat_i X-hat_i^T

    Requires 0 < p_i < 1 strictly for every i (domain error otherwise).
    The Hessian is negative semidefinite everywhere: the objective is
    concave on its domain.
    """
    avec = _edge_values(a, emb.n)
    w = np.asarray(w, dtype=float).ravel()
    if w.shape[0] != emb.d:
        raise ConfigError("w dimension does not match embedding")
    x = emb.positions
    p = x @ w
    if p.min() <= 0.0 or p.max() >= 1.0:
        i = int(np.argmax((p <= 0.0) | (p >= 1.0)))
        raise ConfigError(
            f"w outside the likelihood domain: X-hat_{i}^T w = {p[i]}"
        )
    value = float(avec @ np.log(p) + (1.0 - avec) @ np.log1p(-p))
    grad = x.T @ ((avec - p) / (p * (1.0 - p)))
    curv = avec / p**2 + (1.0 - avec) / (1.0 - p) ** 2
    hess = -(x.T * curv) @ x
    return value, grad, hess


def _chebyshev_point(x, lo, hi):
    """Deepest interior point of {w : lo <= x_i^T w <= hi}: maximize t
    subject to lo + t <= x_i^T w <= hi - t (a linear program)."""
    n, d = x.shape
    c = np.zeros(d + 1)
    c[-1] = -1.0
    ones = np.ones((n, 1))
    a_ub = np.block([[-x, ones], [x, ones]])
    b_ub = np.concatenate([-lo * np.ones(n), hi * np.ones(n)])
    res = scipy.optimize.linprog(
        c, A_ub=a_ub, b_ub=b_ub, bounds=[(None, None)] * (d + 1), method="highs"
    )
    if not res.success or res.x[-1] <= 1e-12:
        raise FeasibilityError(
            f"constraint box eps={lo} is empty (max margin "
            f"{res.x[-1] if res.success else 'n/a'})"
        )
    return res.x[:d], float(res.x[-1])


def _box_margin(p, lo, hi):
    return float(min(p.min() - lo, hi - p.max()))


def ml_oos(emb, a, eps=0.05, opts=None):
    """Constrained maximum-likelihood out-of-sample estimate.

    Maximizes the concave log-likelihood over the box
    T_eps = {w : eps <= X-hat_i^T w <= 1 - eps} by damped Newton ascent:

    * start from the least-squares estimate when it is feasible, otherwise
      shift it toward the box's deepest (Chebyshev-style) interior point;
    * each step is capped at `boundary_fraction` of the distance to the
      nearest inactive constraint along the search direction, then Armijo
      backtracking enforces ascent;
    * when the Hessian condition estimate exceeds `cond_limit` the step
      falls back to the gradient direction;
    * once constraints are active, steps are taken along the face (Newton
      restricted to the null space of the active rows) or along the
      tangent-cone projection of the gradient, which releases constraints
      whose multipliers would be negative;
    * convergence is declared when the gradient norm — or, with active
      constraints, the KKT-stationarity residual from a nonnegative
      least-squares fit of the gradient onto the active constraint
      normals — drops below tol (default 1e-8 * n).

    Boundary maximizers are legal: the estimate may sit on the box with
    active constraints recorded in the diagnostics. An empty box raises
    FeasibilityError; it is never silently relaxed.
    """
    if not 0.0 < eps < 0.5:
        raise ConfigError("eps must lie in (0, 1/2)")
    if opts is None:
        opts = SolverOptions()
    x = emb.positions
    n, d = x.shape
    avec = _edge_values(a, n)
    tol = opts.tol if opts.tol is not None else 1e-8 * n
    lo, hi = eps, 1.0 - eps
    active_tol = 1e-9

    w = lls_oos(emb, a).w
    p = x @ w
    if _box_margin(p, lo, hi) <= 0.0:
        w_int, max_margin = _chebyshev_point(x, lo, hi)
        # walk from the LS point toward the interior point until safely inside
        target = 0.1 * max_margin
        t_lo, t_hi = 0.0, 1.0
        for _ in range(80):
            t = 0.5 * (t_lo + t_hi)
            if _box_margin(x @ (w + t * (w_int - w)), lo, hi) >= target:
                t_hi = t
            else:
                t_lo = t
        w = w + t_hi * (w_int - w)
        p = x @ w

    value, grad, hess = likelihood(emb, a, w)
    init_value = value
    pg_norm = np.linalg.norm(grad)
    n_active = 0
    iterations = 0

    for iterations in range(1, opts.max_iter + 1):
        eigs = np.linalg.eigvalsh(hess)
        if eigs[-1] > 1e-8:
            raise SolverError(
                f"Hessian lost negative semidefiniteness (max eig {eigs[-1]:.3e})"
            )

        # stationarity: plain gradient norm in the interior, KKT residual
        # against active constraint normals on the boundary
        act_lo = (p - lo) <= active_tol
        act_hi = (hi - p) <= active_tol
        active = act_lo | act_hi
        n_active = int(act_lo.sum() + act_hi.sum())
        if n_active:
            normals = np.concatenate([x[act_lo], -x[act_hi]]).T  # d x m
            lam, pg_norm = scipy.optimize.nnls(normals, -grad)
        else:
            pg_norm = float(np.linalg.norm(grad))
        if pg_norm <= tol:
            break

        if n_active:
            # On the boundary the raw Newton step would push into the active
            # face and stall the line search. Prefer a Newton step restricted
            # to the face (null space of the active rows); when none exists
            # or it is not an ascent direction, fall back to the NNLS
            # residual grad + N*lambda: that vector is the projection of the
            # gradient onto the tangent cone, so it ascends and never crosses
            # an active face outward (releasing constraints as needed).
            rows = np.concatenate([x[act_lo], x[act_hi]])
            _, sv, vt = np.linalg.svd(rows)
            rank = int((sv > 1e-12 * sv[0]).sum())
            direction = None
            if rank < d:
                z = vt[rank:].T
                hz = z.T @ hess @ z
                ez = np.linalg.eigvalsh(hz)
                if ez[-1] < 0.0 and ez[0] / ez[-1] <= opts.cond_limit:
                    cand = z @ np.linalg.solve(hz, -(z.T @ grad))
                else:
                    cand = z @ (z.T @ grad)
                if float(grad @ cand) > 0.0:
                    direction = cand
            if direction is None:
                direction = grad + normals @ lam
        else:
            # interior: Newton when the Hessian is well conditioned
            cond = np.inf if eigs[-1] >= 0.0 else eigs[0] / eigs[-1]
            if cond > opts.cond_limit:
                direction = grad
            else:
                direction = np.linalg.solve(hess, -grad)
        slope = float(grad @ direction)
        if slope <= 0.0:  # numerically possible only at (near-)stationarity
            raise NonConvergenceError(
                "search direction is not an ascent direction",
                last_w=w, iterations=iterations, grad_norm=pg_norm,
            )

        # fraction-to-boundary cap: largest alpha keeping p strictly inside.
        # Active rows are excluded — along-face directions change them only
        # by rounding, which the output's 1e-9 feasibility slack absorbs.
        s = x @ direction
        blocked = ~active
        with np.errstate(divide="ignore"):
            room = np.where(
                blocked & (s > 0), (hi - p) / np.where(s > 0, s, 1.0), np.inf
            )
            room = np.minimum(
                room,
                np.where(
                    blocked & (s < 0), (lo - p) / np.where(s < 0, s, 1.0), np.inf
                ),
            )
        alpha_max = float(room.min()) if room.size else np.inf
        alpha = min(1.0, opts.boundary_fraction * alpha_max)

        accepted = False
        while alpha > 1e-18:
            w_try = w + alpha * direction
            value_try, p_try = _loglik_value(x, avec, w_try)
            if value_try >= value + 1e-4 * alpha * slope:
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            raise NonConvergenceError(
                "line search stalled before reaching stationarity",
                last_w=w, iterations=iterations, grad_norm=pg_norm,
            )
        w = w_try
        value, grad, hess = likelihood(emb, a, w)
        p = x @ w
    else:
        raise NonConvergenceError(
            f"no convergence in {opts.max_iter} iterations "
            f"(projected gradient {pg_norm:.3e}, tol {tol:.3e})",
            last_w=w, iterations=opts.max_iter, grad_norm=float(pg_norm),
        )

    if value < init_value:
        raise SolverError("ascent ended below its starting objective")
    return OosEstimate(
        w=w,
        method="ML",
        iterations=iterations,
        grad_norm=float(pg_norm),
        active_constraints=n_active,
        objective=value,
    )
