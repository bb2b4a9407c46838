"""Dense numerical kernels: symmetric eigendecomposition, small SVD,
least-squares. Everything here is a thin, contract-checked wrapper around
LAPACK (via numpy/scipy); all outputs follow one deterministic sign
convention so repeated runs agree bit-for-bit.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ConfigError, SingularityError

# Columns are flipped so the largest-magnitude entry of each eigenvector /
# singular vector is positive (ties broken by lowest index). Any orthogonal
# transform of the latent positions gives the same graph distribution, so a
# fixed convention costs nothing and buys reproducibility.
SIGN_CONVENTION = "max-entry-positive"


def _fix_signs(vectors):
    """Flip column signs in place-free fashion per SIGN_CONVENTION."""
    idx = np.argmax(np.abs(vectors), axis=0)  # argmax takes the lowest index on ties
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


@dataclass(frozen=True)
class EigenPairs:
    """Top-k eigenvalues (descending) with orthonormal eigenvectors as columns."""

    values: np.ndarray  # (k,)
    vectors: np.ndarray  # (n, k)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        vectors = np.asarray(self.vectors, dtype=float)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "vectors", vectors)
        if values.ndim != 1 or vectors.ndim != 2 or vectors.shape[1] != values.shape[0]:
            raise ConfigError("eigenpair shapes do not match")
        if values.shape[0] > 1 and np.any(np.diff(values) > 0):
            raise ConfigError("eigenvalues must be sorted descending")
        defect = vectors.T @ vectors - np.eye(values.shape[0])
        if np.max(np.abs(defect)) > 1e-10:
            raise ConfigError("eigenvectors are not orthonormal (defect > 1e-10)")

    @property
    def k(self):
        return self.values.shape[0]

    def residuals(self, m):
        """Per-pair residual ||M v_i - lambda_i v_i|| against a dense symmetric M."""
        m = np.asarray(m, dtype=float)
        r = m @ self.vectors - self.vectors * self.values
        return np.linalg.norm(r, axis=0)


def top_eigs(m, k):
    """Top-k algebraically largest eigenpairs of a symmetric matrix.

    Parameters
    ----------
    m : (n, n) array_like
        Real symmetric matrix. Symmetry is trusted structurally where the
        caller built the matrix; here only finiteness is checked and the
        lower triangle is read.
    k : int
        Number of eigenpairs, 1 <= k <= n.

    Returns
    -------
    EigenPairs
        values descending (algebraic order, not magnitude), vectors
        orthonormal with the package sign convention applied.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ConfigError("top_eigs expects a square matrix")
    n = m.shape[0]
    if not 1 <= k <= n:
        raise ConfigError(f"k={k} out of range for order {n}")
    if not np.isfinite(m).all():
        raise ConfigError("matrix contains non-finite entries")
    vals, vecs = scipy.linalg.eigh(m, subset_by_index=[n - k, n - 1])
    # eigh returns ascending order; we want descending
    vals = vals[::-1].copy()
    vecs = _fix_signs(vecs[:, ::-1])
    return EigenPairs(values=vals, vectors=vecs)


def lstsq(design, rhs):
    """Least-squares solve argmin_w ||design w - rhs||.

    Requires a full-column-rank design (smallest singular value above
    1e-12 of the largest); otherwise raises SingularityError carrying the
    condition estimate.
    """
    design = np.asarray(design, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    if design.ndim != 2 or rhs.ndim != 1 or design.shape[0] != rhs.shape[0]:
        raise ConfigError("design/rhs shapes do not match")
    if not (np.isfinite(design).all() and np.isfinite(rhs).all()):
        raise ConfigError("non-finite entries in least-squares input")
    w, _, _, sv = np.linalg.lstsq(design, rhs, rcond=None)
    if sv[-1] <= 1e-12 * sv[0]:
        cond = np.inf if sv[-1] == 0 else sv[0] / sv[-1]
        raise SingularityError(
            f"rank-deficient design (condition ~ {cond:.3e})", condition=cond
        )
    return w


def svd_small(m):
    """SVD of a small (<= 64 x 64) matrix: m = U @ diag(s) @ V.T.

    Returns (U, s, V) — note V, not V^T — with singular values descending
    and the sign convention applied to U's columns (V's columns flipped to
    match so the product is unchanged).
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2:
        raise ConfigError("svd_small expects a matrix")
    if max(m.shape) > 64:
        raise ConfigError("svd_small is for small matrices only (<= 64)")
    if not np.isfinite(m).all():
        raise ConfigError("matrix contains non-finite entries")
    u, s, vt = np.linalg.svd(m, full_matrices=False)
    idx = np.argmax(np.abs(u), axis=0)
    signs = np.sign(u[idx, np.arange(u.shape[1])])
    signs[signs == 0] = 1.0
    return u * signs, s, (vt * signs[:, None]).T
