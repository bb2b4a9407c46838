"""Adjacency spectral embedding.

The embedding of a graph is X-hat = U_A S_A^{1/2} built from the top-d
algebraically largest eigenpairs of the adjacency matrix. The retained
eigenpairs are kept on the result because the out-of-sample solvers need
S_A and U_A directly, not just the positions.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DegenerateSpectrumError
from .linalg import EigenPairs, top_eigs
from .model import AdjacencyMatrix


@dataclass(frozen=True, eq=False)
class Embedding:
    """Estimated latent positions with the eigenpairs that produced them.

    Invariants (checked at construction): positions equal
    vectors * sqrt(values) entrywise to 1e-12, and every retained
    eigenvalue is strictly positive.
    """

    positions: np.ndarray  # (n, d)
    eig: EigenPairs
    source_order: int

    def __post_init__(self):
        positions = np.asarray(self.positions, dtype=float)
        object.__setattr__(self, "positions", positions)
        if np.any(self.eig.values <= 0):
            raise DegenerateSpectrumError(
                "retained eigenvalues must be strictly positive"
            )
        expected = self.eig.vectors * np.sqrt(self.eig.values)
        if positions.shape != expected.shape or np.max(
            np.abs(positions - expected)
        ) > 1e-12:
            raise ConfigError("positions do not equal U * sqrt(S) within 1e-12")
        if self.source_order != positions.shape[0]:
            raise ConfigError("source_order does not match position count")

    @property
    def n(self):
        return self.positions.shape[0]

    @property
    def d(self):
        return self.positions.shape[1]


def embed_matrix(m, d):
    """Spectral embedding of a dense symmetric matrix.

    This is the computational core of `ase`, exposed directly so that
    noiseless inputs (the edge-probability matrix P = X X^T itself) can be
    embedded in tests and diagnostics without manufacturing a graph.
    """
    m = np.asarray(m, dtype=float)
    n = m.shape[0]
    if not 1 <= d <= n:
        raise ConfigError(f"embedding dimension {d} out of range for order {n}")
    eig = top_eigs(m, d)
    if np.any(eig.values <= 1e-10):
        raise DegenerateSpectrumError(
            f"top-{d} spectrum not strictly positive: min eigenvalue "
            f"{eig.values.min():.3e}"
        )
    positions = eig.vectors * np.sqrt(eig.values)
    return Embedding(positions=positions, eig=eig, source_order=n)


def ase(a, d):
    """Adjacency spectral embedding X-hat = U_A S_A^{1/2} of a graph.

    Raises DegenerateSpectrumError when any of the top-d eigenvalues is
    <= 1e-10: positivity is only guaranteed with high probability, and a
    collapsed spectrum should fail loudly rather than silently switch
    estimators.
    """
    if not isinstance(a, AdjacencyMatrix):
        raise ConfigError("ase expects an AdjacencyMatrix (use embed_matrix "
                          "for raw symmetric input)")
    return embed_matrix(a.to_dense(), d)


def embed_full(atilde, d):
    """Embedding of an augmented graph — the expensive in-sample baseline.

    Identical computation to `ase`; a separate name because callers use it
    on the bordered matrix where the last row(s) are the vertices that an
    out-of-sample method would instead estimate from the fixed embedding.
    """
    return ase(atilde, d)
