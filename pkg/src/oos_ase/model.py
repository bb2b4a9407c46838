"""Random dot product graph model: latent position distributions, graph
sampling, and out-of-sample edge vectors.

A graph on n vertices is sampled by drawing latent positions X_1..X_n i.i.d.
from a finite mixture of point masses F and connecting i~j independently
with probability X_i^T X_j. An out-of-sample vertex with latent position
w-bar contributes the edge vector a with a_i ~ Bernoulli(X_i^T w-bar).

All sampling is driven by a counter-based generator (Philox); callers may
pass an integer seed, a numpy SeedSequence, or a Generator. Identical
(inputs, seed) give identical bits regardless of scheduling.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ModelViolationError


def as_generator(seed):
    """Accept an int seed, SeedSequence, or Generator; return a Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(seed))


class LatentDistribution:
    """Finite mixture of point masses on R^d (covers the stochastic block
    model case: one atom per block).

    atoms is a sequence of (point, weight) pairs. Weights must be positive
    and sum to 1 within 1e-12; every pairwise inner product of atoms
    (including an atom with itself) must lie in [0, 1] so that all edge
    probabilities are valid.
    """

    def __init__(self, dimension, atoms):
        dimension = int(dimension)
        if dimension < 1:
            raise ConfigError("dimension must be >= 1")
        if not atoms:
            raise ConfigError("at least one atom required")
        points = np.asarray([np.asarray(p, dtype=float).ravel() for p, _ in atoms])
        weights = np.asarray([float(w) for _, w in atoms])
        if points.shape[1] != dimension:
            raise ConfigError(
                f"atom dimension {points.shape[1]} != declared dimension {dimension}"
            )
        if not np.isfinite(points).all():
            raise ConfigError("atom coordinates must be finite")
        if np.any(weights <= 0):
            raise ConfigError("weights must be positive")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise ConfigError("weights must sum to 1")
        gram = points @ points.T
        for i in range(len(atoms)):
            for j in range(i, len(atoms)):
                if gram[i, j] < 0.0 or gram[i, j] > 1.0:
                    raise ConfigError(
                        f"atom inner product <x{i}, x{j}> = {gram[i, j]} outside [0, 1]"
                    )
        self.dimension = dimension
        self.points = points
        self.weights = weights
        # strictest margin eps such that eps <= x^T y <= 1-eps for all pairs
        self.feasibility_margin = float(min(gram.min(), 1.0 - gram.max()))

    @property
    def n_atoms(self):
        return len(self.weights)

    def atom_index(self, x):
        """Index of the atom nearest to x (exact for sampled rows)."""
        d2 = np.sum((self.points - np.asarray(x, dtype=float)) ** 2, axis=1)
        return int(np.argmin(d2))

    def __repr__(self):
        return f"LatentDistribution(d={self.dimension}, atoms={self.n_atoms})"


@dataclass(frozen=True, eq=False)
class LatentMatrix:
    """n x d matrix of latent positions plus the seed that generated it."""

    rows: np.ndarray
    seed: object = None

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=float)
        if rows.ndim != 2:
            raise ConfigError("latent rows must be a 2-D array")
        object.__setattr__(self, "rows", rows)

    @property
    def n(self):
        return self.rows.shape[0]

    @property
    def d(self):
        return self.rows.shape[1]


def _triu_size(n):
    return n * (n - 1) // 2


class AdjacencyMatrix:
    """Symmetric hollow binary matrix stored as packed upper-triangle bits.

    Only the strict upper triangle is kept (row-major pair order), so
    symmetry and the zero diagonal are structural facts rather than
    invariants to re-check. Construction from bits or a dense array
    validates entries.
    """

    __slots__ = ("n", "_packed")

    def __init__(self, n, triu_bits):
        n = int(n)
        if n < 1:
            raise ConfigError("order must be >= 1")
        bits = np.asarray(triu_bits)
        if bits.shape != (_triu_size(n),):
            raise ConfigError(
                f"expected {_triu_size(n)} upper-triangle bits, got {bits.shape}"
            )
        if bits.size and not np.isin(bits, (0, 1)).all():
            raise ConfigError("adjacency bits must be 0 or 1")
        self.n = n
        self._packed = np.packbits(bits.astype(np.uint8))

    @classmethod
    def from_dense(cls, m):
        m = np.asarray(m)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ConfigError("adjacency matrix must be square")
        if not np.array_equal(m, m.T):
            raise ConfigError("adjacency matrix must be symmetric")
        if np.any(np.diagonal(m) != 0):
            raise ConfigError("adjacency matrix must be hollow (zero diagonal)")
        n = m.shape[0]
        iu = np.triu_indices(n, k=1)
        return cls(n, np.asarray(m[iu]))

    def triu_bits(self):
        """Strict upper-triangle entries as a uint8 vector (row-major)."""
        return np.unpackbits(self._packed, count=_triu_size(self.n))

    def to_dense(self, dtype=np.float64):
        out = np.zeros((self.n, self.n), dtype=dtype)
        iu = np.triu_indices(self.n, k=1)
        bits = self.triu_bits()
        out[iu] = bits
        out[(iu[1], iu[0])] = bits
        return out

    def edges(self):
        """Edge list as an (m, 2) int array of pairs (i, j) with i < j."""
        n = self.n
        iu = np.triu_indices(n, k=1)
        mask = self.triu_bits().astype(bool)
        return np.column_stack((iu[0][mask], iu[1][mask]))

    def density(self):
        size = _triu_size(self.n)
        return float(self.triu_bits().sum()) / size if size else 0.0

    def __eq__(self, other):
        if not isinstance(other, AdjacencyMatrix):
            return NotImplemented
        return self.n == other.n and np.array_equal(self._packed, other._packed)

    def __hash__(self):
        return hash((self.n, self._packed.tobytes()))

    def __repr__(self):
        return f"AdjacencyMatrix(n={self.n}, edges={int(self.triu_bits().sum())})"


@dataclass(frozen=True, eq=False)
class EdgeVector:
    """Observed edges a_i of an out-of-sample vertex, with the true latent
    position kept alongside (when known) for evaluation."""

    a: np.ndarray
    truth: np.ndarray | None = None
    seed: object = field(default=None, compare=False)

    def __post_init__(self):
        a = np.asarray(self.a)
        if a.ndim != 1:
            raise ConfigError("edge vector must be 1-D")
        if a.size and not np.isin(a, (0, 1)).all():
            raise ConfigError("edge vector entries must be 0 or 1")
        object.__setattr__(self, "a", a.astype(np.uint8))
        if self.truth is not None:
            object.__setattr__(self, "truth", np.asarray(self.truth, dtype=float))

    @property
    def n(self):
        return self.a.shape[0]


def sample_latents(dist, n, seed):
    """Draw n i.i.d. latent positions from a finite mixture."""
    if n < 1:
        raise ConfigError("n must be >= 1")
    rng = as_generator(seed)
    idx = rng.choice(dist.n_atoms, size=n, p=dist.weights)
    return LatentMatrix(rows=dist.points[idx], seed=seed)


def _check_probabilities(p, what):
    bad = (p < 0.0) | (p > 1.0)
    if np.any(bad):
        i = np.argwhere(bad)[0]
        loc = tuple(int(v) for v in i)
        raise ModelViolationError(
            f"{what} probability {p[tuple(i)]} outside [0, 1] at index {loc}"
        )


def sample_adjacency(x, seed):
    """Sample A with A_ij ~ Bernoulli(X_i^T X_j) independently for i < j."""
    rows = x.rows if isinstance(x, LatentMatrix) else np.asarray(x, dtype=float)
    n = rows.shape[0]
    gram = rows @ rows.T
    _check_probabilities(gram, "edge")
    iu = np.triu_indices(n, k=1)
    probs = gram[iu]
    rng = as_generator(seed)
    bits = (rng.random(probs.shape[0]) < probs).astype(np.uint8)
    return AdjacencyMatrix(n, bits)


def sample_oos_edges(x, wbar, seed):
    """Sample the out-of-sample edge vector a_i ~ Bernoulli(X_i^T w-bar)."""
    rows = x.rows if isinstance(x, LatentMatrix) else np.asarray(x, dtype=float)
    wbar = np.asarray(wbar, dtype=float).ravel()
    if wbar.shape[0] != rows.shape[1]:
        raise ConfigError("w-bar dimension does not match latent dimension")
    probs = rows @ wbar
    _check_probabilities(probs, "out-of-sample edge")
    rng = as_generator(seed)
    bits = (rng.random(rows.shape[0]) < probs).astype(np.uint8)
    return EdgeVector(a=bits, truth=wbar, seed=seed)


def augment(a, e):
    """Border A with the edge vector: the (n+1)-vertex graph whose last
    vertex is the (now in-sample) out-of-sample vertex."""
    if not isinstance(a, AdjacencyMatrix):
        raise ConfigError("augment expects an AdjacencyMatrix")
    evec = e.a if isinstance(e, EdgeVector) else np.asarray(e)
    if evec.shape != (a.n,):
        raise ConfigError(
            f"edge vector length {evec.shape} does not match order {a.n}"
        )
    n = a.n
    old = a.triu_bits()
    # row i of the strict upper triangle gains one trailing entry e_i;
    # np.insert positions are counted in the old flat layout
    ends = np.array([(i + 1) * (n - 1) - i * (i + 1) // 2 for i in range(n)])
    bits = np.insert(old, ends, evec.astype(np.uint8))
    return AdjacencyMatrix(n + 1, bits)
