"""Latent position sampling, sparsity schedules and Bernoulli graph sampling."""

from dataclasses import dataclass, field
import csv
import math
import warnings

import numpy as np
import scipy.sparse as sp

from ._random import stream
from .errors import ConfigurationError, DomainError
from .io import atomic_write_text, write_table_csv
from .kernels import kernel_block

DENSE_STORAGE_LIMIT = 4096
_PROB_TOL = 1e-12
_ROW_BLOCK = 256


class SparsityWarning(UserWarning):
    """Expected degree is too small for the consistency regime n rho >> log n."""


@dataclass(frozen=True, eq=False)
class LatentDistribution:
    """Distribution ``F`` of the latent positions.

    Use the classmethod constructors rather than building one directly.
    ``dirichlet(alpha, drop_last=True)`` keeps the first ``len(alpha) - 1``
    coordinates, which puts the sample inside the unit simplex
    ``{x >= 0, sum(x) <= 1}`` of one dimension lower.
    """

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        validate = getattr(self, "_validate_" + self.kind.replace("-", "_"), None)
        if validate is None:
            raise ConfigurationError("unknown latent distribution kind %r" % self.kind)
        validate()

    def _validate_dirichlet(self):
        alpha = np.asarray(self.params["alpha"], dtype=float)
        if alpha.ndim != 1 or alpha.size < 2 or np.any(alpha <= 0):
            raise ConfigurationError("dirichlet alpha must have >= 2 positive entries")

    def _validate_gaussian_mixture(self):
        w = np.asarray(self.params["weights"], dtype=float)
        means = np.asarray(self.params["means"], dtype=float)
        covs = np.asarray(self.params["covariances"], dtype=float)
        if np.any(w <= 0) or abs(w.sum() - 1) > 1e-12:
            raise ConfigurationError("mixture weights must be positive and sum to 1")
        if means.ndim != 2 or means.shape[0] != w.size:
            raise ConfigurationError("need one mean per mixture component")
        p = means.shape[1]
        if covs.shape != (w.size, p, p):
            raise ConfigurationError("need one p x p covariance per component")
        for c in covs:
            if not np.allclose(c, c.T) or np.linalg.eigvalsh(c)[0] <= 0:
                raise ConfigurationError("mixture covariances must be symmetric positive definite")

    def _validate_uniform_box(self):
        lo = np.atleast_1d(np.asarray(self.params["lo"], dtype=float))
        hi = np.atleast_1d(np.asarray(self.params["hi"], dtype=float))
        if lo.shape != hi.shape or np.any(lo >= hi):
            raise ConfigurationError("uniform box needs lo < hi coordinatewise")

    def _validate_point_cloud(self):
        X = np.asarray(self.params["points"], dtype=float)
        if X.ndim != 2 or X.shape[0] < 1:
            raise ConfigurationError("point cloud must be a nonempty 2-d array")

    @classmethod
    def dirichlet(cls, alpha, drop_last=False):
        return cls("dirichlet", {"alpha": [float(a) for a in alpha], "drop_last": bool(drop_last)})

    @classmethod
    def gaussian_mixture(cls, weights, means, covariances):
        return cls("gaussian-mixture", {
            "weights": np.asarray(weights, dtype=float).tolist(),
            "means": np.asarray(means, dtype=float).tolist(),
            "covariances": np.asarray(covariances, dtype=float).tolist(),
        })

    @classmethod
    def uniform_box(cls, lo, hi):
        return cls("uniform-box", {"lo": np.atleast_1d(lo).astype(float).tolist(),
                                   "hi": np.atleast_1d(hi).astype(float).tolist()})

    @classmethod
    def point_cloud(cls, points):
        return cls("point-cloud", {"points": np.asarray(points, dtype=float).tolist()})

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        kind = d.pop("kind")
        if kind == "dirichlet":
            return cls.dirichlet(d["alpha"], d.get("drop_last", False))
        if kind == "gaussian-mixture":
            return cls.gaussian_mixture(d["weights"], d["means"], d["covariances"])
        if kind == "uniform-box":
            return cls.uniform_box(d["lo"], d["hi"])
        if kind == "point-cloud":
            return cls.point_cloud(d["points"])
        raise ConfigurationError("unknown latent distribution kind %r" % kind)

    def to_dict(self):
        return {"kind": self.kind, **self.params}

    @property
    def dim(self):
        if self.kind == "dirichlet":
            return len(self.params["alpha"]) - int(self.params["drop_last"])
        if self.kind == "gaussian-mixture":
            return len(self.params["means"][0])
        if self.kind == "uniform-box":
            return len(self.params["lo"])
        return len(self.params["points"][0])


@dataclass
class LatentSample:
    positions: np.ndarray
    rho: float
    labels: np.ndarray = None
    seed: int = 0

    def __post_init__(self):
        self.positions = np.atleast_2d(np.asarray(self.positions, dtype=float))
        if self.positions.shape[0] < 1:
            raise ValueError("a latent sample needs at least one point")
        if not 0 < self.rho <= 1:
            raise ValueError("rho must lie in (0, 1]")
        if self.labels is not None:
            self.labels = np.asarray(self.labels)
            if self.labels.shape != (self.positions.shape[0],):
                raise ValueError("labels must have one entry per point")

    @property
    def n(self):
        return self.positions.shape[0]

    def to_csv(self, path):
        """CSV with one row per point; a trailing ``label`` column when labels exist.

        ``rho`` and ``seed`` are stored in a leading comment line.
        """
        p = self.positions.shape[1]
        header = ["x%d" % j for j in range(p)]
        rows = self.positions.tolist()
        if self.labels is not None:
            header.append("label")
            rows = [r + [int(l)] for r, l in zip(rows, self.labels)]
        write_table_csv(path, header, rows)
        with open(path) as fh:
            body = fh.read()
        atomic_write_text(path, "# rho=%r seed=%d\n" % (float(self.rho), int(self.seed)) + body)

    @classmethod
    def from_csv(cls, path):
        with open(path, newline="") as fh:
            first = fh.readline()
            meta = dict(kv.split("=") for kv in first.lstrip("# ").split())
            rows = list(csv.reader(fh))
        header, rows = rows[0], rows[1:]
        data = np.array([[float(v) for v in r] for r in rows])
        labels = None
        if header[-1] == "label":
            labels = data[:, -1].astype(int)
            data = data[:, :-1]
        return cls(data, float(meta["rho"]), labels, int(meta["seed"]))


def sample_latent(dist, n, seed):
    """Draw ``n`` i.i.d. latent positions from ``dist``; deterministic in ``seed``."""
    if n < 1:
        raise ValueError("n must be positive")
    rng = stream(seed, 0)
    kind, par = dist.kind, dist.params
    if kind == "point-cloud":
        return np.array(par["points"], dtype=float)
    if kind == "dirichlet":
        X = rng.dirichlet(par["alpha"], size=n)
        return X[:, :-1] if par["drop_last"] else X
    if kind == "uniform-box":
        lo, hi = np.asarray(par["lo"]), np.asarray(par["hi"])
        return lo + (hi - lo) * rng.random((n, lo.size))
    w = np.asarray(par["weights"])
    means = np.asarray(par["means"])
    chol = np.linalg.cholesky(np.asarray(par["covariances"]))
    comp = rng.choice(w.size, size=n, p=w)
    noise = rng.standard_normal((n, means.shape[1]))
    return means[comp] + np.einsum("nij,nj->ni", chol[comp], noise)


def sparsity_schedule(kind, n, constant=None):
    """Sparsity factor ``rho_n`` for the named schedule, clamped to (0, 1]."""
    if n < 1:
        raise ValueError("n must be positive")
    if kind == "constant":
        if constant is None or not 0 < constant <= 1:
            raise ConfigurationError("constant schedule needs C in (0, 1], got %r" % constant)
        return float(constant)
    if kind == "log-over-n":
        if n < 2:
            raise ValueError("log-over-n schedule needs n >= 2")
        return min(1.0, math.log(n) / n)
    if kind == "one-over-n":
        return min(1.0, 1.0 / n)
    raise ConfigurationError("unknown sparsity schedule %r" % kind)


def check_sparsity(n, rho):
    """Warn when ``n rho < 2 log n`` (outside the regime the theory covers)."""
    if n > 1 and n * rho < 2 * math.log(n):
        warnings.warn("n*rho = %.3g is below 2 log n = %.3g" % (n * rho, 2 * math.log(n)),
                      SparsityWarning, stacklevel=3)


@dataclass(eq=False)
class Adjacency:
    """Symmetric hollow binary adjacency matrix.

    ``matrix`` is a dense ``uint8`` array or a CSR matrix of ``uint8`` values.
    """

    n: int
    matrix: object = field(repr=False)
    seed: int = None

    @property
    def is_sparse(self):
        return sp.issparse(self.matrix)

    @property
    def n_edges(self):
        nnz = self.matrix.nnz if self.is_sparse else int(np.count_nonzero(self.matrix))
        return nnz // 2

    def toarray(self):
        return self.matrix.toarray() if self.is_sparse else np.array(self.matrix)

    def block(self, rows, cols):
        """Dense float submatrix ``A[rows][:, cols]``."""
        rows = np.asarray(rows)
        cols = np.asarray(cols)
        if self.is_sparse:
            return self.matrix[rows][:, cols].toarray().astype(float)
        return self.matrix[np.ix_(rows, cols)].astype(float)

    def subgraph(self, index):
        """Induced subgraph on ``index`` (in the given order)."""
        index = np.asarray(index)
        if self.is_sparse:
            sub = self.matrix[index][:, index]
            if index.size <= DENSE_STORAGE_LIMIT:
                sub = sub.toarray()
            return Adjacency(index.size, sub, self.seed)
        return Adjacency(index.size, self.matrix[np.ix_(index, index)], self.seed)

    def edges(self):
        """Sorted ``(i, j)`` pairs with ``i < j``."""
        upper = sp.triu(sp.csr_matrix(self.matrix), k=1).tocoo()
        order = np.lexsort((upper.col, upper.row))
        return np.column_stack([upper.row[order], upper.col[order]]).astype(np.int64)

    def degrees(self):
        return np.asarray(self.matrix.sum(axis=1)).ravel()


def _assemble(n, rows, cols, dense_limit, seed):
    if n <= dense_limit:
        M = np.zeros((n, n), dtype=np.uint8)
        M[rows, cols] = 1
        M[cols, rows] = 1
        return Adjacency(n, M, seed)
    data = np.ones(2 * rows.size, dtype=np.uint8)
    M = sp.csr_matrix((data, (np.concatenate([rows, cols]), np.concatenate([cols, rows]))),
                      shape=(n, n))
    M.sort_indices()
    return Adjacency(n, M, seed)


def _bernoulli_upper(prob_rows, n, seed, dense_limit):
    """Sample ``A_ij ~ Bernoulli(P_ij)`` for ``i < j``.

    ``prob_rows(i0, i1)`` returns probabilities of rows ``i0..i1-1``
    against all columns. Row ``i`` draws from its own stream keyed by
    ``(seed, i)``, so the result does not depend on the block size.
    """
    rows, cols = [], []
    for i0 in range(0, n, _ROW_BLOCK):
        i1 = min(n, i0 + _ROW_BLOCK)
        P = prob_rows(i0, i1)
        for i in range(i0, i1):
            p = P[i - i0, i + 1:]
            u = stream(seed, 1, i).random(p.size)
            hit = np.flatnonzero(u < p) + i + 1
            rows.append(np.full(hit.size, i, dtype=np.int64))
            cols.append(hit)
    rows = np.concatenate(rows) if rows else np.zeros(0, dtype=np.int64)
    cols = np.concatenate(cols) if cols else np.zeros(0, dtype=np.int64)
    return _assemble(n, rows, cols, dense_limit, seed)


def sample_adjacency(K, seed, dense_limit=DENSE_STORAGE_LIMIT):
    """Sample a latent position graph from its edge probability matrix ``K``."""
    K = np.asarray(K, dtype=float)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise ValueError("K must be square")
    if np.any(K < -_PROB_TOL) or np.any(K > 1 + _PROB_TOL):
        raise DomainError("edge probabilities must lie in [0, 1]")
    if np.max(np.abs(K - K.T), initial=0.0) > _PROB_TOL:
        raise ValueError("K must be symmetric")
    return _bernoulli_upper(lambda i0, i1: K[i0:i1], K.shape[0], seed, dense_limit)


def sample_graph(spec, X, rho, seed, dense_limit=DENSE_STORAGE_LIMIT):
    """Sample ``A`` from ``LPM(F, kappa, rho)`` given latent positions ``X``.

    Same bits as ``sample_adjacency(kernel_matrix(spec, X, rho), seed)`` but
    the probability matrix is built one row block at a time, so large graphs
    never hold ``K`` in memory.
    """
    if not 0 < rho <= 1:
        raise ValueError("rho must lie in (0, 1]")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n = X.shape[0]
    check_sparsity(n, rho)
    return _bernoulli_upper(lambda i0, i1: rho * kernel_block(spec, X[i0:i1], X),
                            n, seed, dense_limit)


def sample_oos_connections(x_new, X_in, spec, rho, seed):
    """Connection vector ``xi`` of a new vertex: ``xi_i ~ Bernoulli(rho kappa(x_new, X_i))``."""
    if not 0 <= rho <= 1:
        raise ValueError("rho must lie in [0, 1]")
    x_new = np.asarray(x_new, dtype=float)
    X_in = np.atleast_2d(np.asarray(X_in, dtype=float))
    if x_new.ndim != 1 or x_new.size != X_in.shape[1]:
        raise ValueError("x_new must be a point of dimension %d" % X_in.shape[1])
    p = rho * kernel_block(spec, x_new, X_in)[0]
    return (stream(seed, 2).random(p.size) < p).astype(np.uint8)


def sample_oos_connections_batch(X_new, X_in, spec, rho, seed):
    """Connection columns for several new vertices, shape ``(n_in, m)``.

    Column ``j`` equals ``sample_oos_connections(X_new[j], X_in, spec, rho, s_j)``
    with ``s_j`` derived from ``(seed, j)``.
    """
    from ._random import derive_seed

    X_new = np.atleast_2d(np.asarray(X_new, dtype=float))
    cols = [sample_oos_connections(x, X_in, spec, rho, derive_seed(seed, j))
            for j, x in enumerate(X_new)]
    return np.column_stack(cols) if cols else np.zeros((len(X_in), 0), dtype=np.uint8)


def write_edge_list(path, A):
    """``n=<count>`` header line, then one ``i j`` line per edge with ``i < j``."""
    lines = ["n=%d" % A.n]
    lines.extend("%d %d" % (i, j) for i, j in A.edges())
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_edge_list(path, dense_limit=DENSE_STORAGE_LIMIT):
    with open(path) as fh:
        header = fh.readline().strip()
        if not header.startswith("n="):
            raise ValueError("edge list must start with an 'n=<count>' line")
        n = int(header[2:])
        pairs = np.loadtxt(fh, dtype=np.int64, ndmin=2)
    if pairs.size == 0:
        pairs = np.zeros((0, 2), dtype=np.int64)
    if np.any(pairs[:, 0] >= pairs[:, 1]) or np.any(pairs < 0) or np.any(pairs >= n):
        raise ValueError("edge list entries must satisfy 0 <= i < j < n")
    return _assemble(n, pairs[:, 0], pairs[:, 1], dense_limit, None)


def quadrant_labels(X):
    """Labels ``sign(a b)`` for points ``(a, b)``; zero products map to +1."""
    X = np.asarray(X, dtype=float)
    return np.where(X[:, 0] * X[:, 1] < 0, -1, 1)
