"""Out-of-sample extension ``T_n(X) = Z^+ xi`` and its Nystrom reading."""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .errors import NumericalError
from .io import write_matrix_csv, write_json
from .spectral import Embedding, ase

_RANK_TOL = 1e-10


@dataclass
class OosResult:
    embedded: np.ndarray
    xi: np.ndarray = field(repr=False)
    in_sample_size: int
    rescaled: np.ndarray = None


def _factor(Z):
    Z = Z.Z if isinstance(Z, Embedding) else np.asarray(Z, dtype=float)
    if Z.ndim != 2:
        raise ValueError("Z must be an n x d matrix")
    Q, R = np.linalg.qr(Z)
    diag = np.abs(np.diag(R))
    if diag.size == 0 or diag.min() <= _RANK_TOL * max(diag.max(), 1.0):
        raise NumericalError("embedding matrix is rank deficient; Z^+ is undefined")
    return Q, R


def _solve(Q, R, B):
    if sp.issparse(B):
        QtB = np.asarray((B.T @ Q).T)
    else:
        QtB = Q.T @ np.asarray(B, dtype=float)
    return scipy.linalg.solve_triangular(R, QtB, lower=False)


def oos_embed_batch(Z, B):
    """Out-of-sample embed the columns of ``B``.

    Parameters
    ----------
    Z : Embedding or (n, d) array
        In-sample configuration, full column rank.
    B : (n, m) array or sparse matrix
        Column ``j`` is the 0/1 connection vector of new vertex ``j``.

    Returns
    -------
    (m, d) ndarray
        Row ``j`` is the least-squares solution of ``Z zeta = B[:, j]``,
        obtained from one thin QR factorization of ``Z``.
    """
    Q, R = _factor(Z)
    if B.ndim != 2 or B.shape[0] != Q.shape[0]:
        raise ValueError("B must have %d rows, got shape %s" % (Q.shape[0], B.shape))
    return _solve(Q, R, B).T


def oos_embed(Z, xi):
    """Embed one new vertex from its connection vector ``xi``."""
    xi = np.asarray(xi)
    n = (Z.Z if isinstance(Z, Embedding) else np.asarray(Z)).shape[0]
    if xi.ndim != 1 or xi.size != n:
        raise ValueError("xi must be a vector of length %d" % n)
    embedded = oos_embed_batch(Z, xi[:, None].astype(float))[0]
    return OosResult(embedded, xi, n)


def save_oos_batch(path, Y, n, seed=None, in_sample_checksum=None):
    """Rows of ``Y`` as CSV with a JSON sidecar."""
    Y = np.atleast_2d(Y)
    write_matrix_csv(path, Y)
    write_json(str(path) + ".json", {
        "n": int(n), "m": Y.shape[0], "d": Y.shape[1], "seed": seed,
        "in_sample_checksum": in_sample_checksum,
    })


@dataclass
class NystromSketch:
    """In-sample factor ``X`` (rows = S) and out-of-sample factor ``Y`` (rows = S^c)."""

    n: int
    in_sample_index: np.ndarray
    out_sample_index: np.ndarray
    X_factor: np.ndarray = field(repr=False)
    Y_factor: np.ndarray = field(repr=False)

    @property
    def rank(self):
        return self.X_factor.shape[1]


def _dense_or_adjacency_block(A, rows, cols):
    if hasattr(A, "block"):
        return A.block(rows, cols)
    if sp.issparse(A):
        return A[rows][:, cols].toarray().astype(float)
    A = np.asarray(A, dtype=float)
    return A[np.ix_(rows, cols)]


def nystrom_sketch(A, S, d):
    """Sketch a symmetric matrix from the principal block on index set ``S``.

    ``X`` is the rank-``d`` spectral embedding of ``A[S, S]`` and
    ``Y = (X^+ A[S, S^c])^T`` embeds the remaining rows out of sample.
    No rows are physically permuted; the index sets are kept instead.
    """
    A_ = getattr(A, "matrix", A)
    n = A_.shape[0]
    S = np.asarray(S, dtype=np.int64)
    if S.ndim != 1 or np.unique(S).size != S.size or np.any(S < 0) or np.any(S >= n):
        raise ValueError("S must be distinct indices in [0, n)")
    if not 1 <= d <= S.size:
        raise ValueError("need 1 <= d <= |S|")
    mask = np.ones(n, dtype=bool)
    mask[S] = False
    Sc = np.flatnonzero(mask)
    X = ase(_dense_or_adjacency_block(A, S, S), d).Z
    if Sc.size:
        Y = oos_embed_batch(X, _dense_or_adjacency_block(A, S, Sc))
    else:
        Y = np.zeros((0, d))
    return NystromSketch(n, S, Sc, X, Y)


def nystrom_reconstruct(sketch):
    """The block matrix ``[[X X^T, X Y^T], [Y X^T, Y Y^T]]`` in the original vertex order."""
    F = np.empty((sketch.n, sketch.rank))
    F[sketch.in_sample_index] = sketch.X_factor
    F[sketch.out_sample_index] = sketch.Y_factor
    R = F @ F.T
    return 0.5 * (R + R.T)


def save_sketch(prefix, sketch):
    write_matrix_csv(str(prefix) + "_X.csv", sketch.X_factor)
    write_matrix_csv(str(prefix) + "_Y.csv", sketch.Y_factor)
    write_json(str(prefix) + "_index.json", {
        "n": sketch.n,
        "in_sample_index": sketch.in_sample_index.tolist(),
        "out_sample_index": sketch.out_sample_index.tolist(),
        "rank": sketch.rank,
    })
