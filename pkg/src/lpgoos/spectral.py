"""Symmetric eigendecomposition, adjacency spectral embedding and helpers."""

from dataclasses import dataclass, field
import json
import warnings

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from .errors import IndefiniteSpectrumError, NumericalError

DENSE_LIMIT = 1024
_SYM_TOL = 1e-12
_RESIDUAL_TOL = 1e-6


@dataclass
class EigenPairs:
    values: np.ndarray
    vectors: np.ndarray = field(repr=False)
    full_spectrum_head: np.ndarray = None


@dataclass
class Embedding:
    """Adjacency (or kernel) spectral embedding ``Z = U S^{1/2}``."""

    Z: np.ndarray = field(repr=False)
    eigenvalues: np.ndarray
    source: str = "adjacency"
    spectrum_head: np.ndarray = None
    meta: dict = field(default_factory=dict)

    @property
    def d(self):
        return self.Z.shape[1]

    @property
    def n(self):
        return self.Z.shape[0]

    def truncate(self, d):
        """Embedding into the first ``d`` coordinates (eigenpairs are nested)."""
        if not 1 <= d <= self.d:
            raise ValueError("cannot truncate a %d-dim embedding to %d" % (self.d, d))
        return Embedding(self.Z[:, :d], self.eigenvalues[:d], self.source,
                         self.spectrum_head, dict(self.meta))


def _unwrap(M):
    # Adjacency objects carry their storage in ``.matrix``
    return getattr(M, "matrix", M)


def _as_float_operator(M):
    M = _unwrap(M)
    if sp.issparse(M):
        return sp.csr_matrix(M, dtype=float)
    M = np.asarray(M)
    if M.dtype != float:
        M = M.astype(float)
    return M


def _check_symmetric(M):
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("expected a square matrix, got shape %s" % (M.shape,))
    if sp.issparse(M):
        asym = abs(M - M.T).max() if M.nnz else 0.0
    else:
        asym = np.max(np.abs(M - M.T)) if M.size else 0.0
    if asym > _SYM_TOL:
        raise ValueError("matrix is not symmetric (max asymmetry %.3g)" % asym)


def _fix_signs(vectors):
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def top_eigenpairs(M, d, n_head=None, dense_limit=DENSE_LIMIT):
    """The ``d`` algebraically largest eigenpairs of a symmetric matrix.

    Dense matrices up to ``dense_limit`` rows go through LAPACK's symmetric
    solver; larger or sparse inputs use implicitly restarted Lanczos
    (ARPACK). Eigenvalues are returned in nonincreasing order and each
    eigenvector is signed so that its largest-magnitude entry is positive.

    Parameters
    ----------
    M : (n, n) array, sparse matrix or Adjacency
    d : int
        Number of eigenpairs to return, ``1 <= d <= n``.
    n_head : int, optional
        Also compute this many leading eigenvalues for scree analysis.

    Raises
    ------
    ValueError
        Non-symmetric input or ``d`` out of range.
    NumericalError
        The Lanczos iteration did not converge, or a returned pair fails the
        residual check ``||Mv - lambda v|| <= 1e-6 ||M||``.
    """
    M = _as_float_operator(M)
    _check_symmetric(M)
    n = M.shape[0]
    if not 1 <= d <= n:
        raise ValueError("need 1 <= d <= n, got d=%d, n=%d" % (d, n))
    k = min(max(d, n_head or 0), n)

    if n <= dense_limit or k >= n - 1:
        dense = M.toarray() if sp.issparse(M) else M
        values, vectors = scipy.linalg.eigh(dense, subset_by_index=[n - k, n - 1])
    else:
        v0 = np.random.default_rng(0).standard_normal(n)
        try:
            values, vectors = eigsh(M, k=k, which="LA", v0=v0, tol=0,
                                    maxiter=max(50 * k, 1000))
        except ArpackNoConvergence as exc:
            raise NumericalError(
                "Lanczos did not converge: %d of %d eigenpairs after the iteration cap"
                % (len(exc.eigenvalues), k)
            ) from exc
    order = np.argsort(values)[::-1]
    values = values[order]
    vectors = _fix_signs(vectors[:, order])

    scale = max(np.max(np.abs(values)), np.finfo(float).tiny)
    resid = np.linalg.norm(M @ vectors - vectors * values, axis=0)
    if np.any(resid > _RESIDUAL_TOL * scale):
        raise NumericalError("eigenpair residual %.3g exceeds tolerance" % resid.max())

    head = values.copy() if n_head else None
    return EigenPairs(values[:d], vectors[:, :d], head)


def ase(A, d, n_head=None, source=None, dense_limit=DENSE_LIMIT):
    """Adjacency spectral embedding ``Z = U_A S_A^{1/2}`` into ``R^d``.

    Raises
    ------
    IndefiniteSpectrumError
        If the d-th largest eigenvalue is not strictly positive.
    """
    if source is None:
        source = "adjacency" if hasattr(A, "matrix") else "kernel"
    pairs = top_eigenpairs(A, d, n_head=n_head, dense_limit=dense_limit)
    bad = np.flatnonzero(pairs.values <= 0)
    if bad.size:
        j = bad[0]
        raise IndefiniteSpectrumError(
            "eigenvalue %d of the top %d is %.6g; the embedding needs a positive spectrum"
            % (j + 1, d, pairs.values[j])
        )
    Z = pairs.vectors * np.sqrt(pairs.values)
    return Embedding(Z, pairs.values, source, pairs.full_spectrum_head)


def select_dimension(spectrum):
    """Scree-plot elbow by two-segment Gaussian profile likelihood.

    The sorted spectrum is split into a leading block of size ``q`` and the
    rest; each block gets its own mean and the blocks share one variance.
    The split with the largest profile log-likelihood wins, and ties go to
    the smaller ``q``. Since the maximized log-likelihood is a decreasing
    function of the pooled MLE variance, this is the split minimizing the
    pooled within-block sum of squares.
    """
    x = np.sort(np.asarray(spectrum, dtype=float).ravel())[::-1]
    p = x.size
    if p < 3:
        raise ValueError("need at least 3 eigenvalues, got %d" % p)
    scale = np.max(np.abs(x))
    if scale > 0:
        x = x / scale
    sse = np.empty(p - 1)
    for q in range(1, p):
        head, tail = x[:q], x[q:]
        sse[q - 1] = np.sum((head - head.mean()) ** 2) + np.sum((tail - tail.mean()) ** 2)
    # near-ties within rounding go to the smaller split
    return int(np.flatnonzero(sse <= sse.min() + 1e-12 * p)[0]) + 1


def procrustes(source, target):
    """Orthogonal ``W`` minimizing ``||source @ W - target||_F``.

    Computed from the SVD ``source.T @ target = U S V^T`` as ``W = U V^T``.
    A rank-deficient cross product triggers a ``RuntimeWarning``; the
    returned minimizer is then not unique.
    """
    source = np.asarray(source, dtype=float)
    target = np.asarray(target, dtype=float)
    if source.ndim != 2 or source.shape != target.shape:
        raise ValueError("shape mismatch: %s vs %s" % (source.shape, target.shape))
    n, d = source.shape
    if n < d:
        raise ValueError("need at least as many rows as columns")
    U, s, Vt = np.linalg.svd(source.T @ target)
    if s[-1] <= s[0] * d * np.finfo(float).eps:
        warnings.warn("rank-deficient cross product; Procrustes solution is not unique",
                      RuntimeWarning, stacklevel=2)
    return U @ Vt


def spectral_norm(M, dense_limit=DENSE_LIMIT):
    """Largest absolute eigenvalue of a symmetric matrix."""
    M = _as_float_operator(M)
    _check_symmetric(M)
    n = M.shape[0]
    if n == 0:
        return 0.0
    if sp.issparse(M) and M.nnz == 0:
        return 0.0
    if n <= dense_limit or n < 3:
        dense = M.toarray() if sp.issparse(M) else M
        return float(np.max(np.abs(np.linalg.eigvalsh(dense))))
    v0 = np.random.default_rng(0).standard_normal(n)
    try:
        val = eigsh(M, k=1, which="LM", v0=v0, tol=0, return_eigenvectors=False,
                    maxiter=1000)
    except ArpackNoConvergence as exc:
        raise NumericalError("spectral norm iteration did not converge") from exc
    return float(abs(val[0]))


def save_embedding(emb, path, extra=None):
    """Write ``Z`` as CSV at ``path`` and a JSON sidecar next to it."""
    from .io import atomic_write_text, write_matrix_csv

    write_matrix_csv(path, emb.Z)
    meta = {
        "d": emb.d,
        "n": emb.n,
        "source": emb.source,
        "eigenvalues": emb.eigenvalues.tolist(),
        "spectrum_head": None if emb.spectrum_head is None else emb.spectrum_head.tolist(),
    }
    meta.update(emb.meta)
    if extra:
        meta.update(extra)
    atomic_write_text(str(path) + ".json", json.dumps(meta, indent=2, sort_keys=True) + "\n")


def load_embedding(path):
    from .io import read_matrix_csv

    Z = read_matrix_csv(path)
    with open(str(path) + ".json") as fh:
        meta = json.load(fh)
    head = meta.pop("spectrum_head", None)
    emb = Embedding(
        Z,
        np.asarray(meta.pop("eigenvalues"), dtype=float),
        meta.pop("source", "adjacency"),
        None if head is None else np.asarray(head, dtype=float),
    )
    meta.pop("d", None)
    meta.pop("n", None)
    emb.meta.update(meta)
    return emb
