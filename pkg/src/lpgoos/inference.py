"""Inference on embeddings: linear classifiers, Gaussian mixtures, ARI tests."""

from dataclasses import dataclass, field
import math
import warnings

import numpy as np
import scipy.linalg
from scipy.optimize import brentq
from scipy.special import logsumexp

from ._random import derive_seed, stream
from .errors import ClusteringError, DegenerateLabelsError

LOSSES = ("squared", "hinge", "logistic")


# ---------------------------------------------------------------------------
# linear classification


@dataclass
class LinearClassifier:
    weights: np.ndarray
    intercept: float
    loss: str = "squared"
    radius_bound: float = None
    history: list = field(default_factory=list, repr=False)

    def decision_function(self, Z):
        Z = np.atleast_2d(np.asarray(Z, dtype=float))
        if Z.shape[1] != self.weights.size:
            raise ValueError("expected %d features, got %d" % (self.weights.size, Z.shape[1]))
        return Z @ self.weights + self.intercept

    def to_dict(self):
        return {"weights": self.weights.tolist(), "intercept": float(self.intercept),
                "loss": self.loss, "radius_bound": self.radius_bound}


def _check_binary(y):
    y = np.asarray(y)
    if not np.all((y == 1) | (y == -1)):
        raise ValueError("labels must be -1 or +1")
    if np.unique(y).size < 2:
        raise DegenerateLabelsError("training labels contain a single class")
    return y.astype(float)


def _squared_unconstrained(Z, y):
    m, d = Z.shape
    # minimum-norm solution; rank-deficient designs need no ridge
    beta = scipy.linalg.lstsq(np.column_stack([Z, np.ones(m)]), y, lapack_driver="gelsd")[0]
    return beta[:d], float(beta[d])


def _squared_in_ball(Z, y, radius):
    # least squares with ||w|| <= radius; the intercept is free, so center first
    zbar, ybar = Z.mean(axis=0), y.mean()
    Zc, yc = Z - zbar, y - ybar
    s, V = np.linalg.eigh(Zc.T @ Zc)
    s = np.clip(s, 0.0, None)
    c = V.T @ (Zc.T @ yc)

    def norm_at(mu):
        return np.linalg.norm(c / (s + mu))

    hi = max(np.linalg.norm(c) / radius, 1e-300)
    lo = 1e-300
    if norm_at(lo) <= radius:
        mu = lo
    else:
        mu = brentq(lambda t: norm_at(t) - radius, lo, hi, xtol=1e-300, rtol=1e-14)
    w = V @ (c / (s + mu))
    nw = np.linalg.norm(w)
    if nw > radius:
        w *= radius / nw
    return w, float(ybar - zbar @ w)


def _surrogate(loss, margins):
    if loss == "hinge":
        return np.maximum(0.0, 1.0 - margins)
    return np.logaddexp(0.0, -margins)


def _surrogate_slope(loss, margins):
    # derivative (or a subgradient) of the loss w.r.t. the margin
    if loss == "hinge":
        return np.where(margins < 1.0, -1.0, 0.0)
    return -0.5 * (1.0 - np.tanh(0.5 * margins))


def _project(w, radius):
    if radius is None:
        return w
    nw = np.linalg.norm(w)
    return w if nw <= radius else w * (radius / nw)


def _descent(Z, y, loss, radius, reg, max_iter, tol):
    """Projected (sub)gradient descent with backtracking on the step size.

    A step is accepted only if it lowers the objective, so the recorded
    objective sequence is nonincreasing.
    """
    m, d = Z.shape

    def objective(w, b):
        return float(np.mean(_surrogate(loss, y * (Z @ w + b))) + 0.5 * reg * (w @ w))

    w, b = np.zeros(d), 0.0
    f = objective(w, b)
    history = [f]
    step = 1.0
    for _ in range(max_iter):
        margins = y * (Z @ w + b)
        g = _surrogate_slope(loss, margins) * y / m
        gw = Z.T @ g + reg * w
        gb = float(g.sum())
        accepted = False
        for _ in range(40):
            w_new = _project(w - step * gw, radius)
            b_new = b - step * gb
            f_new = objective(w_new, b_new)
            if f_new < f:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        gain = f - f_new
        w, b, f = w_new, b_new, f_new
        history.append(f)
        step *= 2.0
        if gain <= tol * max(1.0, abs(f)):
            break
    return w, b, history


def fit_linear(Z, y, loss="squared", radius_bound=None, reg=1e-4, max_iter=2000, tol=1e-10):
    """Fit a linear classifier ``sign(<w, z> + b)`` by convex surrogate risk minimization.

    Parameters
    ----------
    Z : (m, d) array
        Training embeddings.
    y : (m,) array of -1/+1
    loss : {"squared", "hinge", "logistic"}
        ``squared`` is solved by SVD least squares (minimum norm when the
        design is rank deficient). The other two losses are minimized by projected
        subgradient descent with an L2 penalty ``reg``.
    radius_bound : float, optional
        Constrain ``||w|| <= radius_bound``.

    Returns
    -------
    LinearClassifier
    """
    if loss not in LOSSES:
        raise ValueError("loss must be one of %s" % (LOSSES,))
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    y = _check_binary(y)
    m, d = Z.shape
    if y.size != m:
        raise ValueError("need one label per training row")
    if radius_bound is not None and radius_bound <= 0:
        raise ValueError("radius_bound must be positive")
    if m < d + 1:
        warnings.warn("only %d training points for %d features" % (m, d), RuntimeWarning,
                      stacklevel=2)

    if loss == "squared":
        w, b = _squared_unconstrained(Z, y)
        if radius_bound is not None and np.linalg.norm(w) > radius_bound:
            w, b = _squared_in_ball(Z, y, radius_bound)
        resid = Z @ w + b - y
        return LinearClassifier(w, b, loss, radius_bound, [float(resid @ resid / m)])

    if radius_bound is None:
        # column standardization is a change of variables when w is unconstrained
        mu = Z.mean(axis=0)
        sd = Z.std(axis=0)
        sd[sd == 0] = 1.0
        w, b, hist = _descent((Z - mu) / sd, y, loss, None, reg, max_iter, tol)
        w = w / sd
        b = b - mu @ w
    else:
        w, b, hist = _descent(Z, y, loss, radius_bound, reg, max_iter, tol)
    return LinearClassifier(w, float(b), loss, radius_bound, hist)


def predict(model, Z):
    """Labels ``sign(Z w + b)`` with zero mapped to +1."""
    return np.where(model.decision_function(Z) >= 0, 1, -1)


@dataclass
class OneVsRestClassifier:
    classes: np.ndarray
    models: list = field(repr=False)

    def decision_function(self, Z):
        return np.column_stack([m.decision_function(Z) for m in self.models])

    def predict(self, Z):
        # argmax keeps the first maximum: ties go to the smaller class index
        return self.classes[np.argmax(self.decision_function(Z), axis=1)]

    def to_dict(self):
        return {"classes": self.classes.tolist(), "models": [m.to_dict() for m in self.models]}


def fit_one_vs_rest(Z, labels, loss="hinge", **kwargs):
    labels = np.asarray(labels)
    classes = np.unique(labels)
    if classes.size < 2:
        raise DegenerateLabelsError("need at least two classes")
    models = [fit_linear(Z, np.where(labels == c, 1, -1), loss, **kwargs) for c in classes]
    return OneVsRestClassifier(classes, models)


def misclassification_rate(predicted, truth):
    predicted = np.asarray(predicted)
    truth = np.asarray(truth)
    if predicted.shape != truth.shape or predicted.ndim != 1:
        raise ValueError("label vectors must have equal length")
    if predicted.size == 0:
        raise ValueError("need at least one label")
    return float(np.mean(predicted != truth))


# ---------------------------------------------------------------------------
# Gaussian mixtures


@dataclass
class GmmModel:
    K: int
    weights: np.ndarray
    means: np.ndarray
    covariances: np.ndarray = field(repr=False)
    loglik: float
    bic: float
    assignments: np.ndarray = field(repr=False)
    loglik_history: list = field(default_factory=list, repr=False)
    bic_by_K: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "K": self.K, "weights": self.weights.tolist(), "means": self.means.tolist(),
            "covariances": self.covariances.tolist(), "loglik": self.loglik, "bic": self.bic,
            "bic_by_K": {str(k): v for k, v in self.bic_by_K.items()},
        }


def _component_logpdf(Z, means, covs):
    m, d = Z.shape
    out = np.empty((m, means.shape[0]))
    for k in range(means.shape[0]):
        L = np.linalg.cholesky(covs[k])
        sol = scipy.linalg.solve_triangular(L, (Z - means[k]).T, lower=True)
        logdet = 2.0 * np.sum(np.log(np.diag(L)))
        out[:, k] = -0.5 * (np.sum(sol * sol, axis=0) + logdet + d * math.log(2 * math.pi))
    return out


def _m_step(Z, resp, floor):
    Nk = resp.sum(axis=0)
    if np.any(Nk < 1e-8 * Z.shape[0]):
        return None
    weights = Nk / Nk.sum()
    means = (resp.T @ Z) / Nk[:, None]
    d = Z.shape[1]
    covs = np.empty((resp.shape[1], d, d))
    for k in range(resp.shape[1]):
        D = Z - means[k]
        C = (resp[:, k, None] * D).T @ D / Nk[k]
        C = 0.5 * (C + C.T)
        vals, vecs = np.linalg.eigh(C)
        if vals[0] < floor:
            C = (vecs * np.maximum(vals, floor)) @ vecs.T
            C = 0.5 * (C + C.T)
        covs[k] = C
    return weights, means, covs


def _kmeanspp(Z, K, rng):
    m = Z.shape[0]
    centers = [Z[rng.integers(m)]]
    d2 = np.sum((Z - centers[0]) ** 2, axis=1)
    for _ in range(1, K):
        total = d2.sum()
        if total <= 0:
            idx = rng.integers(m)
        else:
            idx = int(np.searchsorted(np.cumsum(d2), rng.random() * total, side="right"))
            idx = min(idx, m - 1)
        centers.append(Z[idx])
        d2 = np.minimum(d2, np.sum((Z - Z[idx]) ** 2, axis=1))
    return np.array(centers)


def _em(Z, K, rng, floor, max_iter, tol):
    m = Z.shape[0]
    centers = _kmeanspp(Z, K, rng)
    hard = np.argmin(((Z[:, None, :] - centers[None]) ** 2).sum(axis=2), axis=1)
    resp = np.zeros((m, K))
    resp[np.arange(m), hard] = 1.0
    params = _m_step(Z, resp, floor)
    if params is None:
        return None
    history = []
    for _ in range(max_iter):
        weights, means, covs = params
        logp = _component_logpdf(Z, means, covs) + np.log(weights)
        norm = logsumexp(logp, axis=1)
        ll = float(norm.sum())
        history.append(ll)
        if len(history) > 1 and (history[-1] - history[-2]) / m < tol:
            break
        resp = np.exp(logp - norm[:, None])
        new = _m_step(Z, resp, floor)
        if new is None:
            return None
        params = new
    weights, means, covs = params
    logp = _component_logpdf(Z, means, covs) + np.log(weights)
    ll = float(logsumexp(logp, axis=1).sum())
    if ll != history[-1]:
        # the iteration cap was hit right after an M-step
        history.append(ll)
    return weights, means, covs, ll, history, np.argmax(logp, axis=1)


def _n_params(K, d):
    return (K - 1) + K * d + K * d * (d + 1) // 2


def fit_gmm(Z, K_range, seed, restarts=5, max_iter=1000, tol=1e-8):
    """Full-covariance Gaussian mixture chosen by BIC over ``K_range``.

    Each ``K`` runs EM from ``restarts`` k-means++ seedings and keeps the
    best likelihood. Covariance eigenvalues are floored at
    ``1e-6 * trace(cov(Z)) / d``. EM stops when the per-point
    log-likelihood gain drops below ``tol``.

    Raises
    ------
    ClusteringError
        If EM collapses a component for every restart of every ``K``.
    """
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    m, d = Z.shape
    K_range = sorted(set(int(k) for k in K_range))
    if not K_range or K_range[0] < 1:
        raise ValueError("K_range must be a nonempty set of positive integers")
    if m < K_range[-1] * (d + 1):
        raise ValueError("need at least max(K) * (d + 1) = %d points, got %d"
                         % (K_range[-1] * (d + 1), m))
    spread = np.trace(np.atleast_2d(np.cov(Z, rowvar=False))) / d
    floor = 1e-6 * spread if spread > 0 else 1e-12

    best, bics, failures = None, {}, {}
    for K in K_range:
        fits = []
        for r in range(1 if K == 1 else restarts):
            fit = _em(Z, K, stream(derive_seed(seed, K, r)), floor, max_iter, tol)
            if fit is not None:
                fits.append(fit)
        if not fits:
            failures[K] = restarts
            continue
        fit = max(fits, key=lambda f: f[3])
        bic = -2.0 * fit[3] + _n_params(K, d) * math.log(m)
        bics[K] = bic
        if best is None or bic < best[0]:
            best = (bic, K, fit)
    if best is None:
        raise ClusteringError("EM emptied a component in every restart for K in %s" % K_range)
    bic, K, (weights, means, covs, ll, history, assign) = best
    return GmmModel(K, weights, means, covs, ll, bic, assign, history, bics)


# ---------------------------------------------------------------------------
# adjusted Rand index and permutation test


def _codes(labels):
    return np.unique(np.asarray(labels), return_inverse=True)[1].ravel()


def _pairs(x):
    x = np.asarray(x, dtype=np.int64)
    return int(np.sum(x * (x - 1) // 2))


def _ari_from_sums(index, sum_a, sum_b, total):
    expected = sum_a * sum_b / total if total else 0.0
    max_index = 0.5 * (sum_a + sum_b)
    denom = max_index - expected
    return (index - expected) / denom


def adjusted_rand_index(a, b):
    """Chance-corrected agreement of two partitions of the same items."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("label vectors must have equal length")
    n = a.size
    if n < 2:
        raise ValueError("need at least two items")
    ca, cb = _codes(a), _codes(b)
    ka, kb = ca.max() + 1, cb.max() + 1
    table = np.bincount(ca * kb + cb, minlength=ka * kb)
    sum_a = _pairs(np.bincount(ca))
    sum_b = _pairs(np.bincount(cb))
    total = n * (n - 1) // 2
    if 0.5 * (sum_a + sum_b) - sum_a * sum_b / total == 0:
        # both partitions trivial (all singletons or one block)
        return 1.0 if ka == kb else 0.0
    return _ari_from_sums(_pairs(table), sum_a, sum_b, total)


@dataclass
class PermutationReport:
    observed_ari: float
    null_mean: float
    null_sd: float
    p_value: float
    trials: int
    null: np.ndarray = field(default=None, repr=False)

    def to_dict(self):
        return {"observed_ari": self.observed_ari, "null_mean": self.null_mean,
                "null_sd": self.null_sd, "p_value": self.p_value, "trials": self.trials}


def permutation_test_ari(truth, clusters, trials, seed):
    """Permutation test of the ARI between ``clusters`` and shuffled ``truth``.

    The p-value is ``(1 + #{null >= observed}) / (1 + trials)``.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    observed = adjusted_rand_index(truth, clusters)
    ca, cb = _codes(truth), _codes(clusters)
    n = ca.size
    kb = cb.max() + 1
    sum_a = _pairs(np.bincount(ca))
    sum_b = _pairs(np.bincount(cb))
    total = n * (n - 1) // 2
    trivial = 0.5 * (sum_a + sum_b) - sum_a * sum_b / total == 0
    rng = stream(seed, 3)
    null = np.empty(trials)
    for t in range(trials):
        perm = ca[rng.permutation(n)]
        if trivial:
            null[t] = adjusted_rand_index(perm, cb)
        else:
            null[t] = _ari_from_sums(_pairs(np.bincount(perm * kb + cb)), sum_a, sum_b, total)
    exceed = int(np.count_nonzero(null >= observed))
    return PermutationReport(
        observed_ari=float(observed),
        null_mean=float(null.mean()),
        null_sd=float(null.std(ddof=1)) if trials > 1 else 0.0,
        p_value=(1 + exceed) / (1 + trials),
        trials=int(trials),
        null=null,
    )
