"""Monte Carlo checks of the concentration bound and embedding error rates."""

from dataclasses import dataclass, field
import math
import warnings

import numpy as np

from ._random import derive_seed
from .errors import IndefiniteSpectrumError
from .io import write_json, write_table_csv
from .kernels import EmpiricalFeatureMap, build_empirical_feature_map, kernel_matrix
from .lpgraph import (sample_adjacency, sample_graph, sample_latent,
                      sample_oos_connections_batch, sparsity_schedule)
from .oos import oos_embed_batch
from .spectral import ase, procrustes, spectral_norm, top_eigenpairs


def concentration_bound(n, rho, eta):
    """``2 sqrt(n rho log(n / eta))``, the high-probability bound on ``||A - K||``."""
    return 2.0 * math.sqrt(n * rho * math.log(n / eta))


@dataclass
class BoundReport:
    n: int
    rho: float
    eta: float
    bound: float
    observed: np.ndarray
    seeds: list = field(default_factory=list)

    @property
    def satisfied(self):
        return self.observed <= self.bound

    @property
    def trials(self):
        return self.observed.size

    @property
    def violation_rate(self):
        return float(np.mean(~self.satisfied)) if self.trials else 0.0

    def summary(self):
        return {"n": self.n, "rho": self.rho, "eta": self.eta, "bound": self.bound,
                "trials": self.trials, "violation_rate": self.violation_rate,
                "max_observed": float(self.observed.max()) if self.trials else None,
                "predicted_max_violation_rate": 2 * self.eta}

    def save(self, csv_path, json_path, extra=None):
        rows = [(s, o, self.bound, bool(o <= self.bound))
                for s, o in zip(self.seeds, self.observed)]
        write_table_csv(csv_path, ["seed", "observed", "bound", "satisfied"], rows)
        summary = self.summary()
        if extra:
            summary.update(extra)
        write_json(json_path, summary)


def check_concentration(spec, dist, n, rho, eta, seeds):
    """Sample ``(X, K, A)`` once per seed and compare ``||A - K||`` to the bound."""
    if not 0 < eta < 0.5:
        raise ValueError("eta must lie in (0, 1/2)")
    if n * rho < 1:
        raise ValueError("need n * rho >= 1")
    observed = []
    for seed in seeds:
        X = sample_latent(dist, n, derive_seed(seed, 0))
        K = kernel_matrix(spec, X, rho)
        A = sample_adjacency(K, derive_seed(seed, 1))
        observed.append(spectral_norm(A.toarray() - K))
    return BoundReport(n, rho, eta, concentration_bound(n, rho, eta),
                       np.array(observed, dtype=float), list(seeds))


def projection_difference(A, K, d):
    """Diagnostic ``||P_A - P_K||`` between top-``d`` eigenprojections."""
    UA = top_eigenpairs(A, d).vectors
    UK = top_eigenpairs(K, d).vectors
    return spectral_norm(UA @ UA.T - UK @ UK.T)


@dataclass
class RatePoint:
    n: int
    mean_error: float
    sd_error: float
    replicates: int


@dataclass
class RateCurve:
    points: list
    context: str
    kernel: dict
    distribution: dict
    rho_schedule: dict
    d: int
    skipped: list = field(default_factory=list)
    errors: dict = field(default_factory=dict, repr=False)

    @property
    def n(self):
        return np.array([p.n for p in self.points])

    @property
    def mean_error(self):
        return np.array([p.mean_error for p in self.points])

    def to_rows(self):
        return [(p.n, p.mean_error, p.sd_error, p.replicates) for p in self.points]

    def save(self, csv_path, json_path, extra=None):
        write_table_csv(csv_path, ["n", "mean_error", "sd_error", "replicates"], self.to_rows())
        summary = {"context": self.context, "kernel": self.kernel,
                   "distribution": self.distribution, "rho_schedule": self.rho_schedule,
                   "d": self.d, "skipped": self.skipped}
        try:
            slope, stderr = rate_exponent(self)
            summary.update(slope=slope, slope_stderr=stderr)
        except ValueError:
            summary.update(slope=None, slope_stderr=None)
        if extra:
            summary.update(extra)
        write_json(json_path, summary)


def _resolve_oracle(oracle, spec, dist, d, master_seed, n_ref):
    if isinstance(oracle, str) and oracle == "latent":
        return lambda X: X
    if oracle is None:
        X_ref = sample_latent(dist, n_ref, derive_seed(master_seed, 999))
        oracle = build_empirical_feature_map(spec, X_ref, d)
    if isinstance(oracle, EmpiricalFeatureMap):
        fmap = oracle
        return fmap
    return oracle


def _rho(schedule, n):
    schedule = dict(schedule)
    return sparsity_schedule(schedule.pop("kind"), n, schedule.get("constant"))


def _replicate(spec, dist, d, n, rho, seed, oracle, fresh_points):
    X = sample_latent(dist, n, derive_seed(seed, 0))
    A = sample_graph(spec, X, rho, derive_seed(seed, 1))
    emb = ase(A, d)
    scaled = emb.Z / math.sqrt(rho)
    target = oracle(X)
    W = procrustes(scaled, target)
    insample = float(np.mean(np.linalg.norm(scaled @ W - target, axis=1)))

    X_new = sample_latent(dist, fresh_points, derive_seed(seed, 2))
    B = sample_oos_connections_batch(X_new, X, spec, rho, derive_seed(seed, 3))
    T = oos_embed_batch(emb, B) / math.sqrt(rho)
    oos = float(np.mean(np.linalg.norm(T @ W - oracle(X_new), axis=1)))
    return insample, oos


def error_curves(spec, dist, d, n_grid, replicates, rho_schedule, master_seed,
                 oracle=None, fresh_points=50, n_ref=5000):
    """In-sample and out-of-sample aligned embedding errors over ``n_grid``.

    For each ``(n, replicate)`` a graph is sampled and embedded into
    ``R^d``. The in-sample rows, scaled by ``rho^{-1/2}``, are aligned to the
    oracle by Procrustes, and the same rotation is applied to the
    out-of-sample embeddings of ``fresh_points`` new vertices.

    Parameters
    ----------
    oracle : None, "latent", EmpiricalFeatureMap or callable
        Target feature map. ``None`` builds an empirical feature map from
        ``n_ref`` reference points; ``"latent"`` uses the latent positions
        themselves (random dot product graphs).

    Returns
    -------
    (RateCurve, RateCurve)
        In-sample and out-of-sample curves built from the same graphs.
    """
    n_grid = [int(n) for n in n_grid]
    if any(b <= a for a, b in zip(n_grid, n_grid[1:])):
        raise ValueError("n_grid must be strictly increasing")
    if replicates < 1:
        raise ValueError("replicates must be positive")
    target = _resolve_oracle(oracle, spec, dist, d, master_seed, n_ref)
    curves = {}
    skipped = []
    errs = {"insample": {}, "oos": {}}
    for n in n_grid:
        rho = _rho(rho_schedule, n)
        ins, outs = [], []
        for r in range(replicates):
            seed = derive_seed(master_seed, n, r)
            try:
                a, b = _replicate(spec, dist, d, n, rho, seed, target, fresh_points)
            except IndefiniteSpectrumError as exc:
                skipped.append({"n": n, "replicate": r, "reason": str(exc)})
                warnings.warn("skipping n=%d replicate %d: %s" % (n, r, exc), RuntimeWarning,
                              stacklevel=2)
                continue
            ins.append(a)
            outs.append(b)
        errs["insample"][n] = ins
        errs["oos"][n] = outs
    for which, context in (("insample", "in-sample"), ("oos", "out-of-sample")):
        points = []
        for n in n_grid:
            e = np.array(errs[which][n])
            if e.size == 0:
                continue
            sd = float(e.std(ddof=1)) if e.size > 1 else 0.0
            points.append(RatePoint(n, float(np.sum(e) / e.size), sd, int(e.size)))
        curves[which] = RateCurve(
            points, context,
            kernel=spec.params(), distribution=dist.to_dict(), rho_schedule=dict(rho_schedule),
            d=d, skipped=list(skipped), errors={n: list(v) for n, v in errs[which].items()},
        )
    return curves["insample"], curves["oos"]


def oos_error_curve(spec, dist, d, n_grid, replicates, rho_schedule, master_seed, **kwargs):
    return error_curves(spec, dist, d, n_grid, replicates, rho_schedule, master_seed,
                        **kwargs)[1]


def insample_error_curve(spec, dist, d, n_grid, replicates, rho_schedule, master_seed, **kwargs):
    return error_curves(spec, dist, d, n_grid, replicates, rho_schedule, master_seed,
                        **kwargs)[0]


def rate_exponent(curve):
    """Least-squares slope of ``log(mean_error)`` on ``log(n)`` and its standard error."""
    if isinstance(curve, RateCurve):
        n, err = curve.n, curve.mean_error
    else:
        n, err = (np.asarray(v, dtype=float) for v in curve)
    keep = err > 0
    n, err = np.log(n[keep]), np.log(err[keep])
    k = n.size
    if k < 3:
        raise ValueError("need at least 3 points with positive error, got %d" % k)
    x = n - n.mean()
    sxx = x @ x
    slope = float(x @ (err - err.mean()) / sxx)
    resid = err - err.mean() - slope * x
    stderr = float(math.sqrt((resid @ resid) / (k - 2) / sxx))
    return slope, stderr


def implied_constant(curve, gap, power=3):
    """``error * gap^power * sqrt(n rho / (d log n))`` per grid point.

    The theory's constant is unknown; this is the value it would need to
    take for each measured error to sit exactly on the bound.
    """
    out = []
    for p in curve.points:
        rho = _rho(curve.rho_schedule, p.n)
        out.append(p.mean_error * gap ** power * math.sqrt(p.n * rho / (curve.d * math.log(p.n))))
    return np.array(out)
