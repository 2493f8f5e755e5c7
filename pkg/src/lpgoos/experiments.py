"""Experiment runners: configuration, dataset ingestion and artifacts.

Every runner takes an :class:`ExperimentConfig`, draws all randomness from
``config.seed`` and, given an output directory, writes CSV tables (each
starting with a ``# config=...`` comment line) and a ``summary.json`` that
embeds the full configuration. Rerunning from that embedded configuration
reproduces every file byte for byte.
"""

from dataclasses import dataclass, field
import copy
import hashlib
import json
import math
import os

import numpy as np

from ._random import derive_seed, stream
from .errors import ConfigurationError, IngestionError, ProvenanceError
from .inference import (fit_gmm, fit_linear, fit_one_vs_rest,
                        misclassification_rate, permutation_test_ari, predict)
from .io import toml_loads, write_json, write_table_csv
from .kernels import KernelSpec
from .lpgraph import (LatentDistribution, sample_graph, sample_latent,
                      sample_oos_connections_batch, quadrant_labels)
from .oos import oos_embed_batch
from .spectral import ase, select_dimension
from .verify import check_concentration, error_curves, rate_exponent

EXPERIMENTS = ("mixture", "abalone", "bipartite", "rates", "bounds")
SCALES = ("full", "ci")

ABALONE_ROWS = 4177
ABALONE_TRAIN = 3133

_MIXTURE = {
    "kernel": {"kind": "gaussian", "sigma": 1.0},
    "distribution": {"kind": "gaussian-mixture", "weights": [0.5, 0.5],
                     "means": [[1.0, 1.0], [-1.0, -1.0]],
                     "covariances": [[[1.0, 0.0], [0.0, 1.0]], [[1.0, 0.0], [0.0, 1.0]]]},
    "rho": 1.0,
    "d_grid": list(range(1, 51)),
}

DEFAULTS = {
    "mixture": {
        "full": dict(_MIXTURE, n=10000, n_train=2000),
        "ci": dict(_MIXTURE, n=2000, n_train=500),
    },
    "abalone": {
        "full": {"kernel": {"kind": "gaussian", "sigma": math.sqrt(0.5)},
                 "dataset": "data/abalone.data", "d": 50, "rho": 1.0,
                 "m_grid": [200, 600, 1000, 1400, 1800, 2200, 2600],
                 "standardize": False, "loss": "hinge", "reg": 1e-4},
    },
    "bipartite": {
        "full": {"kernel": {"kind": "gaussian", "sigma": 1.0},
                 "n_donors": 2000, "n_charities": 400, "n_groups": 4,
                 "group_radius": 2.0, "donor_sd": 0.5, "charity_sd": 0.25,
                 "charity_rho": 1.0, "d": 4, "K_range": [1, 2, 3, 4, 5, 6, 7, 8],
                 "trials": 1000, "null_control": False},
        "ci": {"kernel": {"kind": "gaussian", "sigma": 1.0},
               "n_donors": 600, "n_charities": 200, "n_groups": 4,
               "group_radius": 2.0, "donor_sd": 0.5, "charity_sd": 0.25,
               "charity_rho": 1.0, "d": 4, "K_range": [1, 2, 3, 4, 5, 6],
               "trials": 500, "null_control": False},
    },
    "rates": {
        "full": {"kernel": {"kind": "dot-product"},
                 "distribution": {"kind": "dirichlet", "alpha": [1.0, 1.0, 1.0],
                                  "drop_last": True},
                 "d": 2, "n_grid": [250, 500, 1000, 2000], "replicates": 20,
                 "fresh_points": 50, "rho_schedule": {"kind": "constant", "constant": 1.0},
                 "oracle": "latent", "n_ref": 5000},
        "ci": {"kernel": {"kind": "dot-product"},
               "distribution": {"kind": "dirichlet", "alpha": [1.0, 1.0, 1.0],
                                "drop_last": True},
               "d": 2, "n_grid": [250, 500, 1000, 2000], "replicates": 5,
               "fresh_points": 50, "rho_schedule": {"kind": "constant", "constant": 1.0},
               "oracle": "latent", "n_ref": 2000},
    },
    "bounds": {
        "full": {"kernel": {"kind": "gaussian", "sigma": 1.0},
                 "distribution": {"kind": "uniform-box", "lo": [0.0, 0.0], "hi": [1.0, 1.0]},
                 "n": 1000, "rho": 1.0, "eta": 0.05, "trials": 100},
        "ci": {"kernel": {"kind": "gaussian", "sigma": 1.0},
               "distribution": {"kind": "uniform-box", "lo": [0.0, 0.0], "hi": [1.0, 1.0]},
               "n": 300, "rho": 1.0, "eta": 0.05, "trials": 20},
    },
}

_POSITIVE_INT = ("n", "n_train", "d", "replicates", "fresh_points", "trials", "n_ref",
                 "n_donors", "n_charities", "n_groups")
_POSITIVE_FLOAT = ("sigma_scale", "group_radius", "donor_sd", "charity_sd", "eta")


def _merge(base, override):
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict) and key != "kernel":
            out[key] = _merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


@dataclass
class ExperimentConfig:
    """One experiment run: name, master seed, scale preset and settings.

    ``settings`` holds the experiment-specific fields (kernel and
    distribution as plain tables, sizes, grids, trial counts). Missing
    fields are filled from the preset for ``scale``.
    """

    experiment: str
    seed: int = 0
    scale: str = "full"
    settings: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigurationError("unknown experiment %r; choose from %s"
                                     % (self.experiment, ", ".join(EXPERIMENTS)))
        presets = DEFAULTS[self.experiment]
        if self.scale not in SCALES:
            raise ConfigurationError("scale must be one of %s" % (SCALES,))
        base = presets.get(self.scale, presets["full"])
        self.settings = _merge(base, self.settings or {})
        self.seed = int(self.seed)
        if not 0 <= self.seed < 2 ** 32:
            raise ConfigurationError("seed must be an unsigned 32-bit integer")

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "experiment" not in d:
            raise ConfigurationError("config needs an 'experiment' field")
        settings = dict(d.pop("settings", {}))
        experiment = d.pop("experiment")
        seed = d.pop("seed", 0)
        scale = d.pop("scale", "full")
        settings.update(d)
        return cls(experiment, seed, scale, settings)

    def to_dict(self):
        return {"experiment": self.experiment, "seed": self.seed, "scale": self.scale,
                "settings": copy.deepcopy(self.settings)}

    @property
    def kernel(self):
        return KernelSpec.from_dict(self.settings["kernel"])

    @property
    def distribution(self):
        return LatentDistribution.from_dict(self.settings["distribution"])

    def validate(self):
        """Check numeric ranges and referenced paths; return ``self``."""
        s = self.settings
        for key in _POSITIVE_INT:
            if key in s and (int(s[key]) != s[key] or s[key] < 1):
                raise ConfigurationError("%s must be a positive integer, got %r" % (key, s[key]))
        for key in _POSITIVE_FLOAT:
            if key in s and not s[key] > 0:
                raise ConfigurationError("%s must be positive, got %r" % (key, s[key]))
        if "rho" in s and not 0 < s["rho"] <= 1:
            raise ConfigurationError("rho must lie in (0, 1]")
        try:
            if "kernel" in s:
                self.kernel
            if "distribution" in s:
                self.distribution
        except (TypeError, KeyError, ValueError) as exc:
            raise ConfigurationError("invalid kernel or distribution: %s" % exc) from exc
        name = self.experiment
        if name == "mixture":
            if not 0 < s["n_train"] < s["n"]:
                raise ConfigurationError("n_train must lie strictly between 0 and n")
            if max(s["d_grid"]) > s["n_train"] or min(s["d_grid"]) < 1:
                raise ConfigurationError("d_grid entries must lie in [1, n_train]")
        elif name == "abalone":
            if not os.path.isfile(s["dataset"]):
                raise ConfigurationError("abalone dataset not found at %r" % s["dataset"])
            if any(not s["d"] <= m < ABALONE_TRAIN for m in s["m_grid"]):
                raise ConfigurationError("every m must satisfy d <= m < %d" % ABALONE_TRAIN)
        elif name == "bipartite":
            if not 0 < s["charity_rho"] <= 1:
                raise ConfigurationError("charity_rho must lie in (0, 1]")
        elif name == "bounds":
            if not 0 < s["eta"] < 0.5:
                raise ConfigurationError("eta must lie in (0, 1/2)")
        return self

    def comment(self):
        """The ``config=...`` line embedded at the top of every CSV artifact."""
        return "config=" + json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))


def load_config(path):
    """Read a TOML or JSON experiment config.

    JSON files may be a bare config or a run summary with a ``config``
    field; CSV artifacts are accepted too and read from their comment line.
    """
    return ExperimentConfig.from_dict(load_config_dict(path))


def load_config_dict(path):
    """The raw table behind :func:`load_config`, before presets are applied."""
    path = os.fspath(path)
    if not os.path.isfile(path):
        raise ConfigurationError("config file not found: %s" % path)
    with open(path, "rb") as fh:
        raw = fh.read()
    try:
        if path.endswith(".toml"):
            data = toml_loads(raw.decode())
        elif path.endswith(".csv"):
            first = raw.decode().splitlines()[0]
            if not first.startswith("# config="):
                raise ConfigurationError("%s has no embedded config line" % path)
            data = json.loads(first[len("# config="):])
        else:
            data = json.loads(raw.decode())
    except ConfigurationError:
        raise
    except Exception as exc:
        raise ConfigurationError("cannot parse config %s: %s" % (path, exc)) from exc
    if "config" in data and "experiment" not in data:
        data = data["config"]
    return data


def _finish(config, out_dir, report, tables):
    """Write each ``(name, header, rows)`` table and ``summary.json``."""
    if out_dir is None:
        return report
    comment = config.comment()
    for name, header, rows in tables:
        write_table_csv(os.path.join(out_dir, name), header, rows, comment)
    write_json(os.path.join(out_dir, "summary.json"),
               {"config": config.to_dict(), "results": report,
                "files": sorted(t[0] for t in tables)})
    return report


def _split(n, n_train, seed):
    perm = stream(seed, 4).permutation(n)
    return np.sort(perm[:n_train]), np.sort(perm[n_train:])


def run_mixture_experiment(config, out_dir=None):
    """Classification after in-sample versus out-of-sample embedding.

    Samples ``n`` points from the two-component mixture, labels them by
    quadrant and builds the kernel graph. For each ``d`` in ``d_grid`` a
    least-squares classifier is trained on ``n_train`` random vertices:
    once on the embedding of the whole graph and once on the embedding of
    the training subgraph, with the test vertices embedded out of sample.
    Both are scored on the remaining vertices.
    """
    config = config.validate()
    s = config.settings
    spec, dist = config.kernel, config.distribution
    n, n_train, rho = int(s["n"]), int(s["n_train"]), float(s["rho"])
    d_grid = sorted(int(d) for d in s["d_grid"])
    d_max = d_grid[-1]

    X = sample_latent(dist, n, derive_seed(config.seed, 0))
    y = quadrant_labels(X)
    A = sample_graph(spec, X, rho, derive_seed(config.seed, 1))
    train, test = _split(n, n_train, config.seed)

    full = ase(A, d_max, n_head=max(d_max, 3))
    sub = ase(A.subgraph(train), d_max)
    B = A.block(train, test)
    rows = []
    for d in d_grid:
        clf = fit_linear(full.Z[train, :d], y[train])
        ins = misclassification_rate(predict(clf, full.Z[test, :d]), y[test])
        clf = fit_linear(sub.Z[:, :d], y[train])
        out = misclassification_rate(predict(clf, oos_embed_batch(sub.Z[:, :d], B)), y[test])
        rows.append((d, ins, out))

    gaps = np.array([r[2] - r[1] for r in rows])
    elbow = select_dimension(full.spectrum_head)
    near = min(rows, key=lambda r: (abs(r[0] - elbow), r[0]))
    report = {"max_gap": float(gaps.max()), "max_gap_d": int(rows[int(gaps.argmax())][0]),
              "mean_gap": float(gaps.mean()), "elbow_d": elbow,
              "insample_err_at_elbow": near[1], "oos_err_at_elbow": near[2],
              "n_edges": A.n_edges}
    return _finish(config, out_dir, report,
                   [("results.csv", ["d", "insample_err", "oos_err"], rows)])


@dataclass
class DatasetBundle:
    features: np.ndarray
    labels: np.ndarray
    train: np.ndarray
    test: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        n = self.features.shape[0]
        idx = np.concatenate([self.train, self.test])
        if idx.size != n or np.unique(idx).size != n:
            raise ValueError("train and test indices must partition the rows")


def abalone_class(rings):
    """1 for at most eight rings, 2 for nine or ten, 3 otherwise."""
    rings = np.asarray(rings)
    return np.where(rings <= 8, 1, np.where(rings <= 10, 2, 3))


def load_abalone(path):
    """Read the UCI abalone file (sex, seven measurements, rings).

    Raises
    ------
    IngestionError
        A row that does not have nine fields with numeric measurements and
        an integer ring count; the message carries the line number.
    ProvenanceError
        The file does not contain exactly 4177 observations.
    """
    path = os.fspath(path)
    with open(path, "rb") as fh:
        raw = fh.read()
    features, rings = [], []
    for lineno, line in enumerate(raw.decode("utf-8", "replace").splitlines(), start=1):
        if not line.strip():
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 9:
            raise IngestionError("%s:%d: expected 9 fields, got %d" % (path, lineno, len(parts)))
        if parts[0] not in ("M", "F", "I"):
            raise IngestionError("%s:%d: unknown sex code %r" % (path, lineno, parts[0]))
        try:
            values = [float(p) for p in parts[1:8]]
            ring = int(parts[8])
        except ValueError as exc:
            raise IngestionError("%s:%d: %s" % (path, lineno, exc)) from exc
        if not all(math.isfinite(v) for v in values):
            raise IngestionError("%s:%d: non-finite measurement" % (path, lineno))
        features.append(values)
        rings.append(ring)
    if len(features) != ABALONE_ROWS:
        raise ProvenanceError("%s has %d observations; the canonical file has %d"
                              % (path, len(features), ABALONE_ROWS))
    labels = abalone_class(rings)
    provenance = {"source": os.path.abspath(path), "sha256": hashlib.sha256(raw).hexdigest(),
                  "rows": ABALONE_ROWS, "train": ABALONE_TRAIN,
                  "test": ABALONE_ROWS - ABALONE_TRAIN}
    return DatasetBundle(np.array(features), labels, np.arange(ABALONE_TRAIN),
                         np.arange(ABALONE_TRAIN, ABALONE_ROWS), provenance)


def run_abalone_experiment(config, out_dir=None):
    """In-sample and out-of-sample multi-class error on the abalone data.

    In sample, all vertices are embedded and a one-vs-rest classifier is
    trained on the training rows. For each ``m`` in ``m_grid``, ``m``
    random training vertices are embedded, the other vertices are embedded
    out of sample, and the classifier is trained on the out-of-sample
    training rows. All errors are measured on the test rows.
    """
    config = config.validate()
    s = config.settings
    bundle = load_abalone(s["dataset"])
    X = bundle.features
    if s.get("standardize"):
        X = (X - X.mean(axis=0)) / X.std(axis=0)
    spec, d, rho = config.kernel, int(s["d"]), float(s.get("rho", 1.0))
    y, train, test = bundle.labels, bundle.train, bundle.test
    A = sample_graph(spec, X, rho, derive_seed(config.seed, 1))
    kw = {"loss": s["loss"], "reg": s["reg"]}

    Z = ase(A, d).Z
    clf = fit_one_vs_rest(Z[train], y[train], **kw)
    insample = misclassification_rate(clf.predict(Z[test]), y[test])

    rows = []
    n = X.shape[0]
    for j, m in enumerate(int(m) for m in s["m_grid"]):
        S = np.sort(stream(config.seed, 5, j).choice(train, size=m, replace=False))
        mask = np.ones(n, dtype=bool)
        mask[S] = False
        rest = np.flatnonzero(mask)
        Zs = ase(A.subgraph(S), d).Z
        T = oos_embed_batch(Zs, A.block(S, rest))
        pos = np.searchsorted(rest, train[mask[train]])
        clf = fit_one_vs_rest(T[pos], y[rest[pos]], **kw)
        rows.append((m, misclassification_rate(clf.predict(T[np.searchsorted(rest, test)]),
                                               y[test])))
    report = {"insample_error": insample, "oos_error": {str(m): e for m, e in rows},
              "dataset": bundle.provenance, "standardized": bool(s.get("standardize"))}
    return _finish(config, out_dir, report,
                   [("results.csv", ["m", "oos_error", "insample_error"],
                     [(m, e, insample) for m, e in rows])])


def _group_centers(k, radius):
    angles = 2 * np.pi * np.arange(k) / k
    return radius * np.column_stack([np.cos(angles), np.sin(angles)])


def run_bipartite_experiment(config, out_dir=None):
    """Cluster out-of-sample embedded charities and test the clustering.

    Donors sit around ``n_groups`` planted centres and form the graph
    ``A_dd(i, j) ~ Bern(exp(-|x_i - x_j|^2))``. Each charity belongs to one
    group; it is placed near that group's centre and connects to donors
    through the same kernel scaled by ``charity_rho``. Only the donor
    graph is embedded. The charities are embedded out of sample from their
    donor connection columns, clustered with a BIC-selected Gaussian
    mixture, and the clustering is compared to the planted groups with an
    ARI permutation test. With ``null_control`` the charity labels are
    replaced by labels drawn independently of everything else.
    """
    config = config.validate()
    s = config.settings
    spec = config.kernel
    k = int(s["n_groups"])
    centers = _group_centers(k, float(s["group_radius"]))
    rng = stream(config.seed, 6)
    donor_group = rng.integers(k, size=int(s["n_donors"]))
    donors = centers[donor_group] + float(s["donor_sd"]) * rng.standard_normal(
        (donor_group.size, 2))
    charity_group = rng.integers(k, size=int(s["n_charities"]))
    charities = centers[charity_group] + float(s["charity_sd"]) * rng.standard_normal(
        (charity_group.size, 2))

    A = sample_graph(spec, donors, 1.0, derive_seed(config.seed, 1))
    emb = ase(A, int(s["d"]))
    B = sample_oos_connections_batch(charities, donors, spec, float(s["charity_rho"]),
                                     derive_seed(config.seed, 2))
    T = oos_embed_batch(emb, B)
    gmm = fit_gmm(T, s["K_range"], derive_seed(config.seed, 7))
    truth = charity_group
    if s["null_control"]:
        truth = stream(config.seed, 8).integers(k, size=truth.size)
    perm = permutation_test_ari(truth, gmm.assignments, int(s["trials"]),
                                derive_seed(config.seed, 9))
    report = dict(perm.to_dict(), K_hat=gmm.K, bic_by_K={str(K): v for K, v in
                                                         gmm.bic_by_K.items()},
                  n_isolated_charities=int(np.sum(B.sum(axis=0) == 0)),
                  null_control=bool(s["null_control"]))
    return _finish(config, out_dir, report, [
        ("null.csv", ["trial", "null_ari"], list(enumerate(perm.null))),
        ("charities.csv", ["charity", "planted_group", "cluster", "truth_used"],
         list(zip(range(truth.size), charity_group, gmm.assignments, truth))),
    ])


def permutation_calibration(clusters, n_labels, repetitions, trials, seed, level=0.05):
    """Permutation p-values for independent random labelings of fixed clusters.

    Returns the array of p-values and the fraction at or below ``level``.
    Under this null the fraction should be close to ``level``.
    """
    clusters = np.asarray(clusters)
    p = np.empty(repetitions)
    for r in range(repetitions):
        truth = stream(seed, 10, r).integers(n_labels, size=clusters.size)
        p[r] = permutation_test_ari(truth, clusters, trials, derive_seed(seed, 11, r)).p_value
    return p, float(np.mean(p <= level))


def run_rates(config, out_dir=None):
    """In-sample and out-of-sample error curves with fitted slopes."""
    config = config.validate()
    s = config.settings
    oracle = s["oracle"]
    if oracle == "empirical":
        oracle = None
    elif oracle != "latent":
        raise ConfigurationError("oracle must be 'latent' or 'empirical'")
    ins, oos = error_curves(config.kernel, config.distribution, int(s["d"]), s["n_grid"],
                            int(s["replicates"]), s["rho_schedule"], config.seed,
                            oracle=oracle, fresh_points=int(s["fresh_points"]),
                            n_ref=int(s["n_ref"]))
    report = {}
    for name, curve in (("insample", ins), ("oos", oos)):
        try:
            slope, se = rate_exponent(curve)
        except ValueError:
            slope = se = None
        report[name] = {"n": curve.n.tolist(), "mean_error": curve.mean_error.tolist(),
                        "slope": slope, "slope_stderr": se}
    report["skipped"] = ins.skipped
    header = ["n", "mean_error", "sd_error", "replicates"]
    return _finish(config, out_dir, report, [("insample.csv", header, ins.to_rows()),
                                             ("oos.csv", header, oos.to_rows())])


def run_bounds(config, out_dir=None):
    """Monte Carlo check of the concentration bound, one row per trial."""
    config = config.validate()
    s = config.settings
    seeds = [derive_seed(config.seed, t) for t in range(int(s["trials"]))]
    rep = check_concentration(config.kernel, config.distribution, int(s["n"]), float(s["rho"]),
                              float(s["eta"]), seeds)
    rows = [(t, sd, o, rep.bound, bool(o <= rep.bound))
            for t, (sd, o) in enumerate(zip(seeds, rep.observed))]
    return _finish(config, out_dir, rep.summary(), [
        ("bounds.csv", ["trial", "seed", "observed", "bound", "satisfied"], rows)])


RUNNERS = {
    "mixture": run_mixture_experiment,
    "abalone": run_abalone_experiment,
    "bipartite": run_bipartite_experiment,
    "rates": run_rates,
    "bounds": run_bounds,
}


def run_experiment(config, out_dir=None):
    """Dispatch on ``config.experiment``."""
    return RUNNERS[config.experiment](config, out_dir)
