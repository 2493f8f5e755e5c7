"""Command line front end: ``lpgoos <subcommand> ...``.

Exit codes: 0 success, 2 configuration or domain error, 3 ingestion
error, 4 numerical failure, 1 anything else raised by the library.
"""

import argparse
import datetime
import json
import os
import sys

import numpy as np

from .errors import ConfigurationError, IngestionError, LpgoosError
from ._random import derive_seed
from .experiments import EXPERIMENTS, SCALES, ExperimentConfig, load_config_dict, run_experiment
from .inference import fit_gmm, fit_linear, fit_one_vs_rest, misclassification_rate, \
    permutation_test_ari, predict
from .io import read_matrix_csv, toml_loads, write_json, write_matrix_csv, write_table_csv
from .kernels import KernelSpec
from .lpgraph import (LatentDistribution, LatentSample, read_edge_list, sample_graph,
                      sample_latent, write_edge_list)
from .oos import oos_embed_batch, save_oos_batch
from .spectral import ase, load_embedding, save_embedding, select_dimension


def _read_table(path):
    """TOML or JSON file as a dict."""
    if not os.path.isfile(path):
        raise ConfigurationError("config file not found: %s" % path)
    try:
        with open(path) as fh:
            text = fh.read()
        return toml_loads(text) if path.endswith(".toml") else json.loads(text)
    except (ValueError, OSError) as exc:
        raise ConfigurationError("cannot parse %s: %s" % (path, exc)) from exc


def _read_matrix(path):
    if not os.path.isfile(path):
        raise IngestionError("file not found: %s" % path)
    try:
        return read_matrix_csv(path)
    except ValueError as exc:
        raise IngestionError("%s: %s" % (path, exc)) from exc


def _read_labels(path):
    M = _read_matrix(path)
    if M.shape[1] != 1:
        raise IngestionError("%s: expected one label column" % path)
    labels = M[:, 0]
    if np.any(labels != np.round(labels)):
        raise IngestionError("%s: labels must be integers" % path)
    return labels.astype(np.int64)


def _timestamped(name):
    stamp = datetime.datetime.now().strftime("%Y%m%d-%H%M%S")
    return os.path.join("runs", "%s-%s" % (name, stamp))


def cmd_simulate(args):
    table = _read_table(args.config) if args.config else {}
    if "kernel" not in table or "distribution" not in table:
        raise ConfigurationError("simulate needs [kernel] and [distribution] tables")
    spec = KernelSpec.from_dict(table["kernel"])
    dist = LatentDistribution.from_dict(table["distribution"])
    n = int(args.n if args.n is not None else table.get("n", 0))
    rho = float(args.rho if args.rho is not None else table.get("rho", 1.0))
    seed = int(args.seed if args.seed is not None else table.get("seed", 0))
    if n < 1:
        raise ConfigurationError("n must be positive")
    X = sample_latent(dist, n, derive_seed(seed, 0))
    A = sample_graph(spec, X, rho, derive_seed(seed, 1))
    out = args.out or _timestamped("simulate")
    LatentSample(X, rho, None, seed).to_csv(os.path.join(out, "latent.csv"))
    write_edge_list(os.path.join(out, "edges.txt"), A)
    write_json(os.path.join(out, "summary.json"), {
        "kernel": spec.params(), "distribution": dist.to_dict(), "n": n, "rho": rho,
        "seed": seed, "n_edges": A.n_edges})
    print(out)


def cmd_embed(args):
    if not os.path.isfile(args.edges):
        raise IngestionError("file not found: %s" % args.edges)
    try:
        A = read_edge_list(args.edges)
    except ValueError as exc:
        raise IngestionError("%s: %s" % (args.edges, exc)) from exc
    d = args.d
    head = max(args.head, 3)
    if d is None:
        probe = ase(A, 1, n_head=min(head, A.n))
        d = select_dimension(probe.spectrum_head)
    emb = ase(A, d, n_head=min(head, A.n))
    save_embedding(emb, args.out, {"edges": os.path.abspath(args.edges)})
    print("embedded %d vertices into R^%d -> %s" % (emb.n, emb.d, args.out))


def cmd_oos(args):
    emb = load_embedding(args.embedding)
    B = _read_matrix(args.connections)
    if args.rows:
        B = B.T
    Y = oos_embed_batch(emb, B)
    save_oos_batch(args.out, Y, emb.n)
    print("embedded %d new vertices -> %s" % (Y.shape[0], args.out))


def cmd_classify(args):
    Z = _read_matrix(args.train)
    y = _read_labels(args.labels)
    if y.size != Z.shape[0]:
        raise IngestionError("labels and training embedding have different lengths")
    classes = np.unique(y)
    binary = classes.size == 2 and set(classes.tolist()) == {-1, 1}
    if binary:
        model = fit_linear(Z, y, args.loss, radius_bound=args.radius, reg=args.reg)
    else:
        model = fit_one_vs_rest(Z, y, args.loss, radius_bound=args.radius, reg=args.reg)
    summary = {"loss": args.loss, "model": model.to_dict()}
    if args.test:
        Zt = _read_matrix(args.test)
        pred = predict(model, Zt) if binary else model.predict(Zt)
        if args.out:
            write_table_csv(args.out, ["label"], [(int(p),) for p in pred])
        if args.test_labels:
            truth = _read_labels(args.test_labels)
            summary["test_error"] = misclassification_rate(pred, truth)
            print("test error %.4f" % summary["test_error"])
    if args.model:
        write_json(args.model, summary)


def cmd_cluster(args):
    Z = _read_matrix(args.embedding)
    gmm = fit_gmm(Z, range(args.kmin, args.kmax + 1), args.seed)
    out = args.out or _timestamped("cluster")
    write_table_csv(os.path.join(out, "clusters.csv"), ["cluster"],
                    [(int(c),) for c in gmm.assignments])
    summary = {"gmm": gmm.to_dict(), "seed": args.seed}
    if args.truth:
        truth = _read_labels(args.truth)
        rep = permutation_test_ari(truth, gmm.assignments, args.trials, args.seed)
        summary["permutation"] = rep.to_dict()
        write_matrix_csv(os.path.join(out, "null.csv"), rep.null[:, None], ["null_ari"])
        print("K=%d ARI=%.4f p=%.4g" % (gmm.K, rep.observed_ari, rep.p_value))
    else:
        print("K=%d" % gmm.K)
    write_json(os.path.join(out, "summary.json"), summary)


def _experiment_config(name, args):
    d = dict(load_config_dict(args.config)) if args.config else {"experiment": name}
    d.setdefault("experiment", name)
    if name is not None and d["experiment"] != name:
        raise ConfigurationError("config is for %r, not %r" % (d["experiment"], name))
    d["settings"] = dict(d.get("settings", {}))
    # --scale picks the preset for every setting the file does not give explicitly
    if args.scale is not None:
        d["scale"] = args.scale
    if args.seed is not None:
        d["seed"] = args.seed
    for item in args.set or ():
        key, _, value = item.partition("=")
        try:
            d["settings"][key] = json.loads(value)
        except ValueError:
            d["settings"][key] = value
    return ExperimentConfig.from_dict(d)


def _run(name, args):
    config = _experiment_config(name, args)
    out = args.out or _timestamped(config.experiment)
    report = run_experiment(config, out)
    print(json.dumps({"out": out, "results": report}, indent=2, sort_keys=True, default=str))


def cmd_experiment(args):
    _run(args.name, args)


def _add_run_options(p):
    p.add_argument("--config", help="TOML or JSON config, or a previous summary.json")
    p.add_argument("--seed", type=int, help="override the master seed")
    p.add_argument("--out", help="output directory (default: runs/<name>-<timestamp>)")
    p.add_argument("--scale", choices=SCALES, help="size preset")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override one setting; VALUE is parsed as JSON when possible")


def build_parser():
    parser = argparse.ArgumentParser(prog="lpgoos", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="sample latent positions and a graph")
    p.add_argument("--config", help="TOML/JSON with [kernel], [distribution], n, rho, seed")
    p.add_argument("--n", type=int)
    p.add_argument("--rho", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("embed", help="adjacency spectral embedding of an edge list")
    p.add_argument("edges")
    p.add_argument("--d", type=int, help="dimension (default: scree elbow)")
    p.add_argument("--head", type=int, default=20, help="eigenvalues kept for the scree")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("oos", help="out-of-sample embed new vertices")
    p.add_argument("--embedding", required=True, help="CSV written by 'embed'")
    p.add_argument("--connections", required=True,
                   help="CSV, one column per new vertex (n rows)")
    p.add_argument("--rows", action="store_true", help="connections are stored one per row")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_oos)

    p = sub.add_parser("classify", help="fit a linear classifier on embeddings")
    p.add_argument("--train", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--test")
    p.add_argument("--test-labels")
    p.add_argument("--loss", choices=("squared", "hinge", "logistic"), default="squared")
    p.add_argument("--radius", type=float)
    p.add_argument("--reg", type=float, default=1e-4)
    p.add_argument("--out", help="predicted labels CSV")
    p.add_argument("--model", help="JSON file for the fitted model")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("cluster", help="Gaussian mixture clustering with optional ARI test")
    p.add_argument("--embedding", required=True)
    p.add_argument("--kmin", type=int, default=1)
    p.add_argument("--kmax", type=int, default=9)
    p.add_argument("--truth")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_cluster)

    for name in ("rates", "bounds"):
        p = sub.add_parser(name, help="run the %s harness" % name)
        _add_run_options(p)
        p.set_defaults(func=lambda a, _n=name: _run(_n, a))

    p = sub.add_parser("experiment", help="run a named experiment")
    p.add_argument("name", choices=EXPERIMENTS)
    _add_run_options(p)
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except LpgoosError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return exc.exit_code
    except (ValueError, TypeError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    except OSError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
