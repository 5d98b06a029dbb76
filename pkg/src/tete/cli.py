"""Command-line interface.

Exit codes: 0 success, 2 usage or validation error, 3 I/O error,
4 numerical divergence.
"""

import argparse
import json
import logging
import sys
import time
from dataclasses import replace

from tete import io
from tete.core import DivergenceError, EmbedConfig, optimize
from tete.evaluation import (
    nn_error,
    resolve_methods,
    run_cv,
    run_noise_sweep,
    satisfaction,
    triplet_error,
)
from tete.sampler import knn, sample_triplets, weight_triplets
from tete.ste import ste_optimize

log = logging.getLogger("tete")

EXIT_USAGE = 2
EXIT_IO = 3
EXIT_DIVERGED = 4

# Step size for triplet-embedding comparisons. The STE baseline has an
# unbounded gradient and diverges at the weighted-reduction default of 1.0.
COMPARISON_LEARNING_RATE = 0.01

METHOD_T_PRIME = {"ste": 1.0, "tste": 2.0}


class UsageError(ValueError):
    pass


def _csv_floats(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _csv_names(text):
    return [x.strip() for x in text.split(",") if x.strip()]


def _add_embed_flags(p, t=2.0, t_prime=2.0, eta=1.0):
    p.add_argument("--t", type=float, default=t, help=f"capping temperature (default {t})")
    p.add_argument("--t-prime", type=float, default=t_prime,
                   help=f"tail temperature (default {t_prime})")
    p.add_argument("--dim", type=int, default=2, help="embedding dimension (default 2)")
    p.add_argument("--eta", type=float, default=eta, help=f"learning rate (default {eta})")
    p.add_argument("--iters", type=int, default=1000, help="gradient steps (default 1000)")
    p.add_argument("--init-scale", type=float, default=1e-3,
                   help="variance of the Gaussian initialization (default 1e-3)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1,
                   help="worker threads for objective sweeps; 1 is bit-reproducible")


def _embed_config(args, **overrides):
    fields = dict(
        t=args.t, t_prime=args.t_prime, dim=args.dim, learning_rate=args.eta,
        iterations=args.iters, seed=args.seed, init_scale=args.init_scale,
        threads=args.threads,
    )
    fields.update(overrides)
    return EmbedConfig(**fields)


def _echo(args):
    out = {k: v for k, v in vars(args).items() if k != "func"}
    out["command"] = args.command
    return out


def _check_seed(seed):
    if seed < 0:
        raise UsageError("--seed must be non-negative")


def _sample_weighted(ds, m, gamma, seed):
    if not 1 <= m < ds.n:
        raise UsageError(f"--m must satisfy 1 <= m < n (m={m}, n={ds.n})")
    if gamma < 0:
        raise UsageError("--gamma must be non-negative")
    neighbors = knn(ds, max(m, 10))
    ts = sample_triplets(ds, m, seed, neighbors=neighbors)
    return weight_triplets(ds, ts, gamma, nn_for_sigma=10, neighbors=neighbors)


def _write_embedding_outputs(prefix, y, trace, echo):
    io.save_embedding(f"{prefix}.embedding.csv", y, echo)
    io.save_trace(f"{prefix}.trace.csv", trace, echo)


def cmd_sample(args):
    _check_seed(args.seed)
    ds = io.load_data(args.data, labeled=args.labeled)
    wts = _sample_weighted(ds, args.m, args.gamma, args.seed)
    io.save_triplets(args.out, wts, _echo(args))
    log.info("wrote %d weighted triplets to %s", len(wts), args.out)


def cmd_embed(args):
    _check_seed(args.seed)
    method = args.method
    if method in METHOD_T_PRIME:
        forced = METHOD_T_PRIME[method]
        if args.t_prime is not None and args.t_prime != forced:
            raise UsageError(f"method {method} fixes --t-prime to {forced:g}")
        if args.t is not None and args.t != 1.0:
            raise UsageError(f"method {method} has no capping; --t must be 1 if given")
        args.t, args.t_prime = 1.0, forced
        if args.eta is None:
            args.eta = COMPARISON_LEARNING_RATE
    else:
        args.t = 2.0 if args.t is None else args.t
        args.t_prime = 2.0 if args.t_prime is None else args.t_prime
        if args.eta is None:
            args.eta = 1.0
    cfg = _embed_config(args)
    wts = io.load_weighted_triplets(args.triplets)
    if method == "tete":
        y, trace = optimize(wts, cfg)
    else:
        y, trace = ste_optimize(wts, cfg)
    _write_embedding_outputs(args.out, y, trace, _echo(args))
    sat = satisfaction(y, wts.base) if len(wts) else 1.0
    print(f"final_objective={trace[-1]:.17g}")
    print(f"satisfaction={sat:.17g}")


def cmd_reduce(args):
    _check_seed(args.seed)
    ds = io.load_data(args.data, labeled=args.labeled)
    if args.dim > ds.data.shape[1]:
        log.warning("embedding dimension %d exceeds data dimension %d",
                    args.dim, ds.data.shape[1])
    cfg = _embed_config(args)
    wts = _sample_weighted(ds, args.m, args.gamma, args.seed)
    y, trace = optimize(wts, cfg)
    _write_embedding_outputs(args.out, y, trace, _echo(args))
    print(f"final_objective={trace[-1]:.17g}")
    print(f"satisfaction={satisfaction(y, wts.base):.17g}")


def cmd_eval(args):
    y = io.load_embedding(args.embedding)
    result = {"mode": args.mode}
    if args.mode == "triplets":
        if args.triplets is None:
            raise UsageError("--mode triplets needs --triplets")
        ts = io.load_triplets(args.triplets)
        if ts.num_objects > len(y):
            raise UsageError(f"triplets reference {ts.num_objects} objects, "
                             f"embedding has {len(y)}")
        result["triplet_error"] = triplet_error(y, ts)
    else:
        if args.data is None or not args.labeled:
            raise UsageError("--mode nn needs a labeled data file (--data FILE --labeled)")
        ds = io.load_data(args.data, labeled=True)
        if ds.n != len(y):
            raise UsageError(f"data has {ds.n} rows, embedding has {len(y)}")
        result["nn_error"] = nn_error(y, ds.labels)
    result["config"] = _echo(args)
    print(json.dumps(result, sort_keys=True))


def _reports_document(args, reports):
    records = []
    for r in reports:
        rec = r.to_dict()
        # timings vary run to run; they go to the log so the file stays reproducible
        log.info("%s noise=%s wall_time=%.3fs", r.method, r.noise_level, rec.pop("wall_time"))
        records.append(rec)
    return {"config": _echo(args), "reports": records}


def _write_json(path, doc):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_noise_sweep(args):
    _check_seed(args.seed)
    resolve_methods(args.methods)
    ds = io.load_data(args.data, labeled=args.labeled)
    cfg = _embed_config(args)
    reports = run_noise_sweep(ds, args.methods, args.levels, cfg, args.seed,
                              per_point=args.per_point, nn_pool=args.nn_pool)
    _write_json(args.out, _reports_document(args, reports))


def cmd_cv(args):
    _check_seed(args.seed)
    resolve_methods(args.methods)
    ts = io.load_triplets(args.triplets)
    labels = None
    if args.data is not None:
        labels = io.load_data(args.data, labeled=True).labels
    cfg = _embed_config(args)
    reports = run_cv(ts, args.methods, args.folds, cfg, args.seed, labels=labels)
    _write_json(args.out, _reports_document(args, reports))


def build_parser():
    parser = argparse.ArgumentParser(
        prog="tete", description="t-Exponential Triplet Embedding")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="sample weighted triplets from a data file")
    p.add_argument("--data", required=True)
    p.add_argument("--labeled", action="store_true", help="last data column is a label")
    p.add_argument("--m", type=int, default=20, help="nearest neighbours per point (default 20)")
    p.add_argument("--gamma", type=float, default=0.01, help="weight bias (default 0.01)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("embed", help="embed a triplet file")
    p.add_argument("--triplets", required=True)
    p.add_argument("--method", choices=["tete", "ste", "tste"], default="tete")
    _add_embed_flags(p)
    # None marks "not given" so method-specific defaults and checks can apply
    p.set_defaults(t=None, t_prime=None, eta=None)
    p.add_argument("--out", required=True, help="output prefix")
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("reduce", help="weighted t-ETE dimensionality reduction")
    p.add_argument("--data", required=True)
    p.add_argument("--labeled", action="store_true")
    p.add_argument("--m", type=int, default=20)
    p.add_argument("--gamma", type=float, default=0.01)
    _add_embed_flags(p)
    p.add_argument("--out", required=True, help="output prefix")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("eval", help="score an embedding")
    p.add_argument("--embedding", required=True)
    p.add_argument("--mode", choices=["triplets", "nn"], required=True)
    p.add_argument("--triplets")
    p.add_argument("--data")
    p.add_argument("--labeled", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("noise-sweep", help="robustness to reversed triplets")
    p.add_argument("--data", required=True)
    p.add_argument("--labeled", action="store_true")
    p.add_argument("--levels", type=_csv_floats, default=[0.0, 0.05, 0.1, 0.15, 0.2])
    p.add_argument("--methods", type=_csv_names, default=["tete", "ste", "tste"])
    p.add_argument("--per-point", type=int, default=30)
    p.add_argument("--nn-pool", type=int, default=20)
    _add_embed_flags(p, t=1.7, t_prime=1.7, eta=COMPARISON_LEARNING_RATE)
    p.add_argument("--out", required=True, help="metrics JSON file")
    p.set_defaults(func=cmd_noise_sweep)

    p = sub.add_parser("cv", help="cross-validated triplet generalization error")
    p.add_argument("--triplets", required=True)
    p.add_argument("--data", help="labeled data file, adds nearest-neighbour error")
    p.add_argument("--methods", type=_csv_names, default=["tete", "ste", "tste"])
    p.add_argument("--folds", type=int, default=10)
    _add_embed_flags(p, eta=COMPARISON_LEARNING_RATE)
    p.add_argument("--out", required=True, help="metrics JSON file")
    p.set_defaults(func=cmd_cv)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )
    start = time.perf_counter()
    try:
        args.func(args)
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    log.info("%s finished in %.2fs", args.command, time.perf_counter() - start)
    return 0


if __name__ == "__main__":
    sys.exit(main())
