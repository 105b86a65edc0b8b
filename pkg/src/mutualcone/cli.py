"""Command-line front end: ``mutualcone {synth,train,classify,eval,angles}``.

Exit codes: 0 success, 2 usage or configuration, 3 data/contract
violation, 4 numerical failure.  On failure a single JSON line
``{"error": <class>, "exit_code": <n>, "message": ...}`` goes to stderr.
Every file is written atomically.
"""

import argparse
import json
import os
import sys
import time
from dataclasses import asdict, fields, replace

import numpy as np

from . import __version__
from . import classify, cone, persistence, subspace
from .classify import METHODS, Hyperparameters
from .cone import AlsConfig
from .data import atomic_write, format_float, generate_synthetic, load_csv, read_spec, save_csv
from .errors import ConfigurationError, ContractError, MutualConeError, NumericalError

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 0, 2, 3, 4


class UsageError(Exception):
    pass


def _emit_error(kind, code, message):
    print(json.dumps({"error": kind, "exit_code": code, "message": message}), file=sys.stderr)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        _emit_error("UsageError", EXIT_USAGE, message)
        raise SystemExit(EXIT_USAGE)


def _write_json(path, obj):
    atomic_write(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _default_log(output):
    return os.fspath(output) + ".log.json"


def _als(args):
    return AlsConfig(max_iterations=args.max_iters, tolerance=args.tol,
                     restarts=args.restarts, seed=args.seed)


def _hyperparameters(args):
    return Hyperparameters(class_rank=args.class_rank, query_rank=args.query_rank,
                           ndim=args.ndim, epsilon=args.epsilon,
                           nmf_restarts=args.nmf_restarts,
                           nmf_max_iterations=args.nmf_max_iters,
                           nmf_tolerance=args.nmf_tol)


def _effective(args):
    out = {}
    for k, v in vars(args).items():
        if k == "func":
            continue
        out[k] = list(v) if isinstance(v, tuple) else v
    return out


def _read_grid(path):
    try:
        with open(path, encoding="utf-8") as fh:
            grid = json.load(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read grid {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: grid is not valid JSON: {exc}") from exc
    known = {f.name for f in fields(Hyperparameters)}
    cells = classify.expand_grid(grid) if isinstance(grid, (dict, list)) else None
    if not cells:
        raise ConfigurationError(f"{path}: grid must be a non-empty mapping of lists or list of cells")
    for cell in cells:
        bad = set(cell) - known
        if bad:
            raise ConfigurationError(f"{path}: unknown hyperparameters {sorted(bad)}")
    return grid


def _check_method_args(method, hp):
    if method in ("cmcm", "cmsm") and hp.ndim is None:
        raise UsageError(f"--ndim is required for {method}")


def _fit(method, train_sets, hp, args, als):
    """Train, optionally after cross-validated selection; returns (model, cv or None)."""
    cv = None
    if args.grid:
        grid = _read_grid(args.grid)
        cv = classify.cross_validate(method, train_sets, grid, folds=args.folds,
                                     seed=args.seed, base=hp, als=als)
        hp = cv.best
    _check_method_args(method, hp)
    return classify.train(method, train_sets, hp, seed=args.seed, als=als), cv


def _cv_report(cv):
    if cv is None:
        return None
    return {"cells": list(cv.cells), "mean_errors": list(cv.mean_errors),
            "fold_errors": [list(e) for e in cv.fold_errors], "best_cell": cv.best_cell}


# --- commands ----------------------------------------------------------------

def cmd_synth(args):
    spec = read_spec(args.spec)
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    dataset = generate_synthetic(spec)
    save_csv(dataset, args.output)
    manifest = args.manifest or os.fspath(args.output) + ".manifest.json"
    _write_json(manifest, dict(dataset.manifest, version=__version__, sets=len(dataset)))
    print(f"wrote {len(dataset)} sets of dimension {dataset.dimension} to {args.output}")
    return EXIT_OK


def cmd_train(args):
    t0 = time.perf_counter()
    dataset = load_csv(args.data)
    labeled = [s for s in dataset if s.class_label is not None]
    if not labeled:
        raise ContractError(f"{args.data}: no labeled sets to train on")
    t_load = time.perf_counter()
    hp, als = _hyperparameters(args), _als(args)
    if not args.grid:
        _check_method_args(args.method, hp)
    model, cv = _fit(args.method, labeled, hp, args, als)
    t_train = time.perf_counter()
    persistence.save_model(model, args.output)
    log = {
        "command": "train", "version": __version__, "effective_config": _effective(args),
        "hyperparameters": asdict(model.hyperparameters), "als": asdict(als),
        "cross_validation": _cv_report(cv), "diagnostics": model.diagnostics,
        "timings_seconds": {"load": t_load - t0, "train": t_train - t_load},
    }
    _write_json(args.log or _default_log(args.output), log)
    print(f"trained {model.method} on {len(labeled)} sets, {len(model.class_labels)} classes "
          f"-> {args.output}")
    return EXIT_OK


def _predictions_csv(model, ids, preds):
    head = ["set_id", "predicted_label"] + [f"score_{c}" for c in model.class_labels]
    rows = [",".join(head)]
    for sid, p in zip(ids, preds):
        rows.append(",".join([sid, p.label] + [format_float(s) for s in p.scores]))
    return "\n".join(rows) + "\n"


def cmd_classify(args):
    t0 = time.perf_counter()
    model = persistence.load_model(args.model)
    dataset = load_csv(args.queries)
    als = replace(model.als, seed=args.seed) if args.seed is not None else model.als
    preds = [classify.predict(model, s, args.query_rank, als) for s in dataset]
    elapsed = time.perf_counter() - t0
    ids = [s.set_id for s in dataset]
    atomic_write(args.output, _predictions_csv(model, ids, preds))
    labeled = [(s.class_label, p.label) for s, p in zip(dataset, preds) if s.class_label is not None]
    wrong = sum(t != p for t, p in labeled)
    low = [sid for sid, p in zip(ids, preds) if p.low_confidence]
    log = {
        "command": "classify", "version": __version__, "effective_config": _effective(args),
        "als": asdict(als), "query_rank": args.query_rank or model.hyperparameters.query_rank,
        "low_confidence": low, "timings_seconds": {"classify": elapsed},
        "error_rate": (wrong / len(labeled)) if labeled else None,
    }
    _write_json(args.log or _default_log(args.output), log)
    line = f"classified {len(preds)} sets -> {args.output}"
    if labeled:
        line += f"; error rate {100.0 * wrong / len(labeled):.2f}% ({wrong}/{len(labeled)})"
    print(line)
    for sid in low:
        print(f"warning: low-confidence prediction for {sid}", file=sys.stderr)
    return EXIT_OK


def split_sets(dataset, test_fraction, seed):
    """Seeded stratified split: each class keeps at least one set on each side."""
    rng = np.random.default_rng(seed)
    train_sets, test_sets = [], []
    for label, sets in dataset.by_class().items():
        if label is None:
            continue
        if len(sets) < 2:
            raise ConfigurationError(f"class {label!r} has one set; cannot split into train and test")
        n_test = min(max(1, int(round(test_fraction * len(sets)))), len(sets) - 1)
        perm = rng.permutation(len(sets))
        test_sets += [sets[i] for i in sorted(perm[:n_test])]
        train_sets += [sets[i] for i in sorted(perm[n_test:])]
    return train_sets, test_sets


def _format_table(methods, table, trials):
    head = ["method"] + [f"trial{t + 1}" for t in range(trials)] + ["mean"]
    body = [[m.upper()] + [f"{100 * e:.2f}" for e in table[m]] + [f"{100 * np.mean(table[m]):.2f}"]
            for m in methods]
    widths = [max(len(r[i]) for r in [head] + body) for i in range(len(head))]
    lines = ["error rate (%)"] + ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in [head] + body]
    return "\n".join(lines) + "\n"


def cmd_eval(args):
    if args.trials < 1:
        raise UsageError("--trials must be >= 1")
    if not 0.0 < args.test_fraction < 1.0:
        raise UsageError("--test-fraction must lie in (0, 1)")
    dataset = load_csv(args.data)
    fixed_test = load_csv(args.test) if args.test else None
    methods = list(dict.fromkeys(args.method))
    hp = _hyperparameters(args)
    if not args.grid:
        for m in methods:
            _check_method_args(m, hp)
    table = {m: [] for m in methods}
    trial_log = []
    for t in range(args.trials):
        seed = args.seed + t
        if fixed_test is None:
            train_sets, test_sets = split_sets(dataset, args.test_fraction, seed)
        else:
            train_sets = [s for s in dataset if s.class_label is not None]
            test_sets = [s for s in fixed_test if s.class_label is not None]
        entry = {"trial": t + 1, "seed": seed, "train": [s.set_id for s in train_sets],
                 "test": [s.set_id for s in test_sets], "methods": {}}
        trial_args = argparse.Namespace(**dict(vars(args), seed=seed))
        for m in methods:
            t0 = time.perf_counter()
            model, cv = _fit(m, train_sets, hp, trial_args, replace(_als(args), seed=seed))
            ev = classify.evaluate(model, test_sets)
            table[m].append(ev.error_rate)
            entry["methods"][m] = {"error_rate": ev.error_rate, "confusion": ev.confusion.tolist(),
                                   "hyperparameters": asdict(model.hyperparameters),
                                   "cross_validation": _cv_report(cv),
                                   "diagnostics": model.diagnostics,
                                   "seconds": time.perf_counter() - t0}
        trial_log.append(entry)
    text = _format_table(methods, table, args.trials)
    rows = ["method," + ",".join(f"trial{t + 1}" for t in range(args.trials)) + ",mean"]
    for m in methods:
        rows.append(",".join([m] + [format_float(e) for e in table[m]] + [format_float(np.mean(table[m]))]))
    atomic_write(args.output + ".csv", "\n".join(rows) + "\n")
    atomic_write(args.output + ".txt", text)
    _write_json(args.log or _default_log(args.output),
                {"command": "eval", "version": __version__, "effective_config": _effective(args),
                 "trials": trial_log})
    sys.stdout.write(text)
    return EXIT_OK


def _is_model_file(path):
    try:
        with open(path, encoding="utf-8", errors="replace") as fh:
            return fh.readline().startswith(persistence.MAGIC + " ")
    except OSError as exc:
        raise ContractError(f"cannot read {path}: {exc.strerror}") from exc


def _parse_ref(text):
    path, sep, name = text.rpartition(":")
    if not sep or not path or not name:
        raise UsageError(f"reference {text!r} must look like MODEL:CLASS or DATA:SET_ID")
    if _is_model_file(path):
        model = persistence.load_model(path)
        if name not in model.class_labels:
            raise ContractError(f"{path}: no class {name!r}; classes are {list(model.class_labels)}")
        return ("model", model, name)
    dataset = load_csv(path)
    match = [s for s in dataset if s.set_id == name]
    if not match:
        raise ContractError(f"{path}: no set with id {name!r}")
    return ("data", match[0], name)


def _resolve_refs(refs, args, als):
    models = [r[1] for r in refs if r[0] == "model"]
    if len({m.method for m in models}) > 1:
        raise ContractError("both model references must use the same method")
    anchor = models[0] if models else None
    method = anchor.method if anchor else args.method
    if anchor is None and method in ("cmcm", "cmsm"):
        raise UsageError(f"{method} comparisons need at least one MODEL:CLASS reference")
    out = []
    for kind, obj, name in refs:
        if kind == "model":
            out.append(obj.references[obj.class_labels.index(name)])
            continue
        if anchor is not None:
            out.append(classify.query_reference(anchor, obj, args.query_rank, als))
            continue
        vectors = classify.normalize_columns(obj.vectors)
        if method in classify.CONE_METHODS:
            c, _ = classify._fit_cone(vectors, args.query_rank or 1, _hyperparameters(args),
                                      args.seed, f"set {name!r}")
            out.append(c)
        else:
            out.append(classify._fit_subspace(vectors, args.query_rank or 1, f"set {name!r}"))
    return method, out


def cmd_angles(args):
    als = _als(args)
    refs = [_parse_ref(args.first), _parse_ref(args.second)]
    method, (a, b) = _resolve_refs(refs, args, als)
    if a.ambient_dim != b.ambient_dim:
        raise ContractError(f"dimension mismatch: {a.ambient_dim} vs {b.ambient_dim}")
    if method in classify.CONE_METHODS:
        spec = cone.angles_between(a, b, als)
        sim = cone.similarity(spec)
        flagged = spec.degenerate
    else:
        spec = subspace.canonical_angles(a, b)
        sim = subspace.similarity(spec)
        flagged = False
    for i, th in enumerate(spec.angles, 1):
        print(f"theta_{i} = {th:.6f} rad ({np.degrees(th):.4f} deg)")
    if flagged:
        print("note: a deflated cone vanished; remaining angles set to pi/2")
    print(f"similarity {sim:.6f}")
    if args.output:
        _write_json(args.output, {"method": method, "angles": [format_float(t) for t in spec.angles],
                                  "similarity": format_float(sim), "degenerate": flagged,
                                  "effective_config": _effective(args)})
    if args.log:
        _write_json(args.log, {"command": "angles", "version": __version__,
                               "effective_config": _effective(args), "als": asdict(als)})
    return EXIT_OK


# --- parser ------------------------------------------------------------------

def _add_model_flags(p):
    d = Hyperparameters()
    p.add_argument("--class-rank", type=int, default=d.class_rank,
                   help="generators per class cone / class subspace dimension (default %(default)s)")
    p.add_argument("--query-rank", type=int, default=d.query_rank,
                   help="generators per query cone / query subspace dimension (default %(default)s)")
    p.add_argument("--ndim", type=int, default=None,
                   help="discriminant space (cmcm) or GDS (cmsm) dimension")
    p.add_argument("--epsilon", type=float, default=None,
                   help="within-class regularization (default trace(S_w)/d)")
    p.add_argument("--nmf-restarts", type=int, default=d.nmf_restarts)
    p.add_argument("--nmf-max-iters", type=int, default=d.nmf_max_iterations)
    p.add_argument("--nmf-tol", type=float, default=d.nmf_tolerance)


def _add_als_flags(p, seed_default=0):
    d = AlsConfig()
    p.add_argument("--seed", type=int, default=seed_default, help="master seed (default %(default)s)")
    p.add_argument("--restarts", type=int, default=d.restarts, help="ALS restarts per angle")
    p.add_argument("--tol", type=float, default=d.tolerance, help="ALS tolerance on ||y_new - y||")
    p.add_argument("--max-iters", type=int, default=d.max_iterations, help="ALS iteration cap")


def _add_cv_flags(p):
    p.add_argument("--grid", default=None,
                   help='JSON hyperparameter grid, e.g. {"class_rank": [1, 2], "ndim": [4, 8]}')
    p.add_argument("--folds", type=int, default=5, help="cross-validation folds (with --grid)")


def build_parser():
    parser = _Parser(prog="mutualcone", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="generate a synthetic dataset from a key=value spec file")
    p.add_argument("spec")
    p.add_argument("-o", "--output", required=True, help="dataset CSV to write")
    p.add_argument("--manifest", default=None, help="manifest JSON (default OUTPUT.manifest.json)")
    p.add_argument("--seed", type=int, default=None, help="override the seed in the spec file")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train a classifier and save the model")
    p.add_argument("data", help="labeled feature CSV")
    p.add_argument("--method", choices=METHODS, required=True)
    p.add_argument("-o", "--output", required=True, help="model file to write")
    p.add_argument("--log", default=None, help="run log JSON (default OUTPUT.log.json)")
    _add_model_flags(p)
    _add_als_flags(p)
    _add_cv_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("classify", help="classify query sets with a saved model")
    p.add_argument("model")
    p.add_argument("queries", help="feature CSV (labels optional)")
    p.add_argument("-o", "--output", required=True, help="predictions CSV to write")
    p.add_argument("--log", default=None, help="run log JSON (default OUTPUT.log.json)")
    p.add_argument("--query-rank", type=int, default=None, help="default: the model's query rank")
    p.add_argument("--seed", type=int, default=None, help="default: the model's ALS seed")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("eval", help="compare methods over seeded trials")
    p.add_argument("data", help="labeled feature CSV (split per trial unless --test is given)")
    p.add_argument("--method", choices=METHODS, nargs="+", required=True)
    p.add_argument("--test", default=None, help="fixed labeled test CSV")
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--test-fraction", type=float, default=0.5)
    p.add_argument("-o", "--output", required=True, help="report prefix: writes PREFIX.txt and PREFIX.csv")
    p.add_argument("--log", default=None, help="run log JSON (default PREFIX.log.json)")
    _add_model_flags(p)
    _add_als_flags(p)
    _add_cv_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("angles", help="angles and similarity between two cones or subspaces")
    p.add_argument("first", help="MODEL:CLASS or DATA:SET_ID")
    p.add_argument("second", help="MODEL:CLASS or DATA:SET_ID")
    p.add_argument("--method", choices=METHODS, default="mcm",
                   help="representation for DATA references when no model is given")
    p.add_argument("--query-rank", type=int, default=None,
                   help="rank for DATA references (default: the model's query rank, else 1)")
    p.add_argument("-o", "--output", default=None, help="optional JSON with full-precision values")
    p.add_argument("--log", default=None)
    _add_model_flags_angles(p)
    _add_als_flags(p)
    p.set_defaults(func=cmd_angles)
    return parser


def _add_model_flags_angles(p):
    d = Hyperparameters()
    p.add_argument("--nmf-restarts", type=int, default=d.nmf_restarts)
    p.add_argument("--nmf-max-iters", type=int, default=d.nmf_max_iterations)
    p.add_argument("--nmf-tol", type=float, default=d.nmf_tolerance)
    p.set_defaults(class_rank=1, ndim=None, epsilon=None)


def _exit_code(exc):
    if isinstance(exc, (UsageError, ConfigurationError)):
        return EXIT_USAGE
    if isinstance(exc, NumericalError):
        return EXIT_NUMERICAL
    return EXIT_DATA


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (MutualConeError, UsageError, OSError) as exc:
        code = _exit_code(exc)
        print(f"mutualcone {args.command}: {exc}", file=sys.stderr)
        _emit_error(type(exc).__name__, code, str(exc))
        return code


if __name__ == "__main__":
    sys.exit(main())
