"""Command-line interface.

Subcommands: build, evaluate, compare, advgen, stream, plot. Exit codes:
0 on success, 2 on input errors, 3 on numerical errors. Every JSON report
carries the invocation, seed, library version and a determinism hash that
ignores ``runtime_ms`` fields.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
import time
from contextlib import nullcontext
from pathlib import Path

import numpy as np

from . import __version__
from .advgen import audit, generate
from .baselines import herd_from_path, herding_path, random_sample
from .coreset import build, build_streaming, halving_levels, target_for_epsilon, uniform
from .errors import InputError, KDECoresetError, NumericalError
from .evaluation import ReferenceEvaluator
from .formats import dumps, read_points, write_csv, write_json
from .kernels import Dataset, Domain, KernelSpec
from .lattice import build_lattice, sample_queries

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3


# -- reports -----------------------------------------------------------------


def _strip_runtime(obj):
    if isinstance(obj, dict):
        return {k: _strip_runtime(v) for k, v in obj.items() if k != "runtime_ms" and k != "determinism_hash"}
    if isinstance(obj, list):
        return [_strip_runtime(v) for v in obj]
    return obj


def report_hash(report: dict) -> str:
    """SHA-256 of the canonical report JSON without runtime fields."""
    canon = json.loads(dumps(report))
    return hashlib.sha256(dumps(_strip_runtime(canon)).encode()).hexdigest()


def finalize_report(report: dict, argv: list[str], seed, started: float) -> dict:
    report = {**report, "invocation": list(argv), "seed": seed, "version": __version__}
    report["runtime_ms"] = round((time.perf_counter() - started) * 1e3, 3)
    report["determinism_hash"] = report_hash(report)
    return report


# -- argument helpers --------------------------------------------------------


def read_config(path) -> dict[str, str]:
    """``key = value`` lines, ``#`` comments, UTF-8."""
    out = {}
    p = Path(path)
    if not p.is_file():
        raise InputError(f"config file not found: {p}")
    for lineno, raw in enumerate(p.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"{p}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def parse_int_list(text: str) -> list[int]:
    """``"32,64"`` or ``"0..9"`` (inclusive) or a mix of both."""
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if ".." in part:
            lo, hi = part.split("..", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    if not out:
        raise InputError(f"empty integer list {text!r}")
    return out


def load_dataset(args) -> Dataset:
    pts, ids = read_points(args.input, args.format, args.id_column)
    return Dataset(pts, Domain.for_columns(args.domain, pts.shape[1]), ids)


def make_kernel(args, dataset: Dataset) -> KernelSpec:
    return KernelSpec(args.kernel, float(args.alpha), dataset.domain)


def make_queries(mode: str, kernel: KernelSpec, dataset: Dataset, seed: int, delta: float):
    if mode == "lattice":
        return build_lattice(kernel, dataset, delta)
    if mode.startswith("sampled"):
        _, _, count = mode.partition(":")
        return sample_queries(kernel, dataset, int(count) if count else 10 * dataset.n, seed)
    raise InputError(f"unknown query mode {mode!r}; use lattice or sampled:COUNT")


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# -- commands ----------------------------------------------------------------


def cmd_build(args, argv, started):
    ds = load_dataset(args)
    kernel = make_kernel(args, ds)
    if args.epsilon is not None:
        target = min(ds.n, target_for_epsilon(float(args.epsilon), ds.domain.d))
    elif args.target_size is not None:
        target = int(args.target_size)
    else:
        raise InputError("one of --target-size or --epsilon is required")
    core = build(kernel, ds, target, int(args.seed))
    out = _out_dir(args)
    core.write(out / "coreset.csv")
    report = {"command": "build", "target_size": target, "coreset": core.provenance(),
              "kernel": _kernel_dict(kernel)}
    report = finalize_report(report, argv, int(args.seed), started)
    write_json(out / "report.json", report)
    print(f"built coreset of {core.size} points (depth {core.halving_depth}) -> {out / 'coreset.csv'}")


def _read_coreset(path, domain_kind: str):
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], [r for r in rows[1:] if r]
    if not header or header[0] != "id":
        raise InputError(f"{path} is not a coreset CSV")
    table = np.array([[float(c) for c in r] for r in body])
    has_w = header[-1] == "weight"
    pts = table[:, 1:-1] if has_w else table[:, 1:]
    ds = Dataset(pts, Domain.for_columns(domain_kind, pts.shape[1]), table[:, 0].astype(np.int64))
    if not has_w:
        return uniform(ds, "halving")
    from .coreset import Coreset

    w = table[:, -1]
    return Coreset(ds, w / w.sum(), "halving")


def cmd_evaluate(args, argv, started):
    ds = load_dataset(args)
    kernel = make_kernel(args, ds)
    core = _read_coreset(args.coreset, args.domain)
    queries = make_queries(args.queries, kernel, ds, int(args.seed), float(args.delta))
    rep = ReferenceEvaluator(kernel, ds, queries).report(core)
    report = {"command": "evaluate", "error": rep.to_dict(), "queries": queries.describe(),
              "kernel": _kernel_dict(kernel)}
    report = finalize_report(report, argv, int(args.seed), started)
    out = _out_dir(args)
    write_json(out / "report.json", report)
    tag = "lower bound" if rep.lower_bound else "certified up to slack"
    print(f"linf={rep.linf_error:.6g} ({tag}) kernel_distance={rep.kernel_distance:.6g}")


def compare_rows(kernel, ds, sizes, seeds, methods, queries):
    """(method, size, seed, linf, kernel_distance, coreset_size) rows."""
    ev = ReferenceEvaluator(kernel, ds, queries)
    rows = []
    path = herding_path(kernel, ds, max(sizes)) if "herding" in methods else None
    for seed in seeds:
        chain = None
        if "halving" in methods:
            chain = [s.kept for s in halving_levels(kernel, ds, seed, min(sizes))]
        for size in sizes:
            for method in methods:
                if method == "halving":
                    kept = next((k for k in [ds] + chain if k.n <= size), chain[-1] if chain else ds)
                    core = uniform(kept, "halving", seed=seed)
                elif method == "random":
                    core = random_sample(ds, size, seed)
                elif method == "herding":
                    core = herd_from_path(ds, path, size, seed)
                else:
                    raise InputError(f"unknown method {method!r}")
                r = ev.report(core)
                rows.append((method, size, seed, r.linf_error, r.kernel_distance, core.size))
    return rows


def cmd_compare(args, argv, started):
    ds = load_dataset(args)
    kernel = make_kernel(args, ds)
    sizes = parse_int_list(args.sizes)
    seeds = parse_int_list(args.seeds)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    if max(sizes) > ds.n or min(sizes) < 1:
        raise InputError(f"sizes must lie in [1, {ds.n}]")
    queries = make_queries(args.queries, kernel, ds, int(args.query_seed), float(args.delta))
    rows = compare_rows(kernel, ds, sizes, seeds, methods, queries)
    out = _out_dir(args)
    with (out / "curves.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["method", "size", "seed", "linf", "kernel_distance", "coreset_size"])
        for r in rows:
            w.writerow([r[0], r[1], r[2], repr(r[3]), repr(r[4]), r[5]])
    report = {"command": "compare", "rows": len(rows), "queries": queries.describe(),
              "kernel": _kernel_dict(kernel), "methods": methods, "sizes": sizes, "seeds": seeds}
    report = finalize_report(report, argv, seeds, started)
    write_json(out / "report.json", report)
    print(f"wrote {len(rows)} rows -> {out / 'curves.csv'}")


def cmd_advgen(args, argv, started):
    d = int(args.dim)
    kernel = KernelSpec(args.kernel, float(args.alpha), Domain.euclidean(d))
    inst = generate(kernel, d, float(args.epsilon), None if args.separation is None else float(args.separation))
    seed = int(args.seed)
    budget = 10 * float(args.epsilon) ** 2
    target = max(1, math.floor(math.sqrt(d) / (2 * float(args.epsilon)) + 1e-9))
    core = build(inst.kernel, inst.dataset, min(target, inst.n), seed)
    results = [("halving", audit(inst.kernel, inst, core))]
    rng = np.random.default_rng(seed)
    for t in range(int(args.half_subsets)):
        pick = np.concatenate([rng.choice(g, size=d // 2, replace=False) for g in inst.groups])
        results.append((f"half_subset_{t}", audit(inst.kernel, inst, uniform(inst.dataset.select(np.sort(pick)), "random"))))
    lines = []
    ok = True
    for name, rep in results:
        passed = rep.applicable and rep.max_error >= inst.floor - budget
        ok &= passed
        lines.append({"candidate": name, "passed": passed, **rep.to_dict()})
    out = _out_dir(args)
    write_csv(out / "instance.csv", inst.dataset.points, inst.dataset.ids)
    write_json(out / "instance.csv.json", inst.describe())
    report = {"command": "advgen", "instance": {k: v for k, v in inst.describe().items() if k != "groups"},
              "coreset_size": core.size, "audits": lines, "passed": bool(ok)}
    report = finalize_report(report, argv, seed, started)
    write_json(out / "report.json", report)
    verdict = "PASS" if ok else "FAIL"
    worst = min(line["max_error"] for line in lines)
    print(f"{verdict} floor={inst.floor:.6g} min_audited_error={worst:.6g} candidates={len(lines)}")
    return EXIT_OK


def cmd_stream(args, argv, started):
    ds = load_dataset(args)
    kernel = make_kernel(args, ds)
    stream = ds
    if args.shuffle:
        stream = ds.take(np.random.default_rng(int(args.seed)).permutation(ds.n))
    core = build_streaming(kernel, stream, int(args.block_size), int(args.target_size), int(args.seed))
    out = _out_dir(args)
    core.write(out / "coreset.csv")
    report = {"command": "stream", "coreset": core.provenance(), "kernel": _kernel_dict(kernel)}
    report = finalize_report(report, argv, int(args.seed), started)
    write_json(out / "report.json", report)
    print(f"streamed {ds.n} points into {core.size} ({core.info['merge_events']} merge events)")


def cmd_plot(args, argv, started):
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        raise InputError("plotting needs matplotlib (pip install 'artifact[plot]')") from None
    data: dict[str, dict[int, list[float]]] = {}
    with Path(args.curves).open(newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            data.setdefault(row["method"], {}).setdefault(int(row["size"]), []).append(float(row["linf"]))
    fig, ax = plt.subplots(figsize=(5, 4))
    for method, by_size in sorted(data.items()):
        sizes = sorted(by_size)
        ax.loglog(sizes, [np.median(by_size[s]) for s in sizes], marker="o", label=method)
    ax.set_xlabel("coreset size")
    ax.set_ylabel("median L-inf KDE error")
    ax.legend()
    fig.tight_layout()
    fig.savefig(args.out)
    print(f"wrote {args.out}")


def _kernel_dict(kernel: KernelSpec) -> dict:
    return {"family": kernel.family, "alpha": kernel.alpha, "domain": kernel.domain.kind,
            "d": kernel.domain.d, "lipschitz": kernel.lipschitz, "holder": kernel.holder}


# -- parser ------------------------------------------------------------------


def _data_flags(p):
    p.add_argument("--input", required=True)
    p.add_argument("--format", default="csv", choices=["csv", "jsonl"])
    p.add_argument("--domain", default="euclidean", choices=["euclidean", "simplex", "sphere"])
    p.add_argument("--id-column", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--kernel", default="gaussian",
                   choices=["gaussian", "laplacian", "exponential", "js", "jensen_shannon", "hellinger", "sinc"])
    p.add_argument("--alpha", type=float, default=1.0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kdecoreset", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="file of key = value defaults; flags override it")
        p.add_argument("--threads", type=int, default=None, help="cap on BLAS worker threads")
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("build", help="build a halving coreset")
    _data_flags(p)
    common(p)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--target-size", type=int)
    g.add_argument("--epsilon", type=float)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("evaluate", help="error report for a dataset and a coreset")
    _data_flags(p)
    common(p)
    p.add_argument("--coreset", required=True)
    p.add_argument("--queries", default="sampled")
    p.add_argument("--delta", type=float, default=1e-4)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("compare", help="error-vs-size curves for several methods")
    _data_flags(p)
    common(p)
    p.add_argument("--sizes", required=True)
    p.add_argument("--seeds", default="0")
    p.add_argument("--methods", default="halving,random,herding")
    p.add_argument("--queries", default="sampled")
    p.add_argument("--query-seed", type=int, default=0)
    p.add_argument("--delta", type=float, default=1e-4)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("advgen", help="lower-bound instance and its audit")
    common(p)
    p.add_argument("--kernel", default="gaussian", choices=["gaussian", "laplacian", "sinc"])
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--separation", type=float, default=None)
    p.add_argument("--half-subsets", type=int, default=20)
    p.add_argument("--out", default="advgen_out")
    p.set_defaults(func=cmd_advgen)

    p = sub.add_parser("stream", help="merge-reduce coreset of a point stream")
    _data_flags(p)
    common(p)
    p.add_argument("--block-size", type=int, required=True)
    p.add_argument("--target-size", type=int, required=True)
    p.add_argument("--shuffle", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_stream)

    p = sub.add_parser("plot", help="plot a curves CSV from compare")
    common(p)
    p.add_argument("--curves", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plot)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> None:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("command", nargs="?")
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config or not known.command:
        return
    values = read_config(known.config)
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    target = sub.choices.get(known.command)
    if target is None:
        return
    dests = {a.dest: a for a in target._actions}
    unknown = sorted(set(values) - set(dests))
    if unknown:
        raise InputError(f"unknown config keys: {', '.join(unknown)}")
    for key, raw in values.items():
        action = dests[key]
        if isinstance(action, (argparse._StoreTrueAction, argparse.BooleanOptionalAction)):
            val = raw.lower() in ("1", "true", "yes", "on")
        else:
            val = action.type(raw) if action.type else raw
        # config supplies defaults, which also satisfies required flags
        action.default = val
        action.required = False


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    started = time.perf_counter()
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
        limiter = nullcontext()
        if args.threads:
            from threadpoolctl import threadpool_limits

            limiter = threadpool_limits(limits=int(args.threads))
        with limiter:
            args.func(args, argv, started)
    except NumericalError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (KDECoresetError, OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
