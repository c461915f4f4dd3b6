"""Command-line front end.

Verbs: gen, rank, svd, compare, triplets, rsl. Every tabular output embeds
its own effective configuration (a JSON comment line in csv/tsv, a "config"
key in json), excluding the output path, so a run can be replayed from its
artifact alone. All timing columns carry "seconds" in their name; strip
those and a rerun with the same flags is byte identical.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import bench
from .linops import (ConfigError, NumericalError, derive_seed,
                     gaussian_matrix, low_rank_synth, BENCH_MATRIX)
from .matrixio import read_csv_matrix, read_matrix, write_matrix

FORMATS = ("csv", "json", "tsv")


# ---------------------------------------------------------------------------
# rendering

def to_jsonable(obj):
    if isinstance(obj, dict):
        return {k: to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def _cell(v) -> str:
    if v is None:
        return "NA"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def render(payload: dict, fmt: str) -> str:
    """payload: command, params, columns, records, sections (optional)."""
    payload = to_jsonable(payload)
    config = {"command": payload["command"], "schema": bench.SCHEMA_VERSION,
              "params": payload["params"]}
    if fmt == "json":
        doc = {"config": config, "records": payload["records"]}
        doc.update(payload.get("sections", {}))
        return json.dumps(doc, indent=2) + "\n"
    sep = "," if fmt == "csv" else "\t"
    lines = ["# config: " + json.dumps(config, separators=(",", ":"))]
    for name, section in payload.get("sections", {}).items():
        lines.append(f"# {name}: " + json.dumps(section, separators=(",", ":")))
    cols = payload["columns"]
    lines.append(sep.join(cols))
    for rec in payload["records"]:
        lines.append(sep.join(_cell(rec.get(c)) for c in cols))
    return "\n".join(lines) + "\n"


def write_output(payload: dict, out, fmt: str) -> None:
    text = render(payload, fmt)
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def read_embedded_config(path) -> dict:
    """Recover the effective configuration from an output artifact."""
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        return json.loads(text)["config"]
    for line in text.splitlines():
        if line.startswith("# config: "):
            return json.loads(line[len("# config: "):])
    raise ConfigError(f"no embedded config found in {path}")


def argv_from_config(config: dict) -> list[str]:
    """Rebuild an argv that replays the run described by an embedded config."""
    argv = [config["command"]]
    for key, val in config["params"].items():
        flag = key.replace("_", "-")
        if val is None:
            continue
        if isinstance(val, bool):
            argv.append(f"--{flag}" if val else f"--no-{flag}")
        else:
            argv.extend([f"--{flag}", str(val)])
    return argv


# ---------------------------------------------------------------------------
# shared argument plumbing

def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--repeats", type=int, default=3,
                        help="timed repetitions after one discarded warm-up")
    parser.add_argument("--out", default=None, help="output path (default stdout)")
    parser.add_argument("--format", dest="fmt", choices=FORMATS, default="csv")
    parser.add_argument("--max-elems", type=float, default=1e8,
                        help="refuse matrices with more entries than this")


def _parse_sizes(text: str) -> list[tuple[int, int]]:
    return [bench.parse_size(tok) for tok in text.split(",") if tok]


def _split(text: str) -> list[str]:
    return [tok for tok in text.split(",") if tok]


def load_matrix(path) -> np.ndarray:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"input file not found: {p}")
    A = read_csv_matrix(p) if p.suffix.lower() == ".csv" else read_matrix(p)
    if not np.isfinite(A).all():
        raise NumericalError(f"input matrix {p} contains NaN or Inf entries")
    return A


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="krysvd",
        description="Matrix-free partial SVD toolkit and benchmark harness")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="write a synthetic test matrix")
    _common(g)
    g.add_argument("--size", required=True, help="MxN, e.g. 1000x1000")
    g.add_argument("--kind", choices=("lowrank", "gaussian"), default="lowrank")
    g.add_argument("--rank-true", type=int, default=100,
                   help="factor rank for --kind lowrank")
    g.add_argument("--mean", type=float, default=0.0)
    g.add_argument("--std", type=float, default=1.0)

    r = sub.add_parser("rank", help="estimate numerical rank")
    _common(r)
    r.add_argument("--sizes", default=None, help="comma list of MxN")
    r.add_argument("--rank-true", type=int, default=100)
    r.add_argument("--input", default=None, help="matrix file (.klrm or .csv)")
    r.add_argument("--eps", type=float, default=1e-8)
    r.add_argument("--mode", choices=("absolute", "relative"), default="absolute")
    r.add_argument("--with-oracle", action=argparse.BooleanOptionalAction,
                   default=True, help="also time a dense-SVD rank count")

    s = sub.add_parser("svd", help="run one factorization method on one matrix")
    _common(s)
    s.add_argument("--size", default=None, help="MxN for a synthetic matrix")
    s.add_argument("--input", default=None, help="matrix file (.klrm or .csv)")
    s.add_argument("--rank-true", type=int, default=None)
    s.add_argument("--method", choices=bench.METHODS, default="fsvd")
    s.add_argument("--r", type=int, required=True, help="triplets to extract")
    s.add_argument("--k", type=int, default=None,
                   help="iteration budget (default min(m,n))")
    s.add_argument("--power-iters", type=int, default=0)
    s.add_argument("--oversampling", type=int, default=None)

    c = sub.add_parser("compare", help="methods x sizes timing/accuracy table")
    _common(c)
    c.add_argument("--sizes", default="1000x1000")
    c.add_argument("--rank-true", type=int, default=100)
    c.add_argument("--r", type=int, default=20)
    c.add_argument("--methods", default=",".join(bench.METHODS))
    c.add_argument("--power-iters", type=int, default=0)
    c.add_argument("--oversampling", type=int, default=None)

    t = sub.add_parser("triplets", help="per-direction agreement with the dense oracle")
    _common(t)
    t.add_argument("--size", default="500x400")
    t.add_argument("--rank-true", type=int, default=50)
    t.add_argument("--r", type=int, default=20)
    t.add_argument("--methods", default=",".join(bench.METHODS))
    t.add_argument("--power-iters", type=int, default=0)
    t.add_argument("--oversampling", type=int, default=None)

    l = sub.add_parser("rsl", help="fixed-rank similarity training benchmark")
    _common(l)
    l.add_argument("--d1", type=int, default=64)
    l.add_argument("--d2", type=int, default=32)
    l.add_argument("--rank", type=int, default=5)
    l.add_argument("--r-true", type=int, default=5)
    l.add_argument("--backends", default="fsvd",
                   help="comma list of fsvd[:inner_k] | dense")
    l.add_argument("--modes", default="default",
                   help="comma list of default | literal")
    l.add_argument("--steps", type=int, default=500)
    l.add_argument("--eta", type=float, default=0.3)
    l.add_argument("--batch", type=int, default=32)
    l.add_argument("--lam", type=float, default=0.0)
    l.add_argument("--n-seeds", type=int, default=1)
    l.add_argument("--n-train", type=int, default=2000)
    l.add_argument("--n-test", type=int, default=1000)
    l.add_argument("--eval-every", type=int, default=100)
    return p


# ---------------------------------------------------------------------------
# verb handlers: each returns a payload for write_output, or None if it
# handled its own output (gen writes a binary file)

def _handle_gen(args) -> None:
    if args.out is None:
        raise ConfigError("gen writes a matrix file and requires --out")
    m, n = bench.parse_size(args.size)
    if m * n > args.max_elems:
        raise ConfigError(f"size {m}x{n} exceeds the element cap {args.max_elems:g}")
    if args.kind == "lowrank":
        A = low_rank_synth(m, n, args.rank_true,
                           seed=derive_seed(args.seed, BENCH_MATRIX, 0))
    else:
        A = gaussian_matrix(m, n, mean=args.mean, std=args.std,
                            seed=derive_seed(args.seed, BENCH_MATRIX, 0))
    write_matrix(args.out, A)
    print(f"wrote {args.out}: {m}x{n} kind={args.kind} seed={args.seed}")
    return None


def _handle_rank(args) -> dict:
    params = {"eps": args.eps, "mode": args.mode, "with_oracle": args.with_oracle,
              "seed": args.seed, "repeats": args.repeats,
              "max_elems": args.max_elems, "format": args.fmt}
    if args.input is not None:
        A = load_matrix(args.input)
        if A.size > args.max_elems:
            raise ConfigError(f"input exceeds the element cap {args.max_elems:g}")
        rows = [bench.rank_report_for_matrix(A, eps=args.eps, mode=args.mode,
                                             seed=args.seed, repeats=args.repeats,
                                             with_oracle=args.with_oracle)]
        params["input"] = str(args.input)
    else:
        if args.sizes is None:
            raise ConfigError("rank needs --sizes or --input")
        rows = bench.cmd_rank(_parse_sizes(args.sizes), args.rank_true,
                              eps=args.eps, mode=args.mode, repeats=args.repeats,
                              seed=args.seed, with_oracle=args.with_oracle,
                              max_elems=args.max_elems)
        params["sizes"] = args.sizes
        params["rank_true"] = args.rank_true
    cols = ["m", "n", "rank_true", "rank", "k_prime", "eps", "mode", "threshold",
            "seconds", "seconds_mean", "oracle_rank", "oracle_seconds", "seed"]
    return {"command": "rank", "params": params, "columns": cols, "records": rows}


def _handle_svd(args) -> dict:
    params = {"method": args.method, "r": args.r, "k": args.k,
              "rank_true": args.rank_true, "power_iters": args.power_iters,
              "oversampling": args.oversampling, "seed": args.seed,
              "repeats": args.repeats, "max_elems": args.max_elems,
              "format": args.fmt}
    if (args.size is None) == (args.input is None):
        raise ConfigError("svd needs exactly one of --size or --input")
    if args.input is not None:
        A = load_matrix(args.input)
        params["input"] = str(args.input)
    else:
        m, n = bench.parse_size(args.size)
        if m * n > args.max_elems:
            raise ConfigError(f"size {m}x{n} exceeds the element cap {args.max_elems:g}")
        rank_true = args.rank_true if args.rank_true is not None else min(100, min(m, n))
        A = low_rank_synth(m, n, rank_true, seed=derive_seed(args.seed, BENCH_MATRIX, 0))
        params["size"] = args.size
        params["rank_true"] = rank_true
    rows, summary = bench.cmd_svd(A, args.method, args.r, rank_true=params["rank_true"],
                                  k=args.k, repeats=args.repeats, seed=args.seed,
                                  power_iters=args.power_iters,
                                  oversampling=args.oversampling,
                                  max_elems=args.max_elems)
    return {"command": "svd", "params": params, "columns": ["index", "sigma"],
            "records": rows, "sections": {"summary": summary}}


def _handle_compare(args) -> dict:
    params = {"sizes": args.sizes, "rank_true": args.rank_true, "r": args.r,
              "methods": args.methods, "power_iters": args.power_iters,
              "oversampling": args.oversampling, "seed": args.seed,
              "repeats": args.repeats, "max_elems": args.max_elems,
              "format": args.fmt}
    records = bench.cmd_compare(_parse_sizes(args.sizes), args.rank_true, args.r,
                                _split(args.methods), repeats=args.repeats,
                                seed=args.seed, max_elems=args.max_elems,
                                power_iters=args.power_iters,
                                oversampling=args.oversampling)
    cols = [f.name for f in dataclasses.fields(bench.BenchRecord)]
    rows = [dataclasses.asdict(rec) for rec in records]
    return {"command": "compare", "params": params, "columns": cols, "records": rows}


def _handle_triplets(args) -> dict:
    params = {"size": args.size, "rank_true": args.rank_true, "r": args.r,
              "methods": args.methods, "power_iters": args.power_iters,
              "oversampling": args.oversampling, "seed": args.seed,
              "max_elems": args.max_elems, "format": args.fmt}
    m, n = bench.parse_size(args.size)
    if m * n > args.max_elems:
        raise ConfigError(f"size {m}x{n} exceeds the element cap {args.max_elems:g}")
    quals = bench.cmd_triplet_quality(m, n, args.rank_true, args.r,
                                      _split(args.methods), seed=args.seed,
                                      power_iters=args.power_iters,
                                      oversampling=args.oversampling)
    rows = []
    for tq in quals:
        for i in range(len(tq.q)):
            rows.append({"method": tq.method, "index": i + 1,
                         "q": float(tq.q[i]),
                         "sigma_oracle": float(tq.sigma_oracle[i]),
                         "sigma_method": float(tq.sigma_method[i])})
    cols = ["method", "index", "q", "sigma_oracle", "sigma_method"]
    return {"command": "triplets", "params": params, "columns": cols, "records": rows}


def _handle_rsl(args) -> dict:
    params = {"d1": args.d1, "d2": args.d2, "rank": args.rank,
              "r_true": args.r_true, "backends": args.backends,
              "modes": args.modes, "steps": args.steps, "eta": args.eta,
              "batch": args.batch, "lam": args.lam, "n_seeds": args.n_seeds,
              "n_train": args.n_train, "n_test": args.n_test,
              "eval_every": args.eval_every, "seed": args.seed,
              "format": args.fmt}
    out = bench.cmd_rsl(args.d1, args.d2, args.rank, _split(args.backends),
                        args.steps, args.eta, args.batch, seed=args.seed,
                        n_seeds=args.n_seeds, modes=_split(args.modes),
                        r_true=args.r_true, n_train=args.n_train,
                        n_test=args.n_test, eval_every=args.eval_every,
                        lam=args.lam)
    cols = ["backend", "mode", "seed_index", "step", "loss", "seconds",
            "sigma_min", "sigma_max", "padded"]
    return {"command": "rsl", "params": params, "columns": cols,
            "records": out["steps"],
            "sections": {"evals": out["evals"], "summary": out["summary"]}}


HANDLERS = {"gen": _handle_gen, "rank": _handle_rank, "svd": _handle_svd,
            "compare": _handle_compare, "triplets": _handle_triplets,
            "rsl": _handle_rsl}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad flags, 0 on --help
        return int(exc.code or 0)
    try:
        payload = HANDLERS[args.command](args)
        if payload is not None:
            write_output(payload, args.out, args.fmt)
        return 0
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
