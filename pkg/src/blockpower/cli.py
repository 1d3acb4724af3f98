"""Command-line front end: ``gen``, ``solve`` and ``sweep``.

Exit codes: 0 converged (or success), 2 ran to the iteration cap, 1 error.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import tempfile
import time
from pathlib import Path

from . import chains
from .errors import BlockPowerError
from .solver import Extraction, SolverConfig, Status, solve
from .sparse_core import check_strong_connectivity, load_matrix_market, write_matrix_market

EXIT_OK, EXIT_ERROR, EXIT_MAX_ITERATIONS = 0, 1, 2


class UsageError(Exception):
    pass


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _int_list(text: str) -> list[int]:
    items = [tok.strip() for tok in text.split(",") if tok.strip()]
    if not items:
        raise UsageError(f"empty list: {text!r}")
    try:
        values = [int(tok) for tok in items]
    except ValueError:
        raise UsageError(f"not a comma-separated integer list: {text!r}") from None
    if any(v < 1 for v in values):
        raise UsageError(f"list entries must be >= 1: {text!r}")
    return values


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--matrix", required=True, type=Path)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--check-every", type=int, default=100)
    p.add_argument("--max-iters", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--extraction", choices=["min-residual", "dominant-ritz"], default="min-residual")
    p.add_argument("--no-reorth", action="store_true")
    p.add_argument("--drop-tol", type=float, default=1e-10)
    p.add_argument("--out", type=Path, default=Path("."))


def _config(args, block_size: int, window: int) -> SolverConfig:
    if args.seed < 0:
        raise UsageError("--seed must be nonnegative")
    try:
        return SolverConfig(
            block_size=block_size,
            window_length=window,
            tol=args.tol,
            check_interval=args.check_every,
            max_iterations=args.max_iters,
            seed=args.seed,
            reorthonormalize_at_checkpoint=not args.no_reorth,
            extraction=Extraction(args.extraction.replace("-", "_")),
            drop_tol=args.drop_tol,
        )
    except ValueError as err:
        raise UsageError(str(err)) from None


def _load(path: Path):
    if not path.is_file():
        raise UsageError(f"matrix file not found: {path}")
    A = load_matrix_market(path)
    conn = check_strong_connectivity(A)
    if not conn.irreducible:
        print(f"warning: chain is reducible ({conn.n_components} strongly connected components)",
              file=sys.stderr)
    return A


def _manifest(args, argv, cfg_echo, extra) -> dict:
    return {
        "command": ["blockpower", *argv],
        "config": cfg_echo,
        "matrix": str(args.matrix),
        "matrix_sha256": _sha256(args.matrix),
        **extra,
    }


def cmd_solve(args, argv) -> int:
    cfg = _config(args, args.block_size, args.window)
    A = _load(args.matrix)
    if cfg.block_size > A.n:
        raise UsageError(f"--block-size {cfg.block_size} exceeds the number of states {A.n}")
    t0 = time.perf_counter()
    report = solve(A, cfg)
    wall_ms = (time.perf_counter() - t0) * 1e3

    out = args.out
    files = {"history": out / "history.csv", "manifest": out / "manifest.json"}
    _atomic_write(files["history"], report.history_csv())
    if report.distribution is not None:
        files["distribution"] = out / "distribution.csv"
        rows = ["state,probability"] + [f"{i},{p:.17g}" for i, p in enumerate(report.distribution)]
        _atomic_write(files["distribution"], "\n".join(rows) + "\n")
    manifest = _manifest(args, argv, _cfg_echo(cfg), {
        "status": report.status.value,
        "total_matvecs": report.total_matvecs,
        "total_iterations": report.total_iterations,
        "final_residual": report.final_residual,
        "wall_time_ms": round(wall_ms, 3),
        "outputs": {k: str(v) for k, v in sorted(files.items())},
    })
    _atomic_write(files["manifest"], json.dumps(manifest, indent=2) + "\n")
    print(f"{report.status.value}: {report.total_iterations} iterations, "
          f"{report.total_matvecs} matvecs, residual {report.final_residual:.3e}")
    return EXIT_OK if report.status is Status.CONVERGED else EXIT_MAX_ITERATIONS


def _cfg_echo(cfg: SolverConfig) -> dict:
    return {
        "block_size": cfg.block_size,
        "window_length": cfg.window_length,
        "tol": cfg.tol,
        "check_interval": cfg.check_interval,
        "max_iterations": cfg.max_iterations,
        "seed": cfg.seed,
        "reorthonormalize_at_checkpoint": cfg.reorthonormalize_at_checkpoint,
        "extraction": cfg.extraction.value,
        "drop_tol": cfg.drop_tol,
    }


def cmd_sweep(args, argv) -> int:
    sizes = _int_list(args.block_sizes)
    windows = _int_list(args.windows)
    configs = [_config(args, s, t) for s in sizes for t in windows]
    A = _load(args.matrix)
    if max(sizes) > A.n:
        raise UsageError(f"block size {max(sizes)} exceeds the number of states {A.n}")

    lines = ["block_size,window,converged,iterations,matvecs,final_residual"]
    cells = {}
    t0 = time.perf_counter()
    for cfg in configs:
        report = solve(A, cfg)
        s, t = cfg.block_size, cfg.window_length
        path = args.out / f"history_s{s}_t{t}.csv"
        _atomic_write(path, report.history_csv())
        cells[f"s{s}_t{t}"] = str(path)
        lines.append(f"{s},{t},{int(report.converged)},{report.total_iterations},"
                     f"{report.total_matvecs},{report.final_residual:.16e}")
        print(f"s={s} t={t}: {report.status.value}, {report.total_matvecs} matvecs")
    sweep_path = args.out / "sweep.csv"
    _atomic_write(sweep_path, "\n".join(lines) + "\n")
    echo = _cfg_echo(configs[0])
    echo.update(block_sizes=sizes, windows=windows)
    del echo["block_size"], echo["window_length"]
    manifest = _manifest(args, argv, echo, {
        "wall_time_ms": round((time.perf_counter() - t0) * 1e3, 3),
        "outputs": {"sweep": str(sweep_path), **cells},
    })
    _atomic_write(args.out / "manifest.json", json.dumps(manifest, indent=2) + "\n")
    return EXIT_OK


def cmd_gen(args, argv) -> int:
    spec = chains.ChainSpec(
        family=args.family, n=args.n, p=args.p, q=args.q, m=args.m,
        cluster_size=args.cluster_size, eps=args.eps, seed=args.seed,
    )
    A = chains.generate(spec)
    out = args.out
    out.parent.mkdir(parents=True, exist_ok=True)
    params = spec.params()
    write_matrix_market(A, out, comment=" ".join(f"{k}={v}" for k, v in params.items()))

    sidecar = [f"{k}={v}" for k, v in params.items()] + [f"n={A.n}", f"nnz={A.nnz}"]
    print(f"n={A.n} nnz={A.nnz}")
    if spec.reversible:
        pi = chains.stationary_oracle_dense(A)
        mags = chains.spectrum_oracle_reversible(A, pi)
        spectrum_path = out.with_name(out.name + ".spectrum.csv")
        rows = ["index,magnitude"] + [f"{i + 1},{m:.17g}" for i, m in enumerate(mags)]
        _atomic_write(spectrum_path, "\n".join(rows) + "\n")
        sidecar.append(f"spectrum={spectrum_path.name}")
        print("top eigenvalue magnitudes: " + " ".join(f"{m:.6f}" for m in mags[:5]))
    _atomic_write(out.with_name(out.name + ".params.txt"), "\n".join(sidecar) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="blockpower",
        description="Stationary distributions of Markov chains by (block) power iteration.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one configuration")
    _add_solver_flags(p)
    p.add_argument("--block-size", type=int, default=1)
    p.add_argument("--window", type=int, default=1)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="solve the cross product of block sizes and windows")
    _add_solver_flags(p)
    p.add_argument("--block-sizes", required=True)
    p.add_argument("--windows", default="1")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("gen", help="write a test chain as MatrixMarket")
    p.add_argument("--family", required=True, choices=[f.value for f in chains.Family])
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--p", type=float, default=0.25)
    p.add_argument("--q", type=float, default=0.25)
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--cluster-size", type=int, default=10)
    p.add_argument("--eps", type=float, default=1e-4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, type=Path)
    p.set_defaults(func=cmd_gen)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_ERROR
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args, argv)
    except (UsageError, BlockPowerError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
