"""Matvec counts over block sizes and window lengths on a clustered chain.

Desk-scale stand-in for the block-size/window sweeps on large chains with
many eigenvalues near 1. Writes sweep.csv with the same columns as the
``blockpower sweep`` command.

    python scripts/window_sweep.py --m 3 --cluster-size 10 --eps 1e-4
"""
import argparse
from pathlib import Path

from blockpower.chains import clustered
from blockpower.solver import SolverConfig, solve


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--m", type=int, default=3)
    ap.add_argument("--cluster-size", type=int, default=10)
    ap.add_argument("--eps", type=float, default=1e-4)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--block-sizes", default="1,2,3,4,6,8")
    ap.add_argument("--windows", default="1,4,8")
    ap.add_argument("--check-every", type=int, default=100)
    ap.add_argument("--out", type=Path, default=Path("results/window_sweep"))
    args = ap.parse_args()

    A = clustered(args.m, args.cluster_size, args.eps, args.seed)
    rows = ["block_size,window,converged,iterations,matvecs,final_residual"]
    for s in map(int, args.block_sizes.split(",")):
        for t in map(int, args.windows.split(",")):
            rep = solve(A, SolverConfig(block_size=s, window_length=t,
                                        check_interval=args.check_every, seed=args.seed))
            rows.append(f"{s},{t},{int(rep.converged)},{rep.total_iterations},"
                        f"{rep.total_matvecs},{rep.final_residual:.16e}")
            print(rows[-1])
    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / "sweep.csv").write_text("\n".join(rows) + "\n")


if __name__ == "__main__":
    main()
