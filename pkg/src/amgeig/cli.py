"""Command-line front end for the convergence experiments."""
from __future__ import annotations

import argparse
import logging
import sys

from .experiment import ExperimentConfig, run_experiment
from .fem import ProblemSpec


def parse_sweep_list(text: str) -> list[int]:
    """``"1,2,5"``, ``"1-6"`` or ``"1..6"``, or a mix separated by commas."""
    values = []
    for part in text.split(","):
        part = part.strip()
        sep = ".." if ".." in part else "-" if "-" in part else None
        if sep:
            lo, hi = part.split(sep)
            values.extend(range(int(lo), int(hi) + 1))
        elif part:
            values.append(int(part))
    if not values:
        raise argparse.ArgumentTypeError(f"empty sweep list {text!r}")
    return sorted(set(values))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="amgeig",
        description="AMG multilevel-correction eigensolver: algebraic error vs. a direct solve.",
    )
    p.add_argument("--problem", choices=["laplace", "coulomb"], default="laplace")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--structured", type=int, metavar="N", help="uniform N x N mesh (default 32)")
    src.add_argument("--mesh", metavar="PATH", help="mesh file (nv nt / x y b / i j k)")
    p.add_argument("--q", type=int, default=13, help="number of eigenpairs")
    p.add_argument("--theta", type=float, default=0.25, help="strength threshold")
    p.add_argument("--m", type=int, default=2, help="AMG iterations per correction")
    p.add_argument("--smooth", type=int, default=2, help="CG pre/post smoothing steps")
    p.add_argument("--P", type=parse_sweep_list, default=[1, 2, 3, 4, 5, 6], metavar="LIST",
                   help="correction sweeps per level, e.g. 1-6 or 1,2,4")
    p.add_argument("--n1", type=int, help="1-based starting level (default: one above the coarsest)")
    p.add_argument("--max-coarse", type=int, default=500, help="stop coarsening at this size")
    p.add_argument("--out", default="errors.csv", metavar="PATH")
    p.add_argument("--dump-hierarchy", metavar="DIR", help="write every level as Matrix Market")
    p.add_argument("--raw", action="store_true", help="also write unclamped errors")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.n1 is not None and args.n1 < 1:
            raise ValueError("--n1 is 1-based and must be at least 1")
        cfg = ExperimentConfig(
            problem=ProblemSpec(kind=args.problem),
            structured=None if args.mesh else (args.structured or 32),
            mesh_path=args.mesh,
            q=args.q,
            theta=args.theta,
            m=args.m,
            smooth=args.smooth,
            P=args.P,
            n1=None if args.n1 is None else args.n1 - 1,
            max_coarse_dim=args.max_coarse,
            out=args.out,
            dump_hierarchy=args.dump_hierarchy,
            raw=args.raw,
        )
        meta = run_experiment(cfg)
    except Exception as exc:  # one-line diagnostic, nonzero exit
        print(f"amgeig: error: {exc}", file=sys.stderr)
        return 1
    print(f"{meta['caption']}; wrote {cfg.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
