"""``mvdlib`` command line.

Exit codes: 0 success, 1 bad input or an invalid file under ``validate``,
2 when an algorithm's own output fails validation.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .bench import ALGOS, ValidationFailure, bench_ratio
from .core import (FLOAT_METRIC_TOL, RepairResult, as_instance, is_metric, is_ultrametric, l0_cost,
                   metric_violations, modified_pairs, ultrametric_violations)
from .corrclust import AgreementParams, agreement_cluster, cc_cost
from .instances import (gen_hypercube, gen_planted_cc, gen_random_metric_noise, gen_random_ultra_noise,
                        gen_star)
from .io import InstanceFormatError, format_instance, format_signed, parse_signed, read_parsed
from .lp_round import build_lp, hierarchical_cluster, solve_lp
from .simplex import LPError
from .oracle import exact_mvd, exact_umvd
from .pivot import InsufficientPivots, PivotSource, mvd_pivot, umvd_pivot
from .umvd_cc import umvd_constant


def _emit(text: str, out) -> None:
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _read_ints(path) -> list[int]:
    return [int(tok) for tok in Path(path).read_text().split()]


def cmd_validate(args) -> int:
    inst = read_parsed(args.file).instance
    viol = ultrametric_violations(inst) if args.mode == "ultra" else metric_violations(inst)
    print(f"mode {args.mode}")
    print(f"violations {len(viol)}")
    for t in viol[: args.show]:
        print(f"  ({t.i}, {t.j}, {t.k}) excess {t.edge}")
    return 0 if not viol else 1


def _repair(args, inst) -> RepairResult:
    algo = args.algo
    if algo in ("pivot-metric", "pivot-ultra"):
        src = PivotSource.explicit(_read_ints(args.pivots)) if args.pivots else PivotSource.seeded(args.seed)
        fn = mvd_pivot if algo == "pivot-metric" else umvd_pivot
        return fn(inst.distances, src, trace=bool(args.trace))
    if algo == "cc-ultra":
        return umvd_constant(inst, AgreementParams(args.eps))
    lp = build_lp(inst)
    sol = solve_lp(lp, solver=args.solver, force=args.force, command=args.solver_cmd)
    print(f"lp_objective {sol.objective:.12g}")
    return hierarchical_cluster(inst, sol, k0=args.k0)


def cmd_repair(args) -> int:
    inst = read_parsed(args.file).instance
    res = _repair(args, inst)
    ok = is_metric(res.output, tol=FLOAT_METRIC_TOL) if args.algo == "pivot-metric" else is_ultrametric(res.output)
    if not ok:
        raise ValidationFailure(f"{args.algo} output failed validation")
    cost = l0_cost(inst, res.output, args.eq_tol)
    print(f"algo {args.algo}")
    print(f"cost {cost:.12g}")
    print(f"modified {len(modified_pairs(inst.distances, res.output, args.eq_tol))}")
    if args.trace and res.trace is not None:
        Path(args.trace).write_text(res.trace.to_jsonl())
    if args.out:
        _emit(format_instance(as_instance(res.output)), args.out)
    return 0


def cmd_oracle(args) -> int:
    inst = read_parsed(args.file).instance
    fn = exact_umvd if args.mode == "ultra" else exact_mvd
    cost, y, S = fn(inst.distances, max_n=args.max_n, exact=args.exact, return_set=True)
    print(f"cost {cost}")
    print("S " + " ".join(f"{i}-{j}" for i, j in S))
    sys.stdout.write(format_instance(y))
    return 0


def cmd_gen(args) -> int:
    if args.kind == "planted-cc":
        sizes = [int(s) for s in args.sizes.split(",")]
        g, _ = gen_planted_cc(sizes, args.flip, args.seed)
        _emit(format_signed(g), args.out)
        return 0
    if args.kind == "star":
        x = gen_star(args.m)
    elif args.kind == "hypercube":
        x = gen_hypercube(args.d)
    elif args.kind == "random-ultra":
        x, _ = gen_random_ultra_noise(args.n, args.levels, args.flip, args.seed)
    else:
        x, _ = gen_random_metric_noise(args.n, args.flip, args.seed)
    _emit(format_instance(x), args.out)
    return 0


def cmd_cc(args) -> int:
    g = parse_signed(args.file)
    order = None if args.order == "natural" else _read_ints(args.order)
    c = agreement_cluster(g, AgreementParams(args.eps), order=order)
    print(f"clusters {len(c)}")
    print(f"cost {cc_cost(g, c)}")
    for members in c:
        print(" ".join(str(v) for v in members))
    return 0


def cmd_bench(args) -> int:
    if args.seed_list:
        seeds = _read_ints(args.seed_list)
    else:
        seeds = range(args.seed, args.seed + args.seeds)
    report = bench_ratio(args.algo, args.gen, seeds, oracle_limit=args.oracle_limit,
                         threads=args.threads, lp_solver=args.solver)
    sys.stdout.write(report.to_text(args.timings))
    if args.json:
        _emit(report.to_json(args.timings), args.json)
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="RNG seed (default 0)")
    common.add_argument("--eq-tol", type=float, default=argparse.SUPPRESS,
                        help="absolute tolerance when comparing distances (default 0)")
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS, help="worker threads (default 1)")

    p = argparse.ArgumentParser(prog="mvdlib", parents=[common],
                                description="Repair noisy distances into metrics and ultrametrics.")
    p.add_argument("--version", action="version", version=f"mvdlib {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", parents=[common], help="check an instance file")
    s.add_argument("file")
    s.add_argument("--mode", choices=("metric", "ultra"), default="metric")
    s.add_argument("--show", type=int, default=10, help="violations to list")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("repair", parents=[common], help="run a repair algorithm")
    s.add_argument("file")
    s.add_argument("--algo", choices=ALGOS, required=True)
    s.add_argument("--pivots", help="file of explicit pivot indices")
    s.add_argument("--trace", help="write the pivot trace as JSON lines")
    s.add_argument("--eps", default="0.019")
    s.add_argument("--solver", choices=("builtin", "scipy", "external-cmd"), default="builtin")
    s.add_argument("--solver-cmd", help="external solver command with {lp} and {sol} placeholders")
    s.add_argument("--k0", type=float, default=3.0)
    s.add_argument("--force", action="store_true", help="lift the builtin LP size limit")
    s.add_argument("--out", help="write the repaired instance here ('-' for stdout)")
    s.set_defaults(func=cmd_repair)

    s = sub.add_parser("oracle", parents=[common], help="exact optimum for tiny instances")
    s.add_argument("file")
    s.add_argument("--mode", choices=("metric", "ultra"), default="metric")
    s.add_argument("--max-n", type=int, default=7)
    s.add_argument("--exact", action="store_true", help="rational arithmetic feasibility checks")
    s.set_defaults(func=cmd_oracle)

    s = sub.add_parser("gen", parents=[common], help="generate an instance")
    s.add_argument("kind", choices=("star", "hypercube", "random-ultra", "random-metric", "planted-cc"))
    s.add_argument("--m", type=int, default=4)
    s.add_argument("--d", type=int, default=3)
    s.add_argument("--n", type=int, default=10)
    s.add_argument("--levels", type=int, default=3)
    s.add_argument("--flip", type=float, default=0.05)
    s.add_argument("--sizes", default="5,5")
    s.add_argument("--out")
    s.set_defaults(func=cmd_gen)

    s = sub.add_parser("cc", parents=[common], help="agreement correlation clustering of a signed graph")
    s.add_argument("file")
    s.add_argument("--eps", default="0.019")
    s.add_argument("--order", default="natural", help="'natural' or a file of vertex indices")
    s.set_defaults(func=cmd_cc)

    s = sub.add_parser("bench", parents=[common], help="empirical cost ratios")
    s.add_argument("--algo", required=True, help="algorithm, comma list, or 'all-ultra'")
    s.add_argument("--gen", required=True, help="generator spec, e.g. star:m=128 or random-ultra:n=6,levels=3")
    s.add_argument("--seeds", type=int, default=10, help="number of consecutive seeds from --seed")
    s.add_argument("--seed-list", help="file of seeds (overrides --seeds)")
    s.add_argument("--oracle-limit", type=int, default=7)
    s.add_argument("--solver", choices=("builtin", "scipy"), default="builtin")
    s.add_argument("--json", help="write JSON lines here")
    s.add_argument("--timings", action="store_true", help="include wall-clock times (not reproducible)")
    s.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    for name, default in (("seed", 0), ("eq_tol", 0.0), ("threads", 1)):
        if not hasattr(args, name):
            setattr(args, name, default)
    try:
        return args.func(args)
    except ValidationFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (InstanceFormatError, InsufficientPivots, LPError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
