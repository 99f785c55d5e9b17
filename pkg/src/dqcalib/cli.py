"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 solver failure, 3 I/O or input-data error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import data_io, experiments
from .calibrate import calibrate
from .errors import CalibrationError, NoOverlap, NullSpaceDimension, TooFewPairs, TrajectoryError
from .metrics import calibration_errors
from .problem import ConstraintSet, ScaledSensor
from .synth import NoiseSpec, add_noise, generate, random_rig

EXIT_OK, EXIT_USAGE, EXIT_SOLVER, EXIT_IO = 0, 1, 2, 3

SCALED_NOTE = ("note: estimates are most accurate when the scaled sensor is the one with "
               "less motion noise; use --scaled-sensor to choose it")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dqcalib", description="Hand-eye calibration with unknown translation scales.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    cal = sub.add_parser("calibrate", help="calibrate from trajectory files")
    cal.add_argument("--sequence", nargs=2, action="append", metavar=("A", "B"), required=True,
                     help="trajectory files of sensors a and b (repeatable)")
    cal.add_argument("--solver", choices=("fast", "global", "both"), default="global")
    cal.add_argument("--scaled-sensor", choices=("a", "b"), default="b")
    cal.add_argument("--constraints", type=int, choices=(3, 6), default=3)
    cal.add_argument("--m", type=_positive_int, default=None,
                     help="number of scales: 1 shares one scale, default one per sequence")
    cal.add_argument("--stride", type=_positive_int, default=1)
    cal.add_argument("--max-dt", type=float, default=None, help="association gate in seconds")
    cal.add_argument("--no-interpolate", action="store_true")
    cal.add_argument("--ground-truth", type=Path, default=None,
                     help="result-schema JSON to compare against")
    cal.add_argument("--out", type=Path, default=None, help="result JSON (default stdout)")

    sim = sub.add_parser("simulate", help="write a synthetic rig as trajectory files")
    sim.add_argument("--out", type=Path, required=True, help="output directory")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--m", type=_positive_int, default=1)
    sim.add_argument("--alphas", type=_float_list, default=None, help="e.g. 4.856,0.935,2.181")
    sim.add_argument("--n", type=_positive_int, default=100, help="motion pairs per sequence")
    sim.add_argument("--noise-a", type=float, default=0.0)
    sim.add_argument("--noise-b", type=float, default=0.0)
    sim.add_argument("--scaled-sensor", choices=("a", "b"), default="b")

    sw = sub.add_parser("sweep-noise", help="median errors over a grid of noise levels (CSV)")
    sw.add_argument("--grid", type=_float_list, default=list(experiments.DEFAULT_GRID))
    sw.add_argument("--trials", type=_positive_int, default=10)
    sw.add_argument("--seed", type=int, default=0)
    sw.add_argument("--n", type=_positive_int, default=100)
    sw.add_argument("--alpha", type=float, default=1.0)
    sw.add_argument("--solver", choices=("fast", "global"), default="global")
    sw.add_argument("--scaled-sensor", choices=("a", "b"), default="b")
    sw.add_argument("--jobs", type=_positive_int, default=1)
    sw.add_argument("--out", type=Path, default=None, help="CSV file (default stdout)")

    be = sub.add_parser("bench", help="solver wall times on a fixed synthetic instance (JSON)")
    be.add_argument("--n", type=_positive_int, default=200)
    be.add_argument("--iterations", type=_positive_int, default=100)
    be.add_argument("--seed", type=int, default=0)
    be.add_argument("--solver", choices=("fast", "global", "both"), default="both")
    be.add_argument("--out", type=Path, default=None)
    return parser


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text, encoding="utf-8")


def _load_pairs(args):
    n_seq = len(args.sequence)
    m = n_seq if args.m is None else args.m
    if m not in (1, n_seq):
        raise UsageError(f"--m {m} needs 1 or {n_seq} (one per --sequence) scales")
    policy = data_io.PairingPolicy(stride=args.stride, max_dt=args.max_dt,
                                   interpolate=not args.no_interpolate)
    pairs = []
    for j, (fa, fb) in enumerate(args.sequence):
        traj_a = data_io.load_trajectory(fa)
        traj_b = data_io.load_trajectory(fb)
        pairs += data_io.make_motion_pairs(traj_a, traj_b, policy, scale_index=j if m > 1 else 0)
    return pairs, m


def cmd_calibrate(args) -> int:
    print(SCALED_NOTE, file=sys.stderr)
    pairs, m = _load_pairs(args)
    gt = data_io.read_result(args.ground_truth) if args.ground_truth else None
    if gt is not None and len(gt.alphas) != m:
        raise UsageError(f"ground truth has {len(gt.alphas)} scales, calibration uses {m}")
    scaled = ScaledSensor(args.scaled_sensor)
    cset = ConstraintSet(args.constraints)
    solvers = ("fast", "global") if args.solver == "both" else (args.solver,)
    solutions = [calibrate(pairs, m, name, scaled, cset) for name in solvers]

    extra = {"n_pairs": len(pairs), "scaled_sensor": scaled.value}
    if gt is not None:
        errs = [calibration_errors((s.calibration, s.alphas), (gt.calibration, gt.alphas)).as_dict()
                for s in solutions]
        extra["errors"] = errs[0] if len(errs) == 1 else errs
    if len(solutions) == 1:
        doc = data_io.result_document(solutions[0], extra)
    else:
        gap = solutions[0].cost - solutions[1].cost
        extra["cost_gap"] = gap
        doc = data_io.result_document(solutions, extra)
        print(f"cost gap fast - global: {gap:.3e}", file=sys.stderr)
    _emit(data_io.dumps(doc), args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    alphas = tuple(args.alphas) if args.alphas else (1.0,) * args.m
    if args.alphas and args.m not in (1, len(alphas)):
        raise UsageError("--m disagrees with the number of --alphas")
    scaled = ScaledSensor(args.scaled_sensor)
    try:
        noise = NoiseSpec(args.noise_a, args.noise_b)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    rig = random_rig(args.seed, alphas, args.n, scaled)
    pairs, gt = generate(rig)
    pairs = add_noise(pairs, noise, seed=args.seed)
    args.out.mkdir(parents=True, exist_ok=True)
    for j in range(len(alphas)):
        group = [p for p in pairs if p.scale_index == j]
        data_io.write_trajectory(data_io.trajectories_from_motions([p.q_a for p in group]),
                                 args.out / f"seq{j}_a.txt")
        data_io.write_trajectory(data_io.trajectories_from_motions([p.q_b for p in group]),
                                 args.out / f"seq{j}_b.txt")
    data_io.write_ground_truth(gt.q_T, gt.alphas, args.out / "ground_truth.json",
                               extra={"scaled_sensor": scaled.value, "seed": args.seed,
                                      "noise": [noise.p_a, noise.p_b]})
    print(str(args.out))
    return EXIT_OK


def cmd_sweep_noise(args) -> int:
    rows = experiments.noise_sweep(args.grid, args.trials, args.seed, args.n, args.alpha,
                                   args.solver, ScaledSensor(args.scaled_sensor), args.jobs)
    _emit(experiments.rows_to_csv(rows), args.out)
    return EXIT_OK


def cmd_bench(args) -> int:
    solvers = ("fast", "global") if args.solver == "both" else (args.solver,)
    report = experiments.bench(args.n, args.iterations, args.seed, solvers=solvers)
    _emit(json.dumps(report, indent=2, sort_keys=True) + "\n", args.out)
    return EXIT_OK


COMMANDS = {"calibrate": cmd_calibrate, "simulate": cmd_simulate,
            "sweep-noise": cmd_sweep_noise, "bench": cmd_bench}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"dqcalib: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, TrajectoryError, NoOverlap, TooFewPairs) as exc:
        print(f"dqcalib: input error: {exc}", file=sys.stderr)
        return EXIT_IO
    except NullSpaceDimension as exc:
        print(f"dqcalib: global solver failed: {exc}", file=sys.stderr)
        if exc.spectrum is not None:
            print(f"dqcalib: smallest eigenvalues of Z: {list(exc.spectrum[:4])}", file=sys.stderr)
        print("dqcalib: try --solver fast", file=sys.stderr)
        return EXIT_SOLVER
    except CalibrationError as exc:
        print(f"dqcalib: solver failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
