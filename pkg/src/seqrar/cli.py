"""Command-line entry point: ``seqrar {boundaries,simulate,monitor,diagnose}``.

Exit codes: 0 success, 1 validation error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import os
import sys
from pathlib import Path

from .boundaries import BoundaryError, crossing_probability, solve_boundaries
from .core import ModelKind, ScenarioError, SpendingKind, SpendingSpec
from .engine import canonical_diagnostics, monte_carlo
from .inference import DegenerateLookError, z_from_summaries
from .scenarios import load_scenarios

SEED_ENV = "SEQRAR_SEED"

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 1, 2

SPENDING_ALIASES = {
    "obf": SpendingKind.OBF_LIKE, "obf_like": SpendingKind.OBF_LIKE, "obrien_fleming": SpendingKind.OBF_LIKE,
    "linear": SpendingKind.LINEAR,
    "pocock": SpendingKind.POCOCK_LIKE, "pocock_like": SpendingKind.POCOCK_LIKE,
}


class ValidationError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ValidationError(f"not a comma-separated list of numbers: {text!r}") from None


def _spending(name: str, alpha: float) -> SpendingSpec:
    try:
        kind = SPENDING_ALIASES[name.lower()]
    except KeyError:
        raise ValidationError(f"unknown spending function {name!r}; choose from obf, linear, pocock") from None
    if not 0.0 < alpha < 1.0:
        raise ValidationError(f"alpha out of (0,1): {alpha}")
    return SpendingSpec(kind, alpha)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return "inf" if math.isinf(x) else f"{x:.6f}"
    return str(x)


def _write(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _times_from_args(args) -> list[float]:
    if args.look_sizes:
        sizes = _floats(args.look_sizes)
        if any(b <= a for a, b in zip(sizes, sizes[1:])):
            raise ValidationError("looks not increasing")
        return [s / sizes[-1] for s in sizes]
    looks = _floats(args.looks)
    if not looks:
        raise ValidationError("no looks given")
    if any(b <= a for a, b in zip(looks, looks[1:])):
        raise ValidationError("looks not increasing")
    if looks[0] <= 0 or looks[-1] > 1:
        raise ValidationError("information times must lie in (0,1]")
    return looks


def cmd_boundaries(args) -> int:
    times = _times_from_args(args)
    fn = _spending(args.spending, args.alpha)
    bs = solve_boundaries(times, fn)
    rows = [["look", "t", "boundary", "cumulative_alpha"]]
    for k, (t, b, a) in enumerate(zip(times, bs.critical_values, bs.cumulative_spend), start=1):
        rows.append([k, _fmt(float(t)), _fmt(b), _fmt(a)])
    if args.drift is not None:
        total, per = crossing_probability(bs, times, args.drift)
        rows[0].append("crossing_prob")
        for row, p in zip(rows[1:], per):
            row.append(_fmt(p))
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    if args.drift is not None:
        buf.write(f"# overall rejection probability at drift {args.drift}: {total:.6f}\n")
    _write(buf.getvalue(), args.out)
    return EXIT_OK


def _seed(args) -> int | None:
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ValidationError(f"{SEED_ENV} must be an integer, got {env!r}") from None
    return None


def cmd_simulate(args) -> int:
    scenarios = load_scenarios(args.scenario)
    seed = _seed(args)
    reports = [monte_carlo(sc, None, args.replications, seed, parallel=args.parallel) for sc in scenarios]
    K = max(len(r.rejections_by_look) for r in reports)
    header = (["scenario_id", "design", "allocation", "spending", "replications", "rejection_rate"]
              + [f"n_reject_look{k}" for k in range(1, K + 1)]
              + ["rho1_mean", "rho1_sd", "failures_mean", "failures_sd", "seed"])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in reports:
        looks = list(r.rejections_by_look) + [None] * (K - len(r.rejections_by_look))
        w.writerow([r.scenario_id, r.design, r.allocation, r.spending, r.replications, _fmt(r.rejection_rate)]
                   + [_fmt(x) for x in looks]
                   + [_fmt(r.rho1_mean), _fmt(r.rho1_sd), _fmt(r.failures_mean), _fmt(r.failures_sd),
                      r.master_seed])
    _write(buf.getvalue(), args.out)
    if args.json:
        dump = [{"scenario": sc.to_dict(), "report": dataclasses.asdict(r)}
                for sc, r in zip(scenarios, reports)]
        Path(args.json).write_text(json.dumps(dump, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def _arm_summary(kind: ModelKind, arm: dict, name: str) -> tuple[int, float, float]:
    """(count, sum, sum of squares) from a per-arm summary record."""
    try:
        n = int(arm["n"])
        if kind is ModelKind.BINARY:
            s = float(arm["successes"])
            if not 0 <= s <= n:
                raise ValidationError(f"{name}: successes must lie in [0, n]")
            return n, s, s
        mean, sd = float(arm["mean"]), float(arm["sd"])
    except KeyError as exc:
        raise ValidationError(f"{name}: missing field {exc}") from None
    return n, n * mean, (n - 1) * sd * sd + n * mean * mean


def _read_data_file(path: Path, kind: ModelKind) -> list[tuple[int, float, float]]:
    counts, sums, sumsq = [0, 0], [0.0, 0.0], [0.0, 0.0]
    with path.open(newline="") as fh:
        for row in csv.DictReader(fh):
            try:
                j = int(row["arm"]) - 1
                x = float(row["response"])
            except (KeyError, ValueError):
                raise ValidationError(f"{path}: rows need integer 'arm' and numeric 'response'") from None
            if j not in (0, 1):
                raise ValidationError(f"{path}: arm must be 1 or 2")
            if kind is ModelKind.BINARY and x not in (0.0, 1.0):
                raise ValidationError(f"{path}: binary responses must be 0 or 1")
            counts[j] += 1
            sums[j] += x
            sumsq[j] += x * x
    return [(counts[j], sums[j], sumsq[j]) for j in range(2)]


def monitor_decision(record: dict, base_dir: Path = Path(".")) -> dict:
    """Evaluate one interim look; returns the decision record."""
    try:
        planned = int(record["planned_n"])
        kind = ModelKind(record.get("model_kind", "binary"))
        sp = record.get("spending", {"kind": "linear"})
        fn = _spending(sp["kind"], float(sp.get("total_alpha", 0.05)))
        previous = [int(x) for x in record.get("previous_looks", [])]
        current = record["current"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed interim record: {exc}") from None

    if "data_file" in current:
        arms = _read_data_file(base_dir / current["data_file"], kind)
    else:
        arms = [_arm_summary(kind, current.get(key, {}), key) for key in ("arm1", "arm2")]
    n_now = arms[0][0] + arms[1][0]
    if "n" in current and int(current["n"]) != n_now:
        raise ValidationError(f"current.n={current['n']} but arms hold {n_now} patients")
    if any(b <= a for a, b in zip(previous, previous[1:])):
        raise ValidationError("previous looks not increasing")
    if previous and n_now <= previous[-1]:
        raise ValidationError(f"current look {n_now} <= last recorded look {previous[-1]}")
    if previous and previous[0] <= 0:
        raise ValidationError("look sizes must be positive")
    if n_now > planned:
        raise ValidationError(f"current look {n_now} exceeds planned n {planned}")

    times = [n / planned for n in previous] + [n_now / planned]
    bs = solve_boundaries(times, fn)
    z, floored = z_from_summaries(kind, *arms[0], *arms[1])
    b = bs.critical_values[-1]
    return {
        "look": len(times),
        "n": n_now,
        "t": times[-1],
        "z": z,
        "boundary": b,
        "cumulative_alpha": bs.cumulative_spend[-1],
        "previous_boundaries": list(bs.critical_values[:-1]),
        "variance_floored": floored,
        "decision": "STOP-REJECT" if abs(z) >= b else "CONTINUE",
    }


def cmd_monitor(args) -> int:
    path = Path(args.interim_file)
    try:
        record = json.loads(path.read_text())
    except FileNotFoundError:
        raise ValidationError(f"interim file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from None
    out = monitor_decision(record, path.parent)
    text = (f"{out['decision']}: look {out['look']} n={out['n']} t={out['t']:.4f} "
            f"Z={out['z']:.4f} boundary={out['boundary']:.4f} alpha_spent={out['cumulative_alpha']:.6f}\n")
    sys.stdout.write(text)
    if args.out:
        Path(args.out).write_text(json.dumps(out, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_diagnose(args) -> int:
    scenarios = load_scenarios(args.scenario)
    seed = _seed(args)
    seen, todo = set(), []
    for sc in scenarios:
        key = (sc.design, sc.allocation, sc.schedule, sc.model)
        if sc.schedule.K >= 2 and key not in seen:
            seen.add(key)
            todo.append(sc)
    if not todo:
        raise ValidationError("diagnostics need >= 2 looks")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["scenario_id", "design", "allocation", "quantity", "theory", "empirical", "abs_dev",
                "replications", "seed"])
    for sc in todo:
        d = canonical_diagnostics(sc, args.replications, seed, parallel=args.parallel)
        for row in d.rows():
            w.writerow([sc.scenario_id, sc.design.kind.value, sc.allocation.kind.value, row["quantity"],
                        _fmt(row["theory"]), _fmt(row["empirical"]), _fmt(row["abs_dev"]), d.replications,
                        sc.master_seed if seed is None else seed])
    _write(buf.getvalue(), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="seqrar", description="Sequential monitoring of response-adaptive randomized trials.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    b = sub.add_parser("boundaries", help="solve alpha-spending boundaries")
    g = b.add_mutually_exclusive_group(required=True)
    g.add_argument("--looks", help="information times, e.g. 0.2,0.5,1")
    g.add_argument("--look-sizes", help="cumulative patient counts, e.g. 100,250,500")
    b.add_argument("--spending", default="linear", help="obf, linear or pocock")
    b.add_argument("--alpha", type=float, default=0.05)
    b.add_argument("--drift", type=float, help="also report crossing probabilities at this B-scale drift")
    b.add_argument("--out")
    b.set_defaults(func=cmd_boundaries)

    s = sub.add_parser("simulate", help="Monte Carlo operating characteristics of a scenario file")
    s.add_argument("--scenario", required=True)
    s.add_argument("--replications", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--parallel", type=int, default=None, help="worker processes (default: all cores)")
    s.add_argument("--out", help="CSV path (default: stdout)")
    s.add_argument("--json", help="also write a full JSON dump here")
    s.set_defaults(func=cmd_simulate)

    m = sub.add_parser("monitor", help="evaluate one interim look")
    m.add_argument("interim_file")
    m.add_argument("--out", help="write the decision record as JSON")
    m.set_defaults(func=cmd_monitor)

    d = sub.add_parser("diagnose", help="empirical check of the canonical joint distribution")
    d.add_argument("--scenario", required=True)
    d.add_argument("--replications", type=int, default=10000)
    d.add_argument("--seed", type=int)
    d.add_argument("--parallel", type=int, default=None)
    d.add_argument("--out")
    d.set_defaults(func=cmd_diagnose)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, ScenarioError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (BoundaryError, DegenerateLookError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
