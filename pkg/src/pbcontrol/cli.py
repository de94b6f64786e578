"""Command-line frontend.

Subcommands: ``evaluate`` (run a rule), ``control`` (solve one control
query, JSON answer), ``measures`` (strength report CSV), ``rivalry``
(rivalry matrix CSV), ``reduce`` (generate an adversarial benchmark
election), and ``correlate`` (measure-correlation matrix CSV).  The
report commands optionally render matplotlib figures next to their CSV
output (``--plot``).

Exit codes: 0 for success (an infeasible control answer and a partial
result under ``--time-budget`` are results, not failures), 1 for usage
errors, 2 for data errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from . import pabulib
from .control import (
    ControlQuery,
    Goal,
    Operation,
    TimeBudgetExceeded,
    solve_control,
)
from .core import Instance, PbError, TieBreakOrder
from .measures import (
    StrengthReport,
    compute_strength_report,
    pearson,
    rivalry_matrix,
)
from .reductions import (
    BUILDERS,
    no_cover_instance,
    planted_cover_instance,
    rx3c_has_exact_cover,
)
from .rules import Rule, evaluate

MEASURES_SCHEMA = "# pbcontrol-measures v1"
RIVALRY_SCHEMA = "# pbcontrol-rivalry v1"
CORRELATION_SCHEMA = "# pbcontrol-correlation v1"


class _Parser(argparse.ArgumentParser):
    """argparse with usage errors mapped to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _decimal(value) -> str:
    return f"{float(value):.15g}"


def _exact(value) -> str:
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    return str(value)


def _load_instance(path: str) -> Instance:
    return pabulib.parse_file(path)


def _tiebreak_from_flag(instance: Instance, flag: str) -> Optional[TieBreakOrder]:
    if flag == "file":
        return None
    if flag == "lex":
        return TieBreakOrder(order=tuple(sorted(instance.project_ids)))
    return TieBreakOrder(order=tuple(s.strip() for s in flag.split(",") if s.strip()))


def _open_out(path: Optional[str]):
    if path is None:
        return sys.stdout, False
    return open(path, "w", newline="", encoding="utf-8"), True


# ---------------------------------------------------------------------------
# evaluate
# ---------------------------------------------------------------------------

def _cmd_evaluate(args) -> int:
    instance = _load_instance(args.file)
    rule = Rule.parse(args.rule)
    tiebreak = _tiebreak_from_flag(instance, args.tiebreak)
    outcome = evaluate(rule, instance, tiebreak)
    funded = outcome.funding_order()
    total = sum(instance.cost_of(pid) for pid in funded)
    print(f"rule: {rule.value}")
    print(f"budget: {instance.budget}")
    print(f"funded ({len(funded)}): " + (", ".join(funded) if funded else "(none)"))
    print(f"total cost: {total}")
    print("trace:")
    for ev in outcome.trace:
        line = f"  {ev.round} {ev.project} " + ("funded" if ev.funded else "skipped")
        if ev.time is not None:
            line += f" at time {_exact(ev.time)}"
        if ev.q is not None:
            line += f" at q {_exact(ev.q)}"
        print(line)
    return 0


# ---------------------------------------------------------------------------
# control
# ---------------------------------------------------------------------------

def _read_spoilers(path: str) -> frozenset:
    ids = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            ids.append(line)
    return frozenset(ids)


def _read_weights(instance: Instance, flag: str, pool: Sequence[str]) -> Optional[Dict[str, int]]:
    if flag == "unit":
        return None
    if flag == "cost":
        return {pid: instance.cost_of(pid) for pid in pool}
    data = json.loads(Path(flag).read_text(encoding="utf-8"))
    return {str(k): int(v) for k, v in data.items()}


def _cmd_control(args) -> int:
    instance = _load_instance(args.file)
    rule = Rule.parse(args.rule)
    tiebreak = _tiebreak_from_flag(instance, args.tiebreak)
    spoilers = _read_spoilers(args.spoilers) if args.spoilers else None
    operation = Operation(args.op)
    if operation is Operation.ADD and spoilers is None:
        raise PbError("--op add requires --spoilers")
    query = ControlQuery(
        rule=rule,
        goal=Goal(args.goal),
        operation=operation,
        distinguished=args.project,
        bound_r=args.r,
        spoilers=spoilers,
    )
    pool = query.pool(instance)
    weights = _read_weights(instance, args.weights, pool)
    if weights is not None:
        query = ControlQuery(
            rule=rule,
            goal=query.goal,
            operation=operation,
            distinguished=args.project,
            bound_r=args.r,
            weights=weights,
            spoilers=spoilers,
        )
    result = {
        "file": args.file,
        "rule": rule.value,
        "goal": query.goal.value,
        "operation": operation.value,
        "project": args.project,
        "r": args.r,
    }
    try:
        answer, solver = solve_control(
            instance, query, tiebreak, jobs=args.jobs, time_budget=args.time_budget
        )
    except TimeBudgetExceeded as exc:
        result.update(
            solver="brute-force",
            feasible=None,
            partial=True,
            subsets_checked=exc.checked,
        )
        print(json.dumps(result, indent=2))
        return 0
    result.update(
        solver=solver,
        feasible=answer.feasible,
        witness=sorted(answer.witness) if answer.witness is not None else None,
        weight=answer.weight,
    )
    print(json.dumps(result, indent=2))
    return 0


# ---------------------------------------------------------------------------
# measures
# ---------------------------------------------------------------------------

def _report_rows(report: StrengthReport) -> List[List[str]]:
    rows: List[List[str]] = []
    inst = report.instance_name
    rule = report.rule.value
    sample_params = ""
    if not report.exact:
        sample_params = f";seed={report.seed};sample={report.sample_size}"

    def add(project: str, measure: str, params: str, value) -> None:
        if value is None:
            rows.append([inst, rule, project, measure, params, "", ""])
        else:
            rows.append(
                [inst, rule, project, measure, params, _exact(value), _decimal(value)]
            )

    for p in report.projects:
        add(p.project, "initially_funded", "", 1 if p.funded else 0)
        add(p.project, "min_deletions", f"cap={report.cap}", p.min_deletions)
        add(p.project, "cheapest_deletion_cost", f"cap={report.cap}", p.cheapest_deletion_cost)
        add(p.project, "cost_ratio", f"cap={report.cap}", p.cost_ratio)
        for r in report.r_values:
            wp = p.win_probability.get(r)
            add(p.project, "win_prob", f"r={r}{sample_params}", wp.value if wp else None)
        if p.baseline_cost is not None:
            add(p.project, "baseline_cost", "", p.baseline_cost)
        if p.baseline_add is not None:
            add(p.project, "baseline_add", "", p.baseline_add)
    rows.sort(key=lambda row: (row[0], row[1], row[2], row[3], row[4]))
    return rows


def _cmd_measures(args) -> int:
    instance = _load_instance(args.file)
    rule = Rule.parse(args.rule)
    tiebreak = _tiebreak_from_flag(instance, args.tiebreak)
    partial_reason = None
    try:
        report = compute_strength_report(
            instance,
            rule,
            r_max=args.r_max,
            tiebreak=tiebreak,
            cap=args.cap,
            include_baselines=args.baselines,
            sample_size=args.sample,
            seed=args.seed,
            jobs=args.jobs,
            time_budget=args.time_budget,
        )
    except TimeBudgetExceeded as exc:
        report = exc.partial_report
        partial_reason = str(exc)
        if report is None:
            raise
    out, close = _open_out(args.output)
    try:
        out.write(MEASURES_SCHEMA + "\n")
        if not report.exact:
            out.write(f"# sampled: seed={report.seed} sample={report.sample_size}\n")
        if partial_reason:
            out.write(f"# partial: {partial_reason}\n")
        writer = csv.writer(out)
        writer.writerow(
            ["instance", "rule", "project", "measure", "params", "value", "value_decimal"]
        )
        writer.writerows(_report_rows(report))
    finally:
        if close:
            out.close()
    if args.plot:
        from . import plots

        base = Path(args.output)
        plots.plot_deletion_size_distribution(
            report, base.with_suffix("").as_posix() + "-deletions.png"
        )
        plots.plot_win_probabilities(
            report, base.with_suffix("").as_posix() + "-winprob.png"
        )
    return 0


# ---------------------------------------------------------------------------
# rivalry
# ---------------------------------------------------------------------------

def _cmd_rivalry(args) -> int:
    instance = _load_instance(args.file)
    rule = Rule.parse(args.rule)
    tiebreak = _tiebreak_from_flag(instance, args.tiebreak)
    projects = None if args.all else [args.project]
    matrix = rivalry_matrix(instance, rule, args.r, tiebreak, projects=projects)
    out, close = _open_out(args.output)
    try:
        out.write(RIVALRY_SCHEMA + "\n")
        writer = csv.writer(out)
        writer.writerow(["project"] + list(matrix.cols))
        for p in matrix.rows:
            row = [p]
            for q in matrix.cols:
                row.append(_exact(matrix.entries[(p, q)]) if p != q else "")
            writer.writerow(row)
    finally:
        if close:
            out.close()
    if args.plot:
        from . import plots

        base = Path(args.output)
        plots.plot_rivalry_heatmap(
            matrix,
            base.with_suffix("").as_posix() + "-heatmap.png",
            title=f"{rule.value}, r = {args.r}",
        )
    return 0


# ---------------------------------------------------------------------------
# reduce
# ---------------------------------------------------------------------------

def _cmd_reduce(args) -> int:
    if args.no_cover:
        rx3c = no_cover_instance(args.n, args.seed)
        planted = None
    else:
        rx3c, planted = planted_cover_instance(args.n, args.seed)
    built = BUILDERS[args.theorem](rx3c)
    cover = rx3c_has_exact_cover(rx3c)
    pabulib.write_file(built.instance, args.output)
    sidecar = {
        "theorem": args.theorem,
        "builder": built.name,
        "n": args.n,
        "seed": args.seed,
        "variant": "no-cover" if args.no_cover else "planted-cover",
        "has_exact_cover": cover is not None,
        "planted_cover_indices": list(planted) if planted is not None else None,
        "family": [sorted(s) for s in rx3c.family],
        "query": {
            "rule": built.query.rule.value,
            "goal": built.query.goal.value,
            "operation": built.query.operation.value,
            "project": built.query.distinguished,
            "r": built.query.bound_r,
            "spoilers": sorted(built.query.spoilers) if built.query.spoilers else None,
        },
        "tiebreak": list(built.tiebreak.order),
    }
    sidecar_path = Path(args.output).with_suffix(".query.json")
    sidecar_path.write_text(json.dumps(sidecar, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {args.output} and {sidecar_path}")
    return 0


# ---------------------------------------------------------------------------
# correlate
# ---------------------------------------------------------------------------

_MEASURE_VARS = {"baseline_cost": "cost", "baseline_add": "add"}


def _variable_of(measure: str, params: str) -> Optional[str]:
    if measure in _MEASURE_VARS:
        return _MEASURE_VARS[measure]
    if measure == "win_prob":
        for part in params.split(";"):
            if part.startswith("r="):
                return "del" + part[2:]
    return None


def _parse_value(text: str) -> Optional[Fraction]:
    if text == "":
        return None
    return Fraction(text)


def _cmd_correlate(args) -> int:
    # (rule, variable) -> {(instance, project): value}, losing projects only
    data: Dict[Tuple[str, str], Dict[Tuple[str, str], Fraction]] = {}
    losing: Dict[Tuple[str, str, str], bool] = {}
    parsed_rows = []
    for path in args.reports:
        with open(path, newline="", encoding="utf-8") as fh:
            lines = [ln for ln in fh if not ln.startswith("#")]
        for row in csv.DictReader(io.StringIO("".join(lines))):
            parsed_rows.append(row)
    for row in parsed_rows:
        if row["measure"] == "initially_funded":
            key = (row["instance"], row["rule"], row["project"])
            losing[key] = row["value"] == "0"
    for row in parsed_rows:
        var = _variable_of(row["measure"], row["params"])
        if var is None:
            continue
        key = (row["instance"], row["rule"], row["project"])
        if not losing.get(key, False):
            continue
        value = _parse_value(row["value"])
        if value is None:
            continue
        data.setdefault((row["rule"], var), {})[(row["instance"], row["project"])] = value

    rules = sorted({rule for rule, _ in data})
    variables = sorted({var for _, var in data})
    out, close = _open_out(args.output)
    matrices = {}
    try:
        out.write(CORRELATION_SCHEMA + "\n")
        writer = csv.writer(out)
        writer.writerow(["rule", "measure"] + variables)
        for rule in rules:
            grid = []
            for va in variables:
                row = [rule, va]
                vals = []
                for vb in variables:
                    xs_map = data.get((rule, va), {})
                    ys_map = data.get((rule, vb), {})
                    shared = sorted(set(xs_map) & set(ys_map))
                    try:
                        coeff = pearson(
                            [xs_map[k] for k in shared], [ys_map[k] for k in shared]
                        )
                        row.append(f"{coeff:.6f}")
                        vals.append(coeff)
                    except PbError:
                        row.append("")
                        vals.append(float("nan"))
                writer.writerow(row)
                grid.append(vals)
            matrices[rule] = grid
    finally:
        if close:
            out.close()
    if args.plot:
        from . import plots

        base = Path(args.output)
        for rule, grid in matrices.items():
            plots.plot_correlation_heatmap(
                variables,
                grid,
                base.with_suffix("").as_posix() + f"-{rule}.png",
                title=rule,
            )
    return 0


# ---------------------------------------------------------------------------
# parser wiring
# ---------------------------------------------------------------------------

def _build_parser() -> _Parser:
    parser = _Parser(prog="pbcontrol", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    rules = [r.value for r in Rule]

    p = sub.add_parser("evaluate", help="run a rule and print the outcome")
    p.add_argument("file")
    p.add_argument("--rule", required=True, choices=rules)
    p.add_argument("--tiebreak", default="file",
                   help="'file' (default), 'lex', or a comma-separated id list")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("control", help="solve a control query (JSON answer)")
    p.add_argument("file")
    p.add_argument("--rule", required=True, choices=rules)
    p.add_argument("--goal", required=True, choices=[g.value for g in Goal])
    p.add_argument("--op", required=True, choices=[o.value for o in Operation])
    p.add_argument("--project", required=True)
    p.add_argument("--r", required=True, type=int)
    p.add_argument("--weights", default="unit",
                   help="'unit' (default), 'cost', or a JSON file of weights")
    p.add_argument("--spoilers", help="file listing spoiler project ids, one per line")
    p.add_argument("--tiebreak", default="file")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--time-budget", type=float,
                   help="abort brute-force enumeration after this many seconds")
    p.set_defaults(func=_cmd_control)

    p = sub.add_parser("measures", help="strength report for every project (CSV)")
    p.add_argument("file")
    p.add_argument("--rule", required=True, choices=rules)
    p.add_argument("--r-max", type=int, default=3, dest="r_max")
    p.add_argument("--cap", type=int, help="deletion-size search cap (default: r-max)")
    p.add_argument("--baselines", action="store_true",
                   help="include the cost-reduction and extra-voter baselines")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--exact", action="store_true",
                      help="full enumeration (the default)")
    mode.add_argument("--sample", type=int,
                      help="Monte-Carlo sample size instead of exact enumeration")
    p.add_argument("--seed", type=int)
    p.add_argument("--tiebreak", default="file")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--time-budget", type=float)
    p.add_argument("-o", "--output")
    p.add_argument("--plot", action="store_true",
                   help="render figures next to the CSV (requires -o)")
    p.set_defaults(func=_cmd_measures)

    p = sub.add_parser("rivalry", help="rivalry matrix (CSV)")
    p.add_argument("file")
    p.add_argument("--rule", required=True, choices=rules)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--project", help="one losing project")
    group.add_argument("--all", action="store_true", help="all losing projects")
    p.add_argument("--r", required=True, type=int)
    p.add_argument("--tiebreak", default="file")
    p.add_argument("-o", "--output")
    p.add_argument("--plot", action="store_true")
    p.set_defaults(func=_cmd_rivalry)

    p = sub.add_parser("reduce", help="generate an adversarial benchmark election")
    p.add_argument("--theorem", required=True, choices=sorted(BUILDERS),
                   help="benchmark family: 1/1d greedy deletion (base-4 costs), "
                        "3/4 sequential-rule deletion (unit costs), "
                        "6/6d greedy addition, 8/9 sequential-rule addition")
    p.add_argument("--n", required=True, type=int)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--planted-cover", action="store_true", dest="planted_cover")
    group.add_argument("--no-cover", action="store_true", dest="no_cover")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=_cmd_reduce)

    p = sub.add_parser("correlate", help="Pearson correlations between measures (CSV)")
    p.add_argument("reports", nargs="+", help="measure CSVs produced by 'measures'")
    p.add_argument("-o", "--output")
    p.add_argument("--plot", action="store_true")
    p.set_defaults(func=_cmd_correlate)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "plot", False) and getattr(args, "output", None) is None:
        parser.error("--plot requires -o/--output")
    if getattr(args, "sample", None) is not None and getattr(args, "seed", None) is None:
        parser.error("--sample requires --seed")
    try:
        return args.func(args)
    except (PbError, ValueError, OSError) as exc:
        print(f"pbcontrol: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
