"""Control-based strength measures for losing projects.

How close was a losing project to being funded?  The measures here
answer that question through deletion control: the fewest projects whose
removal funds it, the cheapest such set, the probability that removing r
random projects funds it, and rivalry (the same probability conditioned
on one specific project being among the removed).  Two simpler baseline
measures (lowering the project's cost, adding voters that approve only
the project) and a Pearson correlation helper support comparisons
between measures.

Probabilities are exact fractions with denominator C(m-1, r) (or
C(m-2, r) for rivalry) obtained by full enumeration; an optional seeded
sampling mode produces tagged estimates for instances where enumeration
is out of reach.
"""

from __future__ import annotations

import random
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

from .control import (
    ControlQuery,
    Goal,
    Operation,
    TimeBudgetExceeded,
    brute_force_control,
    dp_delete_control,
)
from .core import Instance, PbError, TieBreakOrder
from .rules import GREEDY_FAMILY, Rule, evaluate


def _funded(instance: Instance, rule: Rule, tiebreak: Optional[TieBreakOrder]) -> frozenset:
    return evaluate(rule, instance, tiebreak).funded


def min_deletion_size(
    instance: Instance,
    rule: Rule,
    distinguished: str,
    tiebreak: Optional[TieBreakOrder] = None,
    cap: Optional[int] = None,
    time_budget: Optional[float] = None,
) -> Optional[int]:
    """Fewest deletions that make the distinguished project funded.

    Returns 0 for an initially funded project, ``None`` when no deletion
    set within ``cap`` works.  By default greedy-family rules search
    unbounded (the dynamic program is cheap), while the enumeration-based
    rules cap at 3 removals; pass ``cap`` to override either.
    """
    if distinguished in _funded(instance, rule, tiebreak):
        return 0
    if cap is None:
        bound = instance.m - 1 if rule in GREEDY_FAMILY else 3
    else:
        bound = cap
    query = ControlQuery(
        rule=rule,
        goal=Goal.CONSTRUCTIVE,
        operation=Operation.DELETE,
        distinguished=distinguished,
        bound_r=bound,
    )
    if rule in GREEDY_FAMILY:
        answer = dp_delete_control(instance, query, tiebreak)
    else:
        answer = brute_force_control(instance, query, tiebreak, time_budget=time_budget)
    return answer.weight if answer.feasible else None


def cheapest_deletion(
    instance: Instance,
    rule: Rule,
    distinguished: str,
    tiebreak: Optional[TieBreakOrder] = None,
    cap: Optional[int] = None,
    time_budget: Optional[float] = None,
) -> Optional[Tuple[frozenset, int]]:
    """Minimum-total-cost deletion set funding the distinguished project.

    Weighted control with weight = cost.  For greedy-family rules the
    dynamic program searches all deletion sets; otherwise the search
    enumerates deletion sets of size at most ``cap`` (default: all
    sizes).  Returns ``(set, total_cost)``, with ``(frozenset(), 0)``
    for already-funded projects, or ``None`` if nothing works.
    """
    if distinguished in _funded(instance, rule, tiebreak):
        return frozenset(), 0
    deletable = [pid for pid in instance.project_ids if pid != distinguished]
    weights = {pid: instance.cost_of(pid) for pid in deletable}
    query = ControlQuery(
        rule=rule,
        goal=Goal.CONSTRUCTIVE,
        operation=Operation.DELETE,
        distinguished=distinguished,
        bound_r=sum(weights.values()),
        weights=weights,
    )
    if rule in GREEDY_FAMILY:
        answer = dp_delete_control(instance, query, tiebreak)
        return (answer.witness, answer.weight) if answer.feasible else None
    max_size = len(deletable) if cap is None else min(cap, len(deletable))
    deadline = None if time_budget is None else time.monotonic() + time_budget
    best: Optional[Tuple[int, Tuple[str, ...]]] = None
    checked = 0
    for k in range(max_size + 1):
        for combo in combinations(deletable, k):
            checked += 1
            if deadline is not None and checked % 64 == 0 and time.monotonic() > deadline:
                raise TimeBudgetExceeded(
                    f"time budget exhausted after {checked} subsets", checked=checked
                )
            total = sum(weights[pid] for pid in combo)
            if best is not None and (total, combo) >= best:
                continue
            if distinguished in _funded(instance.without_projects(combo), rule, tiebreak):
                best = (total, combo)
    if best is None:
        return None
    total, combo = best
    return frozenset(combo), total


def cost_ratio(
    instance: Instance, distinguished: str, deletion_cost: int
) -> Optional[Fraction]:
    """Distinguished project's cost over the deletion set's cost (None if 0)."""
    if deletion_cost == 0:
        return None
    return Fraction(instance.cost_of(distinguished), deletion_cost)


@dataclass(frozen=True)
class WinProbability:
    """Probability that deleting r random other projects funds a project.

    ``exact`` results enumerate every size-r subset and the value is the
    precise fraction successes / C(m-1, r); sampled results are tagged
    with their seed and sample size and must never be mixed with exact
    values in one report.
    """

    value: Fraction
    r: int
    exact: bool
    successes: int
    trials: int
    seed: Optional[int] = None


def _wins_after_deletion(args) -> int:
    instance, rule, tiebreak, distinguished, combos = args
    hits = 0
    for combo in combos:
        if distinguished in _funded(instance.without_projects(combo), rule, tiebreak):
            hits += 1
    return hits


def win_probability(
    instance: Instance,
    rule: Rule,
    distinguished: str,
    r: int,
    tiebreak: Optional[TieBreakOrder] = None,
    sample_size: Optional[int] = None,
    seed: Optional[int] = None,
    jobs: int = 1,
    time_budget: Optional[float] = None,
) -> WinProbability:
    """Probability over all size-r subsets of the other projects.

    The distinguished project itself is never deleted.  With
    ``sample_size`` set, a seeded Monte-Carlo estimate is returned
    instead of the exact enumeration (``seed`` is then required so runs
    are reproducible).
    """
    others = [pid for pid in instance.project_ids if pid != distinguished]
    instance.cost_of(distinguished)
    if not 0 <= r <= len(others):
        raise PbError(f"r must be between 0 and {len(others)}, got {r}")
    if sample_size is not None:
        if seed is None:
            raise PbError("sampled estimation requires a seed")
        rng = random.Random(seed)
        hits = 0
        for _ in range(sample_size):
            combo = rng.sample(others, r)
            if distinguished in _funded(instance.without_projects(combo), rule, tiebreak):
                hits += 1
        return WinProbability(
            value=Fraction(hits, sample_size),
            r=r,
            exact=False,
            successes=hits,
            trials=sample_size,
            seed=seed,
        )
    combos = list(combinations(others, r))
    deadline = None if time_budget is None else time.monotonic() + time_budget
    if jobs <= 1 or time_budget is not None:
        hits = 0
        for checked, combo in enumerate(combos):
            if deadline is not None and checked % 64 == 0 and time.monotonic() > deadline:
                raise TimeBudgetExceeded(
                    f"time budget exhausted after {checked} of {len(combos)} subsets",
                    checked=checked,
                )
            if distinguished in _funded(instance.without_projects(combo), rule, tiebreak):
                hits += 1
    else:
        chunks = [combos[i::jobs] for i in range(jobs)]
        with ProcessPoolExecutor(max_workers=jobs) as pex:
            parts = pex.map(
                _wins_after_deletion,
                [(instance, rule, tiebreak, distinguished, c) for c in chunks],
            )
            hits = sum(parts)
    return WinProbability(
        value=Fraction(hits, len(combos)) if combos else Fraction(0),
        r=r,
        exact=True,
        successes=hits,
        trials=len(combos),
    )


def rivalry(
    instance: Instance,
    rule: Rule,
    p: str,
    q: str,
    r: int,
    tiebreak: Optional[TieBreakOrder] = None,
) -> Fraction:
    """Probability that p is funded after deleting q plus r random others.

    Exact fraction over the C(m-2, r) subsets of the remaining projects.
    A high value marks q as a strong rival of p.
    """
    if p == q:
        raise PbError("rivalry requires two distinct projects")
    instance.cost_of(p)
    instance.cost_of(q)
    rest = [pid for pid in instance.project_ids if pid not in (p, q)]
    if not 0 <= r <= len(rest):
        raise PbError(f"r must be between 0 and {len(rest)}, got {r}")
    hits = 0
    total = 0
    for combo in combinations(rest, r):
        total += 1
        if p in _funded(instance.without_projects(combo + (q,)), rule, tiebreak):
            hits += 1
    return Fraction(hits, total) if total else Fraction(0)


@dataclass(frozen=True)
class RivalryMatrix:
    """Rivalry values for each (losing project, other project) pair."""

    rows: Tuple[str, ...]
    cols: Tuple[str, ...]
    r: int
    entries: Mapping[Tuple[str, str], Fraction]


def rivalry_matrix(
    instance: Instance,
    rule: Rule,
    r: int,
    tiebreak: Optional[TieBreakOrder] = None,
    projects: Optional[Sequence[str]] = None,
) -> RivalryMatrix:
    """Rivalry of every losing project (rows) against every other project.

    ``projects`` restricts the rows; by default all initially losing
    projects, sorted by id.  Columns are all projects, sorted by id.
    """
    funded0 = _funded(instance, rule, tiebreak)
    if projects is None:
        rows = tuple(sorted(pid for pid in instance.project_ids if pid not in funded0))
    else:
        rows = tuple(projects)
    cols = tuple(sorted(instance.project_ids))
    entries: Dict[Tuple[str, str], Fraction] = {}
    for p in rows:
        for q in cols:
            if p == q:
                continue
            entries[(p, q)] = rivalry(instance, rule, p, q, r, tiebreak)
    return RivalryMatrix(rows=rows, cols=cols, r=r, entries=entries)


def baseline_cost_measure(
    instance: Instance,
    rule: Rule,
    distinguished: str,
    tiebreak: Optional[TieBreakOrder] = None,
    normalize: Optional[Callable[[int, int], Fraction]] = None,
) -> Fraction:
    """How little the project would have to cost to win.

    Scans candidate costs downward from the original and finds the
    largest cost c* at which the project is funded.  The scan is
    exhaustive because a cheaper price can reshuffle the processing
    order (most visibly under the cost-scaled greedy rule), so funding
    is not monotone in the price.

    The default score is c*/cost (1 for already-winning projects, 0
    when even cost 1 does not help); pass ``normalize(c_star, cost)``
    to rescale, e.g. when comparing against other measure families.
    """
    norm = normalize or (lambda c_star, cost: Fraction(c_star, cost))
    original = instance.cost_of(distinguished)
    if distinguished in _funded(instance, rule, tiebreak):
        return norm(original, original)
    for c in range(original - 1, 0, -1):
        trial = instance.with_cost(distinguished, c)
        if distinguished in _funded(trial, rule, tiebreak):
            return norm(c, original)
    return Fraction(0)


def baseline_add_measure(
    instance: Instance,
    rule: Rule,
    distinguished: str,
    tiebreak: Optional[TieBreakOrder] = None,
    cap: int = 50,
    normalize: Optional[Callable[[int], Fraction]] = None,
) -> Fraction:
    """Support needed to win, from the fewest extra single-minded voters.

    Adds voters approving only the distinguished project one at a time
    and re-runs the rule; k is the first count at which the project is
    funded.  The default score is 1/(1+k) (1 for winners, 0 when no
    k <= cap helps); pass ``normalize(k)`` for a different scale.
    """
    norm = normalize or (lambda k: Fraction(1, 1 + k))
    instance.cost_of(distinguished)
    for k in range(cap + 1):
        trial = (
            instance
            if k == 0
            else instance.with_extra_ballots([{distinguished}] * k)
        )
        if distinguished in _funded(trial, rule, tiebreak):
            return norm(k)
    return Fraction(0)


def pearson(xs: Sequence, ys: Sequence) -> float:
    """Pearson correlation coefficient of two equal-length samples."""
    if len(xs) != len(ys):
        raise PbError("samples must have equal length")
    if len(xs) < 2:
        raise PbError("correlation needs at least two points")
    try:
        return statistics.correlation([float(x) for x in xs], [float(y) for y in ys])
    except statistics.StatisticsError as exc:
        raise PbError(f"correlation undefined: {exc}") from None


@dataclass(frozen=True)
class ProjectStrength:
    """All measures for one project (probability map keyed by r)."""

    project: str
    funded: bool
    min_deletions: Optional[int]
    cheapest_deletion_cost: Optional[int]
    cost_ratio: Optional[Fraction]
    win_probability: Mapping[int, WinProbability]
    baseline_cost: Optional[Fraction] = None
    baseline_add: Optional[Fraction] = None


@dataclass(frozen=True)
class StrengthReport:
    """Strength measures for every project of one instance under one rule."""

    instance_name: str
    rule: Rule
    r_values: Tuple[int, ...]
    cap: int
    exact: bool
    projects: Tuple[ProjectStrength, ...]
    sample_size: Optional[int] = None
    seed: Optional[int] = None

    def losing_projects(self) -> Tuple[ProjectStrength, ...]:
        return tuple(p for p in self.projects if not p.funded)


def compute_strength_report(
    instance: Instance,
    rule: Rule,
    r_max: int = 3,
    tiebreak: Optional[TieBreakOrder] = None,
    cap: Optional[int] = None,
    include_baselines: bool = False,
    sample_size: Optional[int] = None,
    seed: Optional[int] = None,
    jobs: int = 1,
    time_budget: Optional[float] = None,
) -> StrengthReport:
    """Evaluate all strength measures for every project of the instance.

    Funded projects get sentinel values (0 deletions, empty cheapest
    set, no probabilities).  ``cap`` bounds the deletion-size search and
    defaults to ``r_max``.  A wall-clock ``time_budget`` (for the whole
    report) aborts with :class:`TimeBudgetExceeded`.
    """
    cap = r_max if cap is None else cap
    funded0 = _funded(instance, rule, tiebreak)
    parts = [
        instance.metadata.get(key, "")
        for key in ("unit", "subunit", "instance")
    ]
    name = " ".join(p for p in parts if p) or instance.metadata.get("description", "")
    deadline = None if time_budget is None else time.monotonic() + time_budget

    def remaining() -> Optional[float]:
        if deadline is None:
            return None
        left = deadline - time.monotonic()
        if left <= 0:
            raise TimeBudgetExceeded("time budget exhausted between measures")
        return left

    rows: List[ProjectStrength] = []
    r_values = tuple(range(1, r_max + 1))

    def partial_report() -> StrengthReport:
        return StrengthReport(
            instance_name=name,
            rule=rule,
            r_values=r_values,
            cap=cap,
            exact=sample_size is None,
            projects=tuple(rows),
            sample_size=sample_size,
            seed=seed,
        )

    try:
        _fill_rows(
            rows, instance, rule, tiebreak, funded0, r_values, cap,
            include_baselines, sample_size, seed, jobs, remaining,
        )
    except TimeBudgetExceeded as exc:
        exc.partial_report = partial_report()
        raise
    return partial_report()


def _fill_rows(
    rows, instance, rule, tiebreak, funded0, r_values, cap,
    include_baselines, sample_size, seed, jobs, remaining,
) -> None:
    for pid in sorted(instance.project_ids):
        if pid in funded0:
            rows.append(
                ProjectStrength(
                    project=pid,
                    funded=True,
                    min_deletions=0,
                    cheapest_deletion_cost=0,
                    cost_ratio=None,
                    win_probability={},
                    baseline_cost=Fraction(1) if include_baselines else None,
                    baseline_add=Fraction(1) if include_baselines else None,
                )
            )
            continue
        md = min_deletion_size(
            instance, rule, pid, tiebreak, cap, time_budget=remaining()
        )
        cheap = cheapest_deletion(
            instance, rule, pid, tiebreak,
            cap=None if rule in GREEDY_FAMILY else cap,
            time_budget=remaining(),
        )
        probs = {
            r: win_probability(
                instance,
                rule,
                pid,
                r,
                tiebreak,
                sample_size=sample_size,
                seed=seed,
                jobs=jobs,
                time_budget=remaining(),
            )
            for r in r_values
            if r <= instance.m - 1
        }
        rows.append(
            ProjectStrength(
                project=pid,
                funded=False,
                min_deletions=md,
                cheapest_deletion_cost=cheap[1] if cheap else None,
                cost_ratio=cost_ratio(instance, pid, cheap[1]) if cheap else None,
                win_probability=probs,
                baseline_cost=(
                    baseline_cost_measure(instance, rule, pid, tiebreak)
                    if include_baselines
                    else None
                ),
                baseline_add=(
                    baseline_add_measure(instance, rule, pid, tiebreak)
                    if include_baselines
                    else None
                ),
            )
        )
