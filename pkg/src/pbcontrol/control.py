"""Exact solvers for candidate-control problems over budgeting elections.

A control query asks whether a distinguished project can be made funded
(constructive goal) or unfunded (destructive goal) by deleting at most a
weight-r set of existing projects or by adding at most a weight-r set of
spoiler projects.  For add queries the instance must already contain the
spoiler projects together with their would-be approvals; the query marks
which ids are spoilers (initially inactive).

Solvers:

* ``dp_delete_control`` / ``dp_add_control`` -- budget-indexed dynamic
  programs, polynomial for the greedy-family rules when costs are small.
* ``greedy_unit_cost_control`` -- prefix-testing greedy for unit-cost
  instances under greedy-family rules (weights may be arbitrary).
* ``brute_force_control`` -- weight-bounded subset enumeration that works
  for every rule; for Phragmen and Equal Shares it is the only solver.
* ``count_solutions`` -- number of exactly-size-k successful subsets.

Every solver re-runs the rule on the witness it is about to return and
refuses to return an unsound answer.
"""

from __future__ import annotations

import enum
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from itertools import combinations
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from .core import Instance, Outcome, PbError, TieBreakOrder, UnknownProjectError
from .rules import GREEDY_FAMILY, Rule, evaluate, processing_order


class Goal(enum.Enum):
    CONSTRUCTIVE = "constructive"
    DESTRUCTIVE = "destructive"


class Operation(enum.Enum):
    DELETE = "delete"
    ADD = "add"


class TimeBudgetExceeded(PbError):
    """An enumeration hit its wall-clock deadline.

    ``checked`` is the number of subsets evaluated before the abort; the
    result over those subsets is reported via ``partial_answer`` (for
    solvers) or ``partial_count`` (for counting).
    """

    def __init__(self, message: str, checked: int = 0):
        super().__init__(message)
        self.checked = checked
        self.partial_answer: Optional["ControlAnswer"] = None
        self.partial_count: Optional[int] = None
        self.partial_report = None  # set by compute_strength_report


@dataclass(frozen=True)
class ControlQuery:
    """One control problem: rule x goal x operation x project x bound.

    ``weights`` maps every controllable project to a positive integer
    weight; omitted weights default to 1.  ``spoilers`` must be given for
    add queries and must not contain the distinguished project.
    """

    rule: Rule
    goal: Goal
    operation: Operation
    distinguished: str
    bound_r: int
    weights: Optional[Mapping[str, int]] = None
    spoilers: Optional[frozenset] = None

    def check(self, instance: Instance) -> None:
        if not instance.has_project(self.distinguished):
            raise UnknownProjectError(
                f"distinguished project {self.distinguished!r} not in instance"
            )
        if self.bound_r < 0:
            raise PbError(f"bound r must be >= 0, got {self.bound_r}")
        if self.operation is Operation.ADD:
            if self.spoilers is None:
                raise PbError("add-control queries need a set of spoiler projects")
            unknown = {p for p in self.spoilers if not instance.has_project(p)}
            if unknown:
                raise UnknownProjectError(
                    f"spoiler ids not in instance: {sorted(unknown)!r}"
                )
            if self.distinguished in self.spoilers:
                raise PbError("the distinguished project cannot be a spoiler")
        elif self.spoilers:
            raise PbError("delete-control queries must not declare spoilers")
        for pid in self.pool(instance):
            if self.weight(pid) < 1:
                raise PbError(f"weight of {pid!r} must be a positive integer")

    def weight(self, pid: str) -> int:
        if self.weights is None:
            return 1
        try:
            return self.weights[pid]
        except KeyError:
            raise PbError(f"no weight declared for controllable project {pid!r}")

    def pool(self, instance: Instance) -> Tuple[str, ...]:
        """The controllable projects, in instance order."""
        if self.operation is Operation.ADD:
            return tuple(p for p in instance.project_ids if p in self.spoilers)
        return tuple(p for p in instance.project_ids if p != self.distinguished)

    def standard_ids(self, instance: Instance) -> Tuple[str, ...]:
        if self.operation is Operation.ADD:
            return tuple(p for p in instance.project_ids if p not in self.spoilers)
        return instance.project_ids


@dataclass(frozen=True)
class ControlAnswer:
    """Result of a control query.

    When feasible, ``witness`` is a minimum-weight solution (projects to
    delete, or spoilers to add) and ``weight`` its total weight.
    """

    feasible: bool
    witness: Optional[frozenset] = None
    weight: Optional[int] = None


def goal_achieved(goal: Goal, outcome: Outcome, distinguished: str) -> bool:
    funded = distinguished in outcome.funded
    return funded if goal is Goal.CONSTRUCTIVE else not funded


def modified_instance(
    instance: Instance, query: ControlQuery, chosen: Iterable[str]
) -> Instance:
    """The election that results from applying ``chosen`` to the query.

    Delete queries remove the chosen projects; add queries activate the
    chosen spoilers (all other spoilers stay out of the election).
    """
    chosen = set(chosen)
    if query.operation is Operation.DELETE:
        return instance.without_projects(chosen)
    inactive = set(query.spoilers) - chosen
    return instance.without_projects(inactive)


def _verify_witness(
    instance: Instance,
    query: ControlQuery,
    tiebreak: Optional[TieBreakOrder],
    witness: frozenset,
) -> None:
    outcome = evaluate(query.rule, modified_instance(instance, query, witness), tiebreak)
    if not goal_achieved(query.goal, outcome, query.distinguished):
        raise PbError(
            f"internal error: witness {sorted(witness)!r} does not achieve the goal"
        )


def _goal_holds_for(
    instance: Instance,
    query: ControlQuery,
    tiebreak: Optional[TieBreakOrder],
    chosen: Iterable[str],
) -> bool:
    outcome = evaluate(query.rule, modified_instance(instance, query, chosen), tiebreak)
    return goal_achieved(query.goal, outcome, query.distinguished)


def prune_after_distinguished(
    instance: Instance,
    distinguished: str,
    rule: Rule,
    tiebreak: Optional[TieBreakOrder] = None,
) -> Instance:
    """Drop every project a greedy-family rule processes after ``distinguished``.

    Those projects can never influence whether the distinguished project
    is funded, and deleting any of them is never part of a minimum
    solution, so control problems on the reduced instance are equivalent.
    """
    instance.cost_of(distinguished)  # raises UnknownProjectError
    order = processing_order(instance, rule, tiebreak)
    idx = order.index(distinguished)
    return instance.without_projects(order[idx + 1:])


# ---------------------------------------------------------------------------
# Dynamic programs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DpTable:
    """Budget-indexed table of minimum partial-solution weights.

    ``layers[j]`` maps a remaining budget value beta to the minimum
    weight of a partial solution over the first j processed projects
    that leaves exactly beta unspent just before project j+1 is
    processed (``layers[0]`` is the start state ``{budget: 0}``).
    Weights above the bound are not stored; ``weight`` reports the
    sentinel ``bound + 1`` for such signatures.  ``partials[j][beta]``
    holds the witness behind each cell, as a tuple of indices into
    ``order`` (the minimum-weight one, lexicographically earliest).
    """

    order: Tuple[str, ...]
    budget: int
    bound: int
    layers: Tuple[Mapping[int, int], ...]
    partials: Tuple[Mapping[int, Tuple[int, ...]], ...]

    def weight(self, j: int, beta: int) -> int:
        return self.layers[j].get(beta, self.bound + 1)

    def partial(self, j: int, beta: int) -> Optional[Tuple[str, ...]]:
        idxs = self.partials[j].get(beta)
        if idxs is None:
            return None
        return tuple(self.order[i] for i in idxs)


def _order_before_distinguished(
    instance: Instance, query: ControlQuery, tiebreak: Optional[TieBreakOrder]
) -> Tuple[str, ...]:
    order = processing_order(instance, query.rule, tiebreak)
    return order[: order.index(query.distinguished)]


def _dp_run(
    instance: Instance,
    query: ControlQuery,
    order: Sequence[str],
    controllable: frozenset,
    control_means_present: bool,
) -> DpTable:
    """Forward DP over the processing order before the distinguished project.

    State: remaining budget after the first j projects were processed.
    A non-controllable project is simulated as-is (funded whenever it
    fits).  For a controllable project the solver branches: leave it in
    its default state, or spend its weight to flip it (delete it, or add
    the spoiler).  ``control_means_present`` says what the flipped state
    is: False for delete queries, True for add queries.
    """
    budget = instance.budget
    bound = query.bound_r
    states: Dict[int, Tuple[int, Tuple[int, ...]]] = {budget: (0, ())}
    layers = [dict(states)]
    for j, pid in enumerate(order):
        cost = instance.cost_of(pid)
        nxt: Dict[int, Tuple[int, Tuple[int, ...]]] = {}

        def offer(beta: int, weight: int, witness: Tuple[int, ...]) -> None:
            if weight > bound:
                return
            cur = nxt.get(beta)
            if cur is None or (weight, witness) < cur:
                nxt[beta] = (weight, witness)

        controllable_here = pid in controllable
        for beta, (w, witness) in states.items():
            # project in its default state
            if controllable_here and control_means_present:
                # spoiler not added: no effect on the budget
                offer(beta, w, witness)
            else:
                offer(beta - cost if beta >= cost else beta, w, witness)
            # spend the project's weight to flip it
            if controllable_here:
                wf = w + query.weight(pid)
                if control_means_present:
                    # added spoiler behaves like a present project
                    if beta >= cost:
                        offer(beta - cost, wf, witness + (j,))
                    # adding a spoiler that cannot be funded never helps
                else:
                    offer(beta, wf, witness + (j,))
        states = nxt
        layers.append(dict(states))
    return DpTable(
        order=tuple(order),
        budget=budget,
        bound=bound,
        layers=tuple({b: wp[0] for b, wp in layer.items()} for layer in layers),
        partials=tuple({b: wp[1] for b, wp in layer.items()} for layer in layers),
    )


def _dp_decide(
    instance: Instance,
    query: ControlQuery,
    tiebreak: Optional[TieBreakOrder],
    table: DpTable,
) -> ControlAnswer:
    cost_p = instance.cost_of(query.distinguished)
    final = table.layers[-1]
    partials = table.partials[-1]
    best: Optional[Tuple[int, Tuple[int, ...]]] = None
    for beta, w in final.items():
        funds_p = beta >= cost_p
        if funds_p != (query.goal is Goal.CONSTRUCTIVE):
            continue
        cand = (w, partials[beta])
        if best is None or cand < best:
            best = cand
    if best is None:
        return ControlAnswer(feasible=False)
    weight, idxs = best
    witness = frozenset(table.order[i] for i in idxs)
    _verify_witness(instance, query, tiebreak, witness)
    return ControlAnswer(feasible=True, witness=witness, weight=weight)


def dp_delete_control(
    instance: Instance, query: ControlQuery, tiebreak: Optional[TieBreakOrder] = None
) -> ControlAnswer:
    """Polynomial delete-control solver for the greedy-family rules.

    Runs a dynamic program over (projects processed, remaining budget)
    signatures; each cell keeps the minimum deletion weight that reaches
    the signature.  The distinguished project is funded in the end
    exactly when the remaining budget just before it is at least its
    cost, so the constructive answer reads off cells with
    ``beta >= cost(p)`` and the destructive answer cells with
    ``beta < cost(p)``.
    """
    query.check(instance)
    if query.operation is not Operation.DELETE:
        raise PbError("dp_delete_control only handles delete queries")
    if query.rule not in GREEDY_FAMILY:
        raise PbError("the delete-control DP requires a greedy-family rule")
    table = build_delete_table(instance, query, tiebreak)
    return _dp_decide(instance, query, tiebreak, table)


def build_delete_table(
    instance: Instance, query: ControlQuery, tiebreak: Optional[TieBreakOrder] = None
) -> DpTable:
    """The delete-control DP table (exposed for property checks)."""
    order = _order_before_distinguished(instance, query, tiebreak)
    return _dp_run(
        instance,
        query,
        order,
        controllable=frozenset(order),
        control_means_present=False,
    )


def dp_add_control(
    instance: Instance, query: ControlQuery, tiebreak: Optional[TieBreakOrder] = None
) -> ControlAnswer:
    """Polynomial add-control solver for the greedy-family rules.

    The processing order of standard and spoiler projects together is
    fixed regardless of which spoilers get added, so the same
    budget-indexed dynamic program applies: standard projects are forced
    moves, spoilers branch between "stay out" and "add and pay the
    weight".
    """
    query.check(instance)
    if query.operation is not Operation.ADD:
        raise PbError("dp_add_control only handles add queries")
    if query.rule not in GREEDY_FAMILY:
        raise PbError("the add-control DP requires a greedy-family rule")
    table = build_add_table(instance, query, tiebreak)
    return _dp_decide(instance, query, tiebreak, table)


def build_add_table(
    instance: Instance, query: ControlQuery, tiebreak: Optional[TieBreakOrder] = None
) -> DpTable:
    """The add-control DP table (exposed for property checks)."""
    order = _order_before_distinguished(instance, query, tiebreak)
    return _dp_run(
        instance,
        query,
        order,
        controllable=query.spoilers,
        control_means_present=True,
    )


# ---------------------------------------------------------------------------
# Greedy algorithm for unit costs
# ---------------------------------------------------------------------------

def greedy_unit_cost_control(
    instance: Instance, query: ControlQuery, tiebreak: Optional[TieBreakOrder] = None
) -> ControlAnswer:
    """Delete-control for unit-cost instances under greedy-family rules.

    With all prices equal, any project in a solution may be swapped for
    a not-deleted project of smaller weight, so some minimum-weight
    solution is a prefix of the weight-ascending ordering (ties resolved
    by processing order).  The solver therefore tests the prefixes
    D_0, D_1, ... and returns the first one that works within the bound.
    """
    query.check(instance)
    if query.operation is not Operation.DELETE:
        raise PbError("greedy_unit_cost_control only handles delete queries")
    if query.rule not in GREEDY_FAMILY:
        raise PbError("greedy_unit_cost_control requires a greedy-family rule")
    costs = {instance.cost_of(pid) for pid in instance.project_ids}
    if len(costs) > 1:
        raise PbError("greedy_unit_cost_control requires all costs to be equal")
    order = _order_before_distinguished(instance, query, tiebreak)
    by_weight = sorted(range(len(order)), key=lambda i: (query.weight(order[i]), i))
    chosen: List[str] = []
    total = 0
    for length in range(len(order) + 1):
        if total > query.bound_r:
            break
        if _goal_holds_for(instance, query, tiebreak, chosen):
            witness = frozenset(chosen)
            _verify_witness(instance, query, tiebreak, witness)
            return ControlAnswer(feasible=True, witness=witness, weight=total)
        if length < len(order):
            pid = order[by_weight[length]]
            chosen.append(pid)
            total += query.weight(pid)
    return ControlAnswer(feasible=False)


# ---------------------------------------------------------------------------
# Brute force and counting
# ---------------------------------------------------------------------------

def _enumeration_pool(
    instance: Instance, query: ControlQuery, tiebreak: Optional[TieBreakOrder]
) -> Tuple[str, ...]:
    """Candidate projects ordered for deterministic enumeration.

    Greedy-family rules enumerate in processing order; the continuous
    rules have no static order, so the instance order is used.
    """
    if query.rule in GREEDY_FAMILY:
        order = processing_order(instance, query.rule, tiebreak)
    else:
        order = instance.project_ids
    pool = set(query.pool(instance))
    return tuple(pid for pid in order if pid in pool)


def _weight_sorted_subsets(
    pool: Sequence[str], query: ControlQuery
) -> List[Tuple[int, Tuple[int, ...]]]:
    """All index subsets with total weight <= r, sorted by (weight, indices).

    Weights are positive integers, so no qualifying subset has more than
    r elements; enumerating by cardinality keeps the search bounded.
    """
    weights = [query.weight(pid) for pid in pool]
    out: List[Tuple[int, Tuple[int, ...]]] = []
    max_size = min(len(pool), query.bound_r)
    for k in range(max_size + 1):
        for combo in combinations(range(len(pool)), k):
            w = sum(weights[i] for i in combo)
            if w <= query.bound_r:
                out.append((w, combo))
    out.sort()
    return out


def _eval_subset_chunk(args) -> Optional[Tuple[int, Tuple[int, ...]]]:
    """Worker: first successful (weight, combo) within a sorted chunk."""
    instance, query, tiebreak, pool, chunk = args
    for w, combo in chunk:
        chosen = [pool[i] for i in combo]
        if _goal_holds_for(instance, query, tiebreak, chosen):
            return (w, combo)
    return None


def brute_force_control(
    instance: Instance,
    query: ControlQuery,
    tiebreak: Optional[TieBreakOrder] = None,
    jobs: int = 1,
    time_budget: Optional[float] = None,
) -> ControlAnswer:
    """Exhaustive control solver: works for every rule.

    Enumerates all subsets of the controllable pool with total weight at
    most r in (weight, lexicographic) order and re-runs the rule per
    subset, so the returned witness is a minimum-weight one.  The result
    does not depend on ``jobs``.  ``time_budget`` (seconds) aborts the
    enumeration with :class:`TimeBudgetExceeded`; the partial answer over
    the subsets checked so far is attached to the exception.
    """
    query.check(instance)
    pool = _enumeration_pool(instance, query, tiebreak)
    subsets = _weight_sorted_subsets(pool, query)
    deadline = None if time_budget is None else time.monotonic() + time_budget
    if time_budget is not None:
        jobs = 1  # clean abort semantics need the sequential path
    best: Optional[Tuple[int, Tuple[int, ...]]] = None
    if jobs <= 1:
        for checked, (w, combo) in enumerate(subsets):
            if deadline is not None and checked % 64 == 0 and time.monotonic() > deadline:
                exc = TimeBudgetExceeded(
                    f"time budget exhausted after {checked} of {len(subsets)} subsets",
                    checked=checked,
                )
                exc.partial_answer = ControlAnswer(feasible=False)
                raise exc
            chosen = [pool[i] for i in combo]
            if _goal_holds_for(instance, query, tiebreak, chosen):
                best = (w, combo)
                break
    else:
        chunks = [subsets[i::jobs] for i in range(jobs)]
        with ProcessPoolExecutor(max_workers=jobs) as pex:
            results = list(
                pex.map(
                    _eval_subset_chunk,
                    [(instance, query, tiebreak, pool, c) for c in chunks],
                )
            )
        hits = [r for r in results if r is not None]
        best = min(hits) if hits else None
    if best is None:
        return ControlAnswer(feasible=False)
    w, combo = best
    witness = frozenset(pool[i] for i in combo)
    _verify_witness(instance, query, tiebreak, witness)
    return ControlAnswer(feasible=True, witness=witness, weight=w)


def _count_chunk(args) -> int:
    instance, query, tiebreak, pool, combos = args
    hits = 0
    for combo in combos:
        if _goal_holds_for(instance, query, tiebreak, [pool[i] for i in combo]):
            hits += 1
    return hits


def count_solutions(
    instance: Instance,
    query: ControlQuery,
    k: int,
    tiebreak: Optional[TieBreakOrder] = None,
    jobs: int = 1,
    time_budget: Optional[float] = None,
) -> int:
    """Number of exactly-size-k subsets of the pool achieving the goal.

    Counting is unweighted (the probabilistic strength measures condition
    on the number of removed projects, not on weights); ``k`` larger than
    the pool yields 0.  Partitioning over workers merges by addition, so
    the count is identical for every ``jobs`` value.
    """
    query.check(instance)
    if k < 0:
        raise PbError(f"subset size must be >= 0, got {k}")
    pool = _enumeration_pool(instance, query, tiebreak)
    if k > len(pool):
        return 0
    combos = list(combinations(range(len(pool)), k))
    deadline = None if time_budget is None else time.monotonic() + time_budget
    if time_budget is not None:
        jobs = 1
    if jobs <= 1:
        hits = 0
        for checked, combo in enumerate(combos):
            if deadline is not None and checked % 64 == 0 and time.monotonic() > deadline:
                exc = TimeBudgetExceeded(
                    f"time budget exhausted after {checked} of {len(combos)} subsets",
                    checked=checked,
                )
                exc.partial_count = hits
                raise exc
            if _goal_holds_for(instance, query, tiebreak, [pool[i] for i in combo]):
                hits += 1
        return hits
    chunks = [combos[i::jobs] for i in range(jobs)]
    with ProcessPoolExecutor(max_workers=jobs) as pex:
        parts = list(
            pex.map(_count_chunk, [(instance, query, tiebreak, pool, c) for c in chunks])
        )
    return sum(parts)


def solve_control(
    instance: Instance,
    query: ControlQuery,
    tiebreak: Optional[TieBreakOrder] = None,
    jobs: int = 1,
    time_budget: Optional[float] = None,
) -> Tuple[ControlAnswer, str]:
    """Dispatch to the fastest sound solver for the query's rule.

    Greedy-family rules have polynomial dynamic programs for both
    operations; everything else falls back to brute force.
    """
    if query.rule in GREEDY_FAMILY:
        if query.operation is Operation.DELETE:
            return dp_delete_control(instance, query, tiebreak), "dp-delete"
        return dp_add_control(instance, query, tiebreak), "dp-add"
    answer = brute_force_control(
        instance, query, tiebreak, jobs=jobs, time_budget=time_budget
    )
    return answer, "brute-force"
