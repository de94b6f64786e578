"""Resolute implementations of four participatory budgeting rules.

* ``greedy_av``   -- processes projects by decreasing approval score and
  funds every project that still fits into the budget.
* ``greedy_cost`` -- identical, but the score is approvals divided by
  cost (compared as exact fractions).
* ``phragmen``    -- continuous process: every voter's virtual account
  grows by one unit of money per unit of time; a project is funded the
  moment its supporters' accounts sum to its cost, which resets those
  accounts; projects that no longer fit the remaining budget are dropped.
* ``equal_shares``-- every voter holds budget/n; in each round the rule
  funds the project whose supporters can cover its cost with the
  smallest per-supporter payment fraction q, each supporter paying
  min(balance, q * cost).

All ties (equal score, equal funding time, equal q) are resolved by a
single total tie-breaking order; by default the order in which projects
appear in the instance.  Every computation is exact: times, balances and
payment fractions are ``fractions.Fraction`` values.
"""

from __future__ import annotations

import enum
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .core import (
    Instance,
    Outcome,
    PbError,
    TieBreakOrder,
    TraceEvent,
    UnknownProjectError,
)


class Rule(enum.Enum):
    """The four supported budgeting rules."""

    GREEDY_AV = "greedy-av"
    GREEDY_COST = "greedy-cost"
    PHRAGMEN = "phragmen"
    EQUAL_SHARES = "equal-shares"

    @classmethod
    def parse(cls, name: str) -> "Rule":
        for rule in cls:
            if rule.value == name:
                return rule
        raise PbError(f"unknown rule {name!r}; choose from "
                      + ", ".join(r.value for r in cls))


#: Rules whose processing order does not depend on which projects are present.
GREEDY_FAMILY = frozenset({Rule.GREEDY_AV, Rule.GREEDY_COST})


def _resolve_tiebreak(instance: Instance, tiebreak: Optional[TieBreakOrder]) -> TieBreakOrder:
    if tiebreak is None:
        return TieBreakOrder.from_instance(instance)
    if not tiebreak.covers(instance.project_ids):
        missing = [pid for pid in instance.project_ids if pid not in tiebreak._ranks]
        raise UnknownProjectError(
            f"tie-break order does not cover project ids {missing!r}"
        )
    return tiebreak


def processing_order(
    instance: Instance, rule: Rule, tiebreak: Optional[TieBreakOrder] = None
) -> Tuple[str, ...]:
    """The order in which a greedy-family rule considers the projects.

    Deleting or adding projects does not change the relative order of
    the remaining ones, because scores depend only on the (fixed) voters.
    """
    if rule not in GREEDY_FAMILY:
        raise PbError(f"{rule.value} has no static processing order")
    tb = _resolve_tiebreak(instance, tiebreak)
    if rule is Rule.GREEDY_AV:
        def sort_key(pid: str):
            return (-instance.score(pid), tb.rank(pid))
    else:
        def sort_key(pid: str):
            return (-Fraction(instance.score(pid), instance.cost_of(pid)), tb.rank(pid))
    return tuple(sorted(instance.project_ids, key=sort_key))


def _greedy(instance: Instance, order: Sequence[str]) -> Outcome:
    funded = []
    spent = 0
    trace = []
    for rnd, pid in enumerate(order, start=1):
        cost = instance.cost_of(pid)
        ok = spent + cost <= instance.budget
        if ok:
            funded.append(pid)
            spent += cost
        trace.append(TraceEvent(project=pid, round=rnd, funded=ok))
    return Outcome(funded=frozenset(funded), trace=tuple(trace))


def greedy_av(instance: Instance, tiebreak: Optional[TieBreakOrder] = None) -> Outcome:
    """Greedy rule ordered by approval score."""
    return _greedy(instance, processing_order(instance, Rule.GREEDY_AV, tiebreak))


def greedy_cost(instance: Instance, tiebreak: Optional[TieBreakOrder] = None) -> Outcome:
    """Greedy rule ordered by approval score per unit of cost."""
    return _greedy(instance, processing_order(instance, Rule.GREEDY_COST, tiebreak))


def phragmen(instance: Instance, tiebreak: Optional[TieBreakOrder] = None) -> Outcome:
    """Continuous Phragmen process with exact rational event times.

    Implementation note: a voter's balance at time t equals
    ``t - last_reset`` where ``last_reset`` is the moment the voter last
    paid for a funded project (initially 0).  Project p with supporter
    set A reaches its cost at ``t_p = (cost(p) + sum of last_reset over
    A) / |A|``.  Each round funds the single project with the smallest
    t_p (ties by the tie-breaking order), resets its supporters, drops
    projects that no longer fit the budget, and recomputes.  Projects
    without supporters are never funded.
    """
    tb = _resolve_tiebreak(instance, tiebreak)
    last_reset: List[Fraction] = [Fraction(0)] * instance.n
    funded: List[str] = []
    spent = 0
    trace: List[TraceEvent] = []
    candidates = [
        pid
        for pid in instance.project_ids
        if instance.approvers(pid) and instance.cost_of(pid) <= instance.budget
    ]
    rnd = 0
    while candidates:
        best_pid = None
        best_time = None
        for pid in candidates:
            sup = instance.approvers(pid)
            acc = sum((last_reset[v] for v in sup), Fraction(0))
            t = (instance.cost_of(pid) + acc) / len(sup)
            if (
                best_time is None
                or t < best_time
                or (t == best_time and tb.rank(pid) < tb.rank(best_pid))
            ):
                best_pid, best_time = pid, t
        rnd += 1
        funded.append(best_pid)
        spent += instance.cost_of(best_pid)
        trace.append(
            TraceEvent(project=best_pid, round=rnd, funded=True, time=best_time)
        )
        for v in instance.approvers(best_pid):
            last_reset[v] = best_time
        candidates = [
            pid
            for pid in candidates
            if pid != best_pid and spent + instance.cost_of(pid) <= instance.budget
        ]
    return Outcome(funded=frozenset(funded), trace=tuple(trace))


def minimal_q(balances: Sequence[Fraction], cost: int) -> Optional[Fraction]:
    """Smallest q with ``sum(min(b_i, q * cost)) == cost``, or ``None``.

    ``None`` means the balances cannot cover the cost at all (their sum
    is below the cost); otherwise the minimal q is at most 1.  Computed
    exactly by sweeping the breakpoints of the piecewise-linear left
    side in ascending balance order: if the j smallest balances are
    capped, the remaining supporters each pay q * cost, so
    ``q = (cost - prefix_j) / ((k - j) * cost)``.
    """
    if cost < 1:
        raise PbError(f"cost must be >= 1, got {cost}")
    amounts = [Fraction(b) for b in balances]
    total = sum(amounts, Fraction(0))
    if total < cost:
        return None
    bal = sorted(amounts)
    k = len(bal)
    best: Optional[Fraction] = None
    prefix = Fraction(0)
    for j in range(k):
        # first j balances capped at their value, rest pay q*cost
        q = (cost - prefix) / ((k - j) * cost)
        lo_ok = j == 0 or bal[j - 1] <= q * cost
        hi_ok = q * cost <= bal[j]
        if lo_ok and hi_ok and q >= 0 and (best is None or q < best):
            best = q
        prefix += bal[j]
    if prefix == cost:
        # all supporters capped: q only needs to reach the largest balance
        q = bal[-1] / cost
        if best is None or q < best:
            best = q
    assert best is not None and 0 <= best <= 1
    return best


def equal_shares(instance: Instance, tiebreak: Optional[TieBreakOrder] = None) -> Outcome:
    """Method of Equal Shares with exact rational balances."""
    outcome, _ = equal_shares_with_payments(instance, tiebreak)
    return outcome


def equal_shares_with_payments(
    instance: Instance, tiebreak: Optional[TieBreakOrder] = None
) -> Tuple[Outcome, Dict[Tuple[int, str], Fraction]]:
    """Equal Shares returning the full per-voter payment matrix.

    Every voter starts with budget/n.  Each round funds the project that
    is q-affordable for the smallest q; each supporter pays
    ``min(balance, q * cost)``.  The rule stops when no project is
    affordable for any q <= 1.
    """
    if instance.n == 0:
        raise PbError("Equal Shares is undefined for an instance with no voters")
    tb = _resolve_tiebreak(instance, tiebreak)
    share = Fraction(instance.budget, instance.n)
    balance: List[Fraction] = [share] * instance.n
    payments: Dict[Tuple[int, str], Fraction] = {}
    funded: List[str] = []
    trace: List[TraceEvent] = []
    remaining = [pid for pid in instance.project_ids if instance.approvers(pid)]
    rnd = 0
    while True:
        best_pid = None
        best_q = None
        for pid in remaining:
            cost = instance.cost_of(pid)
            q = minimal_q([balance[v] for v in instance.approvers(pid)], cost)
            if q is None:
                continue
            if (
                best_q is None
                or q < best_q
                or (q == best_q and tb.rank(pid) < tb.rank(best_pid))
            ):
                best_pid, best_q = pid, q
        if best_pid is None:
            break
        rnd += 1
        cost = instance.cost_of(best_pid)
        for v in instance.approvers(best_pid):
            pay = min(balance[v], best_q * cost)
            balance[v] -= pay
            payments[(v, best_pid)] = pay
        funded.append(best_pid)
        trace.append(TraceEvent(project=best_pid, round=rnd, funded=True, q=best_q))
        remaining.remove(best_pid)
    return Outcome(funded=frozenset(funded), trace=tuple(trace)), payments


_EVALUATORS: Dict[Rule, Callable[..., Outcome]] = {
    Rule.GREEDY_AV: greedy_av,
    Rule.GREEDY_COST: greedy_cost,
    Rule.PHRAGMEN: phragmen,
    Rule.EQUAL_SHARES: equal_shares,
}


def evaluate(
    rule: Rule, instance: Instance, tiebreak: Optional[TieBreakOrder] = None
) -> Outcome:
    """Run the given rule on the instance."""
    return _EVALUATORS[rule](instance, tiebreak)
