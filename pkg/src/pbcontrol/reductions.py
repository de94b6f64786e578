"""Adversarial control instances built from exact-cover problems.

A restricted exact-cover source problem (universe of 3N elements, 3N
size-3 subsets, every element in exactly 3 subsets) is translated into a
budgeting election plus a control query such that the control is
feasible if and only if the source instance has an exact cover.  These
builders double as a high-value test corpus: the equivalence can be
checked mechanically with the brute-force solver, and the constructions
pin down exact funding times that make good regression anchors for the
Phragmen kernel.

Builders are named after the rule, the goal, and the operation, e.g.
``build_greedyav_ccdc`` is constructive control by deleting candidates
under the greedy approval rule.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Tuple

from .control import ControlQuery, Goal, Operation
from .core import Instance, Project, TieBreakOrder, validate_instance
from .rules import Rule


@dataclass(frozen=True)
class Rx3cInstance:
    """Universe {1..3N} with 3N size-3 subsets, each element in exactly 3.

    ``family`` may contain repeated subsets (at N = 1 all three subsets
    necessarily equal {1, 2, 3}).
    """

    n_param: int
    family: Tuple[frozenset, ...]

    def __post_init__(self):
        n = self.n_param
        if n < 1:
            raise ValueError(f"N must be >= 1, got {n}")
        if len(self.family) != 3 * n:
            raise ValueError(f"family must contain exactly {3 * n} subsets")
        occurrences: Dict[int, int] = {u: 0 for u in self.universe}
        for s in self.family:
            if len(s) != 3:
                raise ValueError(f"subset {sorted(s)} does not have size 3")
            for u in s:
                if u not in occurrences:
                    raise ValueError(f"element {u} outside universe 1..{3 * n}")
                occurrences[u] += 1
        bad = {u: c for u, c in occurrences.items() if c != 3}
        if bad:
            raise ValueError(f"elements not occurring exactly 3 times: {bad}")

    @property
    def universe(self) -> Tuple[int, ...]:
        return tuple(range(1, 3 * self.n_param + 1))

    def pairwise_intersections_bounded(self) -> bool:
        """Strict-mode check: every two subsets share at most one element."""
        fam = self.family
        for i in range(len(fam)):
            for j in range(i + 1, len(fam)):
                if len(fam[i] & fam[j]) > 1:
                    return False
        return True


def rx3c_has_exact_cover(inst: Rx3cInstance) -> Optional[Tuple[int, ...]]:
    """Indices of N pairwise-disjoint subsets covering the universe, or None.

    Backtracking over the lowest-index uncovered element; exhaustive, so
    a ``None`` answer is a proof that no exact cover exists.
    """
    n = inst.n_param
    containing: Dict[int, List[int]] = {u: [] for u in inst.universe}
    for idx, s in enumerate(inst.family):
        for u in s:
            containing[u].append(idx)

    chosen: List[int] = []
    covered: set = set()

    def backtrack() -> bool:
        if len(chosen) == n:
            return len(covered) == 3 * n
        uncovered = next(u for u in inst.universe if u not in covered)
        for idx in containing[uncovered]:
            s = inst.family[idx]
            if covered & s:
                continue
            chosen.append(idx)
            covered.update(s)
            if backtrack():
                return True
            chosen.pop()
            covered.difference_update(s)
        return False

    if backtrack():
        return tuple(chosen)
    return None


def _chunk_into_triples(rng: random.Random, items: List[int]) -> Optional[List[frozenset]]:
    """One attempt at splitting a multiset of elements into repeat-free triples."""
    pool = items[:]
    rng.shuffle(pool)
    triples = []
    for i in range(0, len(pool), 3):
        t = pool[i : i + 3]
        if len(set(t)) != 3:
            return None
        triples.append(frozenset(t))
    return triples


def planted_cover_instance(
    n_param: int, seed: int, max_tries: int = 10_000
) -> Tuple[Rx3cInstance, Tuple[int, ...]]:
    """Random instance with a known exact cover, plus the cover's indices.

    A random partition of the universe provides N disjoint subsets; the
    remaining 2N subsets are drawn so that every element appears exactly
    two more times.
    """
    rng = random.Random(seed)
    universe = list(range(1, 3 * n_param + 1))
    rng.shuffle(universe)
    cover = [frozenset(universe[i : i + 3]) for i in range(0, len(universe), 3)]
    rest = None
    for _ in range(max_tries):
        rest = _chunk_into_triples(rng, sorted(universe) * 2)
        if rest is not None:
            break
    if rest is None:
        raise RuntimeError("failed to complete the planted family")
    family = cover + rest
    positions = list(range(len(family)))
    rng.shuffle(positions)
    shuffled = [family[i] for i in positions]
    planted = tuple(sorted(positions.index(i) for i in range(n_param)))
    inst = Rx3cInstance(n_param=n_param, family=tuple(shuffled))
    assert rx3c_has_exact_cover(inst) is not None
    return inst, planted


def random_rx3c_instance(n_param: int, seed: int, max_tries: int = 10_000) -> Rx3cInstance:
    """Uniform-ish valid instance: every element drawn with multiplicity 3."""
    rng = random.Random(seed)
    universe = list(range(1, 3 * n_param + 1))
    for _ in range(max_tries):
        triples = _chunk_into_triples(rng, universe * 3)
        if triples is not None:
            return Rx3cInstance(n_param=n_param, family=tuple(triples))
    raise RuntimeError("failed to draw a valid family")


def no_cover_instance(n_param: int, seed: int, max_tries: int = 10_000) -> Rx3cInstance:
    """Random instance verified (by the exhaustive oracle) to have no cover.

    At N = 1 every valid instance trivially has a cover, so none exists.
    """
    if n_param < 2:
        raise ValueError("every N = 1 instance has an exact cover")
    rng = random.Random(seed)
    for _ in range(max_tries):
        inst = random_rx3c_instance(n_param, rng.randrange(2**32))
        if rx3c_has_exact_cover(inst) is None:
            return inst
    raise RuntimeError("failed to find a cover-free instance")


@dataclass(frozen=True)
class BuiltControlInstance:
    """An election, the control query it was built for, and its tie-break."""

    instance: Instance
    query: ControlQuery
    tiebreak: TieBreakOrder
    name: str


def _set_project_cost(subset: frozenset) -> int:
    """Base-4 encoding: digit 1 at the position of each covered element."""
    return sum(4**i for i in subset)


def _geometric_sum(n_param: int) -> int:
    """sum of 4^i for i in 1..3N (a base-4 number of all-ones digits)."""
    return sum(4**i for i in range(1, 3 * n_param + 1))


def _finish(instance: Instance, query: ControlQuery, name: str) -> BuiltControlInstance:
    validate_instance(instance)
    tiebreak = TieBreakOrder.from_instance(instance)
    query.check(instance)
    return BuiltControlInstance(instance=instance, query=query, tiebreak=tiebreak, name=name)


def build_greedyav_ccdc(inst: Rx3cInstance) -> BuiltControlInstance:
    """Constructive delete-control, greedy approval rule, two voters.

    Set-project costs encode their subsets in base 4; the distinguished
    project costs the all-ones base-4 number and the N+1 guards one unit
    more.  Without deletions the set-projects exhaust the budget exactly;
    deleting projects of total cost exactly cost(p) -- which forces an
    exact cover -- leaves precisely enough for the distinguished project.
    """
    n = inst.n_param
    sets = [(f"s{j}", _set_project_cost(s)) for j, s in enumerate(inst.family, start=1)]
    cost_p = _geometric_sum(n)
    guards = [(f"g{i}", cost_p + 1) for i in range(1, n + 2)]
    projects = sets + guards + [("p", cost_p)]
    set_ids = [pid for pid, _ in sets]
    v1 = set_ids + [pid for pid, _ in guards]
    v2 = set_ids
    instance = Instance(
        projects=tuple(Project(pid, c) for pid, c in projects),
        ballots=(frozenset(v1), frozenset(v2)),
        budget=3 * cost_p,
        metadata={"description": "base-4 cover encoding, constructive deletion"},
    )
    query = ControlQuery(
        rule=Rule.GREEDY_AV,
        goal=Goal.CONSTRUCTIVE,
        operation=Operation.DELETE,
        distinguished="p",
        bound_r=n,
    )
    return _finish(instance, query, "greedyav-ccdc")


def build_greedyav_dcdc(inst: Rx3cInstance) -> BuiltControlInstance:
    """Destructive variant: one guard, a unit-cost distinguished project.

    The budget leaves exactly one spare unit, so the distinguished
    project starts funded; an exact-cover deletion hands that remainder
    plus the freed funds to the guard, which then starves it out.
    """
    n = inst.n_param
    sets = [(f"s{j}", _set_project_cost(s)) for j, s in enumerate(inst.family, start=1)]
    ones = _geometric_sum(n)
    projects = sets + [("g", ones + 1), ("p", 1)]
    set_ids = [pid for pid, _ in sets]
    instance = Instance(
        projects=tuple(Project(pid, c) for pid, c in projects),
        ballots=(frozenset(set_ids + ["g"]), frozenset(set_ids)),
        budget=3 * ones + 1,
        metadata={"description": "base-4 cover encoding, destructive deletion"},
    )
    query = ControlQuery(
        rule=Rule.GREEDY_AV,
        goal=Goal.DESTRUCTIVE,
        operation=Operation.DELETE,
        distinguished="p",
        bound_r=n,
    )
    return _finish(instance, query, "greedyav-dcdc")


def build_phragmen_ccdc(inst: Rx3cInstance) -> BuiltControlInstance:
    """Constructive delete-control under Phragmen, all costs one.

    3N set-projects (3N supporters each, fundable at time 1/(3N)),
    N guard-projects per element sharing their single supporter with the
    covering set-projects, and a distinguished project with one loyal
    voter.  Budget N+1, bound 2N; only deleting everything outside an
    exact cover silences the guards early enough for the distinguished
    project's supporter to reach its cost.
    """
    n = inst.n_param
    set_ids = [f"s{j}" for j in range(1, 3 * n + 1)]
    guard_ids = [f"g{i}_{l}" for i in range(1, 3 * n + 1) for l in range(1, n + 1)]
    projects = [(pid, 1) for pid in set_ids + guard_ids] + [("p", 1)]
    ballots: List[frozenset] = [frozenset({"p"})]
    for i in range(1, 3 * n + 1):
        sets_with_i = [f"s{j}" for j, s in enumerate(inst.family, start=1) if i in s]
        for l in range(1, n + 1):
            ballots.append(frozenset([f"g{i}_{l}"] + sets_with_i))
    instance = Instance(
        projects=tuple(Project(pid, c) for pid, c in projects),
        ballots=tuple(ballots),
        budget=n + 1,
        metadata={"description": "unit-cost guard grid, constructive deletion"},
    )
    query = ControlQuery(
        rule=Rule.PHRAGMEN,
        goal=Goal.CONSTRUCTIVE,
        operation=Operation.DELETE,
        distinguished="p",
        bound_r=2 * n,
    )
    return _finish(instance, query, "phragmen-ccdc")


def build_phragmen_dcdc(inst: Rx3cInstance) -> BuiltControlInstance:
    """Destructive delete-control under Phragmen, all costs one.

    Every element brings eight voters for its set-projects, six of whom
    also back the element's guard-project; six dedicated voters per
    set-project and five for the distinguished one.  Initially the
    distinguished project is funded at time 1/5; deleting the complement
    of an exact cover makes every set-project resolve at time 1/30, which
    lines all guards up at exactly time 1/5 ahead of it in the tie-break.
    """
    n = inst.n_param
    set_ids = [f"s{j}" for j in range(1, 3 * n + 1)]
    guard_ids = [f"g{i}" for i in range(1, 3 * n + 1)]
    projects = [(pid, 1) for pid in set_ids + guard_ids] + [("p", 1)]
    ballots: List[frozenset] = []
    for i in range(1, 3 * n + 1):
        sets_with_i = [f"s{j}" for j, s in enumerate(inst.family, start=1) if i in s]
        for copy in range(1, 9):
            approved = list(sets_with_i)
            if copy <= 6:
                approved.append(f"g{i}")
            ballots.append(frozenset(approved))
    for j in range(1, 3 * n + 1):
        ballots.extend([frozenset({f"s{j}"})] * 6)
    ballots.extend([frozenset({"p"})] * 5)
    instance = Instance(
        projects=tuple(Project(pid, c) for pid, c in projects),
        ballots=tuple(ballots),
        budget=4 * n,
        metadata={"description": "unit-cost eight-voter gadget, destructive deletion"},
    )
    query = ControlQuery(
        rule=Rule.PHRAGMEN,
        goal=Goal.DESTRUCTIVE,
        operation=Operation.DELETE,
        distinguished="p",
        bound_r=2 * n,
    )
    return _finish(instance, query, "phragmen-dcdc")


def _greedyav_add(inst: Rx3cInstance, destructive: bool) -> BuiltControlInstance:
    n = inst.n_param
    ones = _geometric_sum(n)
    cost_g, cost_p = (ones, 1) if destructive else (ones + 1, ones)
    sets = [(f"s{j}", _set_project_cost(s)) for j, s in enumerate(inst.family, start=1)]
    projects = sets + [("g", cost_g), ("p", cost_p)]
    set_ids = [pid for pid, _ in sets]
    instance = Instance(
        projects=tuple(Project(pid, c) for pid, c in projects),
        ballots=(frozenset(set_ids + ["g"]), frozenset(set_ids)),
        budget=2 * ones,
        metadata={"description": "base-4 cover encoding, spoiler addition"},
    )
    query = ControlQuery(
        rule=Rule.GREEDY_AV,
        goal=Goal.DESTRUCTIVE if destructive else Goal.CONSTRUCTIVE,
        operation=Operation.ADD,
        distinguished="p",
        bound_r=n,
        spoilers=frozenset(set_ids),
    )
    return _finish(instance, query, "greedyav-dcac" if destructive else "greedyav-ccac")


def build_greedyav_ccac(inst: Rx3cInstance) -> BuiltControlInstance:
    """Constructive add-control, greedy approval rule, two standard projects.

    With no spoilers the guard wins and leaves one unit short of the
    distinguished project's cost; activating spoilers worth exactly
    cost(p) -- an exact cover -- starves the guard and funds p.
    """
    return _greedyav_add(inst, destructive=False)


def build_greedyav_dcac(inst: Rx3cInstance) -> BuiltControlInstance:
    """Destructive add-control: spoilers summing to cost(g) re-enable the guard."""
    return _greedyav_add(inst, destructive=True)


def build_phragmen_ccac(inst: Rx3cInstance) -> BuiltControlInstance:
    """Constructive add-control under Phragmen.

    Same layout as the constructive deletion gadget, with the
    set-projects turned into spoilers and the bound lowered to N.
    """
    built = build_phragmen_ccdc(inst)
    instance = replace(
        built.instance,
        metadata={"description": "unit-cost guard grid, spoiler addition"},
    )
    set_ids = frozenset(f"s{j}" for j in range(1, 3 * inst.n_param + 1))
    query = ControlQuery(
        rule=Rule.PHRAGMEN,
        goal=Goal.CONSTRUCTIVE,
        operation=Operation.ADD,
        distinguished="p",
        bound_r=inst.n_param,
        spoilers=set_ids,
    )
    return _finish(instance, query, "phragmen-ccac")


def build_phragmen_dcac(inst: Rx3cInstance) -> BuiltControlInstance:
    """Destructive add-control under Phragmen, all costs one.

    3N - 1 voters back a guard, one voter per element backs the
    distinguished project and the spoiler set-projects containing it,
    and a block of dummy voters per spoiler makes spoilers resolve
    almost instantly.  Adding an exact cover drains the distinguished
    project's supporters precisely enough that it ties with the guard at
    time 1/(3N - 1) and loses the tie-break.
    """
    n = inst.n_param
    x = 9 * n * n - 3 * n - 3
    set_ids = [f"s{j}" for j in range(1, 3 * n + 1)]
    projects = [(pid, 1) for pid in set_ids] + [("g", 1), ("p", 1)]
    ballots: List[frozenset] = [frozenset({"g"})] * (3 * n - 1)
    for i in range(1, 3 * n + 1):
        sets_with_i = [f"s{j}" for j, s in enumerate(inst.family, start=1) if i in s]
        ballots.append(frozenset(["p"] + sets_with_i))
    for j in range(1, 3 * n + 1):
        ballots.extend([frozenset({f"s{j}"})] * x)
    instance = Instance(
        projects=tuple(Project(pid, c) for pid, c in projects),
        ballots=tuple(ballots),
        budget=n + 1,
        metadata={"description": "unit-cost dummy-voter gadget, spoiler addition"},
    )
    query = ControlQuery(
        rule=Rule.PHRAGMEN,
        goal=Goal.DESTRUCTIVE,
        operation=Operation.ADD,
        distinguished="p",
        bound_r=n,
        spoilers=frozenset(set_ids),
    )
    return _finish(instance, query, "phragmen-dcac")


#: Builders keyed by the short names used on the command line.
BUILDERS = {
    "1": build_greedyav_ccdc,
    "1d": build_greedyav_dcdc,
    "3": build_phragmen_ccdc,
    "4": build_phragmen_dcdc,
    "6": build_greedyav_ccac,
    "6d": build_greedyav_dcac,
    "8": build_phragmen_ccac,
    "9": build_phragmen_dcac,
}
