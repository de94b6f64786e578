"""Domain model for participatory budgeting elections.

An election is a set of projects with integer costs, a list of approval
ballots, and an integer budget.  Costs and budgets are plain Python
integers (arbitrary precision; some of the adversarial benchmark
instances use costs that overflow 64 bits).  All fractional quantities
(funding times, payment shares) are exact ``fractions.Fraction`` values;
no floating point is used anywhere in the simulation kernels.

Instances, tie-breaking orders, and outcomes are immutable after
construction and safe to share between worker processes.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Dict, Iterable, Mapping, Optional, Tuple

logger = logging.getLogger(__name__)

#: Exact rational number used for Phragmen times and Equal-Shares balances.
Rational = Fraction


class PbError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInstanceError(PbError):
    """The election instance violates a structural invariant."""


class UnknownProjectError(PbError):
    """A project id does not occur in the instance at hand."""


@dataclass(frozen=True)
class Project:
    """A single project: an opaque string id and a positive integer cost."""

    id: str
    cost: int


@dataclass(frozen=True)
class Instance:
    """An election: projects with costs, approval ballots, and a budget.

    ``projects`` keeps the input order (which also seeds the default
    tie-breaking order).  ``ballots`` is one approval set per voter;
    voters with empty approval sets still count towards ``n``.
    ``metadata`` carries free-form string annotations (election name,
    source-file fields, cost scaling notes).
    """

    projects: Tuple[Project, ...]
    ballots: Tuple[frozenset, ...]
    budget: int
    metadata: Mapping[str, str] = field(default_factory=dict)

    @property
    def m(self) -> int:
        """Number of projects."""
        return len(self.projects)

    @property
    def n(self) -> int:
        """Number of voters."""
        return len(self.ballots)

    @cached_property
    def project_ids(self) -> Tuple[str, ...]:
        return tuple(p.id for p in self.projects)

    @cached_property
    def _cost_by_id(self) -> Dict[str, int]:
        return {p.id: p.cost for p in self.projects}

    @cached_property
    def _supporters(self) -> Dict[str, Tuple[int, ...]]:
        sup: Dict[str, list] = {p.id: [] for p in self.projects}
        for i, ballot in enumerate(self.ballots):
            for pid in ballot:
                if pid in sup:
                    sup[pid].append(i)
        return {pid: tuple(voters) for pid, voters in sup.items()}

    def has_project(self, pid: str) -> bool:
        return pid in self._cost_by_id

    def cost_of(self, pid: str) -> int:
        try:
            return self._cost_by_id[pid]
        except KeyError:
            raise UnknownProjectError(f"unknown project id {pid!r}") from None

    def approvers(self, pid: str) -> Tuple[int, ...]:
        """Indices of the voters whose ballot contains ``pid``."""
        if pid not in self._supporters:
            raise UnknownProjectError(f"unknown project id {pid!r}")
        return self._supporters[pid]

    def score(self, pid: str) -> int:
        """Approval score: the number of voters approving ``pid``."""
        return len(self.approvers(pid))

    def unfundable_projects(self) -> Tuple[str, ...]:
        """Projects whose cost alone exceeds the budget (never selectable)."""
        return tuple(p.id for p in self.projects if p.cost > self.budget)

    def without_projects(self, ids: Iterable[str]) -> "Instance":
        """Copy of the instance with the given projects deleted.

        Ballots are restricted to the surviving projects; voters are
        never removed, so ``n`` is unchanged.
        """
        gone = set(ids)
        for pid in gone:
            if pid not in self._cost_by_id:
                raise UnknownProjectError(f"unknown project id {pid!r}")
        return Instance(
            projects=tuple(p for p in self.projects if p.id not in gone),
            ballots=tuple(ballot - gone for ballot in self.ballots),
            budget=self.budget,
            metadata=self.metadata,
        )

    def restricted_to(self, ids: Iterable[str]) -> "Instance":
        """Copy of the instance keeping only the given projects."""
        keep = set(ids)
        unknown = keep - set(self._cost_by_id)
        if unknown:
            raise UnknownProjectError(f"unknown project ids {sorted(unknown)!r}")
        drop = [pid for pid in self.project_ids if pid not in keep]
        return self.without_projects(drop)

    def with_cost(self, pid: str, cost: int) -> "Instance":
        """Copy of the instance with one project's cost replaced."""
        self.cost_of(pid)
        if cost < 1:
            raise InvalidInstanceError(f"cost of {pid!r} must be >= 1, got {cost}")
        return Instance(
            projects=tuple(
                Project(p.id, cost) if p.id == pid else p for p in self.projects
            ),
            ballots=self.ballots,
            budget=self.budget,
            metadata=self.metadata,
        )

    def with_extra_ballots(self, extra: Iterable[Iterable[str]]) -> "Instance":
        """Copy of the instance with additional voters appended."""
        new = tuple(frozenset(b) for b in extra)
        for ballot in new:
            for pid in ballot:
                if pid not in self._cost_by_id:
                    raise UnknownProjectError(f"unknown project id {pid!r}")
        return Instance(
            projects=self.projects,
            ballots=self.ballots + new,
            budget=self.budget,
            metadata=self.metadata,
        )


def make_instance(
    projects: Iterable[Tuple[str, int]],
    ballots: Iterable[Iterable[str]],
    budget: int,
    metadata: Optional[Mapping[str, str]] = None,
) -> Instance:
    """Convenience constructor from plain tuples; validates the result."""
    inst = Instance(
        projects=tuple(Project(pid, cost) for pid, cost in projects),
        ballots=tuple(frozenset(b) for b in ballots),
        budget=budget,
        metadata=dict(metadata or {}),
    )
    return validate_instance(inst)


@dataclass(frozen=True)
class TieBreakOrder:
    """A total order over project ids used to resolve all rule ties.

    Projects earlier in ``order`` win ties.  The default order of an
    instance is the order in which its projects were declared.
    """

    order: Tuple[str, ...]

    @classmethod
    def from_instance(cls, instance: Instance) -> "TieBreakOrder":
        return cls(order=instance.project_ids)

    def rank(self, pid: str) -> int:
        try:
            return self._ranks[pid]
        except KeyError:
            raise UnknownProjectError(f"{pid!r} not in tie-break order") from None

    @cached_property
    def _ranks(self) -> Dict[str, int]:
        ranks = {}
        for i, pid in enumerate(self.order):
            if pid in ranks:
                raise InvalidInstanceError(f"duplicate id {pid!r} in tie-break order")
            ranks[pid] = i
        return ranks

    def covers(self, ids: Iterable[str]) -> bool:
        return all(pid in self._ranks for pid in ids)


@dataclass(frozen=True)
class TraceEvent:
    """One step of a rule execution.

    Greedy rules record every processed project together with the funding
    decision; the continuous rules record funded projects only, with the
    exact funding time (Phragmen) or the chosen payment fraction q
    (Equal-Shares).
    """

    project: str
    round: int
    funded: bool = True
    time: Optional[Fraction] = None
    q: Optional[Fraction] = None


@dataclass(frozen=True)
class Outcome:
    """Funded set plus the execution trace of a rule run."""

    funded: frozenset
    trace: Tuple[TraceEvent, ...]

    def funding_order(self) -> Tuple[str, ...]:
        return tuple(ev.project for ev in self.trace if ev.funded)


def validate_instance(instance: Instance) -> Instance:
    """Check the structural invariants of an instance.

    Returns the same (immutable) instance, so the function is idempotent.
    Projects more expensive than the whole budget are legal; they are
    reported via a warning because no rule can ever fund them.
    """
    seen = set()
    for p in instance.projects:
        if p.id in seen:
            raise InvalidInstanceError(f"duplicate project id {p.id!r}")
        seen.add(p.id)
        if p.cost < 1:
            raise InvalidInstanceError(
                f"project {p.id!r} has non-positive cost {p.cost}"
            )
    if instance.budget < 0:
        raise InvalidInstanceError(f"negative budget {instance.budget}")
    for i, ballot in enumerate(instance.ballots):
        unknown = ballot - seen
        if unknown:
            raise InvalidInstanceError(
                f"ballot {i} references unknown project ids {sorted(unknown)!r}"
            )
    overpriced = instance.unfundable_projects()
    if overpriced:
        logger.warning(
            "instance has %d project(s) with cost above the budget: %s",
            len(overpriced),
            ", ".join(overpriced),
        )
    return instance


def total_cost(projects: Iterable[str], instance: Instance) -> int:
    """Sum of the costs of the given projects."""
    return sum(instance.cost_of(pid) for pid in projects)
