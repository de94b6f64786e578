"""Shared generators and independent oracles for the test suite."""

from itertools import combinations
from typing import Dict

import random

from pbcontrol import ControlQuery, Goal, evaluate, make_instance
from pbcontrol.control import modified_instance


def random_instance(rng: random.Random, m_max=8, n_max=6, budget_max=25,
                    cost_max=10, unit_cost=False):
    """Small random election within the oracle-tractable envelope."""
    m = rng.randint(2, m_max)
    n = rng.randint(1, n_max)
    projects = [
        (f"p{i}", 1 if unit_cost else rng.randint(1, cost_max))
        for i in range(1, m + 1)
    ]
    ids = [pid for pid, _ in projects]
    ballots = [{pid for pid in ids if rng.random() < 0.5} for _ in range(n)]
    return make_instance(projects, ballots, rng.randint(1, budget_max))


def random_weights(rng: random.Random, pool, weight_max=5) -> Dict[str, int]:
    return {pid: rng.randint(1, weight_max) for pid in pool}


def oracle_min_weights(instance, query: ControlQuery):
    """Minimum successful weight per goal, by exhaustive enumeration.

    Enumerates every subset of the query's pool once, runs the rule, and
    returns ``{goal: min weight or None}``.  Independent of the solvers
    under test: no pruning, no processing-order tricks.
    """
    pool = query.pool(instance)
    best = {Goal.CONSTRUCTIVE: None, Goal.DESTRUCTIVE: None}
    for k in range(len(pool) + 1):
        for combo in combinations(pool, k):
            w = sum(query.weight(p) for p in combo)
            out = evaluate(query.rule, modified_instance(instance, query, combo))
            funded = query.distinguished in out.funded
            goal = Goal.CONSTRUCTIVE if funded else Goal.DESTRUCTIVE
            if best[goal] is None or w < best[goal]:
                best[goal] = w
    return best


def with_goal(query: ControlQuery, goal: Goal, bound_r: int) -> ControlQuery:
    return ControlQuery(
        rule=query.rule,
        goal=goal,
        operation=query.operation,
        distinguished=query.distinguished,
        bound_r=bound_r,
        weights=query.weights,
        spoilers=query.spoilers,
    )
