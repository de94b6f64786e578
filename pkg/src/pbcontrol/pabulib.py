"""Reader and writer for the `.pb` election file format.

A `.pb` file has three sections introduced by the lines ``META``,
``PROJECTS`` and ``VOTES``.  META rows are ``key;value`` pairs (with a
literal ``key;value`` header) and must include ``budget`` and
``vote_type``; the tabular sections carry a semicolon-separated header
row, at least ``project_id;cost`` and ``voter_id;vote``, where ``vote``
is a comma-separated list of approved project ids.

Only approval ballots are supported.  Costs and budget may be written
with decimals; the parser rescales all amounts by the smallest common
power of ten so the in-memory instance is purely integral (the factor is
recorded under the ``cost_scaling`` metadata key).  Unknown columns are
preserved in the instance metadata and written back out.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from .core import Instance, PbError, Project, validate_instance

logger = logging.getLogger(__name__)

_SECTIONS = ("META", "PROJECTS", "VOTES")


class ParseError(PbError):
    """The text is not a well-formed approval `.pb` file."""


@dataclass
class PabulibFile:
    """Raw sections of a `.pb` file before conversion to an instance."""

    meta: Dict[str, str] = field(default_factory=dict)
    project_columns: List[str] = field(default_factory=list)
    projects: List[Dict[str, str]] = field(default_factory=list)
    vote_columns: List[str] = field(default_factory=list)
    votes: List[Dict[str, str]] = field(default_factory=list)


def _split_sections(text: str) -> Dict[str, List[str]]:
    sections: Dict[str, List[str]] = {}
    current: Optional[str] = None
    for raw in text.splitlines():
        line = raw.rstrip("\r")
        if line.strip() in _SECTIONS and line.strip() not in sections:
            current = line.strip()
            sections[current] = []
            continue
        if current is None:
            if line.strip() == "":
                continue
            raise ParseError(f"content before the first section header: {line!r}")
        sections[current].append(line)
    missing = [s for s in _SECTIONS if s not in sections]
    if missing:
        raise ParseError(f"missing section(s): {', '.join(missing)}")
    return sections


def _read_pabulib(text: str) -> PabulibFile:
    sections = _split_sections(text)
    pb = PabulibFile()

    meta_rows = [ln for ln in sections["META"] if ln.strip()]
    for i, row in enumerate(meta_rows):
        if i == 0 and row.strip() == "key;value":
            continue
        key, sep, value = row.partition(";")
        if not sep:
            raise ParseError(f"malformed META row {row!r}")
        pb.meta[key.strip()] = value.strip()

    def read_table(name: str, required: Sequence[str]) -> Tuple[List[str], List[Dict[str, str]]]:
        rows = [ln for ln in sections[name] if ln.strip()]
        if not rows:
            if name == "VOTES":
                return list(required), []
            raise ParseError(f"section {name} has no header row")
        header = [c.strip() for c in rows[0].split(";")]
        for col in required:
            if col not in header:
                raise ParseError(f"section {name} lacks required column {col!r}")
        parsed = []
        for row in rows[1:]:
            cells = row.split(";")
            if len(cells) < len(header):
                cells += [""] * (len(header) - len(cells))
            parsed.append({h: cells[i].strip() for i, h in enumerate(header)})
        return header, parsed

    pb.project_columns, pb.projects = read_table("PROJECTS", ["project_id", "cost"])
    pb.vote_columns, pb.votes = read_table("VOTES", ["voter_id", "vote"])
    return pb


def _parse_amount(text: str, what: str) -> Decimal:
    """Parse a currency amount; accepts ',' or '.' decimals and spaces."""
    cleaned = text.replace(" ", "").replace("_", "")
    if cleaned.count(",") == 1 and "." not in cleaned:
        cleaned = cleaned.replace(",", ".")  # comma used as the decimal mark
    else:
        cleaned = cleaned.replace(",", "")  # commas as thousands separators
    try:
        value = Decimal(cleaned)
    except InvalidOperation:
        raise ParseError(f"cannot parse {what} amount {text!r}") from None
    if value < 0:
        raise ParseError(f"{what} amount {text!r} is negative")
    return value


def _scaling_factor(amounts: Sequence[Decimal]) -> int:
    """Smallest power of ten turning every amount into an integer."""
    digits = 0
    for a in amounts:
        exp = a.normalize().as_tuple().exponent
        if isinstance(exp, int) and exp < 0:
            digits = max(digits, -exp)
    return 10**digits


def parse(text: str, strict: bool = True) -> Instance:
    """Parse `.pb` text into a validated instance.

    ``strict`` controls what happens when a ballot references an unknown
    project id: raise (default) or drop the reference with a warning.
    """
    pb = _read_pabulib(text.lstrip("﻿"))
    vote_type = pb.meta.get("vote_type")
    if vote_type is None:
        raise ParseError("META lacks the required key 'vote_type'")
    if vote_type != "approval":
        raise ParseError(
            f"unsupported vote_type {vote_type!r}: only approval ballots are handled"
        )
    if "budget" not in pb.meta:
        raise ParseError("META lacks the required key 'budget'")

    budget_amount = _parse_amount(pb.meta["budget"], "budget")
    cost_amounts = [
        _parse_amount(row["cost"], f"cost of project {row['project_id']!r}")
        for row in pb.projects
    ]
    factor = _scaling_factor(cost_amounts + [budget_amount])
    budget = int(budget_amount * factor)

    metadata: Dict[str, str] = dict(pb.meta)
    if factor != 1:
        metadata["cost_scaling"] = str(factor)

    projects: List[Project] = []
    known = set()
    for row, amount in zip(pb.projects, cost_amounts):
        pid = row["project_id"]
        projects.append(Project(id=pid, cost=int(amount * factor)))
        known.add(pid)
        for col in pb.project_columns:
            if col in ("project_id", "cost"):
                continue
            if row.get(col, "") != "":
                metadata[f"project:{pid}:{col}"] = row[col]

    ballots: List[frozenset] = []
    seen_voters = set()
    for ordinal, row in enumerate(pb.votes):
        vid = row["voter_id"]
        if vid in seen_voters:
            logger.warning("duplicate ballot for voter %r: keeping the first", vid)
            continue
        seen_voters.add(vid)
        approved = [p for p in row["vote"].split(",") if p != ""]
        unknown = [p for p in approved if p not in known]
        if unknown:
            if strict:
                raise ParseError(
                    f"ballot of voter {vid!r} references unknown project ids {unknown!r}"
                )
            logger.warning(
                "ballot of voter %r: dropping unknown project ids %r", vid, unknown
            )
            approved = [p for p in approved if p in known]
        index = len(ballots)
        metadata[f"voter:{index}:id"] = vid
        for col in pb.vote_columns:
            if col in ("voter_id", "vote"):
                continue
            if row.get(col, "") != "":
                metadata[f"voter:{index}:{col}"] = row[col]
        ballots.append(frozenset(approved))

    instance = Instance(
        projects=tuple(projects),
        ballots=tuple(ballots),
        budget=budget,
        metadata=metadata,
    )
    return validate_instance(instance)


def parse_file(path, strict: bool = True) -> Instance:
    return parse(Path(path).read_text(encoding="utf-8-sig"), strict=strict)


def _project_extra_columns(instance: Instance) -> List[str]:
    cols: List[str] = []
    prefixes = {f"project:{pid}:" for pid in instance.project_ids}
    for key in instance.metadata:
        for prefix in prefixes:
            if key.startswith(prefix):
                col = key[len(prefix):]
                if col not in cols:
                    cols.append(col)
    return cols


def _voter_extra_columns(instance: Instance) -> List[str]:
    cols: List[str] = []
    for key in instance.metadata:
        if key.startswith("voter:"):
            parts = key.split(":", 2)
            if len(parts) == 3 and parts[2] not in ("id",) and parts[2] not in cols:
                cols.append(parts[2])
    return cols


def write(instance: Instance) -> str:
    """Serialize an instance as `.pb` text.

    ``parse(write(x))`` reproduces the projects, costs, budget, and
    ballots of ``x`` exactly.  Metadata keys that encode preserved
    per-project or per-voter columns are written back into their tables;
    the remaining keys become META rows.
    """
    internal = ("cost_scaling",)
    lines = ["META", "key;value"]
    meta = dict(instance.metadata)
    meta["budget"] = str(instance.budget)
    meta["vote_type"] = "approval"
    for key in sorted(meta, key=lambda k: (k not in ("description",), k)):
        if key.startswith(("project:", "voter:")) or key in internal:
            continue
        lines.append(f"{key};{meta[key]}")

    extra_cols = _project_extra_columns(instance)
    lines.append("PROJECTS")
    lines.append(";".join(["project_id", "cost"] + extra_cols))
    for p in instance.projects:
        row = [p.id, str(p.cost)]
        for col in extra_cols:
            row.append(instance.metadata.get(f"project:{p.id}:{col}", ""))
        lines.append(";".join(row))

    voter_cols = _voter_extra_columns(instance)
    lines.append("VOTES")
    lines.append(";".join(["voter_id", "vote"] + voter_cols))
    ranks = {pid: i for i, pid in enumerate(instance.project_ids)}
    for i, ballot in enumerate(instance.ballots):
        vid = instance.metadata.get(f"voter:{i}:id", str(i + 1))
        ordered = sorted(ballot, key=ranks.__getitem__)
        row = [vid, ",".join(ordered)]
        for col in voter_cols:
            row.append(instance.metadata.get(f"voter:{i}:{col}", ""))
        lines.append(";".join(row))
    return "\n".join(lines) + "\n"


def write_file(instance: Instance, path) -> None:
    Path(path).write_text(write(instance), encoding="utf-8")
