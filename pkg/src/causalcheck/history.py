"""Operations, histories, and their ingestion.

A history is a set of read/write operations together with a per-process
program order (derived from each operation's index) and a write-read matching
(derived from value equality, which is sound because histories are
differentiated: each value is written at most once per variable).

Value 0 is reserved as the initial value of every variable. A read returning 0
is an initial read, unconditionally: it never matches any write. Writes of 0
are rejected outright, which keeps the reservation airtight.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from . import kernels
from .errors import DuplicateId, DuplicateWrite, MalformedInput
from .relations import Relation

KIND_READ = "read"
KIND_WRITE = "write"

_FIELDS = ("id", "process", "index", "kind", "var", "value")


@dataclass(frozen=True, slots=True)
class Operation:
    """One read or write event."""

    id: str
    process: str
    index: int
    kind: str
    variable: str
    value: Optional[int]

    @property
    def is_read(self) -> bool:
        return self.kind == KIND_READ

    @property
    def is_write(self) -> bool:
        return self.kind == KIND_WRITE

    def label(self) -> str:
        letter = "w" if self.is_write else "r"
        value = "?" if self.value is None else self.value
        return f"{letter}({self.variable},{value},{self.id})"


@dataclass(frozen=True)
class Verdict:
    """Per-model result of a conformance check.

    outcome is "Conforming" or "Violation"; on a violation the checker fills in
    the bad-pattern name and the witness operation ids (a cycle sequence too,
    for the cyclicity patterns). The definitional oracle produces outcome-only
    verdicts, since patterns are a checker concept.
    """

    model: str
    outcome: str
    pattern: Optional[str] = None
    witness: Optional[tuple[str, ...]] = None
    cycle: Optional[tuple[str, ...]] = None
    variant: Optional[str] = None
    elapsed_ms: float = 0.0

    @property
    def conforming(self) -> bool:
        return self.outcome == "Conforming"

    def to_json(self) -> str:
        return json.dumps(
            {
                "model": self.model,
                "outcome": self.outcome,
                "pattern": self.pattern,
                "witness": list(self.witness) if self.witness is not None else None,
                "elapsed_ms": round(self.elapsed_ms, 3),
            }
        )


class History:
    """Immutable set of operations with derived po and wr relations.

    Operations are kept sorted by (process, index); that canonical order is
    also the dense index order shared by every relation computed over the
    history. Construction validates identifier uniqueness, per-process slot
    uniqueness, the write-value invariants, and differentiation.
    """

    __slots__ = (
        "operations",
        "by_id",
        "op_ids",
        "op_index",
        "processes",
        "po",
        "wr",
        "wr_source",
        "writes_by_var",
        "__weakref__",
    )

    def __init__(self, operations: Iterable[Operation]):
        ops = sorted(operations, key=lambda o: (o.process, o.index))
        seen_ids: dict[str, Operation] = {}
        seen_slots: set[tuple[str, int]] = set()
        writes: dict[tuple[str, int], Operation] = {}
        for o in ops:
            if o.kind not in (KIND_READ, KIND_WRITE):
                raise MalformedInput(f"operation {o.id!r} has unknown kind {o.kind!r}")
            if o.index < 0:
                raise MalformedInput(f"operation {o.id!r} has negative index")
            if o.id in seen_ids:
                raise DuplicateId(f"operation id {o.id!r} appears twice")
            seen_ids[o.id] = o
            slot = (o.process, o.index)
            if slot in seen_slots:
                raise MalformedInput(f"two operations share process/index slot {slot!r}")
            seen_slots.add(slot)
            if o.is_write:
                if o.value is None:
                    raise MalformedInput(f"write {o.id!r} carries no value")
                if o.value == 0:
                    raise MalformedInput(f"write {o.id!r} writes 0, which is reserved as the initial value")
                key = (o.variable, o.value)
                if key in writes:
                    raise DuplicateWrite(
                        f"writes {writes[key].id!r} and {o.id!r} both write {o.value} to {o.variable!r}"
                    )
                writes[key] = o
        self.operations = tuple(ops)
        self.by_id = seen_ids
        self.op_ids = tuple(o.id for o in ops)
        self.op_index = {oid: i for i, oid in enumerate(self.op_ids)}
        procs = []
        for o in ops:
            if not procs or procs[-1] != o.process:
                procs.append(o.process)
        self.processes = tuple(procs)
        by_var: dict[str, list[Operation]] = {}
        for o in ops:
            if o.is_write:
                by_var.setdefault(o.variable, []).append(o)
        self.writes_by_var = {v: tuple(ws) for v, ws in by_var.items()}
        self.po = self._build_po()
        self.wr, self.wr_source = self._build_wr(writes)

    def _build_po(self) -> Relation:
        n = len(self.operations)
        m = np.zeros((n, n), dtype=bool)
        start = 0
        for i in range(1, n + 1):
            if i == n or self.operations[i].process != self.operations[start].process:
                size = i - start
                if size > 1:
                    m[start:i, start:i] = np.triu(np.ones((size, size), dtype=bool), 1)
                start = i
        return Relation(self.op_ids, kernels.pack_bool_matrix(m))

    def _build_wr(self, writes: dict[tuple[str, int], Operation]) -> tuple[Relation, dict[str, str]]:
        rel = Relation(self.op_ids)
        source: dict[str, str] = {}
        for o in self.operations:
            if o.is_read and o.value is not None and o.value != 0:
                w = writes.get((o.variable, o.value))
                if w is not None:
                    rel.add(w.id, o.id)
                    source[o.id] = w.id
        return rel, source

    @property
    def executed(self) -> bool:
        return all(o.value is not None for o in self.operations if o.is_read)

    @property
    def reads(self) -> tuple[Operation, ...]:
        return tuple(o for o in self.operations if o.is_read)

    @property
    def writes(self) -> tuple[Operation, ...]:
        return tuple(o for o in self.operations if o.is_write)

    @property
    def initial_reads(self) -> tuple[Operation, ...]:
        return tuple(o for o in self.operations if o.is_read and o.value == 0)

    def __len__(self) -> int:
        return len(self.operations)

    def __iter__(self):
        return iter(self.operations)

    def __eq__(self, other) -> bool:
        if not isinstance(other, History):
            return NotImplemented
        return frozenset(self.operations) == frozenset(other.operations)

    def __hash__(self) -> int:
        return hash(frozenset(self.operations))

    def __repr__(self) -> str:
        body = "; ".join(
            f"{p}: " + ", ".join(o.label() for o in self.operations if o.process == p) for p in self.processes
        )
        return f"<History {body}>"


def parse_history(text: str) -> History:
    """Parse a JSONL document into a History.

    One operation per line; blank lines are skipped; line order is irrelevant
    because the index field is authoritative. Every record must carry exactly
    the keys id, process, index, kind, var, value.
    """
    ops: list[Operation] = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedInput(f"line {line_no}: not valid JSON: {exc}") from exc
        if not isinstance(record, dict):
            raise MalformedInput(f"line {line_no}: expected a JSON object")
        if set(record) != set(_FIELDS):
            missing = set(_FIELDS) - set(record)
            extra = set(record) - set(_FIELDS)
            detail = []
            if missing:
                detail.append(f"missing {sorted(missing)}")
            if extra:
                detail.append(f"unexpected {sorted(extra)}")
            raise MalformedInput(f"line {line_no}: bad record keys: " + ", ".join(detail))
        oid, process, index, kind, var, value = (record[k] for k in _FIELDS)
        if not isinstance(oid, str) or not oid:
            raise MalformedInput(f"line {line_no}: id must be a nonempty string")
        if not isinstance(process, str) or not process:
            raise MalformedInput(f"line {line_no}: process must be a nonempty string")
        if isinstance(index, bool) or not isinstance(index, int):
            raise MalformedInput(f"line {line_no}: index must be an integer")
        if kind not in (KIND_READ, KIND_WRITE):
            raise MalformedInput(f"line {line_no}: kind must be 'read' or 'write'")
        if not isinstance(var, str) or not var:
            raise MalformedInput(f"line {line_no}: var must be a nonempty string")
        if value is not None and (isinstance(value, bool) or not isinstance(value, int)):
            raise MalformedInput(f"line {line_no}: value must be an integer or null")
        ops.append(Operation(id=oid, process=process, index=index, kind=kind, variable=var, value=value))
    return History(ops)


def serialize_history(h: History) -> str:
    """Serialize to JSONL in canonical (process, index) order, fixed key order."""
    lines = []
    for o in h.operations:
        lines.append(
            json.dumps(
                {
                    "id": o.id,
                    "process": o.process,
                    "index": o.index,
                    "kind": o.kind,
                    "var": o.variable,
                    "value": o.value,
                }
            )
        )
    return "\n".join(lines) + ("\n" if lines else "")


def validate_differentiated(h) -> None:
    """Raise DuplicateWrite if two writes share (variable, value).

    Accepts a History or a plain iterable of operations; the latter matters
    because History construction itself enforces differentiation, so a
    violating History can never exist to be passed here.
    """
    ops = h.operations if isinstance(h, History) else tuple(h)
    seen: dict[tuple[str, int], str] = {}
    for o in ops:
        if o.is_write:
            key = (o.variable, o.value)
            if key in seen:
                raise DuplicateWrite(f"writes {seen[key]!r} and {o.id!r} both write {o.value} to {o.variable!r}")
            seen[key] = o.id


def po_maximal(h: History) -> tuple[str, ...]:
    """The last operation of each nonempty process, in process order."""
    last: dict[str, Operation] = {}
    for o in h.operations:
        cur = last.get(o.process)
        if cur is None or o.index > cur.index:
            last[o.process] = o
    return tuple(last[p].id for p in h.processes)
