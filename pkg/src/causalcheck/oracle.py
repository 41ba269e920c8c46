"""Brute-force ground truth for tiny histories, straight from the definitions.

A history conforms to a model when some causal order (and for CCv some
arbitration extending it) lets every operation's causal past be serialized
into a read-write register behavior that explains the required return values:
the operation's own value for CC, the values of all same-process reads up to
it for CM, and for CCv the serialization must follow the arbitration order.

Everything here is deliberately naive and independent of the checker: its own
program order, its own write-read matching from values, set-based closures,
and itertools enumeration. Two levels of brute force are provided.
oracle_check quantifies per-operation linearizations over the single minimal
causal order forced by program order and value flow; any larger candidate
order only shrinks and further constrains each causal past, so checking the
minimal one is exhaustive (writes of checked reads can never drop out of a
past, since value flow pins them there). oracle_check_naive quantifies over
every transitive irreflexive superset of program order as well, serving as a
cross-check of that minimality argument at even smaller sizes.
"""

from __future__ import annotations

import itertools
import time
from typing import Optional, Sequence, Union

from .encode import Model, parse_model
from .errors import NotExecuted, TooLarge
from .history import History, Operation, Verdict

MAX_ORACLE_OPS = 6
MAX_NAIVE_OPS = 5

Pair = tuple[str, str]


def srw_member(seq: Sequence[Operation], check_ids: Optional[set[str]] = None) -> bool:
    """Is seq a valid serial register behavior?

    Each read must return the value of the last preceding write to its
    variable, or 0 if there is none. When check_ids is given, only the reads
    listed there are held to that rule; the rest are treated as unconstrained,
    which implements keeping a subset of return values under projection.
    """
    store: dict[str, int] = {}
    for o in seq:
        if o.is_write:
            store[o.variable] = o.value
        elif check_ids is None or o.id in check_ids:
            if store.get(o.variable, 0) != o.value:
                return False
    return True


def _closed(pairs: set[Pair], ids: Sequence[str]) -> set[Pair]:
    out = set(pairs)
    for k in ids:
        for i in ids:
            if (i, k) in out:
                for j in ids:
                    if (k, j) in out:
                        out.add((i, j))
    return out


def _is_transitive(pairs: set[Pair]) -> bool:
    return all(
        (a, d) in pairs for a, b in pairs for c, d in pairs if b == c
    )


def _po_pairs(ops: Sequence[Operation]) -> set[Pair]:
    return {
        (a.id, b.id)
        for a in ops
        for b in ops
        if a.process == b.process and a.index < b.index
    }


def _wr_pairs(ops: Sequence[Operation]) -> set[Pair]:
    writes = {(o.variable, o.value): o.id for o in ops if o.is_write}
    return {
        (writes[(r.variable, r.value)], r.id)
        for r in ops
        if r.is_read and r.value != 0 and (r.variable, r.value) in writes
    }


def _compatible(seq: Sequence[Operation], co: set[Pair]) -> bool:
    return not any(
        (seq[j].id, seq[i].id) in co
        for i in range(len(seq))
        for j in range(i + 1, len(seq))
    )


def _past(ops: Sequence[Operation], co: set[Pair], o: Operation) -> list[Operation]:
    return [p for p in ops if p.id == o.id or (p.id, o.id) in co]


def _some_linearization_explains(
    past: list[Operation], co: set[Pair], check_ids: set[str]
) -> bool:
    return any(
        srw_member(perm, check_ids)
        for perm in itertools.permutations(past)
        if _compatible(perm, co)
    )


def _holds_cc(ops: Sequence[Operation], co: set[Pair]) -> bool:
    return all(
        _some_linearization_explains(_past(ops, co, o), co, {o.id}) for o in ops
    )


def _holds_cm(ops: Sequence[Operation], co: set[Pair]) -> bool:
    for o in ops:
        up_to_o = {
            p.id for p in ops if p.process == o.process and p.index <= o.index
        }
        if not _some_linearization_explains(_past(ops, co, o), co, up_to_o):
            return False
    return True


def _holds_ccv(ops: Sequence[Operation], co: set[Pair]) -> bool:
    reads = [o for o in ops if o.is_read]
    for arb in itertools.permutations(ops):
        if not _compatible(arb, co):
            continue
        if all(
            srw_member([p for p in arb if p.id == r.id or (p.id, r.id) in co], {r.id})
            for r in reads
        ):
            return True
    return False


def _holds(ops: Sequence[Operation], co: set[Pair], m: Model) -> bool:
    if m is Model.CC:
        return _holds_cc(ops, co)
    if m is Model.CCV:
        return _holds_ccv(ops, co)
    return _holds_cm(ops, co)


def _verdict(m: Model, ok: bool, t0: float) -> Verdict:
    name = "CM" if m in (Model.CM1, Model.CM2) else m.value
    return Verdict(
        name,
        "Conforming" if ok else "Violation",
        elapsed_ms=(time.perf_counter() - t0) * 1000.0,
    )


def oracle_check(h: History, m: Union[Model, str]) -> Verdict:
    """Definitional verdict; minimal causal order, per-operation enumeration."""
    m = parse_model(m)
    if not h.executed:
        raise NotExecuted("oracle needs an executed history")
    if len(h) > MAX_ORACLE_OPS:
        raise TooLarge(f"oracle_check handles at most {MAX_ORACLE_OPS} operations, got {len(h)}")
    t0 = time.perf_counter()
    ops = h.operations
    co0 = _closed(_po_pairs(ops) | _wr_pairs(ops), [o.id for o in ops])
    return _verdict(m, _holds(ops, co0, m), t0)


def oracle_check_naive(h: History, m: Union[Model, str]) -> Verdict:
    """Like oracle_check, but quantifies over every candidate causal order.

    Candidate orders are built by bitmask over the ordered pairs outside
    program order, keeping the transitive irreflexive ones. Exponentially
    slower, hence the tighter size guard; it exists to validate that fixing
    the minimal causal order in oracle_check loses nothing.
    """
    m = parse_model(m)
    if not h.executed:
        raise NotExecuted("oracle needs an executed history")
    if len(h) > MAX_NAIVE_OPS:
        raise TooLarge(
            f"oracle_check_naive handles at most {MAX_NAIVE_OPS} operations, got {len(h)}"
        )
    t0 = time.perf_counter()
    ops = h.operations
    po = _po_pairs(ops)
    free = [
        (a.id, b.id)
        for a in ops
        for b in ops
        if a.id != b.id and (a.id, b.id) not in po
    ]
    for mask in range(1 << len(free)):
        co = set(po)
        for i, pair in enumerate(free):
            if mask >> i & 1:
                co.add(pair)
        if not _is_transitive(co):
            continue
        if _holds(ops, co, m):
            return _verdict(m, True, t0)
    return _verdict(m, False, t0)
