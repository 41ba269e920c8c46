"""Derived relations over a history: causal order, conflict, happened-before.

The causal order co is the transitive closure of program order united with the
write-read matching. The conflict relation cf orders two same-variable writes
whenever one is causally before a read of the other. The per-anchor
happened-before relation hb starts from co restricted to the anchor's causal
past and is saturated by the write orderings forced by reads program-order
at-or-before the anchor, interleaved with transitive closure until stable.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Optional

import numpy as np

from . import kernels

if TYPE_CHECKING:  # pragma: no cover
    from .history import History


class Relation:
    """A binary relation over a fixed universe of operation ids.

    Backed by a dense bitset matrix (see kernels). Pairs may be reflexive;
    cycle detection relies on observing the reflexive pairs a closure produces.
    """

    __slots__ = ("ids", "index", "rows", "__weakref__")

    def __init__(self, ids: Iterable[str], rows: Optional[np.ndarray] = None):
        self.ids = tuple(ids)
        self.index = {x: i for i, x in enumerate(self.ids)}
        if len(self.index) != len(self.ids):
            raise ValueError("relation universe contains duplicate ids")
        n = len(self.ids)
        if rows is None:
            rows = kernels.empty_rows(n)
        else:
            assert rows.shape == (n, kernels.words_for(n))
        self.rows = rows

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[str, str]], ids: Optional[Iterable[str]] = None) -> "Relation":
        pairs = list(pairs)
        if ids is None:
            ids = sorted({a for a, _ in pairs} | {b for _, b in pairs})
        rel = cls(ids)
        for a, b in pairs:
            rel.add(a, b)
        return rel

    def add(self, a: str, b: str) -> None:
        kernels.set_bit(self.rows, self.index[a], self.index[b])

    def __contains__(self, pair: tuple[str, str]) -> bool:
        a, b = pair
        ia = self.index.get(a)
        ib = self.index.get(b)
        if ia is None or ib is None:
            return False
        return kernels.get_bit(self.rows, ia, ib)

    def __len__(self) -> int:
        return kernels.popcount(self.rows)

    def __bool__(self) -> bool:
        return len(self) > 0

    def pairs(self) -> frozenset[tuple[str, str]]:
        n = len(self.ids)
        if n == 0:
            return frozenset()
        m = kernels.unpack_to_bool(self.rows, n)
        return frozenset((self.ids[i], self.ids[j]) for i, j in np.argwhere(m))

    def copy(self) -> "Relation":
        return Relation(self.ids, self.rows.copy())

    def union(self, other: "Relation") -> "Relation":
        if self.ids != other.ids:
            raise ValueError("cannot union relations over different universes")
        return Relation(self.ids, self.rows | other.rows)

    def is_subset(self, other: "Relation") -> bool:
        if self.ids != other.ids:
            raise ValueError("cannot compare relations over different universes")
        return kernels.rows_subset(self.rows, other.rows)

    def has_reflexive_pair(self) -> bool:
        return kernels.has_reflexive(self.rows, len(self.ids))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Relation):
            return NotImplemented
        return self.ids == other.ids and bool(np.array_equal(self.rows, other.rows))

    def __hash__(self):  # pragma: no cover - relations are not meant as dict keys
        return hash((self.ids, self.rows.tobytes()))

    def __repr__(self) -> str:
        return f"Relation({sorted(self.pairs())!r})"


@dataclass(frozen=True)
class HbFamily:
    """The happened-before relation computed for one anchor operation."""

    anchor: str
    relation: Relation


def transitive_closure(r: Relation) -> Relation:
    """Smallest transitive superset of r (new object, input untouched)."""
    out = r.copy()
    kernels.closure_inplace(out.rows, len(out.ids))
    return out


def find_cycle(r: Relation) -> Optional[list[str]]:
    """Some cycle [o1, ..., o1] if one exists, else None.

    Deterministic: starts and branches in lexicographic id order. A node's
    self-edge is tried after its other edges, so a longer cycle is preferred
    over the trivial loop a relation's closure puts on every cycle member.
    """
    n = len(r.ids)
    if n == 0:
        return None
    m = kernels.unpack_to_bool(r.rows, n)
    order = sorted(r.ids)
    adj: dict[str, list[str]] = {}
    for a in r.ids:
        i = r.index[a]
        succ = sorted(r.ids[j] for j in np.nonzero(m[i])[0])
        if a in succ:  # self-edge last, see docstring
            succ.remove(a)
            succ.append(a)
        adj[a] = succ
    color: dict[str, int] = {}  # 1 = on current path, 2 = fully explored
    for start in order:
        if start in color:
            continue
        path = [start]
        color[start] = 1
        iters = [iter(adj[start])]
        while iters:
            nxt = next(iters[-1], None)
            if nxt is None:
                done = path.pop()
                color[done] = 2
                iters.pop()
                continue
            c = color.get(nxt, 0)
            if c == 1:
                return path[path.index(nxt) :] + [nxt]
            if c == 0:
                color[nxt] = 1
                path.append(nxt)
                iters.append(iter(adj[nxt]))
    return None


# Dense per-history scaffolding reused across the per-anchor hb computations.
_prep_cache: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()


class _Prep:
    __slots__ = ("var_of", "wstart", "wlist", "read_rows", "src_of", "rvar_of")

    def __init__(self, h: "History"):
        ops = h.operations
        idx = {o.id: i for i, o in enumerate(ops)}
        variables = sorted({o.variable for o in ops})
        var_num = {v: k for k, v in enumerate(variables)}
        self.var_of = np.array([var_num[o.variable] for o in ops], dtype=np.int64)
        per_var: list[list[int]] = [[] for _ in variables]
        for i, o in enumerate(ops):
            if o.is_write:
                per_var[var_num[o.variable]].append(i)
        starts = [0]
        flat: list[int] = []
        for lst in per_var:
            flat.extend(lst)
            starts.append(len(flat))
        self.wstart = np.array(starts, dtype=np.int64)
        self.wlist = np.array(flat, dtype=np.int64)
        # per process: the reads in program order, with wr source and variable
        self.read_rows: dict[str, list[tuple[int, int, int]]] = {}
        for o in ops:
            if not o.is_read:
                continue
            src = h.wr_source.get(o.id)
            row = (idx[o.id], idx[src] if src is not None else -1, var_num[o.variable])
            self.read_rows.setdefault(o.process, []).append(row)
        self.src_of = idx
        self.rvar_of = var_num


def _prep(h: "History") -> _Prep:
    got = _prep_cache.get(h)
    if got is None:
        got = _Prep(h)
        _prep_cache[h] = got
    return got


def compute_co(h: "History") -> Relation:
    """Causal order: transitive closure of program order united with write-read."""
    return transitive_closure(h.po.union(h.wr))


def compute_cf(h: "History", co: Relation) -> Relation:
    """Conflict order between same-variable writes, transitively closed.

    (w1, w2) enters when some read returns w2's value and w1 is causally before
    that read; the two writes must be distinct.
    """
    n = len(h.operations)
    prep = _prep(h)
    rows = kernels.empty_rows(n)
    one = np.uint64(1)
    for per_process in prep.read_rows.values():
        for r, w2, v in per_process:
            if w2 < 0:
                continue
            cand = prep.wlist[prep.wstart[v] : prep.wstart[v + 1]]
            if cand.size == 0:
                continue
            before = (co.rows[cand, r >> 6] >> np.uint64(r & 63)) & one
            sel = cand[(before == 1) & (cand != w2)]
            if sel.size:
                rows[sel, w2 >> 6] |= one << np.uint64(w2 & 63)
    kernels.closure_inplace(rows, n)
    return Relation(h.op_ids, rows)


def compute_hb(h: "History", co: Relation, anchor: str) -> HbFamily:
    """Happened-before at the given anchor, per the staged saturation.

    The base is co restricted to pairs whose target is causally at-or-before
    the anchor (that base is already transitive); saturation rounds then add
    the forced write-write pairs and re-close until a fixpoint.
    """
    anchor_op = h.by_id.get(anchor)
    if anchor_op is None:
        raise ValueError(f"anchor {anchor!r} is not an operation of this history")
    n = len(h.operations)
    prep = _prep(h)
    a = h.op_index[anchor]
    # column a of co, i.e. everything causally before the anchor, plus the anchor
    past = ((co.rows[:, a >> 6] >> np.uint64(a & 63)) & np.uint64(1)).astype(bool)
    past[a] = True
    # mask whole columns so only pairs targeting the past survive
    hb = co.rows & kernels.pack_bool_row(past)[None, :]
    reads: list[int] = []
    srcs: list[int] = []
    rvars: list[int] = []
    for r, w2, v in prep.read_rows.get(anchor_op.process, ()):
        if r <= a:  # program order is index order within the process
            reads.append(r)
            srcs.append(w2)
            rvars.append(v)
    kernels.hb_saturate_inplace(
        hb,
        n,
        np.array(reads, dtype=np.int64),
        np.array(srcs, dtype=np.int64),
        np.array(rvars, dtype=np.int64),
        prep.wstart,
        prep.wlist,
    )
    return HbFamily(anchor, Relation(h.op_ids, hb))
