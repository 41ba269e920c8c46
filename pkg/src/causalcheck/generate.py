"""Random histories, simulated executions, and violation injection.

generate() builds differentiated histories with unvalued reads: per-variable
write values count up from 1, so no write is ever duplicated and value 0
stays reserved for unwritten state. execute_simulated() fills read values by
interleaving the processes against one shared store, which yields
sequentially consistent (hence conforming) executions. mutate_violation()
rewrites read values to plant a named bad pattern, for mass-producing
negative cases.

Randomness comes from a self-contained xorshift64* generator rather than the
stdlib Mersenne twister so that a fixed seed reproduces histories bit-for-bit
in any future port of this tool.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from typing import Iterator, Optional

from .checker import PATTERN_MODEL, detect_bad_patterns
from .errors import CannotInject, NotExecuted
from .history import KIND_READ, KIND_WRITE, History, Operation

_MASK = (1 << 64) - 1
_CANDIDATE_CAP = 4096


class Xorshift64Star:
    """xorshift64* stream, seeded through a splitmix64 scramble."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        z = (seed + 0x9E3779B97F4A7C15) & _MASK
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        z ^= z >> 31
        self.state = z or 0x9E3779B97F4A7C15

    def next_u64(self) -> int:
        x = self.state
        x ^= x >> 12
        x ^= (x << 25) & _MASK
        x ^= x >> 27
        self.state = x
        return (x * 0x2545F4914F6CDD1D) & _MASK


@dataclass(frozen=True)
class GenConfig:
    """Shape of a generated history: who writes, how often, to what."""

    n_clients: int
    n_transactions: int
    n_variables: int
    seed: int = 0
    n_events: int = 1

    def __post_init__(self):
        for name in ("n_clients", "n_transactions", "n_variables", "n_events"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 0:
                raise ValueError(f"{name} must be a nonnegative integer, got {v!r}")
        if self.n_events != 1:
            raise ValueError("transactions carry exactly one event")


def generate(cfg: GenConfig) -> History:
    """Random non-executed history; deterministic for a fixed config."""
    if cfg.n_clients and cfg.n_transactions and not cfg.n_variables:
        raise ValueError("need at least one variable to generate operations")
    rng = Xorshift64Star(cfg.seed)
    last_write: dict[str, int] = {}
    ops: list[Operation] = []
    for c in range(1, cfg.n_clients + 1):
        for t in range(cfg.n_transactions):
            kind = KIND_READ if rng.next_u64() % 2 == 0 else KIND_WRITE
            var = f"x{rng.next_u64() % cfg.n_variables + 1}"
            if kind == KIND_WRITE:
                value: Optional[int] = last_write.get(var, 0) + 1
                last_write[var] = value
            else:
                value = None
            ops.append(Operation(f"op{len(ops)}", f"c{c}", t, kind, var, value))
    return History(ops)


def execute_simulated(h: History, seed: int = 0) -> History:
    """Fill read values by running a random po-respecting interleaving.

    A single shared store serves every process, so the result is sequentially
    consistent and conforms to all the models here. Reads that already had
    values get fresh ones.
    """
    rng = Xorshift64Star(seed)
    by_proc = {p: [o for o in h.operations if o.process == p] for p in h.processes}
    heads = {p: 0 for p in h.processes}
    live = [p for p in h.processes if by_proc[p]]
    store: dict[str, int] = {}
    out: list[Operation] = []
    while live:
        p = live[rng.next_u64() % len(live)]
        o = by_proc[p][heads[p]]
        heads[p] += 1
        if heads[p] == len(by_proc[p]):
            live.remove(p)
        if o.is_write:
            store[o.variable] = o.value
            out.append(o)
        else:
            out.append(replace(o, value=store.get(o.variable, 0)))
    return History(out)


# --- violation injection ----------------------------------------------------
#
# Each strategy enumerates host sites for its pattern and proposes read-value
# rewrites; the first proposal (in a seed-rotated order) that demonstrably
# plants the pattern wins. Proposals are verified with detect_bad_patterns
# because a rewrite can be preempted by a stronger pattern it accidentally
# creates, or defused by the surrounding history.


def _cap(it: Iterator[dict[str, int]]) -> list[dict[str, int]]:
    return list(itertools.islice(it, _CANDIDATE_CAP))


def _fresh_value(h: History) -> int:
    return 1 + max((o.value for o in h.operations if o.value is not None), default=0)


def _thin_air_candidates(h: History) -> Iterator[dict[str, int]]:
    v = _fresh_value(h)
    for r in h.reads:
        yield {r.id: v}


def _wcir_candidates(h: History) -> Iterator[dict[str, int]]:
    for r in h.reads:
        if any(
            w.process == r.process and w.index < r.index
            for w in h.writes_by_var.get(r.variable, ())
        ):
            yield {r.id: 0}


def _wcr_candidates(h: History) -> Iterator[dict[str, int]]:
    for r in h.reads:
        local = [
            w
            for w in h.writes_by_var.get(r.variable, ())
            if w.process == r.process and w.index < r.index
        ]
        for w1, w2 in itertools.combinations(local, 2):
            yield {r.id: w1.value}


def _reads_then_writes(h: History, p: str) -> Iterator[tuple[Operation, Operation]]:
    ops = [o for o in h.operations if o.process == p]
    for r in ops:
        if not r.is_read:
            continue
        for w in ops:
            if w.is_write and w.index > r.index:
                yield r, w


def _cyclic_co_candidates(h: History) -> Iterator[dict[str, int]]:
    procs = h.processes
    for pi in range(len(procs)):
        for qi in range(pi + 1, len(procs)):
            for rp, wp in _reads_then_writes(h, procs[pi]):
                for rq, wq in _reads_then_writes(h, procs[qi]):
                    if rp.variable == wq.variable and rq.variable == wp.variable:
                        yield {rp.id: wq.value, rq.id: wp.value}


def _writes_then_reads(h: History, p: str) -> Iterator[tuple[Operation, Operation]]:
    ops = [o for o in h.operations if o.process == p]
    for w in ops:
        if not w.is_write:
            continue
        for r in ops:
            if r.is_read and r.index > w.index and r.variable == w.variable:
                yield w, r


def _cyclic_cf_candidates(h: History) -> Iterator[dict[str, int]]:
    procs = h.processes
    for pi in range(len(procs)):
        for qi in range(pi + 1, len(procs)):
            for wp, rp in _writes_then_reads(h, procs[pi]):
                for wq, rq in _writes_then_reads(h, procs[qi]):
                    if wp.variable == wq.variable:
                        yield {rp.id: wq.value, rq.id: wp.value}


def _cyclic_hb_candidates(h: History) -> Iterator[dict[str, int]]:
    for p in h.processes:
        reads_by_var: dict[str, list[Operation]] = {}
        for o in h.operations:
            if o.process == p and o.is_read:
                reads_by_var.setdefault(o.variable, []).append(o)
        for var, rs in reads_by_var.items():
            if len(rs) < 3:
                continue
            outside = [w for w in h.writes_by_var.get(var, ()) if w.process != p]
            for r1, r2, r3 in itertools.combinations(rs, 3):
                for w1, w2 in itertools.permutations(outside, 2):
                    if w1.process != w2.process:
                        yield {r1.id: w1.value, r2.id: w2.value, r3.id: w1.value}


def _whir_candidates(h: History) -> Iterator[dict[str, int]]:
    for p in h.processes:
        p_writes = [o for o in h.operations if o.process == p and o.is_write]
        for wz, wx, wy in itertools.combinations(p_writes, 3):
            if len({wz.variable, wx.variable, wy.variable}) != 3:
                continue
            for q in h.processes:
                if q == p:
                    continue
                q_ops = [o for o in h.operations if o.process == q]
                for wq in q_ops:
                    if not (wq.is_write and wq.variable == wx.variable):
                        continue
                    for rx in q_ops:
                        if not (
                            rx.is_read
                            and rx.variable == wx.variable
                            and rx.index > wq.index
                        ):
                            continue
                        between = [
                            o
                            for o in q_ops
                            if o.is_read and wq.index < o.index < rx.index
                        ]
                        rzs = [
                            o
                            for o in between
                            if o.variable == wz.variable
                            # a local write would stop it from being an
                            # initial read once rewritten to 0
                            and not any(
                                w.is_write
                                and w.variable == wz.variable
                                and w.index < o.index
                                for w in q_ops
                            )
                        ]
                        rys = [o for o in between if o.variable == wy.variable]
                        for rz in rzs:
                            for ry in rys:
                                yield {rz.id: 0, ry.id: wy.value, rx.id: wq.value}


_STRATEGIES = {
    "ThinAirRead": _thin_air_candidates,
    "WriteCOInitRead": _wcir_candidates,
    "WriteCORead": _wcr_candidates,
    "CyclicCO": _cyclic_co_candidates,
    "CyclicCF": _cyclic_cf_candidates,
    "CyclicHB": _cyclic_hb_candidates,
    "WriteHBInitRead": _whir_candidates,
}


def _apply(h: History, rewrites: dict[str, int]) -> History:
    return History(
        [replace(o, value=rewrites[o.id]) if o.id in rewrites else o for o in h.operations]
    )


def mutate_violation(h: History, kind: str, seed: int = 0) -> History:
    """A copy of h whose read values exhibit the named bad pattern.

    Raises CannotInject when the history offers no viable host site for it.
    """
    strategy = _STRATEGIES.get(kind)
    if strategy is None:
        raise ValueError(f"unknown pattern {kind!r} (expected one of {sorted(_STRATEGIES)})")
    if not h.executed:
        raise NotExecuted("mutation starts from an executed history")
    candidates = _cap(strategy(h))
    if candidates:
        model = PATTERN_MODEL[kind]
        rng = Xorshift64Star(seed)
        start = rng.next_u64() % len(candidates)
        for i in range(len(candidates)):
            mutated = _apply(h, candidates[(start + i) % len(candidates)])
            if any(p == kind for p, _ in detect_bad_patterns(mutated, model)):
                return mutated
    raise CannotInject(f"history offers no host for {kind}")
