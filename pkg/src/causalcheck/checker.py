"""Conformance checking against the causal models.

Two interchangeable engines decide each query. The native engine computes the
relations directly (bit-matrix closures from the relations module) and scans
for the first bad pattern; the datalog engine translates the history into a
program and asks the fixpoint evaluator which constraint fails first. Both
report the same (outcome, pattern); witnesses may differ in shape for the
cyclic patterns, where the native side can afford to extract a whole cycle.

Pattern precedence is fixed so the two engines and repeated runs agree on
which violation gets reported: ThinAirRead, CyclicCO, WriteCOInitRead,
WriteCORead, then the model-specific patterns (CyclicCF; or per anchor
WriteHBInitRead before CyclicHB, anchors in canonical order).
"""

from __future__ import annotations

import enum
import time
from typing import Optional, Union

from . import datalog
from .encode import Model, cm_anchors, encode, op_const, parse_model
from .errors import EngineDisagreement, NotExecuted
from .history import History, Verdict
from .relations import compute_cf, compute_co, compute_hb, find_cycle, transitive_closure

PATTERNS = (
    "ThinAirRead",
    "CyclicCO",
    "WriteCOInitRead",
    "WriteCORead",
    "CyclicCF",
    "WriteHBInitRead",
    "CyclicHB",
)

# weakest model whose bad-pattern set contains each pattern
PATTERN_MODEL = {
    "ThinAirRead": Model.CC,
    "CyclicCO": Model.CC,
    "WriteCOInitRead": Model.CC,
    "WriteCORead": Model.CC,
    "CyclicCF": Model.CCV,
    "WriteHBInitRead": Model.CM2,
    "CyclicHB": Model.CM2,
}


class Engine(enum.Enum):
    NATIVE = "native"
    DATALOG = "datalog"
    CROSS = "cross"


def parse_engine(name: Union[Engine, str]) -> Engine:
    if isinstance(name, Engine):
        return name
    try:
        return Engine(name.strip().lower())
    except ValueError:
        raise ValueError(f"unknown engine {name!r} (expected native, datalog or cross)") from None


def _model_name(m: Model) -> str:
    return "CM" if m in (Model.CM1, Model.CM2) else m.value


def _variant(m: Model) -> Optional[str]:
    return m.value if m in (Model.CM1, Model.CM2) else None


def _thin_air_reads(h: History):
    for o in h.operations:
        if o.is_read and o.value != 0 and o.id not in h.wr_source:
            yield o.id


def _write_co_initread(h: History, co):
    for r in h.operations:
        if not (r.is_read and r.value == 0):
            continue
        for w in h.writes_by_var.get(r.variable, ()):
            if (w.id, r.id) in co:
                yield (w.id, r.id)


def _write_co_read(h: History, co):
    for r in h.operations:
        if not r.is_read:
            continue
        w1 = h.wr_source.get(r.id)
        if w1 is None:
            continue
        for w2 in h.writes_by_var[r.variable]:
            if w2.id != w1 and (w1, w2.id) in co and (w2.id, r.id) in co:
                yield (w1, w2.id, r.id)


def _write_hb_initread(h: History, hb, anchor: str):
    for r in h.operations:
        if not (r.is_read and r.value == 0 and (r.id, anchor) in h.po):
            continue
        for w in h.writes_by_var.get(r.variable, ()):
            if (w.id, r.id) in hb:
                yield (w.id, r.id, anchor)


def _cfco(h: History, co):
    return transitive_closure(co.union(compute_cf(h, co)))


def _native(h: History, m: Model) -> Verdict:
    """First bad pattern by precedence, or a conforming verdict."""
    name, variant = _model_name(m), _variant(m)

    def bad(pattern, witness, cycle=None):
        return Verdict(name, "Violation", pattern, witness, cycle=cycle, variant=variant)

    for rid in _thin_air_reads(h):
        return bad("ThinAirRead", (rid,))
    co = compute_co(h)
    if co.has_reflexive_pair():
        cyc = tuple(find_cycle(co))
        return bad("CyclicCO", cyc, cycle=cyc)
    for w in _write_co_initread(h, co):
        return bad("WriteCOInitRead", w)
    for w in _write_co_read(h, co):
        return bad("WriteCORead", w)
    if m is Model.CCV:
        cfco = _cfco(h, co)
        if cfco.has_reflexive_pair():
            cyc = tuple(find_cycle(cfco))
            return bad("CyclicCF", cyc, cycle=cyc)
    elif m in (Model.CM1, Model.CM2):
        for anchor in cm_anchors(h, m):
            hb = compute_hb(h, co, anchor).relation
            for w in _write_hb_initread(h, hb, anchor):
                return bad("WriteHBInitRead", w)
            if hb.has_reflexive_pair():
                cyc = tuple(find_cycle(hb))
                return bad("CyclicHB", cyc + (anchor,), cycle=cyc)
    return Verdict(name, "Conforming", variant=variant)


def _datalog_witness(h: History, v: datalog.Violation) -> tuple[str, ...]:
    ids = {op_const(o): o.id for o in h.operations}
    b = v.binding_dict()
    if v.label == "CyclicCO":
        return (ids[b["X"]],)
    if v.label in ("WriteCOInitRead", "CyclicCF"):
        return (ids[b["X"]], ids[b["Y"]])
    if v.label == "WriteCORead":
        return (ids[b["X"]], ids[b["Y"]], ids[b["Z"]])
    # WriteHBInitRead / CyclicHB carry the anchor on the violation itself
    return (ids[b["X"]], ids[b["Y"]], v.anchor)


def _via_datalog(h: History, m: Model) -> Verdict:
    name, variant = _model_name(m), _variant(m)
    # ThinAirRead quantifies over writes that do not exist, which a positive
    # Datalog program cannot express; it is screened natively in both modes.
    for rid in _thin_air_reads(h):
        return Verdict(name, "Violation", "ThinAirRead", (rid,), variant=variant)
    sat, violations = datalog.check_constraints(encode(h, m))
    if sat:
        return Verdict(name, "Conforming", variant=variant)
    v = violations[0]
    return Verdict(name, "Violation", v.label, _datalog_witness(h, v), variant=variant)


def check(h: History, model: Union[Model, str], engine: Union[Engine, str] = Engine.NATIVE) -> Verdict:
    """Verdict for h under the model, timed, using the requested engine.

    cross runs both engines and raises EngineDisagreement unless they agree
    on (outcome, pattern); the native verdict (with its own timing) is the
    one returned.
    """
    m = parse_model(model)
    e = parse_engine(engine)
    if not h.executed:
        raise NotExecuted("history has reads without values; execute it first")
    if e is Engine.CROSS:
        nv = check(h, m, Engine.NATIVE)
        dv = check(h, m, Engine.DATALOG)
        if (nv.outcome, nv.pattern) != (dv.outcome, dv.pattern):
            raise EngineDisagreement(
                f"model {m.value}: native says ({nv.outcome}, {nv.pattern}), "
                f"datalog says ({dv.outcome}, {dv.pattern})"
            )
        return nv
    t0 = time.perf_counter()
    v = _native(h, m) if e is Engine.NATIVE else _via_datalog(h, m)
    elapsed = (time.perf_counter() - t0) * 1000.0
    return Verdict(v.model, v.outcome, v.pattern, v.witness, cycle=v.cycle, variant=v.variant, elapsed_ms=elapsed)


def detect_bad_patterns(h: History, model: Union[Model, str]) -> list[tuple[str, tuple[str, ...]]]:
    """Every bad-pattern instance relevant to the model, native engine.

    Unlike check(), this does not stop at the first hit: all thin-air reads,
    all write/read pairs and triples, one entry per cyclic relation (per
    anchor for CM). Intended for diagnostics and for verifying that a
    mutation really planted the pattern it aimed for.
    """
    m = parse_model(model)
    if not h.executed:
        raise NotExecuted("history has reads without values; execute it first")
    found: list[tuple[str, tuple[str, ...]]] = []
    for rid in _thin_air_reads(h):
        found.append(("ThinAirRead", (rid,)))
    co = compute_co(h)
    if co.has_reflexive_pair():
        found.append(("CyclicCO", tuple(find_cycle(co))))
    for w in _write_co_initread(h, co):
        found.append(("WriteCOInitRead", w))
    for w in _write_co_read(h, co):
        found.append(("WriteCORead", w))
    if m is Model.CCV:
        cfco = _cfco(h, co)
        if cfco.has_reflexive_pair():
            found.append(("CyclicCF", tuple(find_cycle(cfco))))
    elif m in (Model.CM1, Model.CM2):
        for anchor in cm_anchors(h, m):
            hb = compute_hb(h, co, anchor).relation
            for w in _write_hb_initread(h, hb, anchor):
                found.append(("WriteHBInitRead", w))
            if hb.has_reflexive_pair():
                found.append(("CyclicHB", tuple(find_cycle(hb)) + (anchor,)))
    return found
