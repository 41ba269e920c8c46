"""Translation of histories into Datalog programs.

One program per (history, model) pair. Facts describe the history through six
predicates: wrt/rd (operation kinds), po (program order), wr (write-read
matching), sv (same variable, irreflexive), initread (reads of the initial
value 0). Rules derive the causal order co, the CCv conflict machinery
(cf/cfco), and per-anchor happened-before relations hb for CM. Constraints
are the bad patterns: the program is satisfiable exactly when the history
conforms to the model, except for ThinAirRead, which the checker tests
natively since it universally quantifies over absent writes.

sv being irreflexive is load-bearing: every rule or constraint that needs two
distinct same-variable writes says so through an sv atom, so no explicit
disequality is required.
"""

from __future__ import annotations

import enum
from typing import Union

from .datalog import Atom, Const, Constraint, DatalogProgram, Rule, Var, program_to_text
from .errors import NotExecuted
from .history import History, Operation, po_maximal


class Model(enum.Enum):
    CC = "CC"
    CCV = "CCv"
    CM1 = "CM1"
    CM2 = "CM2"


_MODEL_ALIASES = {
    "cc": Model.CC,
    "ccv": Model.CCV,
    "cm": Model.CM2,
    "cm1": Model.CM1,
    "cm2": Model.CM2,
}


def parse_model(name: Union[Model, str]) -> Model:
    """Model from a user-facing name; "cm" means CM2, the recommended path."""
    if isinstance(name, Model):
        return name
    m = _MODEL_ALIASES.get(name.strip().lower())
    if m is None:
        raise ValueError(f"unknown model {name!r} (expected cc, ccv, cm, cm1 or cm2)")
    return m


def op_const(o: Operation) -> str:
    return o.label()


def history_facts(h: History) -> tuple[Atom, ...]:
    """Fact block per operation, in canonical order.

    Each operation's block holds its kind fact, then one slot per other
    operation carrying (in order) the po edge out of it, the wr edge into it,
    and the sv edge into it, whichever exist. initread facts close the list.
    """
    ops = h.operations
    consts = {o.id: Const(op_const(o)) for o in ops}
    po, wr = h.po, h.wr
    facts: list[Atom] = []
    for o in ops:
        c = consts[o.id]
        facts.append(Atom("wrt" if o.is_write else "rd", (c,)))
        for o2 in ops:
            if o2.id == o.id:
                continue
            c2 = consts[o2.id]
            if (o.id, o2.id) in po:
                facts.append(Atom("po", (c, c2)))
            if (o2.id, o.id) in wr:
                facts.append(Atom("wr", (c2, c)))
            if o2.variable == o.variable:
                facts.append(Atom("sv", (c2, c)))
    for o in ops:
        if o.is_read and o.value == 0:
            facts.append(Atom("initread", (consts[o.id],)))
    return tuple(facts)


_X, _Y, _Z = Var("X"), Var("Y"), Var("Z")


def _cc_rules() -> tuple[Rule, ...]:
    return (
        Rule(Atom("co", (_X, _Y)), (Atom("po", (_X, _Y)),)),
        Rule(Atom("co", (_X, _Y)), (Atom("wr", (_X, _Y)),)),
        Rule(Atom("co", (_X, _Z)), (Atom("co", (_X, _Y)), Atom("co", (_Y, _Z)))),
    )


def _cc_constraints() -> tuple[Constraint, ...]:
    return (
        Constraint((Atom("co", (_X, _X)),), label="CyclicCO"),
        Constraint(
            (
                Atom("co", (_X, _Y)),
                Atom("wrt", (_X,)),
                Atom("initread", (_Y,)),
                Atom("sv", (_X, _Y)),
            ),
            label="WriteCOInitRead",
        ),
        Constraint(
            (
                Atom("co", (_X, _Y)),
                Atom("co", (_Y, _Z)),
                Atom("wr", (_X, _Z)),
                Atom("wrt", (_X,)),
                Atom("wrt", (_Y,)),
                Atom("rd", (_Z,)),
                Atom("sv", (_X, _Y)),
                Atom("sv", (_Y, _Z)),
            ),
            label="WriteCORead",
        ),
    )


def _ccv_rules() -> tuple[Rule, ...]:
    return (
        Rule(
            Atom("cf", (_X, _Y)),
            (
                Atom("co", (_X, _Z)),
                Atom("wr", (_Y, _Z)),
                Atom("wrt", (_X,)),
                Atom("sv", (_X, _Y)),
                Atom("sv", (_X, _Z)),
            ),
        ),
        Rule(Atom("cf", (_X, _Y)), (Atom("cf", (_X, _Z)), Atom("cf", (_Z, _Y)))),
        Rule(Atom("cfco", (_X, _Y)), (Atom("co", (_X, _Y)),)),
        Rule(Atom("cfco", (_X, _Y)), (Atom("cf", (_X, _Y)),)),
        # Transitivity across the union; without it a conflict cycle that
        # alternates cf and co segments goes undetected.
        Rule(Atom("cfco", (_X, _Z)), (Atom("cfco", (_X, _Y)), Atom("cfco", (_Y, _Z)))),
    )


_CCV_CONSTRAINT = Constraint(
    (Atom("cfco", (_X, _Y)), Atom("cfco", (_Y, _X))), label="CyclicCF"
)


def _cm_block(anchor_id: str, a: Const, verbatim_hb: bool) -> tuple[tuple[Rule, ...], tuple[Constraint, ...]]:
    rules = [
        Rule(Atom("hb", (_X, a, a)), (Atom("co", (_X, a)),)),
        Rule(Atom("hb", (_X, _Y, a)), (Atom("hb", (_Y, a, a)), Atom("co", (_X, _Y)))),
        Rule(
            Atom("hb", (_X, _Y, a)),
            (
                Atom("hb", (_X, _Z, a)),
                Atom("po", (_Z, a)),
                Atom("wr", (_Y, _Z)),
                Atom("wrt", (_X,)),
                Atom("sv", (_X, _Y)),
            ),
        ),
    ]
    if verbatim_hb:
        # The unguarded variant: saturates through reads anywhere in the
        # causal past, not only reads po-before the anchor. Kept for fidelity
        # experiments; it can over-approximate hb and flag conforming
        # histories.
        rules.append(
            Rule(
                Atom("hb", (_X, _Y, a)),
                (
                    Atom("hb", (_X, _Z, a)),
                    Atom("wr", (_Y, _Z)),
                    Atom("wrt", (_X,)),
                    Atom("sv", (_X, _Y)),
                ),
            )
        )
    else:
        # The anchor-read case of saturation: the anchor itself reads Y while
        # X is already hb-before the anchor.
        rules.append(
            Rule(
                Atom("hb", (_X, _Y, a)),
                (
                    Atom("hb", (_X, a, a)),
                    Atom("wr", (_Y, a)),
                    Atom("wrt", (_X,)),
                    Atom("sv", (_X, _Y)),
                ),
            )
        )
    rules.append(Rule(Atom("hb", (_X, _Z, a)), (Atom("hb", (_X, _Y, a)), Atom("hb", (_Y, _Z, a)))))
    constraints = (
        Constraint(
            (
                Atom("hb", (_X, _Y, a)),
                Atom("wrt", (_X,)),
                Atom("sv", (_X, _Y)),
                Atom("po", (_Y, a)),
                Atom("initread", (_Y,)),
            ),
            label="WriteHBInitRead",
            anchor=anchor_id,
        ),
        Constraint(
            (Atom("hb", (_X, _Y, a)), Atom("hb", (_Y, _X, a))),
            label="CyclicHB",
            anchor=anchor_id,
        ),
    )
    return tuple(rules), constraints


def cm_anchors(h: History, m: Model) -> tuple[str, ...]:
    if m is Model.CM1:
        return h.op_ids
    return po_maximal(h)


def encode(h: History, m: Union[Model, str], verbatim_hb: bool = False) -> DatalogProgram:
    """The Datalog program whose satisfiability decides h's conformance to m.

    ThinAirRead is not represented; callers must test it natively first.
    """
    m = parse_model(m)
    if not h.executed:
        raise NotExecuted("cannot encode a history with unvalued reads")
    facts = history_facts(h)
    rules: list[Rule] = list(_cc_rules())
    constraints: list[Constraint] = list(_cc_constraints())
    if m is Model.CCV:
        rules.extend(_ccv_rules())
        constraints.append(_CCV_CONSTRAINT)
    elif m in (Model.CM1, Model.CM2):
        consts = {o.id: Const(op_const(o)) for o in h.operations}
        for anchor_id in cm_anchors(h, m):
            block_rules, block_constraints = _cm_block(anchor_id, consts[anchor_id], verbatim_hb)
            rules.extend(block_rules)
            constraints.extend(block_constraints)
    return DatalogProgram(facts, tuple(rules), tuple(constraints))


def emit_text(p: DatalogProgram) -> str:
    return program_to_text(p)
