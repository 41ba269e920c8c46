"""A small embedded Datalog engine.

Positive Datalog only: ground facts, definite rules, and headless constraint
clauses (":- body."). No negation, no arithmetic, no function symbols, so
every program has a unique least model reached by bottom-up iteration.

The evaluator is semi-naive: each round only re-derives through facts that
were new in the previous round. Constants are interned to integers in sorted
order (so integer order coincides with string order, which keeps constraint
witnesses deterministic), facts are tuples of those integers, and join
indexes are built lazily per (predicate, bound-positions) signature and then
maintained incrementally as facts arrive. Constraints are checked after the
fixpoint; each violated constraint reports its first witness in lexicographic
order.

Rules with one or two body atoms get specialized runners, since those shapes
(copy rules and transitive-closure style joins) dominate the programs this
package emits; everything else goes through a generic left-to-right indexed
join.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

from .errors import IllFormedProgram


@dataclass(frozen=True, slots=True)
class Var:
    name: str

    def render(self) -> str:
        return self.name


@dataclass(frozen=True, slots=True)
class Const:
    value: str

    def render(self) -> str:
        escaped = self.value.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'


Term = Union[Var, Const]


@dataclass(frozen=True, slots=True)
class Atom:
    pred: str
    args: tuple[Term, ...]

    def render(self) -> str:
        return self.pred + "(" + ",".join(t.render() for t in self.args) + ")"


@dataclass(frozen=True)
class Rule:
    """head :- body. The label is evaluation metadata, not identity."""

    head: Atom
    body: tuple[Atom, ...]
    label: str = field(default="", compare=False)

    def render(self) -> str:
        if not self.body:
            return self.head.render() + "."
        return self.head.render() + " :- " + ", ".join(a.render() for a in self.body) + "."


@dataclass(frozen=True)
class Constraint:
    """Headless clause; the program is satisfiable iff no body match exists.

    label and anchor let a caller tag constraints with what a violation
    means; they are carried through to Violation records and ignored for
    program equality.
    """

    body: tuple[Atom, ...]
    label: str = field(default="", compare=False)
    anchor: Optional[str] = field(default=None, compare=False)

    def render(self) -> str:
        return ":- " + ", ".join(a.render() for a in self.body) + "."


@dataclass(frozen=True, slots=True)
class Violation:
    """One violated constraint with its first witness binding."""

    constraint_index: int
    label: str
    anchor: Optional[str]
    binding: tuple[tuple[str, str], ...]

    def binding_dict(self) -> dict[str, str]:
        return dict(self.binding)


class DatalogProgram:
    """Immutable program: facts, rules, constraints, validated on build.

    Equality ignores fact order (facts are a set semantically) but keeps rule
    and constraint order, which matters for constraint precedence.
    """

    __slots__ = ("facts", "rules", "constraints", "_factset", "arities")

    def __init__(
        self,
        facts: Iterable[Atom] = (),
        rules: Iterable[Rule] = (),
        constraints: Iterable[Constraint] = (),
    ):
        self.facts = tuple(facts)
        self.rules = tuple(rules)
        self.constraints = tuple(constraints)
        self._factset = frozenset(self.facts)
        self.arities = self._validate()

    def _validate(self) -> dict[str, int]:
        arities: dict[str, int] = {}

        def see(atom: Atom) -> None:
            got = arities.setdefault(atom.pred, len(atom.args))
            if got != len(atom.args):
                raise IllFormedProgram(
                    f"predicate {atom.pred!r} used with arities {got} and {len(atom.args)}"
                )

        for f in self.facts:
            see(f)
            if any(isinstance(t, Var) for t in f.args):
                raise IllFormedProgram(f"fact {f.render()} is not ground")
        for r in self.rules:
            see(r.head)
            for a in r.body:
                see(a)
            head_vars = {t.name for t in r.head.args if isinstance(t, Var)}
            body_vars = {t.name for a in r.body for t in a.args if isinstance(t, Var)}
            loose = head_vars - body_vars
            if loose:
                raise IllFormedProgram(
                    f"rule {r.render()} has unbound head variables {sorted(loose)}"
                )
        for c in self.constraints:
            if not c.body:
                raise IllFormedProgram("constraint with empty body")
            for a in c.body:
                see(a)
        return arities

    def __eq__(self, other) -> bool:
        if not isinstance(other, DatalogProgram):
            return NotImplemented
        return (
            self._factset == other._factset
            and self.rules == other.rules
            and self.constraints == other.constraints
        )

    def __hash__(self) -> int:
        return hash((self._factset, self.rules, self.constraints))

    def __repr__(self) -> str:
        return (
            f"<DatalogProgram {len(self.facts)} facts, {len(self.rules)} rules, "
            f"{len(self.constraints)} constraints>"
        )


def program_to_text(program: DatalogProgram) -> str:
    lines = [f.render() + "." for f in program.facts]
    lines += [r.render() for r in program.rules]
    lines += [c.render() for c in program.constraints]
    return "\n".join(lines) + ("\n" if lines else "")


# --- parsing ---------------------------------------------------------------


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens: list[tuple[str, str, int]] = []
    i, n, line = 0, len(text), 1
    while i < n:
        c = text[i]
        if c == "\n":
            line += 1
            i += 1
            continue
        if c in " \t\r":
            i += 1
            continue
        if c == "%":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if c == '"':
            j = i + 1
            buf: list[str] = []
            while True:
                if j >= n:
                    raise IllFormedProgram(f"line {line}: unterminated string")
                ch = text[j]
                if ch == "\\":
                    if j + 1 >= n:
                        raise IllFormedProgram(f"line {line}: unterminated escape")
                    nxt = text[j + 1]
                    if nxt not in ('"', "\\"):
                        raise IllFormedProgram(f"line {line}: unsupported escape \\{nxt}")
                    buf.append(nxt)
                    j += 2
                    continue
                if ch == '"':
                    break
                if ch == "\n":
                    raise IllFormedProgram(f"line {line}: newline inside string")
                buf.append(ch)
                j += 1
            tokens.append(("str", "".join(buf), line))
            i = j + 1
            continue
        if c == ":" and i + 1 < n and text[i + 1] == "-":
            tokens.append(("sep", ":-", line))
            i += 2
            continue
        if c in "(),.":
            tokens.append((c, c, line))
            i += 1
            continue
        if c.isalnum() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(("ident", text[i:j], line))
            i = j
            continue
        raise IllFormedProgram(f"line {line}: unexpected character {c!r}")
    return tokens


class _Parser:
    def __init__(self, tokens: list[tuple[str, str, int]]):
        self.tokens = tokens
        self.pos = 0

    def _peek(self) -> Optional[tuple[str, str, int]]:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def _next(self, want: Optional[str] = None) -> tuple[str, str, int]:
        tok = self._peek()
        if tok is None:
            raise IllFormedProgram("unexpected end of program")
        if want is not None and tok[0] != want:
            raise IllFormedProgram(f"line {tok[2]}: expected {want!r}, found {tok[1]!r}")
        self.pos += 1
        return tok

    def _term(self) -> Term:
        tok = self._next()
        if tok[0] == "str":
            return Const(tok[1])
        if tok[0] == "ident":
            name = tok[1]
            if name[0].isupper() or name[0] == "_":
                return Var(name)
            return Const(name)
        raise IllFormedProgram(f"line {tok[2]}: expected a term, found {tok[1]!r}")

    def _atom(self) -> Atom:
        tok = self._next("ident")
        pred = tok[1]
        self._next("(")
        args: list[Term] = []
        nxt = self._peek()
        if nxt is not None and nxt[0] == ")":
            self._next(")")
            return Atom(pred, ())
        while True:
            args.append(self._term())
            tok = self._next()
            if tok[0] == ")":
                break
            if tok[0] != ",":
                raise IllFormedProgram(f"line {tok[2]}: expected ',' or ')', found {tok[1]!r}")
        return Atom(pred, tuple(args))

    def _body(self) -> tuple[Atom, ...]:
        atoms = [self._atom()]
        while True:
            tok = self._next()
            if tok[0] == ".":
                return tuple(atoms)
            if tok[0] != ",":
                raise IllFormedProgram(f"line {tok[2]}: expected ',' or '.', found {tok[1]!r}")
            atoms.append(self._atom())

    def parse(self) -> DatalogProgram:
        facts: list[Atom] = []
        rules: list[Rule] = []
        constraints: list[Constraint] = []
        while self._peek() is not None:
            if self._peek()[0] == "sep":
                self._next("sep")
                constraints.append(Constraint(self._body()))
                continue
            head = self._atom()
            tok = self._next()
            if tok[0] == ".":
                facts.append(head)
            elif tok[0] == "sep":
                rules.append(Rule(head, self._body()))
            else:
                raise IllFormedProgram(f"line {tok[2]}: expected ':-' or '.', found {tok[1]!r}")
        return DatalogProgram(facts, rules, constraints)


def parse_program(text: str) -> DatalogProgram:
    return _Parser(_tokenize(text)).parse()


# --- evaluation ------------------------------------------------------------

_EMPTY_SET: frozenset = frozenset()


class _Store:
    """Interned facts plus incrementally maintained join indexes."""

    __slots__ = ("names", "ids", "rels", "indexes", "index_by_pred")

    def __init__(self):
        self.names: list[str] = []
        self.ids: dict[str, int] = {}
        self.rels: dict[str, set] = {}
        self.indexes: dict[tuple, dict] = {}
        self.index_by_pred: dict[str, list] = {}

    def intern_all(self, consts) -> None:
        # Sorted interning makes integer order match string order, which is
        # what lets the constraint checker sort integer tuples and still get
        # lexicographically least witnesses.
        self.names = sorted(consts)
        self.ids = {s: i for i, s in enumerate(self.names)}

    def rel(self, pred: str) -> set:
        s = self.rels.get(pred)
        if s is None:
            s = self.rels[pred] = set()
        return s

    def get_index(self, pred: str, boundpos: tuple[int, ...]) -> dict:
        key = (pred, boundpos)
        groups = self.indexes.get(key)
        if groups is None:
            groups = {}
            if len(boundpos) == 1:
                b0 = boundpos[0]
                for f in self.rels.get(pred, _EMPTY_SET):
                    groups.setdefault(f[b0], []).append(f)
            else:
                for f in self.rels.get(pred, _EMPTY_SET):
                    groups.setdefault(tuple(f[p] for p in boundpos), []).append(f)
            self.indexes[key] = groups
            self.index_by_pred.setdefault(pred, []).append((boundpos, groups))
        return groups

    def insert_new(self, pred: str, new_facts) -> None:
        self.rel(pred).update(new_facts)
        for boundpos, groups in self.index_by_pred.get(pred, ()):
            if len(boundpos) == 1:
                b0 = boundpos[0]
                for f in new_facts:
                    k = f[b0]
                    lst = groups.get(k)
                    if lst is None:
                        groups[k] = [f]
                    else:
                        lst.append(f)
            else:
                for f in new_facts:
                    k = tuple(f[p] for p in boundpos)
                    lst = groups.get(k)
                    if lst is None:
                        groups[k] = [f]
                    else:
                        lst.append(f)


def _norm_atom(atom: Atom, ids: dict[str, int]) -> tuple[str, list]:
    """Normalize to (pred, [('c', int) | ('v', name), ...])."""
    ops = []
    for t in atom.args:
        if isinstance(t, Const):
            ops.append(("c", ids[t.value]))
        else:
            ops.append(("v", t.name))
    return atom.pred, ops


def _const_filter(ops) -> tuple[tuple[int, ...], object]:
    """Positions and group key for the constant positions of a delta atom."""
    cpos = tuple(i for i, (k, _) in enumerate(ops) if k == "c")
    if not cpos:
        return (), ()
    vals = tuple(v for k, v in ops if k == "c")
    return cpos, (vals[0] if len(cpos) == 1 else vals)


def _compile_expr(parts: list[str]) -> object:
    body = ",".join(parts)
    if len(parts) == 1:
        body += ","
    return body


class _SinglePlan:
    __slots__ = ("head_pred", "dpred", "dfpos", "dfkey", "checks", "_mk")

    def __init__(self, rule: Rule, store: _Store):
        ids = store.ids
        self.head_pred = rule.head.pred
        dpred, dops = _norm_atom(rule.body[0], ids)
        self.dpred = dpred
        self.dfpos, self.dfkey = _const_filter(dops)
        first: dict[str, int] = {}
        checks = []
        for i, (k, v) in enumerate(dops):
            if k == "v":
                if v in first:
                    checks.append((i, first[v]))
                else:
                    first[v] = i
        self.checks = tuple(checks)
        parts = []
        for k, v in _norm_atom(rule.head, ids)[1]:
            parts.append(repr(v) if k == "c" else f"f[{first[v]}]")
        self._mk = eval("lambda f: (" + _compile_expr(parts) + ")")

    def run(self, dfacts, store: _Store, rel: set, out: set) -> None:
        mk = self._mk
        checks = self.checks
        if checks:
            for f in dfacts:
                if all(f[a] == f[b] for a, b in checks):
                    t = mk(f)
                    if t not in rel:
                        out.add(t)
        else:
            for f in dfacts:
                t = mk(f)
                if t not in rel:
                    out.add(t)


class _PairPlan:
    """Two body atoms sharing exactly one variable: a keyed hash join.

    The delta side is grouped by the join value once per round, the other
    side is answered from a persistent index (or a plain membership probe
    when the join value determines it completely).
    """

    __slots__ = (
        "head_pred",
        "dpred",
        "dfpos",
        "dfkey",
        "djpos",
        "opred",
        "omember",
        "obound",
        "_okey",
        "_probe",
        "_mk",
    )

    def __init__(self, rule: Rule, dpos: int, store: _Store):
        ids = store.ids
        self.head_pred = rule.head.pred
        dpred, dops = _norm_atom(rule.body[dpos], ids)
        opred, oops = _norm_atom(rule.body[1 - dpos], ids)
        self.dpred, self.opred = dpred, opred
        self.dfpos, self.dfkey = _const_filter(dops)
        dvars = {v: i for i, (k, v) in enumerate(dops) if k == "v"}
        ovars = {v: i for i, (k, v) in enumerate(oops) if k == "v"}
        join = next(iter(dvars.keys() & ovars.keys()))
        self.djpos = dvars[join]
        ofree = [i for i, (k, v) in enumerate(oops) if k == "v" and v != join]
        self.omember = not ofree
        if self.omember:
            parts = [("j" if (k == "v") else repr(v)) for k, v in oops]
            self._probe = eval("lambda j: (" + _compile_expr(parts) + ")")
            self.obound = ()
            self._okey = None
        else:
            bound = sorted(i for i, (k, v) in enumerate(oops) if k == "c" or v == join)
            self.obound = tuple(bound)
            if len(bound) == 1:
                self._okey = None  # bare join value (the single bound slot is the join)
            else:
                parts = [("j" if oops[i][0] == "v" else repr(oops[i][1])) for i in bound]
                self._okey = eval("lambda j: (" + ",".join(parts) + ",)")
            self._probe = None
        parts = []
        for k, v in _norm_atom(rule.head, ids)[1]:
            if k == "c":
                parts.append(repr(v))
            elif v in dvars:
                parts.append(f"d[{dvars[v]}]")
            else:
                parts.append(f"o[{ovars[v]}]")
        self._mk = eval("lambda d, o: (" + _compile_expr(parts) + ")")

    def run(self, dfacts, store: _Store, rel: set, out: set) -> None:
        djpos = self.djpos
        grouped: dict = {}
        for f in dfacts:
            k = f[djpos]
            lst = grouped.get(k)
            if lst is None:
                grouped[k] = [f]
            else:
                lst.append(f)
        mk = self._mk
        if self.omember:
            orel = store.rels.get(self.opred, _EMPTY_SET)
            probe = self._probe
            for j, dfs in grouped.items():
                if probe(j) not in orel:
                    continue
                for df in dfs:
                    t = mk(df, None)
                    if t not in rel:
                        out.add(t)
            return
        groups = store.get_index(self.opred, self.obound)
        okey = self._okey
        for j, dfs in grouped.items():
            ofs = groups.get(j if okey is None else okey(j))
            if not ofs:
                continue
            for of in ofs:
                for df in dfs:
                    t = mk(df, of)
                    if t not in rel:
                        out.add(t)


_MEMBER, _INDEX, _SCAN = 0, 1, 2


class _Step:
    __slots__ = ("kind", "pred", "boundpos", "key_fn", "bind_ops")

    def __init__(self, kind, pred, boundpos, key_fn, bind_ops):
        self.kind = kind
        self.pred = pred
        self.boundpos = boundpos
        self.key_fn = key_fn
        self.bind_ops = bind_ops


def _plan_order(natoms: list[tuple[str, list]], bound: set[str], size_of) -> list[int]:
    """Greedy join order: fully bound atoms first, then most-bound, then
    smallest relation, then textual position."""
    remaining = list(range(len(natoms)))
    order = []
    cur = set(bound)
    while remaining:
        best = None
        for idx in remaining:
            pred, ops = natoms[idx]
            nbound = sum(1 for k, v in ops if k == "c" or v in cur)
            full = nbound == len(ops)
            rank = (not full, -nbound, size_of(pred), idx)
            if best is None or rank < best[0]:
                best = (rank, idx)
        order.append(best[1])
        remaining.remove(best[1])
        for k, v in natoms[best[1]][1]:
            if k == "v":
                cur.add(v)
    return order


class _GenericPlan:
    __slots__ = ("head_pred", "dpred", "dfpos", "dfkey", "dbind", "nslots", "steps", "_mk")

    def __init__(self, rule: Rule, dpos: int, store: _Store):
        ids = store.ids
        self.head_pred = rule.head.pred
        natoms = [_norm_atom(a, ids) for a in rule.body]
        dpred, dops = natoms[dpos]
        self.dpred = dpred
        self.dfpos, self.dfkey = _const_filter(dops)
        slots: dict[str, int] = {}

        def slot(v: str) -> int:
            if v not in slots:
                slots[v] = len(slots)
            return slots[v]

        dbind = []
        for i, (k, v) in enumerate(dops):
            if k == "v":
                if v in slots:
                    dbind.append((False, i, slots[v]))
                else:
                    dbind.append((True, i, slot(v)))
        self.dbind = tuple(dbind)
        rest = [i for i in range(len(natoms)) if i != dpos]
        sizes = {p: len(store.rels.get(p, _EMPTY_SET)) for p, _ in natoms}
        order = _plan_order([natoms[i] for i in rest], set(slots), sizes.get)
        steps = []
        for ridx in order:
            pred, ops = natoms[rest[ridx]]
            boundpos = []
            key_parts = []
            bind_ops = []
            seen_here: dict[str, int] = {}
            for i, (k, v) in enumerate(ops):
                if k == "c":
                    boundpos.append(i)
                    key_parts.append(repr(v))
                elif v in slots and v not in seen_here:
                    boundpos.append(i)
                    key_parts.append(f"b[{slots[v]}]")
                    seen_here[v] = i
                else:
                    if v in seen_here or v in slots:
                        bind_ops.append((False, i, slots[v]))
                    else:
                        bind_ops.append((True, i, slot(v)))
                        seen_here[v] = i
            if not bind_ops:
                fn = eval("lambda b: (" + _compile_expr(key_parts) + ")")
                steps.append(_Step(_MEMBER, pred, None, fn, ()))
            elif not boundpos:
                steps.append(_Step(_SCAN, pred, None, None, tuple(bind_ops)))
            else:
                if len(key_parts) == 1:
                    fn = eval("lambda b: " + key_parts[0])
                else:
                    fn = eval("lambda b: (" + ",".join(key_parts) + ",)")
                steps.append(_Step(_INDEX, pred, tuple(boundpos), fn, tuple(bind_ops)))
        self.steps = tuple(steps)
        self.nslots = len(slots)
        parts = []
        for k, v in _norm_atom(rule.head, ids)[1]:
            parts.append(repr(v) if k == "c" else f"b[{slots[v]}]")
        self._mk = eval("lambda b: (" + _compile_expr(parts) + ")")

    def run(self, dfacts, store: _Store, rel: set, out: set) -> None:
        b = [0] * self.nslots
        steps = self.steps
        nsteps = len(steps)
        mk = self._mk
        rels = store.rels
        indexes = [
            store.get_index(st.pred, st.boundpos) if st.kind == _INDEX else None for st in steps
        ]

        def go(i: int) -> None:
            if i == nsteps:
                t = mk(b)
                if t not in rel:
                    out.add(t)
                return
            st = steps[i]
            if st.kind == _MEMBER:
                if st.key_fn(b) in rels.get(st.pred, _EMPTY_SET):
                    go(i + 1)
                return
            if st.kind == _INDEX:
                facts = indexes[i].get(st.key_fn(b))
                if not facts:
                    return
            else:
                facts = rels.get(st.pred, _EMPTY_SET)
            bind_ops = st.bind_ops
            for f in facts:
                ok = True
                for fresh, pos, s in bind_ops:
                    v = f[pos]
                    if fresh:
                        b[s] = v
                    elif b[s] != v:
                        ok = False
                        break
                if ok:
                    go(i + 1)

        dbind = self.dbind
        for df in dfacts:
            ok = True
            for fresh, pos, s in dbind:
                v = df[pos]
                if fresh:
                    b[s] = v
                elif b[s] != v:
                    ok = False
                    break
            if ok:
                go(0)


def _make_plans(rule: Rule, store: _Store) -> list:
    plans = []
    for dpos in range(len(rule.body)):
        if len(rule.body) == 1:
            plans.append(_SinglePlan(rule, store))
            continue
        if len(rule.body) == 2:
            d_ops = [v for t, v in _norm_atom(rule.body[dpos], store.ids)[1] if t == "v"]
            o_ops = [v for t, v in _norm_atom(rule.body[1 - dpos], store.ids)[1] if t == "v"]
            shared = set(d_ops) & set(o_ops)
            no_repeats = len(d_ops) == len(set(d_ops)) and len(o_ops) == len(set(o_ops))
            if len(shared) == 1 and no_repeats:
                plans.append(_PairPlan(rule, dpos, store))
                continue
        plans.append(_GenericPlan(rule, dpos, store))
    return plans


def _compile(program: DatalogProgram) -> tuple[_Store, list]:
    store = _Store()
    consts = set()
    for f in program.facts:
        for t in f.args:
            consts.add(t.value)
    for r in program.rules:
        for a in (r.head, *r.body):
            for t in a.args:
                if isinstance(t, Const):
                    consts.add(t.value)
    for c in program.constraints:
        for a in c.body:
            for t in a.args:
                if isinstance(t, Const):
                    consts.add(t.value)
    store.intern_all(consts)
    ids = store.ids
    for f in program.facts:
        store.rel(f.pred).add(tuple(ids[t.value] for t in f.args))
    for r in program.rules:
        store.rel(r.head.pred)
        for a in r.body:
            store.rel(a.pred)
    plans = []
    for r in program.rules:
        if not r.body:
            store.rel(r.head.pred).add(tuple(ids[t.value] for t in r.head.args))
            continue
        plans.extend(_make_plans(r, store))
    return store, plans


def _fixpoint(store: _Store, plans: list) -> None:
    needed = {(p.dpred, p.dfpos) for p in plans}
    delta: dict[str, list] = {pred: list(rel) for pred, rel in store.rels.items() if rel}
    while delta:
        groupmaps: dict = {}
        for pred, fpos in needed:
            lst = delta.get(pred)
            if not lst:
                continue
            m: dict = {}
            if not fpos:
                m[()] = lst
            elif len(fpos) == 1:
                p0 = fpos[0]
                for f in lst:
                    m.setdefault(f[p0], []).append(f)
            else:
                for f in lst:
                    m.setdefault(tuple(f[p] for p in fpos), []).append(f)
            groupmaps[(pred, fpos)] = m
        new: dict[str, set] = {}
        for plan in plans:
            gm = groupmaps.get((plan.dpred, plan.dfpos))
            if gm is None:
                continue
            dfacts = gm.get(plan.dfkey)
            if not dfacts:
                continue
            out = new.get(plan.head_pred)
            if out is None:
                out = new[plan.head_pred] = set()
            plan.run(dfacts, store, store.rels[plan.head_pred], out)
        delta = {}
        for pred, facts in new.items():
            facts -= store.rels[pred]
            if facts:
                store.insert_new(pred, facts)
                delta[pred] = list(facts)


# --- constraint checking ---------------------------------------------------


class _CheckCaches:
    __slots__ = ("sorted_rels", "indexes")

    def __init__(self):
        self.sorted_rels: dict[str, list] = {}
        self.indexes: dict[tuple, dict] = {}


def _sorted_rel(store: _Store, pred: str, caches: _CheckCaches) -> list:
    lst = caches.sorted_rels.get(pred)
    if lst is None:
        lst = caches.sorted_rels[pred] = sorted(store.rels.get(pred, _EMPTY_SET))
    return lst


def _check_index(store: _Store, pred: str, boundpos: tuple, caches: _CheckCaches) -> dict:
    key = (pred, boundpos)
    groups = caches.indexes.get(key)
    if groups is None:
        groups = {}
        for f in _sorted_rel(store, pred, caches):
            k = f[boundpos[0]] if len(boundpos) == 1 else tuple(f[p] for p in boundpos)
            groups.setdefault(k, []).append(f)
        caches.indexes[key] = groups
    return groups


def _constraint_witness(
    store: _Store, constraint: Constraint, caches: _CheckCaches
) -> Optional[tuple[tuple[str, str], ...]]:
    """First witness binding in lexicographic order, or None."""
    ids = store.ids
    for a in constraint.body:
        for t in a.args:
            if isinstance(t, Const) and t.value not in ids:
                return None
    natoms = [_norm_atom(a, ids) for a in constraint.body]
    slots: dict[str, int] = {}
    for _, ops in natoms:
        for k, v in ops:
            if k == "v" and v not in slots:
                slots[v] = len(slots)
    sizes = {pred: len(store.rels.get(pred, _EMPTY_SET)) for pred, _ in natoms}
    order = _plan_order(natoms, set(), sizes.get)
    binding = [None] * len(slots)

    def match(f, ops, bound_before: dict) -> bool:
        seen: dict[str, int] = {}
        for i, (k, v) in enumerate(ops):
            x = f[i]
            if k == "c":
                if x != v:
                    return False
            elif v in seen:
                if f[seen[v]] != x:
                    return False
            elif bound_before.get(v, False):
                if binding[slots[v]] != x:
                    return False
            else:
                binding[slots[v]] = x
                seen[v] = i
        return True

    bound: dict[str, bool] = {}

    def search(step: int) -> bool:
        if step == len(order):
            return True
        pred, ops = natoms[order[step]]
        bound_here = [v for k, v in ops if k == "v" and not bound.get(v, False)]
        cpos = [i for i, (k, _) in enumerate(ops)]
        known = [i for i, (k, v) in enumerate(ops) if k == "c" or bound.get(v, False)]
        free = [i for i in cpos if i not in known]
        if not free:
            probe = tuple(
                v if k == "c" else binding[slots[v]] for k, v in ops
            )
            if probe in store.rels.get(pred, _EMPTY_SET):
                for v in bound_here:
                    bound[v] = True
                if search(step + 1):
                    return True
                for v in bound_here:
                    bound[v] = False
            return False
        if known:
            boundpos = tuple(known)
            key_vals = [
                (ops[i][1] if ops[i][0] == "c" else binding[slots[ops[i][1]]]) for i in known
            ]
            key = key_vals[0] if len(known) == 1 else tuple(key_vals)
            facts = _check_index(store, pred, boundpos, caches).get(key, ())
        else:
            facts = _sorted_rel(store, pred, caches)
        snapshot = dict(bound)
        for f in facts:
            if match(f, ops, snapshot):
                for v in bound_here:
                    bound[v] = True
                if search(step + 1):
                    return True
                for v in bound_here:
                    bound[v] = False
        return False

    if not search(0):
        return None
    names = store.names
    out = []
    for v, s in slots.items():
        out.append((v, names[binding[s]]))
    return tuple(out)


def _check(store: _Store, program: DatalogProgram) -> list[Violation]:
    caches = _CheckCaches()
    violations = []
    for ci, c in enumerate(program.constraints):
        w = _constraint_witness(store, c, caches)
        if w is not None:
            violations.append(Violation(ci, c.label, c.anchor, w))
    return violations


# --- public API ------------------------------------------------------------


def evaluate(program: DatalogProgram) -> frozenset[Atom]:
    """Least model of the program (input facts included), as Atom objects."""
    store, plans = _compile(program)
    _fixpoint(store, plans)
    names = store.names
    out = []
    for pred, rel in store.rels.items():
        for f in rel:
            out.append(Atom(pred, tuple(Const(names[i]) for i in f)))
    return frozenset(out)


def evaluate_naive(program: DatalogProgram) -> frozenset[Atom]:
    """Reference evaluator: full re-scan each round, no indexes, no interning.

    Exists so tests can confirm the semi-naive engine computes the same
    model; use evaluate for anything larger than toy programs.
    """
    rels: dict[str, set[tuple[str, ...]]] = {}
    for f in program.facts:
        rels.setdefault(f.pred, set()).add(tuple(t.value for t in f.args))

    def bindings(body: tuple[Atom, ...], i: int, env: dict[str, str]):
        if i == len(body):
            yield env
            return
        atom = body[i]
        for f in rels.get(atom.pred, ()):
            e = dict(env)
            ok = True
            for t, x in zip(atom.args, f):
                if isinstance(t, Const):
                    if t.value != x:
                        ok = False
                        break
                elif t.name in e:
                    if e[t.name] != x:
                        ok = False
                        break
                else:
                    e[t.name] = x
            if ok:
                yield from bindings(body, i + 1, e)

    changed = True
    while changed:
        changed = False
        for r in program.rules:
            derived = []
            for env in bindings(r.body, 0, {}):
                derived.append(
                    tuple(t.value if isinstance(t, Const) else env[t.name] for t in r.head.args)
                )
            rel = rels.setdefault(r.head.pred, set())
            for t in derived:
                if t not in rel:
                    rel.add(t)
                    changed = True
    out = []
    for pred, rel in rels.items():
        for f in rel:
            out.append(Atom(pred, tuple(Const(x) for x in f)))
    return frozenset(out)


def check_constraints(
    program: DatalogProgram, fixpoint: Optional[frozenset[Atom]] = None
) -> tuple[bool, tuple[Violation, ...]]:
    """Evaluate (or accept a precomputed least model) and test constraints.

    Returns (satisfiable, violations); each violated constraint contributes
    exactly one Violation carrying its first witness.
    """
    if fixpoint is None:
        store, plans = _compile(program)
        _fixpoint(store, plans)
    else:
        store = _Store()
        consts = set()
        for f in program.facts:
            for t in f.args:
                consts.add(t.value)
        for group in (program.rules, program.constraints):
            for r in group:
                atoms = (r.head, *r.body) if isinstance(r, Rule) else r.body
                for a in atoms:
                    for t in a.args:
                        if isinstance(t, Const):
                            consts.add(t.value)
        for a in fixpoint:
            for t in a.args:
                consts.add(t.value)
        store.intern_all(consts)
        ids = store.ids
        arities = dict(program.arities)
        for a in list(program.facts) + list(fixpoint):
            got = arities.setdefault(a.pred, len(a.args))
            if got != len(a.args):
                raise IllFormedProgram(
                    f"predicate {a.pred!r} used with arities {got} and {len(a.args)}"
                )
            store.rel(a.pred).add(tuple(ids[t.value] for t in a.args))
    violations = _check(store, program)
    return (not violations, tuple(violations))
