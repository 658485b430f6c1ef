"""Minimal Choreographies: abstract syntax, concrete syntax and static helpers.

Concrete syntax::

    C ::= p.e -> q; C | p -> q[L]; C | if p = q then C else C
        | def X = C in C | X | 0 | ( C )
    e ::= eps | c | s c | (s c)

Process names are lowercase identifiers or reserved auxiliaries ``r#<n>``;
procedure names start with an uppercase letter.  ``#`` starts a comment
unless it is part of an ``r#<n>`` name.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field, fields, replace
from functools import cached_property
from typing import Optional

from .errors import (
    MultipleExitPoints,
    NoExitPoint,
    ParseError,
    SelfCommunicationError,
    UnboundProcedureError,
    UnguardedRecursionError,
)
from .lexer import PROC_NAME_RE, PROCEDURE_NAME_RE, TokenStream

KEYWORDS = frozenset({"def", "in", "if", "then", "else", "eps", "send", "recv", "sel", "branch"})


class ShadowingWarning(UserWarning):
    pass


class Expr(enum.Enum):
    EPS = "eps"
    CELL = "c"
    SUCC = "(s c)"

    def evaluate(self, cell: int) -> int:
        if self is Expr.EPS:
            return 0
        if self is Expr.CELL:
            return cell
        return cell + 1

    def __str__(self):
        return self.value


class Label(enum.Enum):
    L = "L"
    R = "R"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class Action:
    """An interaction as seen by a scheduler.

    ``com``: p sends ``expr`` to q.  ``sel``: p selects ``label`` at q.
    ``cond``: p receives q's value and compares it with its own.
    """

    kind: str
    p: str
    q: str
    expr: Optional[Expr] = None
    label: Optional[Label] = None

    @property
    def procs(self):
        return frozenset((self.p, self.q))

    def __str__(self):
        if self.kind == "com":
            return f"{self.p}.{self.expr} -> {self.q}"
        if self.kind == "sel":
            return f"{self.p} -> {self.q}[{self.label}]"
        return f"if {self.p} = {self.q}"

    def to_json(self):
        out = {"kind": self.kind, "p": self.p, "q": self.q}
        if self.expr is not None:
            out["expr"] = self.expr.value
        if self.label is not None:
            out["label"] = self.label.value
        return out


class ProcState:
    """The total state sigma: every process name maps to a natural, absent names to 0."""

    __slots__ = ("_values", "_hash")

    def __init__(self, values=None):
        vals = {}
        for name, v in dict(values or {}).items():
            if v < 0:
                raise ValueError(f"negative value for {name}")
            if v:
                vals[name] = int(v)
        self._values = vals
        self._hash = None

    def __getitem__(self, name) -> int:
        return self._values.get(name, 0)

    def set(self, name, value) -> "ProcState":
        if self[name] == value:
            return self
        vals = dict(self._values)
        if value:
            vals[name] = value
        else:
            vals.pop(name, None)
        out = ProcState.__new__(ProcState)
        out._values = vals
        out._hash = None
        return out

    def items(self):
        return sorted(self._values.items())

    def restrict(self, names):
        return {n: self[n] for n in sorted(names)}

    def as_dict(self):
        return dict(self.items())

    def __eq__(self, other):
        return isinstance(other, ProcState) and self._values == other._values

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._values.items()))
        return self._hash

    def __repr__(self):
        inner = ", ".join(f"{k}={v}" for k, v in self.items())
        return f"ProcState({inner})"

    def __str__(self):
        return "{" + ", ".join(f"{k}={v}" for k, v in self.items()) + "}"

    @classmethod
    def parse(cls, text):
        """Parse ``p=3,q=1`` (whitespace and empty input allowed)."""
        vals = {}
        for part in (text or "").split(","):
            part = part.strip()
            if not part:
                continue
            name, sep, value = part.partition("=")
            name = name.strip()
            if not sep or not PROC_NAME_RE.match(name):
                raise ParseError(f"bad state binding {part!r}")
            try:
                vals[name] = int(value.strip())
            except ValueError:
                raise ParseError(f"bad value in state binding {part!r}") from None
            if vals[name] < 0:
                raise ParseError(f"negative value in state binding {part!r}")
        return cls(vals)


# -- abstract syntax ---------------------------------------------------------


class Choreography:
    """Base class of choreography nodes.  Nodes are immutable and compare structurally."""

    __slots__ = ()

    def __str__(self):
        return print_choreography(self)


@dataclass(frozen=True)
class Com(Choreography):
    sender: str
    expr: Expr
    receiver: str
    cont: Choreography

    @cached_property
    def action(self):
        return Action("com", self.sender, self.receiver, expr=self.expr)

    @cached_property
    def free_calls(self):
        return self.cont.free_calls


@dataclass(frozen=True)
class Sel(Choreography):
    sender: str
    receiver: str
    label: Label
    cont: Choreography

    @cached_property
    def action(self):
        return Action("sel", self.sender, self.receiver, label=self.label)

    @cached_property
    def free_calls(self):
        return self.cont.free_calls


@dataclass(frozen=True)
class Cond(Choreography):
    p: str
    q: str
    then: Choreography
    else_: Choreography

    @cached_property
    def action(self):
        return Action("cond", self.p, self.q)

    @cached_property
    def free_calls(self):
        return self.then.free_calls | self.else_.free_calls


@dataclass(frozen=True)
class Def(Choreography):
    name: str
    body: Choreography
    cont: Choreography
    annotation: Optional[frozenset] = field(default=None)

    @cached_property
    def free_calls(self):
        return (self.body.free_calls | self.cont.free_calls) - {self.name}


@dataclass(frozen=True)
class Call(Choreography):
    name: str
    annotation: Optional[frozenset] = field(default=None)

    @cached_property
    def free_calls(self):
        return frozenset((self.name,))


@dataclass(frozen=True)
class End(Choreography):
    free_calls = frozenset()


END = End()


def _cached_hash(self):
    # terms produced by reduction share subterms heavily; rehashing them is exponential
    h = self.__dict__.get("_hash")
    if h is None:
        h = hash((type(self).__name__, *(getattr(self, f.name) for f in fields(self))))
        self.__dict__["_hash"] = h
    return h


def _node_eq(self, other):
    """Structural equality that compares each pair of shared subterms once."""
    if self is other:
        return True
    if type(self) is not type(other):
        return NotImplemented
    seen = set()
    stack = [(self, other)]
    while stack:
        a, b = stack.pop()
        if a is b or (id(a), id(b)) in seen:
            continue
        seen.add((id(a), id(b)))
        if type(a) is not type(b):
            return False
        if isinstance(a, tuple):
            if len(a) != len(b):
                return False
            stack.extend(zip(a, b))
        elif type(a).__eq__ is _node_eq:
            if hash(a) != hash(b):
                return False
            stack.extend((getattr(a, f.name), getattr(b, f.name)) for f in fields(a))
        elif a != b:
            return False
    return True


for _cls in (Com, Sel, Cond, Def, Call):
    _cls.__hash__ = _cached_hash
    _cls.__eq__ = _node_eq


def com(p, e, q, cont=END):
    return Com(p, e, q, cont)


def inc(p, t, cont=END):
    """The increment macro: ``p.c -> t; t.(s c) -> p``."""
    return Com(p, Expr.CELL, t, Com(t, Expr.SUCC, p, cont))


# -- parsing -----------------------------------------------------------------


def parse_choreography(text, validate=True):
    ts = TokenStream(text)
    c = _parse_chor(ts)
    ts.expect_eof()
    if validate:
        validate_choreography(c)
    return c


def _proc(ts):
    tok = ts.peek
    if tok.kind != "name" or tok.text in KEYWORDS or not PROC_NAME_RE.match(tok.text):
        raise ts.error("expected a process name")
    ts.next()
    return tok.text


def _parse_chor(ts):
    tok = ts.peek
    if ts.accept("("):
        c = _parse_chor(ts)
        ts.expect(")")
        return c
    if tok.kind == "num":
        if tok.text != "0":
            raise ts.error("expected '0'")
        ts.next()
        return END
    if ts.accept("def"):
        name = ts.expect_name(PROCEDURE_NAME_RE, "a procedure name")
        ts.expect("=")
        body = _parse_chor(ts)
        ts.expect("in")
        cont = _parse_chor(ts)
        return Def(name, body, cont)
    if ts.accept("if"):
        p = _proc(ts)
        ts.expect("=")
        q = _proc(ts)
        ts.expect("then")
        c1 = _parse_chor(ts)
        ts.expect("else")
        c2 = _parse_chor(ts)
        if p == q:
            raise SelfCommunicationError(f"conditional compares {p} with itself ({tok.line}:{tok.col})")
        return Cond(p, q, c1, c2)
    if tok.kind == "name" and PROCEDURE_NAME_RE.match(tok.text):
        ts.next()
        return Call(tok.text)
    p = _proc(ts)
    if ts.accept("."):
        e = _parse_expr(ts)
        ts.expect("->")
        q = _proc(ts)
        ts.expect(";")
        if p == q:
            raise SelfCommunicationError(f"{p} communicates with itself ({tok.line}:{tok.col})")
        return Com(p, e, q, _parse_chor(ts))
    ts.expect("->")
    q = _proc(ts)
    ts.expect("[")
    lab = ts.peek
    if lab.text not in ("L", "R"):
        raise ts.error("expected label L or R")
    ts.next()
    ts.expect("]")
    ts.expect(";")
    if p == q:
        raise SelfCommunicationError(f"{p} selects at itself ({tok.line}:{tok.col})")
    return Sel(p, q, Label(lab.text), _parse_chor(ts))


def _parse_expr(ts):
    if ts.accept("("):
        e = _parse_expr(ts)
        ts.expect(")")
        return e
    if ts.accept("eps"):
        return Expr.EPS
    if ts.accept("c"):
        return Expr.CELL
    if ts.accept("s"):
        ts.expect("c")
        return Expr.SUCC
    raise ts.error("expected an expression (eps, c, s c)")


# -- printing ----------------------------------------------------------------


def print_choreography(c) -> str:
    parts = []
    while True:
        if isinstance(c, Com):
            parts.append(f"{c.sender}.{c.expr} -> {c.receiver}; ")
            c = c.cont
        elif isinstance(c, Sel):
            parts.append(f"{c.sender} -> {c.receiver}[{c.label}]; ")
            c = c.cont
        elif isinstance(c, Cond):
            parts.append(
                f"if {c.p} = {c.q} then ({print_choreography(c.then)})"
                f" else ({print_choreography(c.else_)})"
            )
            break
        elif isinstance(c, Def):
            parts.append(f"def {c.name} = ({print_choreography(c.body)}) in ")
            c = c.cont
        elif isinstance(c, Call):
            parts.append(c.name)
            break
        elif isinstance(c, End):
            parts.append("0")
            break
        else:
            raise TypeError(f"not a choreography: {c!r}")
    return "".join(parts)


# -- static helpers ----------------------------------------------------------


def _walk(c):
    """Every distinct node reachable from ``c``; shared subterms are visited once."""
    seen = set()
    stack = [c]
    while stack:
        n = stack.pop()
        if id(n) in seen:
            continue
        seen.add(id(n))
        yield n
        stack.extend(_children(n))


def proc_names(c) -> frozenset:
    """pn(C).  Annotated calls contribute their annotation."""
    out = set()
    for n in _walk(c):
        if isinstance(n, (Com, Sel)):
            out.add(n.sender)
            out.add(n.receiver)
        elif isinstance(n, Cond):
            out.add(n.p)
            out.add(n.q)
        elif isinstance(n, Call) and n.annotation:
            out.update(n.annotation)
    return frozenset(out)


def exit_points(c) -> int:
    count = 0
    stack = [c]
    while stack:
        c = stack.pop()
        if isinstance(c, (Com, Sel)):
            stack.append(c.cont)
        elif isinstance(c, Cond):
            stack.append(c.then)
            stack.append(c.else_)
        elif isinstance(c, Def):
            stack.append(c.body)
            stack.append(c.cont)
        elif isinstance(c, End):
            count += 1
    return count


def seq_compose(c1, c2):
    """C1 ; C2 -- substitute c2 for the unique exit point of c1."""
    n = exit_points(c1)
    if n == 0:
        raise NoExitPoint("left operand of sequential composition has no exit point")
    if n > 1:
        raise MultipleExitPoints(f"left operand of sequential composition has {n} exit points")
    return _replace_end(c1, c2)


def _replace_end(c, new):
    if isinstance(c, End):
        return new
    if isinstance(c, (Com, Sel)):
        return replace(c, cont=_replace_end(c.cont, new))
    if isinstance(c, Cond):
        if exit_points(c.then):
            return replace(c, then=_replace_end(c.then, new))
        return replace(c, else_=_replace_end(c.else_, new))
    if isinstance(c, Def):
        if exit_points(c.body):
            return replace(c, body=_replace_end(c.body, new))
        return replace(c, cont=_replace_end(c.cont, new))
    return c


def seq_all(parts):
    """Fold ``seq_compose`` over a non-empty list."""
    parts = list(parts)
    out = parts[-1]
    for c in reversed(parts[:-1]):
        out = seq_compose(c, out)
    return out


def _children(c):
    if isinstance(c, (Com, Sel)):
        return (c.cont,)
    if isinstance(c, Cond):
        return (c.then, c.else_)
    if isinstance(c, Def):
        return (c.body, c.cont)
    return ()


def _collect_defs(c):
    """Yield (key, def_node, scope) for every Def; scope maps names to def keys
    and already includes the def itself (bodies are recursive)."""
    out = []
    unbound = []

    def walk(c, scope, path):
        while True:
            if isinstance(c, (Com, Sel)):
                c, path = c.cont, path + (0,)
            elif isinstance(c, Cond):
                walk(c.then, scope, path + (0,))
                c, path = c.else_, path + (1,)
            elif isinstance(c, Def):
                if c.name in scope:
                    warnings.warn(f"procedure {c.name} shadows an outer definition", ShadowingWarning, stacklevel=4)
                inner = {**scope, c.name: path}
                out.append((path, c, inner))
                walk(c.body, inner, path + (0,))
                c, scope, path = c.cont, inner, path + (1,)
            elif isinstance(c, Call):
                if c.name not in scope:
                    unbound.append(c.name)
                return
            else:
                return

    walk(c, {}, ())
    return out, unbound


def validate_choreography(c):
    """Check closedness, the no-self-communication rule and guarded recursion."""
    stack = [c]
    while stack:
        n = stack.pop()
        if isinstance(n, (Com, Sel)) and n.sender == n.receiver:
            raise SelfCommunicationError(f"{n.sender} communicates with itself")
        if isinstance(n, Cond) and n.p == n.q:
            raise SelfCommunicationError(f"conditional compares {n.p} with itself")
        stack.extend(_children(n))
    defs, unbound = _collect_defs(c)
    if unbound:
        raise UnboundProcedureError(f"call to undefined procedure {unbound[0]}")
    # procedure X -> procedures reachable from X's body without passing an interaction
    edges = {}
    for key, d, scope in defs:
        edges[key] = _unguarded_calls(d.body, scope, key + (0,))
    state = {}

    def visit(k):
        state[k] = 1
        for nxt in edges.get(k, ()):
            if state.get(nxt) == 1:
                raise UnguardedRecursionError("procedure can call itself without any interaction in between")
            if nxt not in state:
                visit(nxt)
        state[k] = 2

    for k in edges:
        if k not in state:
            visit(k)
    return c


def _unguarded_calls(c, scope, path):
    """Def keys reachable from ``c`` through def continuations and calls only."""
    while isinstance(c, Def):
        scope = {**scope, c.name: path}
        c, path = c.cont, path + (1,)
    if isinstance(c, Call):
        return {scope[c.name]}
    return set()


def annotate_calls(c):
    """Annotate every Def/Call with the process names its procedure body may involve."""
    defs, unbound = _collect_defs(c)
    if unbound:
        raise UnboundProcedureError(f"call to undefined procedure {unbound[0]}")
    ann = {key: frozenset() for key, _, _ in defs}

    def names(node, scope, path):
        out = set()
        while True:
            if isinstance(node, (Com, Sel)):
                out.add(node.sender)
                out.add(node.receiver)
                node, path = node.cont, path + (0,)
            elif isinstance(node, Cond):
                out.add(node.p)
                out.add(node.q)
                out |= names(node.then, scope, path + (0,))
                node, path = node.else_, path + (1,)
            elif isinstance(node, Def):
                inner = {**scope, node.name: path}
                out |= names(node.body, inner, path + (0,))
                node, scope, path = node.cont, inner, path + (1,)
            elif isinstance(node, Call):
                out |= ann[scope[node.name]]
                return out
            else:
                return out

    changed = True
    while changed:
        changed = False
        for key, d, scope in defs:
            new = frozenset(names(d.body, scope, key + (0,)))
            if new != ann[key]:
                ann[key] = new
                changed = True

    def rebuild(node, scope, path):
        if isinstance(node, (Com, Sel)):
            return replace(node, cont=rebuild(node.cont, scope, path + (0,)))
        if isinstance(node, Cond):
            return replace(
                node,
                then=rebuild(node.then, scope, path + (0,)),
                else_=rebuild(node.else_, scope, path + (1,)),
            )
        if isinstance(node, Def):
            inner = {**scope, node.name: path}
            return Def(
                node.name,
                rebuild(node.body, inner, path + (0,)),
                rebuild(node.cont, inner, path + (1,)),
                ann[path],
            )
        if isinstance(node, Call):
            return Call(node.name, ann[scope[node.name]])
        return node

    return rebuild(c, {}, ())


def strip_annotations(c):
    if isinstance(c, (Com, Sel)):
        return replace(c, cont=strip_annotations(c.cont))
    if isinstance(c, Cond):
        return replace(c, then=strip_annotations(c.then), else_=strip_annotations(c.else_))
    if isinstance(c, Def):
        return Def(c.name, strip_annotations(c.body), strip_annotations(c.cont))
    if isinstance(c, Call):
        return Call(c.name)
    return c


def is_annotated(c):
    return all(n.annotation is not None for n in _walk(c) if isinstance(n, (Def, Call)))


def has_conditional(c):
    return any(isinstance(n, Cond) for n in _walk(c))


def size(c):
    """Number of nodes (used by generators and reports)."""
    total = 0
    stack = [c]
    while stack:
        n = stack.pop()
        total += 1
        stack.extend(_children(n))
    return total
