"""Stateful Processes: networks of named processes, each with one memory cell.

Concrete syntax::

    N ::= 0 | p[v] > B | N | N
    B ::= send q.e; B | recv p; B | sel q[L]; B | branch p {L: B, R: B}
        | if c = q then B else B | def X = B in B | X | 0 | ( B )
"""

from __future__ import annotations

import random as _random
from dataclasses import dataclass
from functools import cached_property
from typing import Optional

from .choreography import KEYWORDS, Action, Expr, Label, ProcState, _cached_hash, _node_eq, _parse_expr
from .errors import DuplicateProcessError, InvalidRedex
from .lexer import PROC_NAME_RE, PROCEDURE_NAME_RE, TokenStream
from .trace import Exhaustive, Leftmost, Outcome, Random, Trace


class Behaviour:
    __slots__ = ()

    def __str__(self):
        return print_behaviour(self)


@dataclass(frozen=True)
class Send(Behaviour):
    to: str
    expr: Expr
    cont: Behaviour

    @cached_property
    def free_calls(self):
        return self.cont.free_calls


@dataclass(frozen=True)
class Recv(Behaviour):
    frm: str
    cont: Behaviour

    @cached_property
    def free_calls(self):
        return self.cont.free_calls


@dataclass(frozen=True)
class Select(Behaviour):
    to: str
    label: Label
    cont: Behaviour

    @cached_property
    def free_calls(self):
        return self.cont.free_calls


@dataclass(frozen=True)
class Branch(Behaviour):
    """Offer of one or two labelled branches; ``branches`` is sorted by label."""

    frm: str
    branches: tuple

    def __post_init__(self):
        labels = [lab for lab, _ in self.branches]
        if not labels or len(set(labels)) != len(labels):
            raise ValueError("a branching needs one or two distinct labels")
        if labels != sorted(labels, key=lambda x: x.value):
            object.__setattr__(self, "branches", tuple(sorted(self.branches, key=lambda kv: kv[0].value)))

    @property
    def table(self):
        return dict(self.branches)

    @cached_property
    def free_calls(self):
        out = frozenset()
        for _, b in self.branches:
            out |= b.free_calls
        return out


def branch(frm, mapping):
    return Branch(frm, tuple(sorted(mapping.items(), key=lambda kv: kv[0].value)))


@dataclass(frozen=True)
class CondRecv(Behaviour):
    """``if c = q then B1 else B2``: receive from q and compare with the own cell."""

    frm: str
    then: Behaviour
    else_: Behaviour

    @cached_property
    def free_calls(self):
        return self.then.free_calls | self.else_.free_calls


@dataclass(frozen=True)
class BDef(Behaviour):
    name: str
    body: Behaviour
    cont: Behaviour

    @cached_property
    def free_calls(self):
        return (self.body.free_calls | self.cont.free_calls) - {self.name}


@dataclass(frozen=True)
class BCall(Behaviour):
    name: str

    @cached_property
    def free_calls(self):
        return frozenset((self.name,))


@dataclass(frozen=True)
class BEnd(Behaviour):
    free_calls = frozenset()


BEND = BEnd()

for _cls in (Send, Recv, Select, Branch, CondRecv, BDef):
    _cls.__hash__ = _cached_hash
    _cls.__eq__ = _node_eq


@dataclass(frozen=True)
class Proc:
    name: str
    value: int
    behaviour: Behaviour

    def __post_init__(self):
        # untouched processes keep their Proc object across steps, so compute these once
        object.__setattr__(self, "head", head(self.behaviour))
        object.__setattr__(self, "terminated", behaviour_terminated(self.behaviour))


@dataclass(frozen=True)
class Network:
    """Parallel composition, kept as a name-sorted tuple so that it is commutative by construction."""

    procs: tuple = ()

    def __post_init__(self):
        names = [p.name for p in self.procs]
        if len(set(names)) != len(names):
            dup = next(n for n in names if names.count(n) > 1)
            raise DuplicateProcessError(f"process {dup} appears twice")
        if names != sorted(names):
            object.__setattr__(self, "procs", tuple(sorted(self.procs, key=lambda p: p.name)))
        object.__setattr__(self, "table", {p.name: p for p in self.procs})

    @classmethod
    def of(cls, mapping):
        """Build from ``{name: (value, behaviour)}``."""
        return cls(tuple(Proc(n, v, b) for n, (v, b) in mapping.items()))

    @property
    def names(self):
        return frozenset(self.table)

    @property
    def values(self):
        return ProcState({p.name: p.value for p in self.procs})

    def __str__(self):
        return print_network(self)


EMPTY = Network()


# -- parsing and printing ----------------------------------------------------


def parse_network(text):
    ts = TokenStream(text)
    procs = []
    if ts.peek.kind == "eof":
        return EMPTY
    if ts.peek.kind == "num" and ts.peek.text == "0" and ts.peek_at(1).kind == "eof":
        ts.next()
        return EMPTY
    while True:
        name = _proc(ts)
        ts.expect("[")
        value = ts.expect_num()
        ts.expect("]")
        ts.expect(">")
        procs.append(Proc(name, value, _parse_behaviour(ts)))
        if not ts.accept("|"):
            break
    ts.expect_eof()
    return Network(tuple(procs))


def parse_behaviour(text):
    ts = TokenStream(text)
    b = _parse_behaviour(ts)
    ts.expect_eof()
    return b


def _proc(ts):
    tok = ts.peek
    if tok.kind != "name" or tok.text in KEYWORDS or not PROC_NAME_RE.match(tok.text):
        raise ts.error("expected a process name")
    ts.next()
    return tok.text


def _parse_behaviour(ts):
    tok = ts.peek
    if ts.accept("("):
        b = _parse_behaviour(ts)
        ts.expect(")")
        return b
    if tok.kind == "num":
        if tok.text != "0":
            raise ts.error("expected '0'")
        ts.next()
        return BEND
    if ts.accept("send"):
        q = _proc(ts)
        ts.expect(".")
        e = _parse_expr(ts)
        ts.expect(";")
        return Send(q, e, _parse_behaviour(ts))
    if ts.accept("recv"):
        p = _proc(ts)
        ts.expect(";")
        return Recv(p, _parse_behaviour(ts))
    if ts.accept("sel"):
        q = _proc(ts)
        ts.expect("[")
        lab = _label(ts)
        ts.expect("]")
        ts.expect(";")
        return Select(q, lab, _parse_behaviour(ts))
    if ts.accept("branch"):
        p = _proc(ts)
        ts.expect("{")
        table = {}
        while True:
            lab_tok = ts.peek
            lab = _label(ts)
            if lab in table:
                raise ts.error("duplicate branch label", lab_tok)
            ts.expect(":")
            table[lab] = _parse_behaviour(ts)
            if not ts.accept(","):
                break
        ts.expect("}")
        return branch(p, table)
    if ts.accept("if"):
        ts.expect("c")
        ts.expect("=")
        q = _proc(ts)
        ts.expect("then")
        b1 = _parse_behaviour(ts)
        ts.expect("else")
        b2 = _parse_behaviour(ts)
        return CondRecv(q, b1, b2)
    if ts.accept("def"):
        name = ts.expect_name(PROCEDURE_NAME_RE, "a procedure name")
        ts.expect("=")
        body = _parse_behaviour(ts)
        ts.expect("in")
        return BDef(name, body, _parse_behaviour(ts))
    if tok.kind == "name" and PROCEDURE_NAME_RE.match(tok.text):
        ts.next()
        return BCall(tok.text)
    raise ts.error("expected a behaviour")


def _label(ts):
    tok = ts.peek
    if tok.text not in ("L", "R"):
        raise ts.error("expected label L or R")
    ts.next()
    return Label(tok.text)


def print_behaviour(b) -> str:
    parts = []
    while True:
        if isinstance(b, Send):
            parts.append(f"send {b.to}.{b.expr}; ")
            b = b.cont
        elif isinstance(b, Recv):
            parts.append(f"recv {b.frm}; ")
            b = b.cont
        elif isinstance(b, Select):
            parts.append(f"sel {b.to}[{b.label}]; ")
            b = b.cont
        elif isinstance(b, Branch):
            inner = ", ".join(f"{lab}: {print_behaviour(sub)}" for lab, sub in b.branches)
            parts.append(f"branch {b.frm} {{{inner}}}")
            break
        elif isinstance(b, CondRecv):
            parts.append(f"if c = {b.frm} then ({print_behaviour(b.then)}) else ({print_behaviour(b.else_)})")
            break
        elif isinstance(b, BDef):
            parts.append(f"def {b.name} = ({print_behaviour(b.body)}) in ")
            b = b.cont
        elif isinstance(b, BCall):
            parts.append(b.name)
            break
        elif isinstance(b, BEnd):
            parts.append("0")
            break
        else:
            raise TypeError(f"not a behaviour: {b!r}")
    return "".join(parts)


def print_network(n) -> str:
    if not n.procs:
        return "0"
    return " | ".join(f"{p.name}[{p.value}] > {print_behaviour(p.behaviour)}" for p in n.procs)


# -- semantics ---------------------------------------------------------------


def behaviour_terminated(b):
    env = {}
    unfolded = set()
    while True:
        if isinstance(b, BEnd):
            return True
        if isinstance(b, BDef):
            env[b.name] = b.body
            b = b.cont
        elif isinstance(b, BCall):
            if b.name in unfolded or b.name not in env:
                return False
            unfolded.add(b.name)
            b = env[b.name]
        else:
            return False


def head(b) -> Optional[Behaviour]:
    """The first communication action of ``b`` after unfolding, or None."""
    env = {}
    unfolded = set()
    while True:
        if isinstance(b, BDef):
            env[b.name] = b.body
            b = b.cont
        elif isinstance(b, BCall):
            if b.name in unfolded or b.name not in env:
                return None
            unfolded.add(b.name)
            b = env[b.name]
        elif isinstance(b, BEnd):
            return None
        else:
            return b


def _advance(b, env, fn, unfolded=frozenset()):
    """Replace the head action of ``b`` by ``fn(head)`` and drop dead definitions."""
    if isinstance(b, BDef):
        new = _advance(b.cont, {**env, b.name: b.body}, fn, unfolded)
        if b.name not in new.free_calls:
            return new
        return BDef(b.name, b.body, new)
    if isinstance(b, BCall):
        if b.name in unfolded or b.name not in env:
            raise InvalidRedex(f"call {b.name} cannot be unfolded")
        return _advance(env[b.name], env, fn, unfolded | {b.name})
    return fn(b)


def net_enabled(n):
    """Every enabled synchronisation, as Actions sorted by (p, q, kind).

    A conditional pairing records ``expr`` only when the sender does not send
    its plain cell, so projected conditionals match choreography actions.
    """
    heads = {p.name: p.head for p in n.procs}
    out = []
    for p in sorted(heads):
        h = heads[p]
        if isinstance(h, Send):
            other = heads.get(h.to)
            if isinstance(other, Recv) and other.frm == p:
                out.append(Action("com", p, h.to, expr=h.expr))
            elif isinstance(other, CondRecv) and other.frm == p:
                expr = None if h.expr is Expr.CELL else h.expr
                out.append(Action("cond", h.to, p, expr=expr))
        elif isinstance(h, Select):
            other = heads.get(h.to)
            if isinstance(other, Branch) and other.frm == p and h.label in other.table:
                out.append(Action("sel", p, h.to, label=h.label))
    out.sort(key=lambda a: (a.p, a.q, a.kind))
    return out


def _fire(n, a):
    """Apply ``a``; returns (network, (name, new value) or None)."""
    table = n.table
    if a.p not in table or a.q not in table:
        raise InvalidRedex(f"{a} names a process outside the network")
    bp, bq = table[a.p].behaviour, table[a.q].behaviour
    vp, vq = table[a.p].value, table[a.q].value
    change = None
    if a.kind == "com":
        hp, hq = table[a.p].head, table[a.q].head
        if not (isinstance(hp, Send) and hp.to == a.q and hp.expr == a.expr
                and isinstance(hq, Recv) and hq.frm == a.p):
            raise InvalidRedex(f"{a} is not enabled")
        new_p = _advance(bp, {}, lambda h: h.cont)
        new_q = _advance(bq, {}, lambda h: h.cont)
        vq = a.expr.evaluate(vp)
        change = (a.q, vq)
    elif a.kind == "sel":
        hp, hq = table[a.p].head, table[a.q].head
        if not (isinstance(hp, Select) and hp.to == a.q and hp.label == a.label
                and isinstance(hq, Branch) and hq.frm == a.p and a.label in hq.table):
            raise InvalidRedex(f"{a} is not enabled")
        new_p = _advance(bp, {}, lambda h: h.cont)
        new_q = _advance(bq, {}, lambda h: h.table[a.label])
    elif a.kind == "cond":
        hp, hq = table[a.p].head, table[a.q].head
        expr = a.expr or Expr.CELL
        if not (isinstance(hp, CondRecv) and hp.frm == a.q
                and isinstance(hq, Send) and hq.to == a.p and hq.expr == expr):
            raise InvalidRedex(f"{a} is not enabled")
        equal = vp == expr.evaluate(vq)
        new_p = _advance(bp, {}, lambda h: h.then if equal else h.else_)
        new_q = _advance(bq, {}, lambda h: h.cont)
    else:
        raise InvalidRedex(f"unknown action kind {a.kind}")
    procs = []
    for proc in n.procs:
        if proc.name == a.p:
            proc = Proc(a.p, vp, new_p)
        elif proc.name == a.q:
            proc = Proc(a.q, vq, new_q)
        if not proc.terminated:
            procs.append(proc)
    return Network(tuple(procs)), change


def net_step(n, a):
    return _fire(n, a)[0]


def gc_network(n):
    """Drop terminated processes (``p[v] > 0`` is structurally the empty network)."""
    return Network(tuple(p for p in n.procs if not p.terminated))


def net_terminated(n):
    return all(p.terminated for p in n.procs)


def net_run(n, fuel=10_000, scheduler=Leftmost(), record=True):
    """Run a network.  The trace state records every cell ever seen, so the
    values of processes that have already terminated remain observable."""
    if isinstance(scheduler, Exhaustive):
        return _net_exhaustive(n, min(fuel, scheduler.depth), scheduler.max_traces)
    rng = _random.Random(scheduler.seed) if isinstance(scheduler, Random) else None
    state = n.values
    steps = [(n, state)]
    actions = []
    outcome = Outcome.FUEL_EXHAUSTED
    for _ in range(fuel + 1):
        if net_terminated(n):
            outcome = Outcome.TERMINATED
            break
        if len(actions) == fuel:
            break
        enabled = net_enabled(n)
        if not enabled:
            outcome = Outcome.STUCK
            break
        a = rng.choice(enabled) if rng is not None else enabled[0]
        n, change = _fire(n, a)
        if change is not None:
            state = state.set(*change)
        actions.append(a)
        if record:
            steps.append((n, state))
    if not record and actions:
        steps.append((n, state))
    return Trace(steps, actions, outcome, scheduler.seed if rng is not None else None)


def _net_exhaustive(n, depth, max_traces):
    traces = []

    def dfs(n, state, steps, actions):
        if len(traces) >= max_traces:
            return
        if net_terminated(n):
            traces.append(Trace(list(steps), list(actions), Outcome.TERMINATED))
            return
        if len(actions) >= depth:
            traces.append(Trace(list(steps), list(actions), Outcome.FUEL_EXHAUSTED))
            return
        enabled = net_enabled(n)
        if not enabled:
            traces.append(Trace(list(steps), list(actions), Outcome.STUCK))
            return
        for a in enabled:
            n2, change = _fire(n, a)
            s2 = state.set(*change) if change else state
            steps.append((n2, s2))
            actions.append(a)
            dfs(n2, s2, steps, actions)
            steps.pop()
            actions.pop()

    dfs(n, n.values, [(n, n.values)], [])
    return traces
