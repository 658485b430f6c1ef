"""Partial recursive functions: terms, a fuel-bounded reference evaluator,
and compilers into choreographies (sequential and parallel composition)."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from .choreography import (
    Call,
    Com,
    Cond,
    Def,
    END,
    Expr,
    ProcState,
    com,
    inc,
    seq_all,
    seq_compose,
)
from .errors import ArityError, InvariantViolation, NameClashError
from .lexer import AUX_NAME_RE, TokenStream
from .trace import Outcome

FUEL_EXHAUSTED = Outcome.FUEL_EXHAUSTED
MODES = ("choreography", "network", "parallel")


class RecFun:
    __slots__ = ()


@dataclass(frozen=True)
class Zero(RecFun):
    def __str__(self):
        return "Z"


@dataclass(frozen=True)
class Succ(RecFun):
    def __str__(self):
        return "S"


@dataclass(frozen=True)
class Proj(RecFun):
    n: int
    m: int

    def __str__(self):
        return f"P[{self.n},{self.m}]"


@dataclass(frozen=True)
class Comp(RecFun):
    f: RecFun
    gs: tuple

    def __str__(self):
        return f"C({self.f}; {', '.join(map(str, self.gs))})"


@dataclass(frozen=True)
class PrimRec(RecFun):
    f: RecFun
    g: RecFun

    def __str__(self):
        return f"R({self.f}; {self.g})"


@dataclass(frozen=True)
class Min(RecFun):
    f: RecFun

    def __str__(self):
        return f"M({self.f})"


@dataclass(frozen=True)
class Eq(RecFun):
    """Binary equality test compiled to the single-exit ``eq`` macro:
    0 when both arguments agree, otherwise the first argument plus one."""

    def __str__(self):
        return "EQ"


@lru_cache(maxsize=None)
def arity(f):
    """Arity of ``f``; raises ArityError on ill-formed terms."""
    if isinstance(f, (Zero, Succ)):
        return 1
    if isinstance(f, Eq):
        return 2
    if isinstance(f, Proj):
        if not 1 <= f.m <= f.n:
            raise ArityError(f"projection index out of range in {f}")
        return f.n
    if isinstance(f, Comp):
        if not f.gs:
            raise ArityError("composition needs at least one inner function")
        ars = {arity(g) for g in f.gs}
        if len(ars) != 1:
            raise ArityError(f"inner functions of {f} have different arities {sorted(ars)}")
        if arity(f.f) != len(f.gs):
            raise ArityError(f"outer function of {f} has arity {arity(f.f)}, expected {len(f.gs)}")
        return ars.pop()
    if isinstance(f, PrimRec):
        if arity(f.g) != arity(f.f) + 2:
            raise ArityError(f"step function of {f} must have arity {arity(f.f) + 2}")
        return arity(f.f) + 1
    if isinstance(f, Min):
        if arity(f.f) < 1:
            raise ArityError(f"minimised function of {f} needs arity >= 1")
        return arity(f.f) - 1
    raise TypeError(f"not a function term: {f!r}")


@lru_cache(maxsize=None)
def pi(f):
    """Number of auxiliary processes used by ``encode(f, ...)``."""
    if isinstance(f, (Zero, Succ, Proj)):
        return 0
    if isinstance(f, Eq):
        return 1
    if isinstance(f, Comp):
        return pi(f.f) + sum(pi(g) for g in f.gs) + len(f.gs)
    if isinstance(f, PrimRec):
        return pi(f.f) + pi(f.g) + 3
    if isinstance(f, Min):
        return pi(f.f) + 3
    raise TypeError(f"not a function term: {f!r}")


@lru_cache(maxsize=None)
def pi_parallel(f):
    """Auxiliary count for ``encode_parallel``: compositions also need one replica per input and branch."""
    if isinstance(f, (Zero, Succ, Proj, Eq)):
        return pi(f)
    if isinstance(f, Comp):
        k = len(f.gs)
        return pi_parallel(f.f) + sum(pi_parallel(g) for g in f.gs) + k + k * arity(f)
    if isinstance(f, PrimRec):
        return pi_parallel(f.f) + pi_parallel(f.g) + 3
    return pi_parallel(f.f) + 3


# -- parsing -----------------------------------------------------------------


def parse_recfun(text):
    """Parse ``Z | S | P[n,m] | C(f; g1,...) | R(f; g) | M(f) | EQ``.

    The lowercase names ``add``, ``sub`` and ``eqr`` refer to the library terms.
    """
    ts = TokenStream(text)
    f = _parse_fn(ts)
    ts.expect_eof()
    arity(f)
    return f


def _parse_fn(ts):
    tok = ts.peek
    if tok.kind != "name":
        raise ts.error("expected a function term")
    ts.next()
    word = tok.text
    if word == "Z":
        return Zero()
    if word == "S":
        return Succ()
    if word == "EQ":
        return Eq()
    if word in LIBRARY:
        return LIBRARY[word]
    if word == "P":
        ts.expect("[")
        n = ts.expect_num()
        ts.expect(",")
        m = ts.expect_num()
        ts.expect("]")
        return Proj(n, m)
    if word in ("C", "R", "M"):
        ts.expect("(")
        f = _parse_fn(ts)
        if word == "M":
            ts.expect(")")
            return Min(f)
        ts.expect(";")
        args = [_parse_fn(ts)]
        while ts.accept(","):
            args.append(_parse_fn(ts))
        ts.expect(")")
        if word == "R":
            if len(args) != 1:
                raise ts.error("primitive recursion takes exactly two functions", tok)
            return PrimRec(f, args[0])
        return Comp(f, tuple(args))
    raise ts.error("unknown function constructor", tok)


# -- reference evaluator -----------------------------------------------------


class _OutOfFuel(Exception):
    pass


def oracle_eval(f, args, fuel):
    """Evaluate ``f`` directly; returns an int or FUEL_EXHAUSTED.

    One unit of fuel is spent per node evaluation and per loop iteration
    of primitive recursion or minimisation.
    """
    if len(args) != arity(f):
        raise ArityError(f"{f} expects {arity(f)} arguments, got {len(args)}")
    budget = [fuel]

    def tick():
        budget[0] -= 1
        if budget[0] < 0:
            raise _OutOfFuel

    def ev(f, xs):
        tick()
        if isinstance(f, Zero):
            return 0
        if isinstance(f, Succ):
            return xs[0] + 1
        if isinstance(f, Proj):
            return xs[f.m - 1]
        if isinstance(f, Eq):
            return 0 if xs[0] == xs[1] else xs[0] + 1
        if isinstance(f, Comp):
            return ev(f.f, [ev(g, xs) for g in f.gs])
        if isinstance(f, PrimRec):
            acc = ev(f.f, xs[1:])
            for i in range(xs[0]):
                tick()
                acc = ev(f.g, [i, acc, *xs[1:]])
            return acc
        y = 0
        while True:
            tick()
            if ev(f.f, [*xs, y]) == 0:
                return y
            y += 1

    try:
        return ev(f, list(args))
    except _OutOfFuel:
        return FUEL_EXHAUSTED


# -- compilation -------------------------------------------------------------


def aux(i):
    return f"r#{i}"


def _check_names(f, inputs, output):
    if len(inputs) != arity(f):
        raise ArityError(f"{f} expects {arity(f)} inputs, got {len(inputs)}")
    names = [*inputs, output]
    for name in names:
        if AUX_NAME_RE.match(name):
            raise NameClashError(f"{name!r} is in the reserved auxiliary namespace")
    if len(set(names)) != len(names):
        raise NameClashError("input and output processes must be pairwise distinct")


def encode(f, inputs, output, ell=0):
    """Sequential encoding of ``f`` reading ``inputs`` and writing ``output``."""
    _check_names(f, inputs, output)
    return _enc(f, list(inputs), output, ell, False)


def encode_parallel(f, inputs, output, ell=0):
    """Like ``encode``, but every composition first copies its inputs into
    per-branch replicas so the inner functions run on disjoint processes."""
    _check_names(f, inputs, output)
    return _enc(f, list(inputs), output, ell, True)


def eq_macro(px, py, q, r, name):
    """Single-exit equality: ``q`` receives 0 if ``px = py``, else ``px + 1``."""
    return Def(
        name,
        com(r, Expr.CELL, q),
        Cond(px, py, Com(px, Expr.EPS, r, Call(name)), Com(px, Expr.SUCC, r, Call(name))),
    )


def _enc(f, ps, q, ell, par):
    size = pi_parallel if par else pi
    if isinstance(f, Zero):
        return com(ps[0], Expr.EPS, q)
    if isinstance(f, Succ):
        return com(ps[0], Expr.SUCC, q)
    if isinstance(f, Proj):
        return com(ps[f.m - 1], Expr.CELL, q)
    if isinstance(f, Eq):
        return eq_macro(ps[0], ps[1], q, aux(ell), f"T{ell}")
    if isinstance(f, Comp):
        copies, branches, outer = _comp_parts(f, ps, q, ell, par)
        return seq_all([*copies, *branches, outer])
    if isinstance(f, PrimRec):
        qp, rc, rt = aux(ell), aux(ell + 1), aux(ell + 2)
        lf = ell + 3
        lg = lf + size(f.f)
        name = f"T{ell}"
        step = seq_compose(
            _enc(f.g, [rc, qp, *ps[1:]], rt, lg, par),
            Com(rt, Expr.CELL, qp, inc(rc, rt, Call(name))),
        )
        body = Cond(rc, ps[0], com(qp, Expr.CELL, q), step)
        start = seq_compose(_enc(f.f, ps[1:], qp, lf, par), Com(rt, Expr.EPS, rc, Call(name)))
        return Def(name, body, start)
    if isinstance(f, Min):
        qp, rc, rz = aux(ell), aux(ell + 1), aux(ell + 2)
        name = f"T{ell}"
        test = Com(rc, Expr.EPS, rz, Cond(rz, qp, com(rc, Expr.CELL, q), inc(rc, rz, Call(name))))
        body = seq_compose(_enc(f.f, [*ps, rc], qp, ell + 3, par), test)
        return Def(name, body, Com(rz, Expr.EPS, rc, Call(name)))
    raise TypeError(f"not a function term: {f!r}")


def _comp_parts(f, ps, q, ell, par):
    size = pi_parallel if par else pi
    k, n = len(f.gs), len(ps)
    outs = [aux(ell + i) for i in range(k)]
    copies = []
    if par:
        replicas = [[aux(ell + k + i * n + j) for j in range(n)] for i in range(k)]
        copies = [com(ps[j], Expr.CELL, replicas[i][j]) for i in range(k) for j in range(n)]
        nxt = ell + k + n * k
    else:
        replicas = [ps] * k
        nxt = ell + k
    branches = []
    for g, inputs, out in zip(f.gs, replicas, outs):
        branches.append(_enc(g, inputs, out, nxt, par))
        nxt += size(g)
    return copies, branches, _enc(f.f, outs, q, nxt, par)


def composition_parts(h, inputs, output, ell=0):
    """Pieces of ``encode_parallel`` for a composition: (input copies, branch encodings, outer encoding)."""
    if not isinstance(h, Comp):
        raise TypeError("composition_parts expects a composition")
    _check_names(h, inputs, output)
    return _comp_parts(h, list(inputs), output, ell, True)


# -- running -----------------------------------------------------------------


def input_names(n):
    return [f"p{i + 1}" for i in range(n)]


def implement_function(f, args, fuel=10_000, mode="choreography", _skip_amend=False):
    """Compile ``f``, run it on ``args`` and return the output cell or FUEL_EXHAUSTED."""
    from .network import net_run
    from .projection import amend, epp
    from .semantics import run

    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    if len(args) != arity(f):
        raise ArityError(f"{f} expects {arity(f)} arguments, got {len(args)}")
    inputs = input_names(len(args))
    enc = encode_parallel if mode == "parallel" else encode
    c = enc(f, inputs, "q")
    if not _skip_amend:
        c = amend(c)
    state = ProcState(dict(zip(inputs, args)))
    if mode == "network":
        trace = net_run(epp(c, state), fuel=fuel, record=False)
        if trace.outcome is Outcome.STUCK:
            raise InvariantViolation(f"projected network of {f} got stuck")
    else:
        trace = run(c, state, fuel=fuel, record=False)
    if trace.outcome is Outcome.FUEL_EXHAUSTED:
        return FUEL_EXHAUSTED
    # processes absent from the compiled program never change their cells
    final = ProcState({**state.as_dict(), **trace.final_state.as_dict()})
    for p, x in zip(inputs, args):
        if final[p] != x:
            raise InvariantViolation(f"input {p} changed from {x} to {final[p]}")
    return final["q"]


# -- library -----------------------------------------------------------------

ADD = PrimRec(Proj(1, 1), Comp(Succ(), (Proj(3, 2),)))
SUB = Min(Comp(Eq(), (Comp(ADD, (Proj(3, 2), Proj(3, 3))), Proj(3, 1))))
PRED = PrimRec(Zero(), Proj(3, 1))  # pred(x, _) with a dummy second argument
MONUS = PrimRec(Proj(1, 1), Comp(PRED, (Proj(3, 2), Proj(3, 2))))  # monus(x, y) = y - x, truncated
EQ_R = Comp(ADD, (Comp(MONUS, (Proj(2, 2), Proj(2, 1))), Comp(MONUS, (Proj(2, 1), Proj(2, 2)))))

LIBRARY = {"add": ADD, "sub": SUB, "eqr": EQ_R}
