"""Seeded generators for random test corpora."""

from __future__ import annotations

import random

from .choreography import END, Call, Com, Cond, Def, Expr, Label, ProcState, Sel, annotate_calls
from .recfun import Comp, Min, PrimRec, Proj, Succ, Zero

PROCS = ("p", "q", "r", "s")
KINDS = ("closed", "projectable", "condfree", "recfun")


def _pair(rng, procs):
    p, q = rng.sample(procs, 2)
    return p, q


def gen_choreography(rng, size=12, conditionals=True, procs=PROCS):
    """A closed choreography with guarded recursion and roughly ``size`` nodes.

    Inside a procedure body a call is only generated once at least one
    interaction or conditional has been passed, so every recursion is guarded.
    """
    budget = [size]
    names = iter(f"X{i}" for i in range(10_000))

    def gen(scope, guarded):
        budget[0] -= 1
        if budget[0] <= 0:
            if scope and guarded and rng.random() < 0.5:
                return Call(rng.choice(scope))
            return END
        roll = rng.random()
        if roll < 0.40:
            p, q = _pair(rng, procs)
            return Com(p, rng.choice(list(Expr)), q, gen(scope, True))
        if roll < 0.50:
            p, q = _pair(rng, procs)
            return Sel(p, q, rng.choice(list(Label)), gen(scope, True))
        if roll < 0.68 and conditionals:
            p, q = _pair(rng, procs)
            return Cond(p, q, gen(scope, True), gen(scope, True))
        if roll < 0.80:
            name = next(names)
            inner = [*scope, name]
            body = gen(inner, False)
            return Def(name, body, gen(inner, guarded))
        if roll < 0.90 and scope and guarded:
            return Call(rng.choice(scope))
        return END

    return gen([], True)


def random_state(rng, procs=PROCS, high=3):
    return ProcState({p: rng.randint(0, high) for p in procs})


def gen_recfun(rng, n, depth=3):
    """A well-formed function term of arity ``n``; minimisation only over arity >= 2."""
    if depth <= 0 or rng.random() < 0.3:
        if n == 1:
            return rng.choice([Zero(), Succ(), Proj(1, 1)])
        return Proj(n, rng.randint(1, n))
    roll = rng.random()
    if roll < 0.45:
        k = rng.randint(1, 2)
        gs = tuple(gen_recfun(rng, n, depth - 1) for _ in range(k))
        return Comp(gen_recfun(rng, k, depth - 1), gs)
    if roll < 0.8 and n >= 2:
        return PrimRec(gen_recfun(rng, n - 1, depth - 1), gen_recfun(rng, n + 1, depth - 1))
    return Min(gen_recfun(rng, n + 1, depth - 1))


def gen_corpus(seed, size, kind="closed"):
    """``size`` seeded items of the given kind.

    Choreographies come annotated; ``projectable`` items are amended closed
    choreographies; ``recfun`` items are (term, arity) pairs of arity 1 or 2.
    """
    rng = random.Random(seed)
    if kind == "recfun":
        out = []
        for _ in range(size):
            n = rng.randint(1, 2)
            out.append((gen_recfun(rng, n), n))
        return out
    if kind not in KINDS:
        raise ValueError(f"unknown corpus kind {kind!r}")
    conditionals = kind != "condfree"
    items = [annotate_calls(gen_choreography(rng, rng.randint(4, 20), conditionals))
             for _ in range(size)]
    if kind == "projectable":
        from .projection import amend

        items = [amend(c) for c in items]
    return items
