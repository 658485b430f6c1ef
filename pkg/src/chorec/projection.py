"""EndPoint Projection from choreographies to networks, with merging,
pruning and amendment."""

from __future__ import annotations

from dataclasses import dataclass

from .choreography import (
    Call,
    Com,
    Cond,
    Def,
    End,
    Expr,
    Label,
    Sel,
    annotate_calls,
    is_annotated,
    proc_names,
)
from .errors import MergeError, ProjectabilityError
from .network import (
    BCall,
    BDef,
    BEND,
    BEnd,
    Branch,
    CondRecv,
    Network,
    Proc,
    Recv,
    Select,
    Send,
    branch,
    gc_network,
)


@dataclass(frozen=True)
class UnmergeablePoint:
    """The innermost conditional at ``path`` whose branches cannot be merged for ``process``."""

    path: tuple
    process: str
    left: object
    right: object

    def to_json(self):
        return {
            "path": list(self.path),
            "process": self.process,
            "reason": f"cannot merge {self.left} with {self.right}",
        }


class _Unmergeable(Exception):
    def __init__(self, point):
        self.point = point


def merge(b1, b2):
    """Partial merge of two behaviours; raises MergeError on the innermost mismatch."""
    if b1 == b2:
        return b1
    if type(b1) is not type(b2):
        raise MergeError(b1, b2)
    if isinstance(b1, Send):
        if b1.to != b2.to or b1.expr != b2.expr:
            raise MergeError(b1, b2)
        return Send(b1.to, b1.expr, merge(b1.cont, b2.cont))
    if isinstance(b1, Recv):
        if b1.frm != b2.frm:
            raise MergeError(b1, b2)
        return Recv(b1.frm, merge(b1.cont, b2.cont))
    if isinstance(b1, Select):
        if b1.to != b2.to or b1.label != b2.label:
            raise MergeError(b1, b2)
        return Select(b1.to, b1.label, merge(b1.cont, b2.cont))
    if isinstance(b1, Branch):
        if b1.frm != b2.frm:
            raise MergeError(b1, b2)
        table = dict(b1.table)
        for lab, sub in b2.branches:
            table[lab] = merge(table[lab], sub) if lab in table else sub
        return branch(b1.frm, table)
    if isinstance(b1, CondRecv):
        if b1.frm != b2.frm:
            raise MergeError(b1, b2)
        return CondRecv(b1.frm, merge(b1.then, b2.then), merge(b1.else_, b2.else_))
    if isinstance(b1, BDef):
        if b1.name != b2.name:
            raise MergeError(b1, b2)
        return BDef(b1.name, merge(b1.body, b2.body), merge(b1.cont, b2.cont))
    # distinct calls, or anything else that is not syntactically equal
    raise MergeError(b1, b2)


def try_merge(b1, b2):
    try:
        return merge(b1, b2)
    except MergeError:
        return None


def _ensure_annotated(c):
    return c if is_annotated(c) else annotate_calls(c)


def project_behaviour(c, r):
    """The behaviour of ``r`` in ``c``, or an UnmergeablePoint."""
    try:
        return _proj(_ensure_annotated(c), r, (), {})
    except _Unmergeable as exc:
        return exc.point


def _proj(c, r, path, memo):
    # memoised per node: reducts share subterms, and a failure aborts the whole projection
    hit = memo.get(id(c))
    if hit is not None:
        return hit[1]
    out = _proj_node(c, r, path, memo)
    memo[id(c)] = (c, out)
    return out


def _proj_node(c, r, path, memo):
    if isinstance(c, Com):
        cont = _proj(c.cont, r, path + (0,), memo)
        if r == c.sender:
            return Send(c.receiver, c.expr, cont)
        if r == c.receiver:
            return Recv(c.sender, cont)
        return cont
    if isinstance(c, Sel):
        cont = _proj(c.cont, r, path + (0,), memo)
        if r == c.sender:
            return Select(c.receiver, c.label, cont)
        if r == c.receiver:
            return Branch(c.sender, ((c.label, cont),))
        return cont
    if isinstance(c, Cond):
        left = _proj(c.then, r, path + (0,), memo)
        right = _proj(c.else_, r, path + (1,), memo)
        if r == c.p:
            return CondRecv(c.q, left, right)
        try:
            merged = merge(left, right)
        except MergeError as exc:
            raise _Unmergeable(UnmergeablePoint(path, r, exc.left, exc.right)) from None
        if r == c.q:
            return Send(c.p, Expr.CELL, merged)
        return merged
    if isinstance(c, Def):
        if r in c.annotation:
            body = _proj(c.body, r, path + (0,), memo)
            return BDef(c.name, body, _proj(c.cont, r, path + (1,), memo))
        return _proj(c.cont, r, path + (1,), memo)
    if isinstance(c, Call):
        return BCall(c.name) if r in c.annotation else BEND
    if isinstance(c, End):
        return BEND
    raise TypeError(f"not a choreography: {c!r}")


def unmergeable_points(c):
    c = _ensure_annotated(c)
    points = []
    for r in sorted(proc_names(c)):
        res = project_behaviour(c, r)
        if isinstance(res, UnmergeablePoint):
            points.append(res)
    return points


def is_projectable(c):
    return not unmergeable_points(c)


def epp(c, state):
    """Project ``c`` in ``state`` to a network; raises ProjectabilityError listing every failing process."""
    c = _ensure_annotated(c)
    procs = []
    points = []
    for r in sorted(proc_names(c)):
        res = project_behaviour(c, r)
        if isinstance(res, UnmergeablePoint):
            points.append(res)
        else:
            procs.append(Proc(r, state[r], res))
    if points:
        raise ProjectabilityError(points)
    return Network(tuple(procs))


# -- pruning -----------------------------------------------------------------


def prunes_to(larger, smaller):
    """True iff ``smaller`` is ``larger`` with some branching alternatives removed.

    Behaviours are compared as their (possibly infinite) unfoldings, so the
    placement of definitions and the number of unfolded calls do not matter;
    definitions that can no longer be called are thereby erased.  Cells must
    agree on every live process.
    """
    big, small = gc_network(larger), gc_network(smaller)
    if big.names != small.names:
        return False
    for name in big.names:
        pb, ps = big.table[name], small.table[name]
        if pb.value != ps.value or not behaviour_prunes_to(pb.behaviour, ps.behaviour):
            return False
    return True


def _unfold(b, env):
    unfolded = set()
    while True:
        if isinstance(b, BDef):
            env = {**env, b.name: b.body}
            b = b.cont
        elif isinstance(b, BCall) and b.name in env and b.name not in unfolded:
            unfolded.add(b.name)
            b = env[b.name]
        else:
            return b, env


def behaviour_prunes_to(big, small):
    assumed = set()

    def go(b, eb, s, es):
        b, eb = _unfold(b, eb)
        s, es = _unfold(s, es)
        key = (id(b), id(s))
        if key in assumed:
            return True
        assumed.add(key)
        if type(b) is not type(s):
            return False
        if isinstance(b, Send):
            return b.to == s.to and b.expr == s.expr and go(b.cont, eb, s.cont, es)
        if isinstance(b, Recv):
            return b.frm == s.frm and go(b.cont, eb, s.cont, es)
        if isinstance(b, Select):
            return b.to == s.to and b.label == s.label and go(b.cont, eb, s.cont, es)
        if isinstance(b, Branch):
            big_table = b.table
            return b.frm == s.frm and all(
                lab in big_table and go(big_table[lab], eb, sub, es) for lab, sub in s.branches
            )
        if isinstance(b, CondRecv):
            return b.frm == s.frm and go(b.then, eb, s.then, es) and go(b.else_, eb, s.else_, es)
        if isinstance(b, BCall):
            return b.name == s.name
        return isinstance(b, BEnd)

    return go(big, {}, small, {})


# -- amendment ---------------------------------------------------------------


def _occurrence_order(c):
    seen = {}
    stack = [c]
    while stack:
        n = stack.pop()
        if isinstance(n, (Com, Sel)):
            seen.setdefault(n.sender, None)
            seen.setdefault(n.receiver, None)
            stack.append(n.cont)
        elif isinstance(n, Cond):
            seen.setdefault(n.p, None)
            seen.setdefault(n.q, None)
            stack.append(n.else_)
            stack.append(n.then)
        elif isinstance(n, Def):
            stack.append(n.cont)
            stack.append(n.body)
        elif isinstance(n, Call) and n.annotation:
            for name in sorted(n.annotation):
                seen.setdefault(name, None)
    return list(seen)


def _amend(c):
    if isinstance(c, Com):
        return Com(c.sender, c.expr, c.receiver, _amend(c.cont))
    if isinstance(c, Sel):
        return Sel(c.sender, c.receiver, c.label, _amend(c.cont))
    if isinstance(c, Def):
        return Def(c.name, _amend(c.body), _amend(c.cont), c.annotation)
    if isinstance(c, Cond):
        then, else_ = _amend(c.then), _amend(c.else_)
        order = dict.fromkeys(_occurrence_order(then) + _occurrence_order(else_))
        candidates = [r for r in order if r != c.p]
        needs = []
        for r in candidates:
            left = project_behaviour(then, r)
            right = project_behaviour(else_, r)
            if isinstance(left, UnmergeablePoint) or isinstance(right, UnmergeablePoint):
                needs.append(r)
            elif try_merge(left, right) is None:
                needs.append(r)
        for r in reversed(needs):
            then = Sel(c.p, r, Label.L, then)
            else_ = Sel(c.p, r, Label.R, else_)
        return Cond(c.p, c.q, then, else_)
    return c


def amend(c):
    """Insert the selections needed to make every conditional mergeable (innermost first)."""
    c = _ensure_annotated(c)
    while True:
        new = _amend(c)
        if new == c:
            return c
        c = new
