"""Small-step reduction of Minimal Choreographies.

Structural precongruence is realised operationally.  An interaction deep in
the term is *enabled* when every prefix in front of it involves disjoint
processes (swapping of independent interactions), when it is enabled in both
branches of a conditional it does not depend on (swapping with conditionals),
and calls are unfolded lazily, at most once per procedure along one search
path.  After every step, definitions whose continuation no longer calls them
are erased, which subsumes ``def X = C in 0  <=  0``.
"""

from __future__ import annotations

import enum
import itertools
import logging
import random as _random
from collections import deque
from dataclasses import dataclass

from .choreography import (
    Action,
    Call,
    Com,
    Cond,
    Def,
    End,
    ProcState,
    Sel,
    exit_points,
    has_conditional,
    proc_names,
    seq_compose,
)
from .errors import HasConditional, InvalidRedex, InvariantViolation, PreconditionViolation
from .trace import Exhaustive, Leftmost, Outcome, Random, Trace

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Redex:
    """An enabled interaction.

    ``path`` locates its first occurrence (child indices: 0 = continuation,
    then-branch or body; 1 = else-branch or def continuation) and
    ``swapped_past`` lists the paths of the prefixes it crosses.
    """

    action: Action
    path: tuple = ()
    swapped_past: tuple = ()

    @property
    def kind(self):
        return {"com": "ComStep", "sel": "SelStep", "cond": "CondStep"}[self.action.kind]

    def __str__(self):
        return str(self.action)


# -- enabled redexes ---------------------------------------------------------


def enabled_redexes(c):
    found = _enabled(c, {}, frozenset(), frozenset(), {}, {})
    out = [Redex(a, path, crossed) for a, (path, crossed) in found.items()]
    return sorted(out, key=lambda r: (r.path, str(r.action)))


def _extend(env, d, envs):
    # one env object per (env, def) so that memo keys can use identities
    key = (id(env), id(d))
    if key not in envs:
        envs[key] = (env, {**env, d.name: d.body})
    return envs[key][1]


def _enabled(c, env, blocked, unfolded, memo, envs):
    """Enabled actions of ``c`` mapped to (relative path, relative crossed paths).

    Memoised on node identity: reducts share subterms, and conditionals force
    a search of both branches.
    """
    key = (id(c), id(env), blocked, unfolded)
    if key in memo:
        return memo[key][1]
    node = c
    out = {}
    path, crossed = (), ()
    while True:
        if isinstance(c, (Com, Sel)):
            a = c.action
            if not (a.procs & blocked) and a not in out:
                out[a] = (path, crossed)
            blocked = blocked | a.procs
            crossed = crossed + (path,)
            c, path = c.cont, path + (0,)
        elif isinstance(c, Cond):
            a = c.action
            if not (a.procs & blocked) and a not in out:
                out[a] = (path, crossed)
            inner = blocked | a.procs
            crossed = crossed + (path,)
            left = _enabled(c.then, env, inner, unfolded, memo, envs)
            if left:
                right = _enabled(c.else_, env, inner, unfolded, memo, envs)
                base = path + (0,)
                for act, (p2, cr2) in left.items():
                    if act in right and act not in out:
                        out[act] = (base + p2, crossed + tuple(base + x for x in cr2))
            break
        elif isinstance(c, Def):
            env = _extend(env, c, envs)
            c, path = c.cont, path + (1,)
        elif isinstance(c, Call):
            if c.name in unfolded or c.name not in env:
                break
            unfolded = unfolded | {c.name}
            c = env[c.name]
        else:
            break
    memo[key] = (node, out)
    return out


def head_action(c):
    """The leftmost enabled action, or None when nothing is at the head."""
    env = {}
    unfolded = set()
    while True:
        if isinstance(c, (Com, Sel, Cond)):
            return c.action
        if isinstance(c, Def):
            env[c.name] = c.body
            c = c.cont
        elif isinstance(c, Call):
            if c.name in unfolded or c.name not in env:
                return None
            unfolded.add(c.name)
            c = env[c.name]
        else:
            return None


def is_terminated(c):
    """Decide ``C <= 0``: erase finished definitions, unfolding head calls."""
    env = {}
    unfolded = set()
    while True:
        if isinstance(c, End):
            return True
        if isinstance(c, Def):
            env[c.name] = c.body
            c = c.cont
        elif isinstance(c, Call):
            if c.name in unfolded or c.name not in env:
                return False
            unfolded.add(c.name)
            c = env[c.name]
        else:
            return False


# -- single step -------------------------------------------------------------


def step(c, state, redex):
    """Fire ``redex`` (a Redex or an Action) and return the new configuration."""
    a = redex.action if isinstance(redex, Redex) else redex
    new_c = _Apply(a, state).go(c, {}, frozenset())
    if a.kind == "com":
        state = state.set(a.q, a.expr.evaluate(state[a.p]))
    return new_c, state


class _Apply:
    """Rewrites one action out of a term, memoised so shared subterms stay shared."""

    def __init__(self, action, state):
        self.a = action
        self.state = state
        self.memo = {}
        self.envs = {}

    def go(self, c, env, unfolded):
        key = (id(c), id(env), unfolded)
        hit = self.memo.get(key)
        if hit is not None:
            return hit[1]
        out = self._apply(c, env, unfolded)
        self.memo[key] = (c, out)
        return out

    def _apply(self, c, env, unfolded):
        a = self.a
        if isinstance(c, (Com, Sel, Cond)):
            here = c.action
            if here == a:
                if isinstance(c, Cond):
                    return c.then if self.state[c.p] == self.state[c.q] else c.else_
                return c.cont
            if here.procs & a.procs:
                raise InvalidRedex(f"{a} is blocked by {here}")
            if isinstance(c, Com):
                return Com(c.sender, c.expr, c.receiver, self.go(c.cont, env, unfolded))
            if isinstance(c, Sel):
                return Sel(c.sender, c.receiver, c.label, self.go(c.cont, env, unfolded))
            return Cond(c.p, c.q, self.go(c.then, env, unfolded), self.go(c.else_, env, unfolded))
        if isinstance(c, Def):
            new_cont = self.go(c.cont, _extend(env, c, self.envs), unfolded)
            if c.name not in new_cont.free_calls:
                return new_cont
            return Def(c.name, c.body, new_cont, c.annotation)
        if isinstance(c, Call):
            if c.name in unfolded or c.name not in env:
                raise InvalidRedex(f"{a} is not enabled")
            return self.go(env[c.name], env, unfolded | {c.name})
        raise InvalidRedex(f"{a} is not enabled")


def successors(c, state):
    """All one-step reducts as ``(redex, choreography, state)`` triples."""
    return [(r, *step(c, state, r)) for r in enabled_redexes(c)]


# -- runners -----------------------------------------------------------------


def run(c, state=None, fuel=10_000, scheduler=Leftmost(), record=True):
    """Run ``c`` from ``state``.

    Leftmost and Random return one Trace; Exhaustive returns the list of all
    maximal traces up to its depth.  With ``record=False`` only the first and
    last snapshots are kept.
    """
    state = state if state is not None else ProcState()
    if fuel < 0:
        raise ValueError("fuel must be non-negative")
    if isinstance(scheduler, Exhaustive):
        return _run_exhaustive(c, state, min(fuel, scheduler.depth), scheduler.max_traces)
    rng = _random.Random(scheduler.seed) if isinstance(scheduler, Random) else None
    steps = [(c, state)]
    actions = []
    outcome = Outcome.FUEL_EXHAUSTED
    for _ in range(fuel + 1):
        if is_terminated(c):
            outcome = Outcome.TERMINATED
            break
        if len(actions) == fuel:
            break
        if rng is None:
            a = head_action(c)
        else:
            redexes = enabled_redexes(c)
            a = rng.choice(redexes).action if redexes else None
        if a is None:
            log.error("stuck configuration: %s", c)
            raise InvariantViolation(f"choreography is stuck: {c}")
        c, state = step(c, state, a)
        actions.append(a)
        if record:
            steps.append((c, state))
    if not record and actions:
        steps.append((c, state))
    return Trace(steps, actions, outcome, scheduler.seed if rng is not None else None)


def _run_exhaustive(c, state, depth, max_traces):
    traces = []

    def dfs(c, state, steps, actions):
        if len(traces) >= max_traces:
            return
        if is_terminated(c):
            traces.append(Trace(list(steps), list(actions), Outcome.TERMINATED))
            return
        if len(actions) >= depth:
            traces.append(Trace(list(steps), list(actions), Outcome.FUEL_EXHAUSTED))
            return
        redexes = enabled_redexes(c)
        if not redexes:
            raise InvariantViolation(f"choreography is stuck: {c}")
        for r in redexes:
            c2, s2 = step(c, state, r)
            steps.append((c2, s2))
            actions.append(r.action)
            dfs(c2, s2, steps, actions)
            steps.pop()
            actions.pop()

    dfs(c, state, [(c, state)], [])
    return traces


@dataclass
class StateGraph:
    initial: tuple
    edges: dict
    truncated: bool

    def terminal_states(self):
        return {s for (c, s) in self.edges if is_terminated(c)}

    def __len__(self):
        return len(self.edges)


def explore(c, state, depth=50, max_configs=200_000):
    """Breadth-first exploration of reachable configurations, memoised."""
    start = (c, state)
    edges = {}
    frontier = deque([(start, 0)])
    seen = {start}
    truncated = False
    while frontier:
        conf, d = frontier.popleft()
        if d >= depth or len(edges) >= max_configs:
            truncated = truncated or not is_terminated(conf[0])
            edges.setdefault(conf, [])
            continue
        outs = []
        for r, c2, s2 in successors(*conf):
            nxt = (c2, s2)
            outs.append((r.action, nxt))
            if nxt not in seen:
                seen.add(nxt)
                frontier.append((nxt, d + 1))
        edges[conf] = outs
    return StateGraph(start, edges, truncated)


# -- parallel runs -----------------------------------------------------------


@dataclass
class ParallelRunReport:
    interleavings: int
    realized: list
    unrealized: list

    @property
    def ok(self):
        return not self.unrealized


def _state_sequences(c, state, fuel, max_traces=2_000):
    seqs = set()
    for t in _run_exhaustive(c, state, fuel, max_traces):
        if t.outcome is not Outcome.TERMINATED:
            raise PreconditionViolation("component does not terminate within fuel")
        seqs.add(tuple(t.states()))
    return seqs


def check_parallel_run(c1, c2, state=None, fuel=10_000):
    """Check that c1 and c2 run in parallel in c1 ; c2 from ``state``.

    Every interleaving of a component state sequence of c1 with one of c2 must
    be the state sequence of some run of the composition.
    """
    state = state if state is not None else ProcState()
    names1, names2 = proc_names(c1), proc_names(c2)
    if names1 & names2:
        raise PreconditionViolation(f"components share processes {sorted(names1 & names2)}")
    if exit_points(c1) != 1:
        raise PreconditionViolation("first component must have exactly one exit point")
    for comp in (c1, c2):
        if run(comp, state, fuel, Leftmost(), record=False).outcome is not Outcome.TERMINATED:
            raise PreconditionViolation("component does not terminate within fuel")
    whole = seq_compose(c1, c2)
    seqs1 = _state_sequences(c1, state, fuel)
    seqs2 = _state_sequences(c2, state, fuel)
    realized, unrealized = [], []
    total = 0
    for s1, s2 in itertools.product(sorted(seqs1, key=repr), sorted(seqs2, key=repr)):
        a, b = len(s1) - 1, len(s2) - 1
        for picks in itertools.combinations(range(a + b), a):
            total += 1
            target = _interleave(state, s1, s2, set(picks), names1, names2)
            entry = (s1, s2, picks)
            if _realizes(whole, state, target):
                realized.append(entry)
            else:
                unrealized.append(entry)
    return ParallelRunReport(total, realized, unrealized)


def _interleave(state, s1, s2, picks, names1, names2):
    i = j = 0
    out = [state]
    for k in range(len(s1) + len(s2) - 2):
        if k in picks:
            i += 1
        else:
            j += 1
        cur = state
        for n in names1:
            cur = cur.set(n, s1[i][n])
        for n in names2:
            cur = cur.set(n, s2[j][n])
        out.append(cur)
    return out


def _realizes(c, state, target):
    failed = set()

    def go(c, state, i):
        if i == len(target) - 1:
            return is_terminated(c)
        key = (c, state, i)
        if key in failed:
            return False
        for r in enabled_redexes(c):
            c2, s2 = step(c, state, r)
            if s2 == target[i + 1] and go(c2, s2, i + 1):
                return True
        failed.add(key)
        return False

    return state == target[0] and go(c, state, 0)


# -- termination of conditional-free choreographies ---------------------------


class Termination(enum.Enum):
    TERMINATES = "Terminates"
    DIVERGES = "Diverges"


def decide_termination_condfree(c):
    """Decide termination of a conditional-free choreography.

    Follows the finite graph whose vertices are subterms: an interaction leads
    to its continuation, a definition to its continuation, a call to the body
    of its binder.  Without conditionals the path is independent of the state,
    so the choreography terminates iff the path reaches 0 before revisiting a
    procedure body.
    """
    if has_conditional(c):
        raise HasConditional("termination decider requires a conditional-free choreography")
    env = {}
    entered = set()
    while True:
        if isinstance(c, (Com, Sel)):
            c = c.cont
        elif isinstance(c, Def):
            env = {**env, c.name: (c, None)}
            env[c.name] = (c, env)
            c = c.cont
        elif isinstance(c, Call):
            binder, def_env = env[c.name]
            if id(binder) in entered:
                return Termination.DIVERGES
            entered.add(id(binder))
            c, env = binder.body, def_env
        elif isinstance(c, End):
            return Termination.TERMINATES
        else:
            raise TypeError(f"not a choreography: {c!r}")
