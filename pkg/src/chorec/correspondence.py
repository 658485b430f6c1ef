"""Bounded lockstep check that a projected network behaves like its choreography."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .choreography import ProcState, annotate_calls, is_annotated
from .errors import ProjectabilityError
from .network import _fire, net_enabled
from .projection import epp, prunes_to
from .semantics import successors


@dataclass
class CorrespondenceReport:
    """``steps_checked`` counts the choreography steps matched against the network."""

    steps_checked: int = 0
    completeness_failures: list = field(default_factory=list)
    soundness_failures: list = field(default_factory=list)
    truncated: bool = False

    @property
    def verdict(self):
        return not (self.completeness_failures or self.soundness_failures)

    def to_json(self):
        return {
            "steps_checked": self.steps_checked,
            "completeness_failures": self.completeness_failures,
            "soundness_failures": self.soundness_failures,
            "truncated": self.truncated,
            "verdict": "pass" if self.verdict else "fail",
        }


def _failure(depth, direction, action, diagnostic):
    return {"step": depth, "direction": direction, "action": str(action), "diagnostic": diagnostic}


def check_correspondence(c, state=None, depth=50, max_configs=20_000):
    """Explore ``(choreography, state, network)`` triples breadth-first up to ``depth``.

    Every choreography step must be matched by a network step with the same
    action whose result prunes to the projection of the reduct
    (completeness), and every network step by such a choreography step
    (soundness).  Raises ProjectabilityError if ``c`` cannot be projected.
    """
    state = state if state is not None else ProcState()
    c = c if is_annotated(c) else annotate_calls(c)
    report = CorrespondenceReport()
    start = (c, state, epp(c, state))
    seen = {start}
    queue = deque([(start, 0)])
    while queue:
        (c, s, n), d = queue.popleft()
        if d >= depth:
            continue
        mc = []
        for redex, c2, s2 in successors(c, s):
            try:
                target = epp(c2, s2)
            except ProjectabilityError as exc:
                report.completeness_failures.append(
                    _failure(d, "completeness", redex.action, str(exc)))
                continue
            mc.append((redex.action, c2, s2, target))
        net = [(a, _fire(n, a)[0]) for a in net_enabled(n)]

        for a, c2, s2, target in mc:
            report.steps_checked += 1
            match = next((n2 for b, n2 in net if b == a and prunes_to(n2, target)), None)
            if match is None:
                report.completeness_failures.append(
                    _failure(d, "completeness", a, "no matching network step"))
                continue
            nxt = (c2, s2, match)
            if nxt not in seen:
                if len(seen) >= max_configs:
                    report.truncated = True
                    continue
                seen.add(nxt)
                queue.append((nxt, d + 1))
        for b, n2 in net:
            if not any(a == b and prunes_to(n2, target) for a, _, _, target in mc):
                report.soundness_failures.append(
                    _failure(d, "soundness", b, "no matching choreography step"))
    return report
