"""Schedulers and execution traces shared by the MC and SP engines."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Any, Optional


class Outcome(enum.Enum):
    TERMINATED = "Terminated"
    FUEL_EXHAUSTED = "FuelExhausted"
    STUCK = "Stuck"


@dataclass(frozen=True)
class Leftmost:
    pass


@dataclass(frozen=True)
class Random:
    seed: int = 0


@dataclass(frozen=True)
class Exhaustive:
    depth: int = 50
    max_traces: int = 10_000


def parse_scheduler(name, seed=0, depth=50):
    if name == "leftmost":
        return Leftmost()
    if name == "random":
        return Random(seed)
    if name == "exhaustive":
        return Exhaustive(depth)
    raise ValueError(f"unknown scheduler {name!r}")


@dataclass
class Trace:
    """Snapshots ``(configuration, state)``; ``actions[i]`` leads from step i to i+1."""

    steps: list
    actions: list = field(default_factory=list)
    outcome: Outcome = Outcome.TERMINATED
    seed: Optional[int] = None

    @property
    def final(self):
        return self.steps[-1]

    @property
    def final_state(self):
        return self.steps[-1][1]

    @property
    def length(self):
        return len(self.actions)

    def states(self):
        return [s for _, s in self.steps]

    def records(self, render):
        """Line-delimited JSON records: one per snapshot, then a summary."""
        for i, (conf, state) in enumerate(self.steps):
            rec: dict[str, Any] = {
                "step": i,
                "term": render(conf),
                "state": state.as_dict(),
            }
            if i < len(self.actions):
                rec["redex"] = str(self.actions[i])
            yield json.dumps(rec, sort_keys=True)
        yield json.dumps(
            {"outcome": self.outcome.value, "steps": self.length, "seed": self.seed,
             "final_state": self.final_state.as_dict()},
            sort_keys=True,
        )
