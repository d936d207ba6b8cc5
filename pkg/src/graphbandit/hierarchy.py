"""Divide-and-conquer scheduler of Tsallis-INF learners over a line of contexts.

Slots ``1..2**L`` are covered by ``L`` levels of nodes. Node ``(p, j)`` owns
the slot range ``((j-1)*2**(L-p), j*2**(L-p)]``. Both level-1 nodes start
active; a node below level ``L`` retires after serving ``D`` rounds and hands
its range to its two children.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

from .tsallis import ArmOutcome, TsallisInfState, new_state, sample_arm, update


class Status(str, enum.Enum):
    INACTIVE = "inactive"
    ACTIVE = "active"
    RETIRED = "retired"


class SchedulerError(RuntimeError):
    """Raised when the serve/feedback protocol or the cover invariant is broken."""


@dataclass
class SubroutineNode:
    level: int
    index: int
    lo: int  # first slot, inclusive
    hi: int  # last slot, inclusive
    status: Status = Status.INACTIVE
    handled: int = 0
    learner: Optional[TsallisInfState] = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return self.hi - self.lo + 1

    def contains(self, c: int) -> bool:
        return self.lo <= c <= self.hi


@dataclass
class HierarchyScheduler:
    n: int
    n_padded: int
    L: int
    D: int
    K: int
    levels: List[List[SubroutineNode]]
    owner: List[SubroutineNode] = field(repr=False, default_factory=list)
    activations: int = 0
    _pending: Optional[SubroutineNode] = field(default=None, repr=False)

    @property
    def nodes(self) -> List[SubroutineNode]:
        return [v for row in self.levels for v in row]

    def node(self, level: int, index: int) -> SubroutineNode:
        return self.levels[level - 1][index - 1]

    def children(self, v: SubroutineNode) -> List[SubroutineNode]:
        if v.level == self.L:
            return []
        row = self.levels[v.level]
        return [row[2 * v.index - 2], row[2 * v.index - 1]]

    def _activate(self, v: SubroutineNode) -> None:
        v.status = Status.ACTIVE
        v.learner = new_state(self.K)
        self.activations += 1
        for c in range(v.lo, v.hi + 1):
            self.owner[c] = v

    def to_record(self) -> dict:
        return {
            "n": self.n, "n_padded": self.n_padded, "L": self.L, "D": self.D, "K": self.K,
            "activations": self.activations,
            "nodes": [
                {"level": v.level, "index": v.index, "status": v.status.value, "handled": v.handled,
                 "learner": None if v.learner is None else v.learner.to_record()}
                for v in self.nodes
            ],
        }

    @classmethod
    def from_record(cls, rec: dict) -> "HierarchyScheduler":
        s = _skeleton(int(rec["n"]), int(rec["K"]), int(rec["D"]))
        s.activations = int(rec["activations"])
        for item in rec["nodes"]:
            v = s.node(item["level"], item["index"])
            v.status = Status(item["status"])
            v.handled = int(item["handled"])
            if item["learner"] is not None:
                v.learner = TsallisInfState.from_record(item["learner"])
            if v.status is Status.ACTIVE:
                for c in range(v.lo, v.hi + 1):
                    s.owner[c] = v
        check_cover(s)
        return s


def _skeleton(n: int, K: int, D: int) -> HierarchyScheduler:
    if n < 2:
        raise ValueError(f"need at least 2 contexts, got n={n}")
    if K < 1 or D < 1:
        raise ValueError("K and D must be positive")
    L = max(1, math.ceil(math.log2(n)))
    n_padded = 2 ** L
    levels = []
    for p in range(1, L + 1):
        size = 2 ** (L - p)
        levels.append([SubroutineNode(p, j, (j - 1) * size + 1, j * size) for j in range(1, 2 ** p + 1)])
    s = HierarchyScheduler(n, n_padded, L, D, K, levels)
    s.owner = [None] * (n_padded + 1)  # type: ignore[list-item]
    return s


def build(n: int, K: int, D: int) -> HierarchyScheduler:
    s = _skeleton(n, K, D)
    for v in s.levels[0]:
        s._activate(v)
    return s


def route(s: HierarchyScheduler, c: int) -> SubroutineNode:
    if not 1 <= c <= s.n_padded:
        raise ValueError(f"slot {c} outside 1..{s.n_padded}")
    v = s.owner[c]
    if v is None or v.status is not Status.ACTIVE:
        raise SchedulerError(f"no active node covers slot {c}")
    return v


def serve(s: HierarchyScheduler, c: int, rng) -> tuple[int, SubroutineNode]:
    """Pick an arm for context slot ``c``. Returns ``(arm, node)``; the node goes back into ``feedback``."""
    if s._pending is not None:
        raise SchedulerError("serve called twice without feedback")
    v = route(s, c)
    arm = sample_arm(v.learner, rng)
    s._pending = v
    return arm, v


def feedback(s: HierarchyScheduler, node: SubroutineNode, arm: int, loss: float) -> None:
    if s._pending is not node:
        raise SchedulerError("feedback does not match the pending serve")
    update(node.learner, ArmOutcome(arm, loss))
    s._pending = None
    node.handled += 1
    if node.level < s.L and node.handled == s.D:
        node.status = Status.RETIRED
        node.learner = None
        for child in s.children(node):
            s._activate(child)


def check_cover(s: HierarchyScheduler) -> None:
    """Every slot has exactly one active node on its root-to-leaf chain."""
    for c in range(1, s.n_padded + 1):
        active = [v for row in s.levels for v in row if v.contains(c) and v.status is Status.ACTIVE]
        if len(active) != 1:
            raise SchedulerError(f"slot {c} covered by {len(active)} active nodes")
        if s.owner[c] is not active[0]:
            raise SchedulerError(f"owner table stale at slot {c}")


def choose_D(T: int, K: int, f: int, n: int, mode: str = "general") -> int:
    """Split threshold for horizon ``T``.

    general: ``ceil((T sqrt(K) / (2 f log2 n))**(2/3))``, the minimizer of
    ``D f log n + T sqrt(K/D)``. easy: ``ceil(sqrt(T K / f))``. With ``f = 0``
    nodes never split (``D = T``).
    """
    if T < 1 or K < 1 or f < 0 or n < 2:
        raise ValueError("choose_D needs T >= 1, K >= 1, f >= 0, n >= 2")
    if f == 0:
        return T
    if mode == "general":
        log_n = max(1, math.ceil(math.log2(n)))
        D = math.ceil((T * math.sqrt(K) / (2 * f * log_n)) ** (2.0 / 3.0))
    elif mode == "easy":
        D = math.ceil(math.sqrt(T * K / f))
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return min(max(D, 1), T)


def pad_labels(labels: Sequence[int], n_padded: int) -> List[int]:
    """Extend labels to ``n_padded`` slots by repeating the last one."""
    labels = list(labels)
    if not labels:
        raise ValueError("no labels")
    return labels + [labels[-1]] * (n_padded - len(labels))


def count_bad(s: HierarchyScheduler, labels: Sequence[int]) -> int:
    """Number of nodes (any status) whose range contains a cut edge.

    ``labels[c-1]`` is the label of slot ``c``; short inputs are padded.
    """
    y = pad_labels(labels, s.n_padded)
    # prefix count of cut edges (c, c+1)
    cuts = [0] * (s.n_padded + 1)
    for c in range(1, s.n_padded):
        cuts[c] = cuts[c - 1] + (y[c - 1] != y[c])
    bad = 0
    for v in s.nodes:
        # edges (c, c+1) with lo <= c < hi
        if cuts[v.hi - 1] - cuts[v.lo - 1] > 0:
            bad += 1
    return bad


def handled_by_level(s: HierarchyScheduler) -> Dict[int, int]:
    return {p: sum(v.handled for v in row) for p, row in enumerate(s.levels, start=1)}
