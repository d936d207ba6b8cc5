"""Grouped Bernoulli rewards over context slots and context-sequence generators."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List


class EnvironmentConfigError(ValueError):
    pass


@dataclass
class GroupedEnvironment:
    """Slot ``c`` (1-based) draws arm ``i`` (1-based) from Bernoulli(``group_means[labels[c]][i-1]``)."""

    labels: Dict[int, int]
    group_means: Dict[int, List[float]]
    K: int = field(init=False)

    def __post_init__(self) -> None:
        self.group_means = {int(g): [float(x) for x in mu] for g, mu in self.group_means.items()}
        self.labels = {int(c): int(g) for c, g in self.labels.items()}
        sizes = {len(mu) for mu in self.group_means.values()}
        if len(sizes) != 1:
            raise EnvironmentConfigError("all groups need the same number of arms")
        self.K = sizes.pop()
        if self.K < 1:
            raise EnvironmentConfigError("need at least one arm")
        for g, mu in self.group_means.items():
            if any(not 0.0 <= x <= 1.0 for x in mu):
                raise EnvironmentConfigError(f"group {g} has a mean outside [0, 1]")
        for c, g in self.labels.items():
            if g not in self.group_means:
                raise EnvironmentConfigError(f"slot {c} has group {g} without means")
        self._best = {g: max(mu) for g, mu in self.group_means.items()}

    @property
    def n(self) -> int:
        return len(self.labels)

    def means(self, slot: int) -> List[float]:
        return self.group_means[self.labels[slot]]

    def best_arms(self, slot: int) -> List[int]:
        mu = self.means(slot)
        top = max(mu)
        return [i + 1 for i, x in enumerate(mu) if x == top]


def pull(env: GroupedEnvironment, slot: int, arm: int, rng) -> int:
    if not 1 <= arm <= env.K:
        raise EnvironmentConfigError(f"arm {arm} outside 1..{env.K}")
    mu = env.group_means[env.labels[slot]][arm - 1]
    return 1 if rng.random() < mu else 0


def instant_pseudo_regret(env: GroupedEnvironment, slot: int, arm: int) -> float:
    g = env.labels[slot]
    return env._best[g] - env.group_means[g][arm - 1]


def delta_min(env: GroupedEnvironment) -> float:
    gaps = []
    for g, mu in env.group_means.items():
        top = max(mu)
        if mu.count(top) > 1:
            raise EnvironmentConfigError(f"Δ_min undefined: group {g} has tied best arms")
        gaps.extend(top - x for x in mu if x < top)
    if not gaps:
        raise EnvironmentConfigError("Δ_min undefined: single-arm groups have no gaps")
    return min(gaps)


def parse_env(text: str) -> GroupedEnvironment:
    """Config text: ``K``, ``groups G``, ``G`` lines of ``K`` means, then ``slot group`` lines."""
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    try:
        K = int(lines[0])
        head = lines[1].split()
        if head[0] != "groups":
            raise ValueError("second line must be 'groups G'")
        G = int(head[1])
        means = {g: [float(x) for x in lines[2 + g].split()] for g in range(G)}
        labels = {}
        for ln in lines[2 + G:]:
            c, g = ln.split()
            labels[int(c)] = int(g)
    except (ValueError, IndexError) as exc:
        raise EnvironmentConfigError(f"malformed environment config: {exc}") from exc
    env = GroupedEnvironment(labels, means)
    if env.K != K:
        raise EnvironmentConfigError(f"declared K={K} but means have {env.K} entries")
    return env


def format_env(env: GroupedEnvironment) -> str:
    groups = sorted(env.group_means)
    out = [str(env.K), f"groups {len(groups)}"]
    out += [" ".join(repr(x) for x in env.group_means[g]) for g in groups]
    out += [f"{c} {env.labels[c]}" for c in sorted(env.labels)]
    return "\n".join(out) + "\n"


def read_env(path: str | Path) -> GroupedEnvironment:
    return parse_env(Path(path).read_text(encoding="utf-8"))


def write_env(env: GroupedEnvironment, path: str | Path) -> None:
    Path(path).write_text(format_env(env), encoding="utf-8")


def one_best_arm_means(n_groups: int, K: int, best: float, gap: float) -> Dict[int, List[float]]:
    """Group ``g`` has arm ``(g mod K) + 1`` at ``best`` and every other arm at ``best - gap``."""
    out = {}
    for g in range(n_groups):
        mu = [best - gap] * K
        mu[g % K] = best
        out[g] = mu
    return out


# --- context generators ------------------------------------------------------

@dataclass
class ContextGenerator:
    """Emits context slots in ``1..n``.

    kinds: ``iid`` (uniform), ``rr`` (round robin), ``block`` (dwell ``d``
    rounds per slot, then advance), ``cutadv`` (alternate ``u`` and ``u+1``,
    switching every ``q`` rounds).
    """

    kind: str
    n: int
    dwell: int = 1
    edge_u: int = 1
    period: int = 1
    _cursor: int = field(default=0, repr=False)

    def __post_init__(self) -> None:
        if self.kind not in {"iid", "rr", "block", "cutadv"}:
            raise ValueError(f"unknown generator kind {self.kind!r}")
        if self.n < 1:
            raise ValueError("generator needs n >= 1")
        if self.dwell < 1 or self.period < 1:
            raise ValueError("dwell and period must be positive")
        if self.kind == "cutadv" and not 1 <= self.edge_u < self.n:
            raise ValueError(f"cut-adversary edge ({self.edge_u}, {self.edge_u + 1}) outside 1..{self.n}")

    def reset(self) -> None:
        self._cursor = 0


def parse_generator(spec: str, n: int) -> ContextGenerator:
    """``iid`` | ``rr`` | ``block:d`` | ``cutadv:u,q``."""
    kind, _, arg = spec.partition(":")
    try:
        if kind == "block":
            return ContextGenerator("block", n, dwell=int(arg))
        if kind == "cutadv":
            u, q = arg.split(",")
            return ContextGenerator("cutadv", n, edge_u=int(u), period=int(q))
    except ValueError as exc:
        raise ValueError(f"bad generator spec {spec!r}") from exc
    if arg:
        raise ValueError(f"generator {kind!r} takes no parameters")
    return ContextGenerator(kind, n)


def next_context(gen: ContextGenerator, rng) -> int:
    k = gen._cursor
    gen._cursor += 1
    if gen.kind == "iid":
        c = int(rng.integers(gen.n)) + 1
    elif gen.kind == "rr":
        c = k % gen.n + 1
    elif gen.kind == "block":
        c = (k // gen.dwell) % gen.n + 1
    else:
        c = gen.edge_u + (k // gen.period) % 2
    return c


def context_sequence(gen: ContextGenerator, T: int, rng) -> List[int]:
    return [next_context(gen, rng) for _ in range(T)]

