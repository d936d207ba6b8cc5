"""Tsallis-INF (alpha = 1/2) with importance-weighted loss estimates.

Arms are numbered ``1..K`` at the public surface. The sampling distribution
at local round ``t`` (0-based) uses the learning rate ``eta = 2/sqrt(t+1)``
and has the form ``w_i = 4 / (eta * (L_i - x))**2`` where ``L`` holds the
cumulative loss estimates and ``x < min(L)`` normalizes ``w``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

SUM_TOL = 1e-9
MAX_NEWTON = 100
MAX_BISECT = 200


class NormalizerError(RuntimeError):
    pass


@dataclass
class ArmOutcome:
    arm: int
    loss: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.loss <= 1.0:
            raise ValueError(f"loss {self.loss} outside [0, 1]")


@dataclass
class TsallisInfState:
    K: int
    cum_loss_est: List[float]
    local_t: int = 0
    last_weights: Optional[List[float]] = field(default=None, repr=False)

    def to_record(self) -> dict:
        return {"K": self.K, "cum_loss_est": list(self.cum_loss_est), "local_t": self.local_t}

    @classmethod
    def from_record(cls, rec: dict) -> "TsallisInfState":
        state = cls(int(rec["K"]), [float(x) for x in rec["cum_loss_est"]], int(rec["local_t"]))
        if len(state.cum_loss_est) != state.K:
            raise ValueError("cum_loss_est length does not match K")
        return state


def new_state(K: int) -> TsallisInfState:
    if K < 1:
        raise ValueError(f"need at least one arm, got K={K}")
    return TsallisInfState(K, [0.0] * K)


def learning_rate(local_t: int) -> float:
    return 2.0 / math.sqrt(local_t + 1)


def _weight_sum(d: Sequence[float], z: float, eta: float) -> float:
    c = 4.0 / (eta * eta)
    return sum(c / ((di + z) * (di + z)) for di in d)


def _newton_offset(d: Sequence[float], eta: float) -> Optional[float]:
    """Solve ``sum 4/(eta (d_i + z))^2 = 1`` for ``z > 0`` with ``min(d) = 0``.

    ``S(z)`` is decreasing and convex, so Newton started at ``z = 2/eta``
    (where the zero-offset arm alone has weight 1, hence ``S >= 1``) climbs
    monotonically to the root without overshooting. Returns None on
    non-convergence.
    """
    c = 4.0 / (eta * eta)
    z = 2.0 / eta
    for _ in range(MAX_NEWTON):
        s = 0.0
        ds = 0.0
        for di in d:
            r = 1.0 / (di + z)
            r2 = r * r
            s += r2
            ds += r2 * r
        s *= c
        excess = s - 1.0
        if excess <= 1e-13:
            return z
        z += excess / (2.0 * c * ds)
    return None


def _bisect_offset(d: Sequence[float], eta: float) -> float:
    # S(2/eta) >= 1 and S(2 sqrt(K)/eta) <= 1
    lo = 2.0 / eta
    hi = 2.0 * math.sqrt(len(d)) / eta
    for _ in range(MAX_BISECT):
        mid = 0.5 * (lo + hi)
        if _weight_sum(d, mid, eta) >= 1.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * hi:
            break
    z = lo
    if abs(_weight_sum(d, z, eta) - 1.0) > SUM_TOL:
        raise NormalizerError("normalizer not found")
    return z


def distribution_from_losses(cum_loss: Sequence[float], local_t: int, *, method: str = "newton") -> List[float]:
    """Sampling distribution for cumulative losses ``cum_loss`` at round ``local_t``.

    ``method="bisect"`` skips Newton and bisects directly.
    """
    eta = learning_rate(local_t)
    m = min(cum_loss)
    d = [x - m for x in cum_loss]
    z = _newton_offset(d, eta) if method == "newton" else None
    if z is None:
        z = _bisect_offset(d, eta)
    c = 4.0 / (eta * eta)
    w = [c / ((di + z) * (di + z)) for di in d]
    total = sum(w)
    return [wi / total for wi in w]


def arm_distribution(state: TsallisInfState) -> List[float]:
    return distribution_from_losses(state.cum_loss_est, state.local_t)


def sample_arm(state: TsallisInfState, rng) -> int:
    """Draw an arm (1-based) from the current distribution and cache the weights."""
    w = arm_distribution(state)
    state.last_weights = w
    u = rng.random()
    acc = 0.0
    for i, wi in enumerate(w):
        acc += wi
        if u < acc:
            return i + 1
    return state.K


def update(state: TsallisInfState, outcome: ArmOutcome) -> None:
    if state.last_weights is None:
        raise RuntimeError("no cached weights")
    if not 0.0 <= outcome.loss <= 1.0:
        raise ValueError(f"loss {outcome.loss} outside [0, 1]")
    if not 1 <= outcome.arm <= state.K:
        raise ValueError(f"arm {outcome.arm} outside 1..{state.K}")
    i = outcome.arm - 1
    if outcome.loss:
        state.cum_loss_est[i] += outcome.loss / state.last_weights[i]
    state.local_t += 1
    state.last_weights = None
