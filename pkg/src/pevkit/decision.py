"""Decision rules, the ideal-sample law of the effect, and the PEV itself."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from . import normal

__all__ = ["DecisionRule", "DeltaPosterior", "Direction", "pev", "probit_pev"]


class Direction(str, Enum):
    """Sign of the effect that was declared significant on the observed sample."""

    POSITIVE = "positive"
    NEGATIVE = "negative"

    @property
    def sign(self) -> float:
        return 1.0 if self is Direction.POSITIVE else -1.0


@dataclass(frozen=True)
class DeltaPosterior:
    """Normal law of the true effect given an ideal sample."""

    mean: float
    variance: float

    def __post_init__(self):
        object.__setattr__(self, "mean", float(self.mean))
        object.__setattr__(self, "variance", float(self.variance))
        if not (self.variance > 0 and math.isfinite(self.variance)):
            raise ValueError(f"variance must be positive and finite, got {self.variance}")
        if not math.isfinite(self.mean):
            raise ValueError("mean must be finite")

    @property
    def sd(self) -> float:
        return math.sqrt(self.variance)


@dataclass(frozen=True)
class DecisionRule:
    """Direction of the claimed effect and how the threshold δ# is set.

    In ``"fixed"`` mode δ# is ``delta_sharp``. In ``"statistical"`` mode
    δ# = ±z·se of the ideal-sample estimate, the sign following ``direction``.
    """

    direction: Direction = Direction.POSITIVE
    mode: str = "statistical"
    z: float = normal.Z_975
    delta_sharp: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "direction", Direction(self.direction))
        if self.mode == "statistical":
            if not (self.z > 0 and math.isfinite(self.z)):
                raise ValueError(f"z must be positive, got {self.z}")
        elif self.mode == "fixed":
            if self.delta_sharp is None or not math.isfinite(self.delta_sharp):
                raise ValueError("fixed mode needs a finite delta_sharp")
        else:
            raise ValueError(f"mode must be 'statistical' or 'fixed', got {self.mode!r}")

    @classmethod
    def statistical(cls, direction="positive", *, z: float | None = None,
                    significance: float | None = None) -> "DecisionRule":
        """Statistical threshold; ``significance`` is two-sided, z = Φ⁻¹(1 - level/2)."""
        if z is not None and significance is not None:
            raise ValueError("give either z or significance, not both")
        if significance is not None:
            if not 0.0 < significance < 1.0:
                raise ValueError(f"significance must lie in (0, 1), got {significance}")
            z = normal.ppf(1.0 - significance / 2.0)
        return cls(Direction(direction), "statistical", normal.Z_975 if z is None else float(z))

    @classmethod
    def fixed(cls, delta_sharp: float, direction="positive") -> "DecisionRule":
        return cls(Direction(direction), "fixed", delta_sharp=float(delta_sharp))

    @property
    def is_statistical(self) -> bool:
        return self.mode == "statistical"

    def threshold(self, se_ideal: float | None = None) -> float:
        """δ# for the given ideal-sample standard error."""
        if not self.is_statistical:
            return self.delta_sharp
        if se_ideal is None or not se_ideal > 0:
            raise ValueError("statistical mode needs a positive se_ideal")
        return self.direction.sign * self.z * se_ideal


def probit_pev(dist: DeltaPosterior, rule: DecisionRule, se_ideal: float | None = None) -> float:
    """Φ⁻¹(PEV), evaluated directly rather than through Φ.

    ``se_ideal`` defaults to the standard deviation of ``dist``, which is the
    ideal-sample standard error for both estimators.
    """
    if rule.is_statistical and se_ideal is None:
        se_ideal = dist.sd
    gap = (rule.threshold(se_ideal) - dist.mean) / dist.sd
    return gap if rule.direction is Direction.POSITIVE else -gap


def pev(dist: DeltaPosterior, rule: DecisionRule, se_ideal: float | None = None) -> float:
    """Probability of failing to reject the null on the ideal sample.

    Positive direction: P(δ < δ#) = Φ((δ# - mean)/sd).
    Negative direction: P(δ > δ#) = 1 - Φ((δ# - mean)/sd).
    """
    return normal.cdf(probit_pev(dist, rule, se_ideal))
