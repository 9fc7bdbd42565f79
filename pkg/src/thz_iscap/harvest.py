"""RF-to-DC conversion models."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .propagation import DomainError

# Curve-fit constants of the rational saturation model.
TABLE1_A0 = 0.3929
TABLE1_B0 = 0.01675
TABLE1_C0 = 0.04401


@dataclass(frozen=True)
class LinearHarvester:
    eta: float

    def __post_init__(self):
        if not 0 < self.eta <= 1:
            raise DomainError(f"linear efficiency must be in (0, 1], got {self.eta}")

    def dc_output(self, p_rf):
        return self.eta * p_rf

    def derivative(self, p_rf):
        return self.eta * np.ones_like(p_rf) if np.ndim(p_rf) else self.eta


@dataclass(frozen=True)
class NonlinearHarvester:
    """Rational saturation model f(x) = (a0 x + b0)/(x + c0) - b0/c0.

    Output saturates at a0 - b0/c0 as x grows.
    """

    a0: float = TABLE1_A0
    b0: float = TABLE1_B0
    c0: float = TABLE1_C0

    def __post_init__(self):
        if not self.c0 > 0:
            raise DomainError(f"c0 must be positive, got {self.c0}")
        if not self.a0 > self.b0 / self.c0:
            raise DomainError("a0 must exceed b0/c0 for a positive saturation level")

    @property
    def saturation(self) -> float:
        return self.a0 - self.b0 / self.c0

    @property
    def small_signal_efficiency(self) -> float:
        """Slope at zero input, (a0 c0 - b0) / c0^2."""
        return (self.a0 * self.c0 - self.b0) / self.c0**2

    def dc_output(self, p_rf):
        # Same rational function, rearranged so tiny inputs do not cancel.
        x = np.asarray(p_rf, dtype=float)
        out = x * (self.a0 * self.c0 - self.b0) / (self.c0 * (x + self.c0))
        return float(out) if out.ndim == 0 else out

    def derivative(self, p_rf):
        x = np.asarray(p_rf, dtype=float)
        out = (self.a0 * self.c0 - self.b0) / (x + self.c0) ** 2
        return float(out) if out.ndim == 0 else out


EnergyHarvestModel = LinearHarvester | NonlinearHarvester


def dc_output(p_rf, model: EnergyHarvestModel):
    """DC power delivered for RF input ``p_rf`` (W)."""
    if np.ndim(p_rf):
        p_rf = np.asarray(p_rf, dtype=float)
    if np.any(np.asarray(p_rf) < 0):
        raise DomainError("RF input power must be non-negative")
    return model.dc_output(p_rf)


def conversion_efficiency(p_rf: float, model: EnergyHarvestModel) -> float:
    """RF-to-DC efficiency dc_output(p_rf) / p_rf."""
    if p_rf <= 0:
        raise DomainError("efficiency is undefined for non-positive input power")
    if isinstance(model, LinearHarvester):
        return model.eta
    return model.dc_output(p_rf) / p_rf
