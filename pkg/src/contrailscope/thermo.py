"""Contrail formation criterion: saturation curves and mixing-line classification.

Saturation vapor pressures over liquid water and ice follow
d ln e / dT = L(T) / (R T^2) with molar latent heats, pinned at a shared
anchor point. With constant L this integrates in closed form to
e(T) = e0 * exp(-(L/R) (1/T - 1/T0)); temperature-dependent L is handled by
numerical quadrature of the same ODE.

A mixing line is the straight segment in (T, vapor pressure) space from
exhaust to ambient conditions. Formation is decided by its crossings of the
liquid curve; persistence by the ambient endpoint relative to the ice curve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np
from scipy.integrate import quad

from .errors import DegenerateLine, OutOfRange

GAS_CONSTANT = 8.31  # J mol^-1 K^-1

T_MIN = 180.0
T_MAX = 320.0

# Defaults chosen so the closed-form curves reproduce reference saturation
# pressures within a few percent over the contrail temperature range.
LATENT_HEAT_LIQUID = 45051.0  # J/mol, evaporation
LATENT_HEAT_ICE = 51059.0     # J/mol, sublimation
ANCHOR_T = 273.16             # K, water triple point
ANCHOR_P = 611.657            # Pa

BISECTION_TOL_K = 1e-6


class Phase(str, Enum):
    liquid = "liquid"
    ice = "ice"


class Outcome(str, Enum):
    no_contrail = "no_contrail"
    persistent = "persistent"
    non_persistent = "non_persistent"


@dataclass
class SaturationModel:
    """Latent heats may be constants (J/mol) or callables of temperature."""

    latent_heat_liquid: float | Callable[[float], float] = LATENT_HEAT_LIQUID
    latent_heat_ice: float | Callable[[float], float] = LATENT_HEAT_ICE
    anchor_t: float = ANCHOR_T
    anchor_p: float = ANCHOR_P

    def __post_init__(self):
        if self.anchor_p <= 0:
            raise ValueError("anchor pressure must be positive")

    def _latent(self, phase: Phase):
        return self.latent_heat_ice if phase == Phase.ice else self.latent_heat_liquid


@dataclass
class MixingLine:
    exhaust: tuple[float, float]  # (T [K], vapor pressure [Pa])
    ambient: tuple[float, float]

    def __post_init__(self):
        if self.exhaust[0] <= self.ambient[0]:
            raise DegenerateLine("exhaust temperature must exceed ambient temperature")
        if self.exhaust[1] < 0 or self.ambient[1] < 0:
            raise ValueError("vapor pressures must be non-negative")

    @property
    def slope(self) -> float:
        return (self.exhaust[1] - self.ambient[1]) / (self.exhaust[0] - self.ambient[0])

    def pressure_at(self, t):
        """Linear interpolation along the line (t may be an array)."""
        t_a, p_a = self.ambient
        return p_a + self.slope * (np.asarray(t, dtype=float) - t_a)


@dataclass
class FormationVerdict:
    outcome: Outcome
    crossings_liquid: list[float] = field(default_factory=list)
    crossings_ice: list[float] = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "outcome": self.outcome.value,
            "crossings_liquid": list(self.crossings_liquid),
            "crossings_ice": list(self.crossings_ice),
        }


def saturation_pressure(model: SaturationModel, phase: Phase | str, t: float) -> float:
    """Equilibrium vapor pressure e(T) over the given phase, Pa."""
    t = float(t)
    if not (T_MIN <= t <= T_MAX):
        raise OutOfRange(f"T={t} K outside supported range [{T_MIN}, {T_MAX}] K")
    latent = model._latent(Phase(phase))
    if callable(latent):
        integral, _ = quad(lambda u: latent(u) / (GAS_CONSTANT * u * u), model.anchor_t, t,
                           limit=200, epsabs=1e-12, epsrel=1e-12)
        return model.anchor_p * math.exp(integral)
    return model.anchor_p * math.exp(-(latent / GAS_CONSTANT) * (1.0 / t - 1.0 / model.anchor_t))


def _crossings(model: SaturationModel, line: MixingLine, phase: Phase, samples: int) -> list[float]:
    """Temperatures where the line crosses the saturation curve, by sampling
    plus bisection. Sampling is restricted to the overlap of the line's
    temperature span and the model's supported domain (the exhaust side may
    lie far above T_MAX, where it is deeply undersaturated anyway).
    """
    t_lo = max(line.ambient[0], T_MIN)
    t_hi = min(line.exhaust[0], T_MAX)
    if t_hi <= t_lo:
        return []
    ts = np.linspace(t_hi, t_lo, samples)  # exhaust -> ambient traversal order
    f = np.array([line.pressure_at(t) - saturation_pressure(model, phase, t) for t in ts])

    roots = []
    for i in range(len(ts) - 1):
        a, b = float(ts[i]), float(ts[i + 1])
        fa, fb = float(f[i]), float(f[i + 1])
        if fa == 0.0:
            roots.append(a)
            continue
        if fa * fb < 0:
            lo, hi = (a, b) if a < b else (b, a)
            flo = float(line.pressure_at(lo)) - saturation_pressure(model, phase, lo)
            while hi - lo > BISECTION_TOL_K:
                mid = 0.5 * (lo + hi)
                fm = float(line.pressure_at(mid)) - saturation_pressure(model, phase, mid)
                if flo * fm <= 0:
                    hi = mid
                else:
                    lo, flo = mid, fm
            roots.append(0.5 * (lo + hi))
    if float(f[-1]) == 0.0:
        roots.append(float(ts[-1]))
    roots.sort(reverse=True)
    deduped = [r for i, r in enumerate(roots) if i == 0 or roots[i - 1] - r > 2 * BISECTION_TOL_K]
    return deduped


def classify_mixing_line(model: SaturationModel, line: MixingLine, samples: int = 512) -> FormationVerdict:
    """Classify a mixing line into the three formation scenarios.

    No liquid crossing -> no contrail. With a liquid crossing, the ambient
    endpoint at or above ice saturation -> persistent, below -> non-persistent.
    """
    if samples < 64:
        raise ValueError("samples must be >= 64")
    crossings_liquid = _crossings(model, line, Phase.liquid, samples)
    crossings_ice = _crossings(model, line, Phase.ice, samples)

    if not crossings_liquid:
        return FormationVerdict(Outcome.no_contrail, crossings_liquid, crossings_ice)

    t_amb, p_amb = line.ambient
    amb_ice = saturation_pressure(model, Phase.ice, max(min(t_amb, T_MAX), T_MIN))
    outcome = Outcome.persistent if p_amb >= amb_ice else Outcome.non_persistent
    return FormationVerdict(outcome, crossings_liquid, crossings_ice)


def curve_polyline(model: SaturationModel, phase: Phase | str, t_lo: float, t_hi: float,
                   samples: int = 256) -> list[list[float]]:
    ts = np.linspace(max(t_lo, T_MIN), min(t_hi, T_MAX), samples)
    return [[float(t), saturation_pressure(model, phase, t)] for t in ts]


def criterion_payload(model: SaturationModel, line: MixingLine, samples: int = 512) -> dict:
    """Verdict plus sampled curve polylines, for the criterion CLI/endpoint."""
    verdict = classify_mixing_line(model, line, samples)
    t_lo = max(line.ambient[0] - 5.0, T_MIN)
    t_hi = min(line.exhaust[0], T_MAX)
    return {
        "verdict": verdict.to_json_dict(),
        "mixing_line": [[line.exhaust[0], line.exhaust[1]], [line.ambient[0], line.ambient[1]]],
        "curves": {
            "liquid": curve_polyline(model, Phase.liquid, t_lo, t_hi),
            "ice": curve_polyline(model, Phase.ice, t_lo, t_hi),
        },
    }
