"""Probe pulse envelopes and control-field geometry."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .qcore import HBAR

RAMP = "linear-ramp-up-down"
CONSTANT = "constant"
STANDING_WAVE = "standing-wave"
VORTEX = "vortex"


@dataclass(frozen=True)
class PulseShape:
    """Probe Rabi-frequency envelope.

    The ramp kind rises linearly from zero over ``ramp_time`` and falls back
    to zero over the final ``ramp_time``; the symmetric triangle has
    ``ramp_time = duration / 2`` (the default).
    """

    kind: str
    duration: float
    peak: float
    ramp_time: float | None = None

    def __post_init__(self):
        if self.kind not in (RAMP, CONSTANT):
            raise ValueError(f"unknown pulse kind {self.kind!r}")
        if self.duration <= 0:
            raise ValueError("pulse duration must be positive")
        if self.peak < 0:
            raise ValueError("pulse peak must be non-negative")
        if self.kind == RAMP:
            if self.ramp_time is None:
                object.__setattr__(self, "ramp_time", self.duration / 2)
            if not 0 < self.ramp_time <= self.duration / 2 * (1 + 1e-12):
                raise ValueError("ramp_time must lie in (0, duration/2]")

    def with_peak(self, peak: float) -> "PulseShape":
        return PulseShape(self.kind, self.duration, peak, self.ramp_time)

    def knots(self) -> tuple[np.ndarray, np.ndarray]:
        """Breakpoints of the envelope in s = t/duration and the amplitudes there."""
        if self.kind == CONSTANT:
            return np.array([0.0, 1.0]), np.array([self.peak, self.peak])
        f = self.ramp_time / self.duration
        if f >= 0.5 * (1 - 1e-12):
            return np.array([0.0, 0.5, 1.0]), np.array([0.0, self.peak, 0.0])
        return (np.array([0.0, f, 1.0 - f, 1.0]),
                np.array([0.0, self.peak, self.peak, 0.0]))

    def mean_square(self) -> float:
        """Integral of (envelope/peak)^2 over s in [0, 1]."""
        if self.kind == CONSTANT:
            return 1.0
        f = self.ramp_time / self.duration
        return 1.0 - 2 * f + 2 * f / 3


def probe_amplitude(p: PulseShape, t: float) -> float:
    if not 0 <= t <= p.duration:
        raise ValueError(f"t = {t!r} outside [0, {p.duration!r}]")
    if p.kind == CONSTANT:
        return p.peak
    s, v = p.knots()
    return float(np.interp(t / p.duration, s, v))


@dataclass(frozen=True)
class ControlGeometry:
    kind: str
    omega0: float
    k_c: float
    charge: int = 1
    waist: float | None = None
    residual: float = 0.0

    def __post_init__(self):
        if self.kind not in (STANDING_WAVE, VORTEX):
            raise ValueError(f"unknown control geometry {self.kind!r}")
        if self.residual < 0:
            raise ValueError("node residual must be non-negative")
        if self.kind == VORTEX:
            if self.charge < 1:
                raise ValueError("vortex charge must be a positive integer")
            if self.waist is None:
                # default waist is one control wavelength
                object.__setattr__(self, "waist", 2 * math.pi / self.k_c)

    @property
    def wavelength(self) -> float:
        return 2 * math.pi / self.k_c


def control_profile(g: ControlGeometry, x: float) -> float:
    """Control Rabi frequency at position x (radial coordinate for a vortex)."""
    if g.kind == STANDING_WAVE:
        return g.residual + g.omega0 * math.sin(g.k_c * x)
    if x < 0:
        raise ValueError("vortex radial coordinate must be non-negative")
    return g.residual + g.omega0 * (x / g.waist) ** g.charge


def motional_coupling(g: ControlGeometry, a0: float) -> float:
    """Control coupling between neighbouring trap levels for a wavepacket of size a0.

    The vortex value is ``omega0 * (k_c a0)**charge`` irrespective of the
    waist, as used for the lattice case.
    """
    if a0 <= 0:
        raise ValueError("a0 must be positive")
    if g.kind == STANDING_WAVE:
        return g.omega0 * g.k_c * a0
    return g.omega0 * (g.k_c * a0) ** g.charge


def check_node(g: ControlGeometry, a0: float) -> bool:
    """Warn when the node residual exceeds the finite-size coupling scale."""
    limit = g.omega0 * g.k_c * a0
    if g.residual > limit:
        warnings.warn(
            f"node residual {g.residual:.3e} rad/s exceeds omega0*k'*a0 = {limit:.3e} rad/s; "
            "the node-imperfection error will dominate localization",
            stacklevel=2,
        )
        return False
    return True


def addressing_width(omega: float, omega0: float, k_c: float) -> float:
    if omega0 == 0 or k_c == 0:
        raise ZeroDivisionError("omega0 and k' must be non-zero")
    if omega <= 0 or omega0 < 0 or k_c < 0:
        raise ValueError("arguments must be positive")
    return omega / (omega0 * k_c)


def ground_state_width(m: float, omega: float) -> float:
    if m <= 0 or omega <= 0:
        raise ValueError("mass and trap frequency must be positive")
    return math.sqrt(HBAR / (2 * m * omega))


@dataclass(frozen=True)
class DriveConfig:
    probe: PulseShape
    control: ControlGeometry
    atom_positions: tuple[float, ...] = field(default=(0.0,))

    def __post_init__(self):
        pos = tuple(float(x) for x in self.atom_positions)
        if len(set(pos)) != len(pos):
            raise ValueError("atom positions must be distinct")
        object.__setattr__(self, "atom_positions", pos)

    def control_at(self, index: int) -> float:
        x = self.atom_positions[index]
        if self.control.kind == VORTEX:
            x = abs(x)
        return abs(control_profile(self.control, x))
