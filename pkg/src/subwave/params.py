"""Physical parameter bundle shared by the schemes, budget and lab modules."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .fields import STANDING_WAVE, VORTEX, ControlGeometry, ground_state_width, motional_coupling

TWO_PI = 2 * math.pi
OMEGA0_MAX = TWO_PI * 1e9  # 1 GHz cap on the control Rabi frequency
AMU = 1.66054e-27  # kg

PLATFORMS = ("ion", "solid-state", "lattice-atom")


@dataclass(frozen=True)
class PlatformParams:
    """Every physical symbol entering the gate model and the error budget.

    Rates and Rabi frequencies are angular (rad/s), lengths in metres.
    ``omega_c`` and ``g`` are derived properties so they can never go stale.
    ``omega`` is the peak probe Rabi frequency and may be left unset when it
    is eliminated through ``omega**2 = delta / tau``.
    """

    platform: str
    gamma: float
    tau: float
    lambda_p: float
    lambda_c: float
    omega0: float = OMEGA0_MAX
    gamma_r: float | None = None
    omega_trap: float | None = None
    mass: float | None = None
    a0_given: float | None = None
    d: float | None = None
    omega: float | None = None
    delta: float | None = None
    vortex_charge: int | None = None
    waist: float | None = None
    node_residual: float = 0.0
    branching: float = 0.5
    omega_ca_given: float | None = None

    def __post_init__(self):
        if self.platform not in PLATFORMS:
            raise ValueError(f"platform must be one of {PLATFORMS}, got {self.platform!r}")
        if self.omega0 <= 0:
            raise ValueError("omega0 must be positive")
        if self.omega0 > OMEGA0_MAX * (1 + 1e-12):
            raise ValueError(
                f"omega0/2pi = {self.omega0 / TWO_PI:.4g} Hz exceeds the 1 GHz cap on the control Rabi frequency"
            )
        for name in ("gamma", "tau", "lambda_p", "lambda_c"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be non-negative")
        if self.tau <= 0 or self.lambda_p <= 0 or self.lambda_c <= 0:
            raise ValueError("tau and wavelengths must be positive")
        if self.gamma_r is not None and self.gamma_r < 0:
            raise ValueError("gamma_r must be non-negative")
        if self.d is not None and self.d <= 0:
            raise ValueError("d must be positive")
        if not 0 <= self.branching <= 1:
            raise ValueError("branching must lie in [0, 1]")
        if self.node_residual < 0:
            raise ValueError("node_residual must be non-negative")
        if self.vortex_charge is not None and self.vortex_charge < 1:
            raise ValueError("vortex_charge must be a positive integer")

    @property
    def k(self) -> float:
        return TWO_PI / self.lambda_p

    @property
    def k_c(self) -> float:
        return TWO_PI / self.lambda_c

    @property
    def a0(self) -> float | None:
        if self.a0_given is not None:
            return self.a0_given
        if self.mass is not None and self.omega_trap is not None:
            return ground_state_width(self.mass, self.omega_trap)
        return None

    @property
    def omega_c(self) -> float:
        """Control Rabi frequency seen by the spectator atom."""
        return self.omega_c_at(self.omega0)

    def omega_c_at(self, omega0):
        if self.platform == "solid-state":
            if self.d is None:
                raise ValueError("solid-state platform needs the atom separation d")
            return omega0 * self.k_c * self.d
        return omega0

    @property
    def g(self) -> float | None:
        """Dipole-dipole scale gamma/(k d)^3."""
        if self.d is None:
            return None
        return self.gamma / (self.k * self.d) ** 3

    def geometry(self, omega0: float | None = None) -> ControlGeometry:
        omega0 = self.omega0 if omega0 is None else omega0
        if self.vortex_charge is None:
            return ControlGeometry(STANDING_WAVE, omega0, self.k_c, residual=self.node_residual)
        return ControlGeometry(VORTEX, omega0, self.k_c, charge=self.vortex_charge,
                               waist=self.waist, residual=self.node_residual)

    @property
    def omega_ca(self) -> float | None:
        return self.omega_ca_at(self.omega0)

    def omega_ca_at(self, omega0):
        """Motional coupling Omega_c(a0); linear in omega0 for every geometry."""
        if self.omega_ca_given is not None:
            return self.omega_ca_given * omega0 / self.omega0
        a0 = self.a0
        if a0 is None:
            return None
        return motional_coupling(self.geometry(1.0), a0) * omega0

    def with_(self, **kw) -> "PlatformParams":
        return replace(self, **kw)
