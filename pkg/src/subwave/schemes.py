"""Level schemes as Hamiltonian and jump-operator bundles.

Drive terms follow the rotating-wave form (Omega/2)(|e><x| + h.c.); the
excited level carries the one-photon detuning ``delta`` and the control is
held at two-photon resonance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .params import PlatformParams
from .qcore import ket, tensor

LAMBDA_LEVELS = ("g", "r", "e")
TRIPOD_LEVELS = ("0", "1", "r", "e")


@dataclass(frozen=True)
class Decay:
    upper: str
    lower: str
    rate: float
    atom: int = 0


@dataclass(frozen=True)
class MotionalLadder:
    n_fock: int
    omega: float
    omega_ca: float

    def __post_init__(self):
        if self.n_fock < 3:
            raise ValueError("n_fock must be at least 3")
        if self.omega <= 0:
            raise ValueError("trap frequency must be positive")
        if self.omega_ca < 0:
            raise ValueError("omega_ca must be non-negative")


@dataclass(frozen=True)
class TwoAtomCoupling:
    g0: float
    g1: float
    g: float
    pol_factors: tuple[float, float] = (1.0, 1.0)

    @classmethod
    def from_g(cls, g: float, pol_factors=(1.0, 1.0)) -> "TwoAtomCoupling":
        p0, p1 = pol_factors
        return cls(p0 * g, p1 * g, g, (p0, p1))

    @classmethod
    def from_geometry(cls, gamma: float, k: float, d: float, pol_factors=(1.0, 1.0)):
        if d <= 0:
            raise ValueError("atom separation d must be positive")
        return cls.from_g(gamma / (k * d) ** 3, pol_factors)


@dataclass(frozen=True, eq=False)
class LevelScheme:
    """Hamiltonian bundle ``H(t) = h0 + Omega(t) * probe`` plus decay channels.

    ``labels`` names the full basis; ``internal`` the levels of one atom.
    Subsystem order is atom 1, atom 2, ..., then the motional mode.
    ``controls`` records the control Rabi frequency seen by each atom.
    """

    labels: tuple[str, ...]
    h0: np.ndarray
    probe: np.ndarray
    couplings: tuple[tuple[str, str, str], ...]
    decays: tuple[Decay, ...]
    internal: tuple[str, ...]
    atoms: int = 1
    n_fock: int = 1
    delta: float = 0.0
    controls: tuple[float, ...] = (0.0,)
    qubit: tuple[str, str] = ("0", "1")
    jumps: tuple[np.ndarray, ...] = field(default=(), repr=False)

    def __post_init__(self):
        known = set(self.internal)
        for a, b, _ in self.couplings:
            if a not in known or b not in known:
                raise ValueError(f"coupling ({a}, {b}) references an unknown level")
        for dcy in self.decays:
            if dcy.upper not in known or dcy.lower not in known:
                raise ValueError(f"decay {dcy} references an unknown level")
            if dcy.rate < 0:
                raise ValueError("decay rates must be non-negative")
            if not 0 <= dcy.atom < self.atoms:
                raise ValueError("decay references a missing atom")
        if self.h0.shape != (self.dim, self.dim) or self.probe.shape != self.h0.shape:
            raise ValueError("operator shapes do not match the basis size")
        if not self.jumps:
            object.__setattr__(self, "jumps", tuple(self._jump(d) for d in self.decays if d.rate > 0))

    @property
    def dims(self) -> list[int]:
        d = [len(self.internal)] * self.atoms
        if self.n_fock > 1:
            d.append(self.n_fock)
        return d

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    def index(self, label: str) -> int:
        return self.labels.index(label)

    def hamiltonian(self, omega: float) -> np.ndarray:
        return self.h0 + omega * self.probe

    def local(self, op: np.ndarray, atom: int = 0) -> np.ndarray:
        """Embed a single-atom internal operator into the full space."""
        out = np.eye(1, dtype=np.complex128)
        for i in range(self.atoms):
            out = tensor(out, op if i == atom else np.eye(len(self.internal)))
        if self.n_fock > 1:
            out = tensor(out, np.eye(self.n_fock))
        return out

    def level_projector(self, level: str, atom: int = 0) -> np.ndarray:
        v = ket(len(self.internal), self.internal.index(level))
        return self.local(np.outer(v, v), atom)

    def _jump(self, d: Decay) -> np.ndarray:
        n = len(self.internal)
        op = np.zeros((n, n), dtype=np.complex128)
        op[self.internal.index(d.lower), self.internal.index(d.upper)] = math.sqrt(d.rate)
        return self.local(op, d.atom)

    def loss_operator(self) -> np.ndarray:
        """Sum of L^dag L over all jump operators."""
        out = np.zeros((self.dim, self.dim), dtype=np.complex128)
        for L in self.jumps:
            out += L.conj().T @ L
        return out

    def decay_out_of(self, level: str, atom: int = 0) -> float:
        return sum(d.rate for d in self.decays if d.upper == level and d.atom == atom)

    def embed(self, qubit_states) -> np.ndarray:
        """Product state with each atom in the given qubit superposition.

        ``qubit_states`` holds one 2-vector on (qubit[0], qubit[1]) per atom;
        the motional mode, if any, starts in its ground state.
        """
        if len(qubit_states) != self.atoms:
            raise ValueError(f"need {self.atoms} qubit states")
        n = len(self.internal)
        i0, i1 = (self.internal.index(q) for q in self.qubit)
        out = np.ones(1, dtype=np.complex128)
        for q in qubit_states:
            v = np.zeros(n, dtype=np.complex128)
            v[i0], v[i1] = q[0], q[1]
            out = np.kron(out, v)
        if self.n_fock > 1:
            out = np.kron(out, ket(self.n_fock, 0))
        return out


def _op(labels, pairs) -> np.ndarray:
    n = len(labels)
    m = np.zeros((n, n), dtype=np.complex128)
    for a, b, v in pairs:
        i, j = labels.index(a), labels.index(b)
        m[i, j] += v
        if i != j:
            m[j, i] += np.conj(v)
    return m


def dark_state(omega: float, omega_c: float) -> np.ndarray:
    """Dark superposition on (|g>, |r>) of the Lambda system."""
    nt = math.hypot(omega, omega_c)
    if nt == 0:
        raise ValueError("dark state undefined when both fields vanish")
    return np.array([omega_c, -omega], dtype=np.complex128) / nt


def dark_bright_basis(omega: float, omega_c: float, delta: float):
    """Dark and bright states on (|1>, |r>) and the bright-state shift scale.

    Returns ``(D, B, delta_s, delta)`` with ``delta_s = (omega**2 + omega_c**2)/delta``.
    With the half-Rabi drive convention the bright level is displaced by
    ``delta_s / 4`` in the far-detuned limit.
    """
    nt = math.hypot(omega, omega_c)
    if nt == 0:
        raise ValueError("dark/bright basis undefined when both fields vanish")
    if delta == 0:
        raise ValueError("dark/bright basis needs a non-zero detuning")
    D = np.array([omega_c, -omega], dtype=np.complex128) / nt
    B = np.array([omega, omega_c], dtype=np.complex128) / nt
    return D, B, nt**2 / delta, delta


def _require_delta(params: PlatformParams) -> float:
    if params.delta is None:
        raise ValueError("params.delta must be set to build a level scheme")
    return params.delta


def build_lambda(params: PlatformParams, control: float | None = None) -> LevelScheme:
    """Three-level g, r, e system with probe on g-e and control on r-e."""
    delta = _require_delta(params)
    oc = params.omega_c if control is None else control
    L = LAMBDA_LEVELS
    h0 = _op(L, [("e", "e", delta), ("e", "r", oc / 2)])
    probe = _op(L, [("e", "g", 0.5)])
    b = params.branching
    decays = (Decay("e", "g", 2 * params.gamma * b), Decay("e", "r", 2 * params.gamma * (1 - b)))
    return LevelScheme(L, h0, probe, (("g", "e", "probe"), ("r", "e", "control")), decays, L,
                       delta=delta, controls=(oc,), qubit=("g", "r"))


def _tripod_parts(params: PlatformParams, control: float):
    delta = _require_delta(params)
    L = TRIPOD_LEVELS
    h0 = _op(L, [("e", "e", delta), ("e", "r", control / 2)])
    probe = _op(L, [("e", "1", 0.5)])
    b = params.branching
    decays = [Decay("e", "1", 2 * params.gamma * b), Decay("e", "r", 2 * params.gamma * (1 - b))]
    if params.gamma_r:
        decays += [Decay("r", "0", params.gamma_r), Decay("r", "1", params.gamma_r)]
    couplings = (("1", "e", "probe"), ("r", "e", "control"))
    return h0, probe, couplings, decays


def build_tripod(params: PlatformParams, control: float | None = None) -> LevelScheme:
    """Single-atom tripod (0, 1, r, e).

    ``control`` is the control Rabi frequency at the atom; the default is the
    spectator value ``params.omega_c``. Pass ``params.node_residual`` for the
    addressed atom.
    """
    oc = params.omega_c if control is None else control
    h0, probe, couplings, decays = _tripod_parts(params, oc)
    return LevelScheme(TRIPOD_LEVELS, h0, probe, couplings, tuple(decays), TRIPOD_LEVELS,
                       delta=params.delta, controls=(oc,))


def ladder_operators(n_fock: int) -> np.ndarray:
    """Annihilation operator truncated to n_fock levels."""
    return np.diag(np.sqrt(np.arange(1, n_fock)), 1).astype(np.complex128)


def build_tripod_motional(params: PlatformParams, ladder: MotionalLadder,
                          control: float | None = None) -> LevelScheme:
    """Tripod coupled to one trap mode through the control-field gradient.

    ``control`` is a uniform control term (zero at the node, ``omega_c`` for
    the spectator); the gradient adds (omega_ca/2)(|e><r| + h.c.)(a + a^dag).
    """
    oc = params.omega_c if control is None else control
    h_int, p_int, couplings, decays = _tripod_parts(params, oc)
    n = ladder.n_fock
    a = ladder_operators(n)
    eye_m = np.eye(n)
    trap = ladder.omega * np.diag(np.arange(n) + 0.5)
    er = _op(TRIPOD_LEVELS, [("e", "r", 0.5)])
    h0 = tensor(h_int, eye_m) + tensor(np.eye(4), trap) + ladder.omega_ca * tensor(er, a + a.conj().T)
    probe = tensor(p_int, eye_m)
    labels = tuple(f"{s},{k}" for s in TRIPOD_LEVELS for k in range(n))
    return LevelScheme(labels, h0, probe, couplings + (("r", "e", "gradient"),), tuple(decays),
                       TRIPOD_LEVELS, n_fock=n, delta=params.delta, controls=(oc,))


def exchange_hamiltonian(cpl: TwoAtomCoupling) -> np.ndarray:
    """-g0(|0e><e0| + h.c.) - g1(|1e><e1| + h.c.) on the 16-dim two-atom space."""
    L = TRIPOD_LEVELS
    labels = [a + b for a in L for b in L]
    return _op(labels, [("0e", "e0", -cpl.g0), ("1e", "e1", -cpl.g1)])


def build_two_atom(params: PlatformParams, cpl: TwoAtomCoupling,
                   controls: tuple[float, float] | None = None) -> LevelScheme:
    """Addressed atom (node, control = residual) and spectator with dipole exchange."""
    if params.d is not None and params.d <= 0:
        raise ValueError("atom separation d must be positive")
    if controls is None:
        controls = (params.node_residual, params.omega_c)
    h1, p1, couplings, dec1 = _tripod_parts(params, controls[0])
    h2, _, _, dec2 = _tripod_parts(params, controls[1])
    eye = np.eye(4)
    h0 = tensor(h1, eye) + tensor(eye, h2) + exchange_hamiltonian(cpl)
    probe = tensor(p1, eye) + tensor(eye, p1)
    decays = tuple(dec1) + tuple(Decay(d.upper, d.lower, d.rate, 1) for d in dec2)
    labels = tuple(a + b for a in TRIPOD_LEVELS for b in TRIPOD_LEVELS)
    return LevelScheme(labels, h0, probe, couplings, decays, TRIPOD_LEVELS, atoms=2,
                       delta=params.delta, controls=tuple(controls))
