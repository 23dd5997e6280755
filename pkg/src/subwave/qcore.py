"""Dense complex linear algebra and state utilities.

Operators, kets and density matrices are plain numpy arrays of complex128.
All energies are angular frequencies (rad/s); hbar is absorbed everywhere
except in :data:`HBAR`, which is used only to turn masses and trap
frequencies into lengths.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

HBAR = 1.054571817e-34  # J s

HERMITIAN_RTOL = 1e-12
NORM_ATOL = 1e-9
TRACE_ATOL = 1e-8
DM_HERMITIAN_ATOL = 1e-10
EIGEN_FLOOR = -1e-8


class DimensionError(ValueError):
    pass


def as_operator(a) -> np.ndarray:
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise DimensionError(f"operator must be square with dim >= 1, got shape {a.shape}")
    return a


def is_hermitian(h, rtol: float = HERMITIAN_RTOL) -> bool:
    h = as_operator(h)
    scale = np.max(np.abs(h))
    if scale == 0:
        return True
    return bool(np.max(np.abs(h - h.conj().T)) <= rtol * scale)


def ket(dim: int, index: int) -> np.ndarray:
    v = np.zeros(dim, dtype=np.complex128)
    v[index] = 1.0
    return v


def normalize(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=np.complex128)
    n = np.linalg.norm(psi)
    if n == 0:
        raise ValueError("cannot normalize the zero vector")
    return psi / n


def projector(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=np.complex128)
    return np.outer(psi, psi.conj())


def tensor(a, b) -> np.ndarray:
    """Kronecker product; index of (i_a, i_b) is ``i_a * dim_b + i_b``."""
    return np.kron(np.asarray(a, dtype=np.complex128), np.asarray(b, dtype=np.complex128))


def expectation(rho, obs) -> complex:
    """tr(rho @ obs)."""
    rho = as_operator(rho)
    obs = as_operator(obs)
    if rho.shape != obs.shape:
        raise DimensionError(f"dimension mismatch: state {rho.shape} vs observable {obs.shape}")
    return complex(np.einsum("ij,ji->", rho, obs))


def propagator_exact(h, dt: float) -> np.ndarray:
    """exp(-i h dt) by Pade scaling-and-squaring; h in rad/s."""
    h = as_operator(h)
    if not is_hermitian(h):
        raise ValueError("propagator_exact requires a Hermitian generator")
    return scipy.linalg.expm(-1j * dt * h)


def check_state(psi, atol: float = NORM_ATOL) -> np.ndarray:
    psi = np.asarray(psi, dtype=np.complex128)
    if psi.ndim != 1:
        raise DimensionError("state vector must be one-dimensional")
    if abs(np.linalg.norm(psi) - 1.0) >= atol:
        raise ValueError(f"state not normalized: |psi| = {np.linalg.norm(psi)!r}")
    return psi


def check_density_matrix(rho) -> np.ndarray:
    """Validate trace, hermiticity and the positivity floor; return rho."""
    rho = as_operator(rho)
    tr = np.trace(rho)
    if abs(tr - 1.0) >= TRACE_ATOL:
        raise ValueError(f"density matrix trace {tr!r} differs from 1")
    if np.max(np.abs(rho - rho.conj().T)) >= DM_HERMITIAN_ATOL:
        raise ValueError("density matrix is not Hermitian")
    lam = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    if lam[0] <= EIGEN_FLOOR:
        raise ValueError(f"density matrix has negative eigenvalue {lam[0]!r}")
    return rho


def min_eigenvalue(rho) -> float:
    rho = as_operator(rho)
    return float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0])


def trace_distance(rho, sigma) -> float:
    d = as_operator(rho) - as_operator(sigma)
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (d + d.conj().T)))))


def partial_trace(rho, dims, keep: int) -> np.ndarray:
    """Reduced density matrix of subsystem ``keep`` of a tensor product."""
    rho = as_operator(rho)
    dims = list(dims)
    n = len(dims)
    if int(np.prod(dims)) != rho.shape[0]:
        raise DimensionError(f"dims {dims} do not match operator of size {rho.shape[0]}")
    t = rho.reshape(dims + dims)
    letters = "abcdefghijklmnopqrstuvwxyz"
    row = list(letters[:n])
    col = list(letters[n:2 * n])
    for i in range(n):
        if i != keep:
            col[i] = row[i]
    spec = "".join(row) + "".join(col) + "->" + row[keep] + col[keep]
    return np.einsum(spec, t)


@dataclass(frozen=True)
class TimeGrid:
    t_start: float
    t_end: float
    n_steps: int

    def __post_init__(self):
        if not self.t_end > self.t_start:
            raise ValueError("t_end must exceed t_start")
        if self.n_steps < 2:
            raise ValueError("n_steps must be at least 2")

    def times(self) -> np.ndarray:
        return np.linspace(self.t_start, self.t_end, self.n_steps)
