"""Dormand-Prince 5(4) stepper for linear, piecewise-linearly driven
quantum equations of motion, compiled with numba.

The state obeys dy/ds = tau * L(s) y on dimensionless time s in [0, 1], where
the generator is built from H(s) = h0 + a(s) * probe_op with a(s) a
piecewise-linear probe envelope.  Schrodinger vectors and density matrices
(row-major flattened) share the same stepper.
"""

import numpy as np
import numba as nb

SCHRODINGER = 0
LINDBLAD = 1

OK = 0
STEP_UNDERFLOW = 1
TOO_MANY_STEPS = 2

# Dormand-Prince tableau (same coefficients as scipy's RK45)
_C2, _C3, _C4, _C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
_B1, _B3, _B4, _B5, _B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
_E1, _E3, _E4, _E5, _E6, _E7 = (
    -71 / 57600, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40)


@nb.njit(cache=True, nogil=True)
def _amp(s, knots, kvals):
    return np.interp(s, knots, kvals)


@nb.njit(cache=True, nogil=True)
def _rhs(s, y, out, h0, probe_op, knots, kvals, tau, kind, jumps, work):
    n = h0.shape[0]
    a = _amp(s, knots, kvals)
    # work holds -i * tau * H(s)
    for i in range(n):
        for j in range(n):
            work[i, j] = -1j * tau * (h0[i, j] + a * probe_op[i, j])
    if kind == SCHRODINGER:
        for i in range(n):
            acc = 0j
            for j in range(n):
                acc += work[i, j] * y[j]
            out[i] = acc
        return
    # rho' = A rho + rho A^dagger + tau * sum_k L rho L^dagger, A = -i tau H_eff
    for i in range(n):
        for j in range(n):
            acc = 0j
            for k in range(n):
                acc += work[i, k] * y[k * n + j] + y[i * n + k] * np.conj(work[j, k])
            out[i * n + j] = acc
    nj = jumps.shape[0]
    for q in range(nj):
        L = jumps[q]
        for i in range(n):
            for j in range(n):
                acc = 0j
                for k in range(n):
                    if L[i, k] == 0:
                        continue
                    for m in range(n):
                        if L[j, m] == 0:
                            continue
                        acc += L[i, k] * y[k * n + m] * np.conj(L[j, m])
                out[i * n + j] += tau * acc


@nb.njit(cache=True, nogil=True)
def integrate(y0, h0, probe_op, knots, kvals, tau, kind, jumps, stops, save,
              rtol, atol, max_steps):
    """Integrate from s = 0 through every entry of ``stops``.

    Returns (saved states, status, s at failure, accepted steps, rejected
    steps).  Rows of ``saved`` correspond to stops with ``save`` set.
    """
    n = h0.shape[0]
    size = y0.shape[0]
    n_save = 0
    for q in range(stops.shape[0]):
        if save[q]:
            n_save += 1
    saved = np.zeros((n_save, size), dtype=np.complex128)
    work = np.empty((n, n), dtype=np.complex128)
    y = y0.copy()
    ynew = np.empty(size, dtype=np.complex128)
    ytmp = np.empty(size, dtype=np.complex128)
    k1 = np.empty(size, dtype=np.complex128)
    k2 = np.empty(size, dtype=np.complex128)
    k3 = np.empty(size, dtype=np.complex128)
    k4 = np.empty(size, dtype=np.complex128)
    k5 = np.empty(size, dtype=np.complex128)
    k6 = np.empty(size, dtype=np.complex128)
    k7 = np.empty(size, dtype=np.complex128)

    s = 0.0
    _rhs(s, y, k1, h0, probe_op, knots, kvals, tau, kind, jumps, work)
    # initial step from the generator scale
    fnorm = 0.0
    for i in range(size):
        fnorm = max(fnorm, abs(k1[i]))
    scale0 = 0.0
    for i in range(n):
        for j in range(n):
            scale0 = max(scale0, abs(h0[i, j]) + abs(probe_op[i, j]) * np.max(np.abs(kvals)))
    h = 0.01 / max(tau * scale0, 1.0)
    accepted = 0
    rejected = 0
    isave = 0
    status = OK
    for q in range(stops.shape[0]):
        s_stop = stops[q]
        while s < s_stop:
            if accepted + rejected >= max_steps:
                return saved, TOO_MANY_STEPS, s, accepted, rejected
            last = False
            h_try = h
            if s + h >= s_stop:
                h = s_stop - s
                last = True
            if h < 1e-15 * max(1.0, abs(s)):
                return saved, STEP_UNDERFLOW, s, accepted, rejected
            for i in range(size):
                ytmp[i] = y[i] + h * _A21 * k1[i]
            _rhs(s + _C2 * h, ytmp, k2, h0, probe_op, knots, kvals, tau, kind, jumps, work)
            for i in range(size):
                ytmp[i] = y[i] + h * (_A31 * k1[i] + _A32 * k2[i])
            _rhs(s + _C3 * h, ytmp, k3, h0, probe_op, knots, kvals, tau, kind, jumps, work)
            for i in range(size):
                ytmp[i] = y[i] + h * (_A41 * k1[i] + _A42 * k2[i] + _A43 * k3[i])
            _rhs(s + _C4 * h, ytmp, k4, h0, probe_op, knots, kvals, tau, kind, jumps, work)
            for i in range(size):
                ytmp[i] = y[i] + h * (_A51 * k1[i] + _A52 * k2[i] + _A53 * k3[i] + _A54 * k4[i])
            _rhs(s + _C5 * h, ytmp, k5, h0, probe_op, knots, kvals, tau, kind, jumps, work)
            for i in range(size):
                ytmp[i] = y[i] + h * (_A61 * k1[i] + _A62 * k2[i] + _A63 * k3[i]
                                      + _A64 * k4[i] + _A65 * k5[i])
            s_new = s_stop if last else s + h
            _rhs(s_new, ytmp, k6, h0, probe_op, knots, kvals, tau, kind, jumps, work)
            for i in range(size):
                ynew[i] = y[i] + h * (_B1 * k1[i] + _B3 * k3[i] + _B4 * k4[i]
                                      + _B5 * k5[i] + _B6 * k6[i])
            _rhs(s_new, ynew, k7, h0, probe_op, knots, kvals, tau, kind, jumps, work)
            err = 0.0
            for i in range(size):
                e = h * (_E1 * k1[i] + _E3 * k3[i] + _E4 * k4[i] + _E5 * k5[i]
                         + _E6 * k6[i] + _E7 * k7[i])
                sc = atol + rtol * max(abs(y[i]), abs(ynew[i]))
                err += (abs(e) / sc) ** 2
            err = np.sqrt(err / size)
            if err <= 1.0:
                accepted += 1
                s = s_new
                for i in range(size):
                    y[i] = ynew[i]
                    k1[i] = k7[i]
                if err == 0.0:
                    fac = 10.0
                else:
                    fac = min(10.0, 0.9 * err ** -0.2)
                if last:
                    h = max(h * fac, h_try)
                else:
                    h = h * fac
            else:
                rejected += 1
                h = h * max(0.2, 0.9 * err ** -0.2)
        if save[q]:
            for i in range(size):
                saved[isave, i] = y[i]
            isave += 1
    return saved, status, s, accepted, rejected
