import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from subwave.dynamics import EvolutionProblem, calibrate, evolve, gate_error, qubit_phase, trajectory
from subwave.fields import CONSTANT, RAMP, PulseShape
from subwave.lab import desk_params
from subwave.qcore import TimeGrid, is_hermitian, ket, tensor
from subwave.schemes import (MotionalLadder, TwoAtomCoupling, build_lambda, build_tripod,
                             build_tripod_motional, build_two_atom, dark_bright_basis, dark_state,
                             exchange_hamiltonian)


def test_dark_state_examples():
    np.testing.assert_allclose(dark_state(1, 0), [0, -1])
    np.testing.assert_allclose(dark_state(0, 1), [1, 0])
    np.testing.assert_allclose(dark_state(1, 1), np.array([1, -1]) / math.sqrt(2))
    with pytest.raises(ValueError):
        dark_state(0, 0)


@settings(max_examples=50, deadline=None)
@given(st.floats(1e-3, 1e3), st.floats(1e-3, 1e3), st.floats(-1e3, 1e3))
def test_dark_state_annihilated_by_lambda_drive(om, oc, delta):
    sch = build_lambda(desk_params(delta or 1.0), control=oc)
    drive = sch.hamiltonian(om) - np.diag(np.diag(sch.h0))
    v = np.zeros(3, dtype=complex)
    v[[0, 1]] = dark_state(om, oc)
    pe = sch.level_projector("e")
    assert np.linalg.norm(pe @ drive @ v) < 1e-12 * np.linalg.norm(drive)


def test_dark_bright_examples():
    D, B, ds, d = dark_bright_basis(4, 3, 5)
    assert ds == pytest.approx(5) and d == 5
    assert abs(np.vdot(D, B)) < 1e-15
    D, B, _, _ = dark_bright_basis(0, 2, 1)
    np.testing.assert_allclose(D, [1, 0])
    np.testing.assert_allclose(B, [0, 1])
    with pytest.raises(ValueError):
        dark_bright_basis(0, 0, 1)
    with pytest.raises(ValueError):
        dark_bright_basis(1, 1, 0)


@settings(max_examples=50, deadline=None)
@given(st.floats(1e-3, 1e4), st.floats(1e-3, 1e4), st.floats(1.0, 1e5))
def test_dark_state_decoupled_in_tripod(om, oc, delta):
    D, B, _, _ = dark_bright_basis(om, oc, delta)
    assert abs(np.vdot(D, B)) < 1e-15
    assert abs(np.linalg.norm(D) - 1) < 1e-15 and abs(np.linalg.norm(B) - 1) < 1e-15
    sch = build_tripod(desk_params(delta), control=oc)
    H = sch.hamiltonian(om)
    v = np.zeros(4, dtype=complex)
    v[1], v[2] = D
    assert abs(H[3] @ v) < 1e-12 * np.max(np.abs(H))


def test_lambda_rabi_period():
    om = 7.0
    sch = build_lambda(desk_params(0.0 + 1e-300), control=0.0)
    period = 2 * math.pi / om
    pulse = PulseShape(CONSTANT, period, om)
    psi = evolve(EvolutionProblem(sch, pulse), ket(3, 0))
    assert abs(abs(psi[0]) - 1) < 1e-8
    half = evolve(EvolutionProblem(sch, PulseShape(CONSTANT, period / 2, om)), ket(3, 0))
    assert abs(half[2]) ** 2 > 1 - 1e-8


def test_lambda_dark_state_stationary():
    om, oc = 3.0, 5.0
    sch = build_lambda(desk_params(2.0), control=oc)
    psi0 = np.zeros(3, dtype=complex)
    psi0[[0, 1]] = dark_state(om, oc)
    prob = EvolutionProblem(sch, PulseShape(CONSTANT, 10.0, om), grid=TimeGrid(0, 10.0, 101))
    _, states = trajectory(prob, psi0)
    assert np.max(np.abs(states[:, 2]) ** 2) < 1e-10


def test_lambda_strong_control_limits_excitation():
    om, oc = 1.0, 20.0
    sch = build_lambda(desk_params(0.5), control=oc)
    prob = EvolutionProblem(sch, PulseShape(CONSTANT, 20.0, om), grid=TimeGrid(0, 20.0, 2001))
    _, states = trajectory(prob, ket(3, 0))
    # the bright admixture (om/oc)^2 is the most that can reach |e>
    assert np.max(np.abs(states[:, 2]) ** 2) <= 1.01 * (om / oc) ** 2


def test_tripod_structure_and_decay():
    sch = build_tripod(desk_params(10.0, gamma_tau=0.7), control=2.0)
    assert sch.labels == ("0", "1", "r", "e")
    assert sch.decay_out_of("e") == pytest.approx(2 * 0.7)
    assert sch.h0[3, 2] == 1.0 and sch.probe[3, 1] == 0.5
    assert np.all(sch.h0[0] == 0) and np.all(sch.probe[0] == 0)
    lat = build_tripod(desk_params(10.0, gamma_tau=0.7, gamma_r=0.2), control=1.0)
    assert lat.decay_out_of("r") == pytest.approx(0.4)


def test_tripod_stark_phase_matches_adiabatic_integral():
    delta, peak = 400.0, 60.0
    sch = build_tripod(desk_params(delta), control=0.0)
    pulse = PulseShape(RAMP, 1.0, peak)
    psi = evolve(EvolutionProblem(sch, pulse), np.array([1, 1, 0, 0]) / math.sqrt(2))
    # adiabatic two-level light shift integrated numerically
    want = quad(lambda t: (math.hypot(delta, peak * (1 - abs(2 * t - 1))) - delta) / 2, 0, 1,
                points=[0.5], epsrel=1e-12)[0]
    assert qubit_phase(sch, psi) == pytest.approx(want, rel=2e-3)


def test_tripod_calibrated_to_pi():
    sch = build_tripod(desk_params(300.0), control=0.0)
    prob = EvolutionProblem(sch, PulseShape(RAMP, 1.0, 1.0))
    pk = calibrate(prob)
    psi = evolve(prob.with_peak(pk), np.array([1, 1, 0, 0]) / math.sqrt(2))
    assert abs(qubit_phase(sch, psi) - math.pi) < 1e-6


def test_tripod_uncoupled_zero_and_identity():
    sch = build_tripod(desk_params(50.0), control=3.0)
    psi = evolve(EvolutionProblem(sch, PulseShape(RAMP, 1.0, 40.0)), ket(4, 0))
    assert abs(abs(psi[0]) - 1) < 1e-10
    sch0 = build_tripod(desk_params(50.0), control=0.0)
    for i in range(3):
        out = evolve(EvolutionProblem(sch0, PulseShape(RAMP, 1.0, 0.0)), ket(4, i))
        np.testing.assert_allclose(out, ket(4, i), atol=1e-12)


def test_motional_decoupled_ladder_matches_tripod():
    p = desk_params(80.0)
    msch = build_tripod_motional(p, MotionalLadder(4, 0.7, 0.0), control=3.0)
    sch = build_tripod(p, control=3.0)
    pulse = PulseShape(RAMP, 1.0, 25.0)
    psi_m = evolve(EvolutionProblem(msch, pulse), msch.embed([np.array([1, 1]) / math.sqrt(2)]))
    psi = evolve(EvolutionProblem(sch, pulse), np.array([1, 1, 0, 0]) / math.sqrt(2))
    n0 = psi_m.reshape(4, 4)[:, 0] * np.exp(1j * 0.7 * 0.5)  # remove zero-point phase
    np.testing.assert_allclose(n0, psi, atol=1e-8)
    # block diagonal in n
    h = msch.h0.reshape(4, 4, 4, 4)
    for n in range(4):
        for m in range(4):
            if n != m:
                assert np.all(h[:, n, :, m] == 0)


def test_motional_ladder_matrix_element():
    msch = build_tripod_motional(desk_params(5.0), MotionalLadder(5, 1.0, 0.3), control=0.0)
    assert msch.h0[msch.index("e,0"), msch.index("r,1")] == pytest.approx(0.15)
    assert msch.h0[msch.index("e,2"), msch.index("r,1")] == pytest.approx(0.15 * math.sqrt(2))
    assert msch.h0[msch.index("e,1"), msch.index("r,1")] == 0
    with pytest.raises(ValueError):
        MotionalLadder(2, 1.0, 0.1)


def test_two_atom_factorizes_without_exchange():
    p = desk_params(60.0, gamma_tau=0.2)
    two = build_two_atom(p, TwoAtomCoupling.from_g(0.0), controls=(0.0, 4.0))
    a = build_tripod(p, control=0.0)
    b = build_tripod(p, control=4.0)
    want = tensor(a.h0, np.eye(4)) + tensor(np.eye(4), b.h0)
    assert np.max(np.abs(two.h0 - want)) < 1e-12
    assert np.max(np.abs(two.probe - (tensor(a.probe, np.eye(4)) + tensor(np.eye(4), a.probe)))) < 1e-12


def test_two_atom_error_is_sum_without_exchange():
    p = desk_params(300.0)
    pulse = PulseShape(RAMP, 1.0, calibrate(EvolutionProblem(build_tripod(p, control=0.0),
                                                            PulseShape(RAMP, 1.0, 1.0))))
    e1 = gate_error(EvolutionProblem(build_tripod(p, control=0.0), pulse), role="addressed").error
    e2 = gate_error(EvolutionProblem(build_tripod(p, control=0.8 * pulse.peak), pulse),
                    role="spectator").error
    two = build_two_atom(p, TwoAtomCoupling.from_g(0.0), controls=(0.0, 0.8 * pulse.peak))
    e12 = gate_error(EvolutionProblem(two, pulse)).error
    assert e2 > 1e-4
    assert abs(e12 - (e1 + e2)) < 1e-6


def test_exchange_hamiltonian_entries():
    cpl = TwoAtomCoupling.from_g(2.0, (0.5, 1.5))
    h = exchange_hamiltonian(cpl)
    labels = [a + b for a in "01re" for b in "01re"]
    assert is_hermitian(h)
    assert h[labels.index("e0"), labels.index("0e")] == -1.0
    assert h[labels.index("1e"), labels.index("e1")] == -3.0
    assert np.count_nonzero(h) == 4


def test_two_atom_coupling_from_geometry():
    c = TwoAtomCoupling.from_geometry(3.0, 2.0, 0.5, (1.0, 0.5))
    assert c.g == 3.0 and c.g0 == 3.0 and c.g1 == 1.5
    with pytest.raises(ValueError):
        TwoAtomCoupling.from_geometry(3.0, 2.0, 0.0)


@settings(max_examples=30, deadline=None)
@given(st.floats(-1e4, 1e4), st.floats(0, 1e4), st.floats(0, 1e4), st.floats(0, 1e3),
       st.floats(0, 1e3), st.floats(0.1, 10))
def test_every_scheme_hamiltonian_hermitian(delta, om, oc, g, gamma, w):
    p = desk_params(delta, gamma_tau=gamma)
    for sch in (build_lambda(p, control=oc), build_tripod(p, control=oc),
                build_tripod_motional(p, MotionalLadder(3, w, oc / 10), control=oc),
                build_two_atom(p, TwoAtomCoupling.from_g(g), controls=(0.0, oc))):
        assert is_hermitian(sch.hamiltonian(om))
        assert sch.decay_out_of("e") == pytest.approx(2 * gamma)
