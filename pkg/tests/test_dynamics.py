import math

import numpy as np
import pytest

from subwave import dynamics
from subwave.dynamics import (CalibrationError, EvolutionProblem, GateSpec, IntegrationError,
                              TruncationError, calibrate, evolve, gate_error, motional_gate_error,
                              spectator_error, spectator_ladder_check, trajectory)
from subwave.fields import CONSTANT, RAMP, PulseShape
from subwave.lab import desk_params
from subwave.params import PlatformParams, TWO_PI
from subwave.qcore import (TimeGrid, ket, min_eigenvalue, projector, propagator_exact,
                           trace_distance)
from subwave.schemes import (LevelScheme, MotionalLadder, TRIPOD_LEVELS, build_tripod,
                             build_tripod_motional)

from conftest import random_hermitian

PLUS = np.array([1, 1, 0, 0]) / math.sqrt(2)


def custom_scheme(h0):
    return LevelScheme(TRIPOD_LEVELS, np.asarray(h0, dtype=complex), np.zeros((4, 4), complex),
                       (), (), TRIPOD_LEVELS, delta=1.0)


@pytest.fixture(scope="module")
def cal300():
    p = desk_params(300.0)
    prob = EvolutionProblem(build_tripod(p, control=0.0), PulseShape(RAMP, 1.0, 1.0))
    return p, calibrate(prob)


def test_zero_hamiltonian_is_identity(rng):
    psi = rng.normal(size=4) + 1j * rng.normal(size=4)
    psi /= np.linalg.norm(psi)
    out = evolve(EvolutionProblem(custom_scheme(np.zeros((4, 4))), PulseShape(CONSTANT, 2.0, 0.0)), psi)
    np.testing.assert_allclose(out, psi, atol=1e-12)


@pytest.mark.parametrize("method", ["dopri5", "scipy"])
def test_static_hamiltonian_matches_matrix_exponential(rng, method):
    h = 3 * random_hermitian(rng, 4)
    psi = rng.normal(size=4) + 1j * rng.normal(size=4)
    psi /= np.linalg.norm(psi)
    prob = EvolutionProblem(custom_scheme(h), PulseShape(CONSTANT, 1.3, 0.0), rtol=1e-11, atol=1e-13)
    out = evolve(prob, psi, method)
    np.testing.assert_allclose(out, propagator_exact(h, 1.3) @ psi, atol=1e-8)


def test_two_level_decay_closed_form():
    gamma, tau = 0.9, 1.7
    p = PlatformParams("ion", gamma=gamma, tau=tau, lambda_p=1, lambda_c=1, omega0=1, delta=0.0)
    sch = build_tripod(p, control=0.0)
    rho = evolve(EvolutionProblem(sch, PulseShape(CONSTANT, tau, 0.0), "lindblad"), ket(4, 3))
    assert rho[3, 3].real == pytest.approx(math.exp(-2 * gamma * tau), rel=1e-6)
    assert np.trace(rho).real == pytest.approx(1.0, abs=1e-8)


def test_dopri_and_scipy_routes_agree_on_lindblad():
    p = desk_params(40.0, gamma_tau=2.0)
    sch = build_tripod(p, control=15.0)
    prob = EvolutionProblem(sch, PulseShape(RAMP, 1.0, 30.0), "lindblad", TimeGrid(0, 1, 5))
    _, a = trajectory(prob, PLUS)
    _, b = trajectory(prob, PLUS, method="scipy")
    assert np.max(np.abs(a - b)) < 1e-7


def test_calibration_scaling_and_ideal_gate(cal300):
    p, pk = cal300
    pk2 = calibrate(EvolutionProblem(build_tripod(desk_params(600.0), control=0.0),
                                     PulseShape(RAMP, 1.0, 1.0)))
    assert pk2 / pk == pytest.approx(math.sqrt(2), rel=0.01)


def test_calibrated_ideal_gate():
    # far-detuned so that the ramp kinks leave no excitation behind
    p = desk_params(4e4)
    prob = EvolutionProblem(build_tripod(p, control=0.0), PulseShape(RAMP, 1.0, 1.0))
    pk = calibrate(prob)
    rep = gate_error(prob.with_peak(pk))
    assert rep.error < 1e-8
    assert abs(rep.phase - math.pi) < 1e-6


def test_calibration_without_bracket_fails():
    # the phase can never reach the target when the far-detuned estimate is wildly off
    sch = build_tripod(desk_params(1e-3), control=0.0)
    with pytest.raises(CalibrationError):
        calibrate(EvolutionProblem(sch, PulseShape(RAMP, 1.0, 1.0)), GateSpec(50 * math.pi))


@pytest.fixture(scope="module")
def ca_calibration():
    p = PlatformParams("ion", gamma=0.0, tau=1e-6, lambda_p=397e-9, lambda_c=866e-9,
                       delta=TWO_PI * 200e9)
    prob = EvolutionProblem(build_tripod(p, control=0.0), PulseShape(RAMP, 1e-6, 1.0), rtol=1e-8)
    return p, calibrate(prob)


def test_ca_calibration_follows_stark_scaling(ca_calibration):
    p, pk = ca_calibration
    # half-Rabi convention and triangular ramp: peak^2 tau / (12 delta) = pi
    assert pk == pytest.approx(math.sqrt(12 * math.pi * p.delta / p.tau), rel=1e-3)
    # the prefactor-free estimate omega ~ sqrt(delta / tau) lands at ~200 MHz
    assert 0.5 < math.sqrt(p.delta / p.tau) / TWO_PI / 200e6 < 2


@pytest.mark.xfail(strict=True, reason="half-Rabi convention puts the calibrated peak at "
                   "sqrt(12 pi delta / tau), about 1.1 GHz; see decisions ledger")
def test_ca_calibrated_peak_near_200_mhz(ca_calibration):
    _, pk = ca_calibration
    assert 0.5 < pk / TWO_PI / 200e6 < 2


def test_constant_probe_spoils_spectator(cal300):
    p, pk = cal300
    sch = build_tripod(p, control=10 * pk)
    ramped = gate_error(EvolutionProblem(sch, PulseShape(RAMP, 1.0, pk)), role="spectator").error
    sudden = gate_error(EvolutionProblem(sch, PulseShape(CONSTANT, 1.0, pk)), role="spectator").error
    assert sudden >= 10 * ramped


def test_unitary_norm_and_lindblad_agreement(cal300):
    p, pk = cal300
    sch = build_tripod(p, control=3 * pk)
    pulse = PulseShape(RAMP, 1.0, pk)
    grid = TimeGrid(0, 1, 41)
    _, psis = trajectory(EvolutionProblem(sch, pulse, grid=grid), PLUS)
    _, rhos = trajectory(EvolutionProblem(sch, pulse, "lindblad", grid), PLUS)
    assert np.max(np.abs(np.linalg.norm(psis, axis=1) - 1)) < 1e-8
    for psi, rho in zip(psis, rhos):
        assert trace_distance(projector(psi), rho) < 1e-7


def test_lindblad_trace_and_positivity(cal300):
    p, pk = cal300
    sch = build_tripod(desk_params(300.0, gamma_tau=5.0, gamma_r=1.0), control=2 * pk)
    prob = EvolutionProblem(sch, PulseShape(RAMP, 1.0, pk), "lindblad", TimeGrid(0, 1, 21))
    _, rhos = trajectory(prob, PLUS)
    for rho in rhos:
        assert abs(np.trace(rho) - 1) < 1e-8
        assert min_eigenvalue(rho) > -1e-8


def test_loss_only_norm_monotone(cal300):
    p, pk = cal300
    sch = build_tripod(desk_params(300.0, gamma_tau=5.0), control=0.0)
    prob = EvolutionProblem(sch, PulseShape(RAMP, 1.0, pk), "loss-only", TimeGrid(0, 1, 51))
    _, psis = trajectory(prob, PLUS)
    norms = np.linalg.norm(psis, axis=1)
    assert np.all(np.diff(norms) <= 1e-12)
    rep = gate_error(prob.with_(grid=None))
    assert rep.leaked_norm > 0
    assert rep.error >= rep.leaked_norm


def test_spectator_dark_state_protection(cal300):
    p, pk = cal300
    ratio = 10.0
    sch = build_tripod(p, control=ratio * pk)
    prob = EvolutionProblem(sch, PulseShape(RAMP, 1.0, pk), grid=TimeGrid(0, 1, 201))
    _, psis = trajectory(prob, PLUS)
    assert np.max(np.abs(psis[:, 2]) ** 2) <= 2 * ratio**-2


def test_halving_tolerance_changes_error_below_one_percent(cal300):
    p, pk = cal300
    sch = build_tripod(p, control=5 * pk)
    pulse = PulseShape(RAMP, 1.0, pk)
    a = gate_error(EvolutionProblem(sch, pulse), role="spectator").error
    b = gate_error(EvolutionProblem(sch, pulse, rtol=0.5e-9, atol=0.5e-12), role="spectator").error
    assert abs(a - b) / b < 0.01


def test_integration_failure_reports_time(monkeypatch, cal300):
    p, pk = cal300
    monkeypatch.setattr(dynamics, "MAX_STEPS", 20)
    with pytest.raises(IntegrationError) as exc:
        evolve(EvolutionProblem(build_tripod(p, control=0.0), PulseShape(RAMP, 1.0, pk)), PLUS)
    assert 0 < exc.value.time < 1


def test_reported_populations_in_range(cal300):
    p, pk = cal300
    rep = gate_error(EvolutionProblem(build_tripod(p, control=2 * pk), PulseShape(CONSTANT, 1.0, pk)),
                     role="spectator")
    for v in (rep.pop_bright, rep.pop_excited, rep.pop_r):
        assert -1e-12 <= v <= 1 + 1e-8
    assert 0 <= rep.error <= 1


def test_motional_without_gradient_equals_point_atom(cal300):
    p, pk = cal300
    pulse = PulseShape(RAMP, 1.0, pk)
    point = gate_error(EvolutionProblem(build_tripod(p, control=0.0), pulse)).error
    msch = build_tripod_motional(p, MotionalLadder(4, 0.5, 0.0), control=0.0)
    mot = motional_gate_error(EvolutionProblem(msch, pulse), regime="fast").error
    assert abs(mot - point) < 1e-8


def test_motional_truncation_check(cal300):
    p, pk = cal300
    pulse = PulseShape(RAMP, 1.0, pk)

    def rebuild(n):
        return build_tripod_motional(p, MotionalLadder(n, 0.5, 0.02 * pk), control=0.0)

    rep = motional_gate_error(EvolutionProblem(rebuild(8), pulse), regime="fast",
                              check_truncation=True, rebuild=rebuild)
    assert rep.error > 0

    def rebuild_strong(n):
        return build_tripod_motional(p, MotionalLadder(n, 0.5, 3.0 * pk), control=0.0)

    with pytest.raises(TruncationError):
        motional_gate_error(EvolutionProblem(rebuild_strong(3), pulse), regime="fast",
                            check_truncation=True, rebuild=rebuild_strong)


def test_spectator_average_single_run_matches_gate_error(cal300):
    p, pk = cal300
    pulse = PulseShape(RAMP, 1.0, pk)
    m, errs = spectator_error(lambda oc: build_tripod(p, control=oc), 6 * pk, pulse, 300.0, 1)
    direct = gate_error(EvolutionProblem(build_tripod(p, control=6 * pk), pulse), role="spectator").error
    assert m == errs[0] == direct


def test_ladder_check_zero_coupling(cal300):
    p, pk = cal300
    prob = EvolutionProblem(build_tripod(p, control=0.0), PulseShape(RAMP, 1.0, pk))
    assert spectator_ladder_check(0.0, 10 * pk, prob, None) == 0.0
