import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import SX, coherent_amplitudes, equal_up_to_phase, gate_on_qubit, qubit_h0_h1
from stamkit import qla
from stamkit.diagnostics import checkpoint_fidelities
from stamkit.dynamics import propagate_unitary, propagator_of
from stamkit.errors import InconsistentAngles, InvalidArgument, InvalidTruncation, SingularPoint
from stamkit.models import (
    KET0,
    KET1,
    KETE,
    PSI_PLUS,
    BosonicModel,
    CoupledQubitModel,
    LambdaModel,
    bosonic_hamiltonian,
    build_bosonic,
    build_coupled_qubits,
    build_lambda,
    coherent_state,
    coupled_raw_hamiltonian,
    embed,
    leakage,
    parity_op,
    product_state,
)
from stamkit.protocol import compile_sequence, eigenstate_at, hamiltonian_at, make_schedule

# ---------------------------------------------------------------- bosonic


def test_bosonic_couplings():
    gm = build_bosonic(BosonicModel(40, 1.0, 1.0)).gauge_matrix()
    assert abs(gm[1, 0]) == pytest.approx(1.0)
    assert abs(gm[2, 1]) == pytest.approx(math.sqrt(2))


def test_bosonic_zero_displacement_has_no_couplings():
    spec = build_bosonic(BosonicModel(10, 1.0, 0.0))
    assert spec.connected_pairs == frozenset() and not np.any(spec.generator)


def test_bosonic_truncation_checks():
    with pytest.warns(RuntimeWarning):
        BosonicModel(10, 1.0, 1.0)
    with pytest.raises(InvalidTruncation), warnings.catch_warnings():
        warnings.simplefilter("ignore")
        build_bosonic(BosonicModel(3, 1.0, 0.1))


def test_bosonic_ladder_pairs():
    spec = build_bosonic(BosonicModel(12, 1.0, 0.5))
    assert spec.connected_pairs == frozenset((n, n + 1) for n in range(11))
    assert np.allclose(spec.energies, np.arange(12))


def test_coherent_state_matches_series():
    for alpha in (1.0, 0.4 - 0.9j, 0.0):
        assert np.max(np.abs(coherent_state(alpha, 30) - coherent_amplitudes(alpha, 30))) < 1e-14


def test_compiled_coherent_preparation():
    m = BosonicModel(40, 1.0, 1.0)
    seq = compile_sequence(build_bosonic(m), make_schedule(1, 1.0))
    assert seq.pulses[0].lam == 0.5 and seq.pulses[0].duration == pytest.approx(math.pi)
    psi = propagate_unitary(seq, qla.basis_state(40, 0))
    assert qla.state_fidelity(coherent_amplitudes(1.0, 40), psi) >= 1 - 1e-6
    assert leakage(psi) < 1e-8


def test_bosonic_closed_form_helper():
    m = BosonicModel(30, 0.8, 0.6j)
    spec = build_bosonic(m)
    assert np.max(np.abs(hamiltonian_at(spec, 0.4) - bosonic_hamiltonian(m, 0.4))[:15, :15]) < 1e-10


# ---------------------------------------------------------------- Lambda system


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 20), st.integers(0, 20), st.floats(0.1, 20.0))
def test_lambda_invariants(k2, k3, t_p):
    m = LambdaModel(k2, k3, t_p)
    assert m.E2 == pytest.approx(-(2 * k2 + 1) * math.pi / t_p, rel=1e-12)
    assert m.E3 == pytest.approx((2 * k3 + 1) * math.pi / t_p, rel=1e-12)
    assert m.Delta == pytest.approx(m.E2 + m.E3, abs=1e-12 * abs(m.E3))
    assert m.Omega == pytest.approx(math.sqrt(-m.E2 * m.E3), rel=1e-12)
    xi = m.mixing_angle
    assert abs((m.E3 - m.E2) * math.cos(2 * xi) - (m.E3 + m.E2)) < 1e-12 * (m.E3 - m.E2)


def test_lambda_resonant_example():
    m = LambdaModel(0, 0, math.pi)
    assert m.Delta == pytest.approx(0.0, abs=1e-12) and m.Omega == pytest.approx(1.0)


def test_lambda_intermediate_example():
    m = LambdaModel(0, 1, math.pi)
    assert m.Delta == pytest.approx(2.0) and m.Omega == pytest.approx(math.sqrt(3))


def test_lambda_envelope_at_zero():
    m = LambdaModel(0, 1, math.pi)
    s, p = m.envelopes(0.0)
    assert s == pytest.approx(2 * m.Omega) and p == 0.0


def test_lambda_inconsistent_angle():
    with pytest.raises(InconsistentAngles):
        build_lambda(LambdaModel(0, 1, math.pi, xi=0.2))
    m = LambdaModel(0, 1, math.pi)
    build_lambda(LambdaModel(0, 1, math.pi, xi=m.mixing_angle))


def test_lambda_model_rejects_bad_inputs():
    with pytest.raises(InvalidArgument):
        LambdaModel(-1, 0)
    with pytest.raises(InvalidArgument):
        LambdaModel(0, 0, 0.0)


def test_lambda_from_omega_delta():
    m, mismatch = LambdaModel.from_omega_delta(math.sqrt(3), 2.0)
    assert (m.k2, m.k3) == (0, 1) and mismatch < 1e-12
    assert m.Omega == pytest.approx(math.sqrt(3)) and m.Delta == pytest.approx(2.0)
    m, mismatch = LambdaModel.from_omega_delta(1.0, 0.0)
    assert (m.k2, m.k3) == (0, 0) and m.t_p == pytest.approx(math.pi)


def test_lambda_energies_and_detuning_operator():
    m = LambdaModel(0, 1, math.pi)
    spec = build_lambda(m)
    assert spec.energies[0] == 0.0
    assert spec.detuning_op[KETE, KETE] == 1 and np.count_nonzero(spec.detuning_op) == 1


def test_lambda_no_direct_qubit_coupling():
    spec = build_lambda(LambdaModel(0, 2, 2.0, 0.7))
    for lam in np.linspace(0, math.pi, 100):
        assert abs(hamiltonian_at(spec, lam)[KET0, KET1]) < 1e-10


def test_target_gate_examples():
    from stamkit.models import lambda_target_gate
    assert np.allclose(lambda_target_gate(1, math.pi / 2, 0.0), [[0, -1], [-1, 0]], atol=1e-15)
    assert np.allclose(lambda_target_gate(2, 0.0), np.eye(2))
    r = math.sqrt(2) / 2
    assert np.allclose(lambda_target_gate(2, math.pi / 4, 0.0), [[r, r], [-r, r]])
    for args in [(3, 0.4, 0.2), (4, 1.1, -0.6)]:
        assert np.allclose(lambda_target_gate(*args), gate_on_qubit(*args))


@pytest.mark.parametrize("N", [1, 2, 3, 4])
@pytest.mark.parametrize("theta", [math.pi / 6, math.pi / 4, math.pi / 2])
@pytest.mark.parametrize("phi", [0.0, math.pi / 3])
def test_lambda_gate_equality(N, theta, phi):
    from stamkit.models import lambda_target_gate
    for k3 in (0, 1):
        seq = compile_sequence(build_lambda(LambdaModel(0, k3, math.pi, phi)), make_schedule(N, theta))
        u = propagator_of(seq)
        sub = u[np.ix_([KET1, KET0], [KET1, KET0])]
        assert equal_up_to_phase(sub, lambda_target_gate(N, theta, phi)) < 1e-9
        assert abs(abs(u[KETE, KETE]) - 1) < 1e-9


def test_lambda_transfer_example():
    seq = compile_sequence(build_lambda(LambdaModel()), make_schedule(1, math.pi / 2))
    psi = propagate_unitary(seq, qla.basis_state(3, KET1))
    assert np.max(np.abs(psi - np.array([0, -1, 0]))) < 1e-9


# ---------------------------------------------------------------- coupled qubits


def test_qubit_path_endpoints():
    spec = build_coupled_qubits(CoupledQubitModel(1.0))
    assert np.array_equal(eigenstate_at(spec, 0.0, 0), product_state("11"))
    assert equal_up_to_phase(eigenstate_at(spec, math.pi / 4, 0), PSI_PLUS) < 1e-10


def test_qubit_midpoint_hamiltonian():
    spec = build_coupled_qubits(CoupledQubitModel(1.0))
    h0, h1 = qubit_h0_h1(1.0)
    assert np.max(np.abs(hamiltonian_at(spec, math.pi / 8) - (h0 + h1) / math.sqrt(2))) < 1e-10


def test_qubit_energies():
    spec = build_coupled_qubits(CoupledQubitModel(2.0))
    lam = 0.3
    assert np.allclose(spec.energies_at(0, lam), [2, -2, 2 * math.sin(0.6), -2 * math.sin(0.6)])


def test_parity_symmetry_and_its_breaking():
    m = CoupledQubitModel(1.0)
    p = parity_op()
    for lam in np.linspace(0, math.pi / 2, 25):
        h = coupled_raw_hamiltonian(m, lam)
        assert np.max(np.abs(h @ p - p @ h)) < 1e-12
    h = coupled_raw_hamiltonian(m, 0.3) + 0.05 * embed(SX, 0, 2)
    assert np.max(np.abs(h @ p - p @ h)) > 1e-3


def test_cot_variant():
    m = CoupledQubitModel(1.0, interpolation="cot")
    with pytest.raises(SingularPoint):
        coupled_raw_hamiltonian(m, 0.0)
    spec = build_coupled_qubits(m)
    with pytest.raises(SingularPoint):
        hamiltonian_at(spec, 0.0)
    lam = 0.3
    assert np.max(np.abs(hamiltonian_at(spec, lam) - coupled_raw_hamiltonian(m, lam))) < 1e-10
    seq = compile_sequence(spec, make_schedule(2, math.pi / 4))
    assert checkpoint_fidelities(seq, spec).min() >= 1 - 1e-10


def test_qubit_model_validation():
    with pytest.raises(InvalidArgument):
        CoupledQubitModel(1.0, interpolation="spline")
    with pytest.raises(InvalidArgument):
        CoupledQubitModel(0.0)


def test_qubit_mixing_angles_keep_checkpoints():
    spec = build_coupled_qubits(CoupledQubitModel(1.0, beta_mix=0.3, xi_mix=0.8))
    seq = compile_sequence(spec, make_schedule(3, math.pi / 4))
    assert checkpoint_fidelities(seq, spec).min() >= 1 - 1e-10
