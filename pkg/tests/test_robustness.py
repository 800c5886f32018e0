import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import FROZEN, ou_area_variance
from stamkit import qla
from stamkit.dynamics import lambda_noise, propagate_unitary
from stamkit.errors import ChannelNotApplicable, InvalidArgument
from stamkit.models import KETE, BosonicModel, CoupledQubitModel, LambdaModel, embed, SIGMA
from stamkit.robustness import (
    ErrorChannel,
    ScanResult,
    amplitude_detuning_scan,
    apply_channel,
    apply_channels,
    coherent_fidelity,
    coupled_ramp_fidelity,
    coupled_sequence,
    coupled_stam_fidelity,
    dissipation_tradeoff_scan,
    drift_slices,
    lambda_delta_ladder,
    lambda_sequence,
    local_field_scan,
    ou_coefficients,
    pulse_area_statistics,
    ramp_time_scan,
    six_state_gate_fidelity,
    sweep,
    transfer_efficiency,
)

LAM = LambdaModel()


# ---------------------------------------------------------------- channel semantics


@pytest.mark.parametrize("kind", ["amplitude_relative", "detuning_additive", "phase_relative"])
def test_null_channel_returns_same_sequence(kind):
    seq = lambda_sequence(LAM, 2)
    assert apply_channel(seq, ErrorChannel(kind, 0.0)) is seq


def test_amplitude_scales_coupling_only():
    m = LambdaModel(0, 1, math.pi)
    seq = lambda_sequence(m, 1)
    out = apply_channel(seq, ErrorChannel("amplitude_relative", 0.1))
    h0, h1 = seq.pulses[0].hamiltonian, out.pulses[0].hamiltonian
    assert h1[KETE, KETE] == pytest.approx(h0[KETE, KETE])
    off = np.ones((3, 3), dtype=bool)
    off[KETE, KETE] = False
    assert np.allclose(h1[off], 1.1 * h0[off], atol=1e-14)


def test_detuning_adds_excited_projector():
    seq = lambda_sequence(LAM, 1)
    out = apply_channel(seq, ErrorChannel("detuning_additive", 0.2))
    diff = out.pulses[0].hamiltonian - seq.pulses[0].hamiltonian
    ref = np.zeros((3, 3))
    ref[KETE, KETE] = 0.2
    assert np.allclose(diff, ref, atol=1e-15)


def test_phase_error_stretches_durations():
    seq = lambda_sequence(LAM, 3)
    out = apply_channel(seq, ErrorChannel("phase_relative", 0.02))
    for a, b in zip(seq.pulses, out.pulses):
        assert b.duration == pytest.approx(1.02 * a.duration)
        assert np.array_equal(a.hamiltonian, b.hamiltonian)


def test_local_pauli_on_qubits():
    m = CoupledQubitModel()
    seq = coupled_sequence(m, 1)
    out = apply_channel(seq, ErrorChannel("local_pauli", 0.05, site=1, axis="z"))
    diff = out.pulses[0].hamiltonian - seq.pulses[0].hamiltonian
    assert np.allclose(diff, 0.05 * embed(SIGMA["z"], 1, 2))


def test_channels_not_applicable():
    with pytest.raises(ChannelNotApplicable):
        apply_channel(lambda_sequence(LAM, 1), ErrorChannel("local_pauli", 0.1))
    with pytest.raises(ChannelNotApplicable):
        apply_channel(coupled_sequence(CoupledQubitModel(), 1), ErrorChannel("local_pauli", 0.1, site=2))
    with pytest.raises(ChannelNotApplicable):
        pulse_area_statistics(ErrorChannel("amplitude_relative", 0.1), 1.0)


def test_channel_validation():
    with pytest.raises(InvalidArgument):
        ErrorChannel("gremlins", 0.1)
    with pytest.raises(InvalidArgument):
        ErrorChannel("amplitude_relative", math.nan)
    with pytest.raises(InvalidArgument):
        ErrorChannel("stochastic_drift", variance=-1.0)
    with pytest.raises(InvalidArgument):
        ErrorChannel("stochastic_drift", variance=1.0, correlation_time=0.0)
    with pytest.raises(InvalidArgument):
        ErrorChannel("local_pauli", 0.1, axis="w")


def test_channels_compose_in_order():
    seq = lambda_sequence(LAM, 2)
    chans = [ErrorChannel("amplitude_relative", 0.1), ErrorChannel("phase_relative", 0.03)]
    out = apply_channels(seq, chans)
    manual = apply_channel(apply_channel(seq, chans[0]), chans[1])
    for a, b in zip(out.pulses, manual.pulses):
        assert np.array_equal(a.hamiltonian, b.hamiltonian) and a.duration == b.duration


def test_drift_channel_slices_pulses():
    seq = lambda_sequence(LAM, 2)
    ch = ErrorChannel("stochastic_drift", variance=0.01, correlation_time=1.0, seed=4, samples_per_pulse=10)
    out = apply_channel(seq, ch)
    assert len(out.pulses) == 20
    assert sum(p.duration for p in out.pulses) == pytest.approx(seq.total_time)
    again = apply_channel(seq, ch)
    assert all(np.array_equal(a.hamiltonian, b.hamiltonian) for a, b in zip(out.pulses, again.pulses))
    psi = propagate_unitary(out, qla.basis_state(3, 0))
    assert abs(np.linalg.norm(psi) - 1) < 1e-12


def test_static_offset_equals_detuning_channel():
    seq = lambda_sequence(LAM, 1)
    drift = apply_channel(seq, ErrorChannel("stochastic_drift", offset=0.07, samples_per_pulse=5))
    det = apply_channel(seq, ErrorChannel("detuning_additive", 0.07))
    psi0 = qla.basis_state(3, 0)
    assert np.max(np.abs(propagate_unitary(drift, psi0) - propagate_unitary(det, psi0))) < 1e-12


# ---------------------------------------------------------------- merits


def test_zero_error_fixed_point():
    for N in (1, 2, 3, 4):
        assert transfer_efficiency(LAM, N) >= 1 - 1e-12
    assert coupled_stam_fidelity(CoupledQubitModel()) >= 1 - 1e-12
    f = six_state_gate_fidelity(LAM, 2, lambda_noise(0.0, 0.0))
    assert f >= 1 - 1e-10


def test_frozen_transfer_values():
    amp = [transfer_efficiency(LAM, N, [ErrorChannel("amplitude_relative", 0.1)]) for N in (1, 2, 3, 4)]
    assert np.allclose(amp, FROZEN["transfer_amp_0p1"], atol=1e-10)
    det = transfer_efficiency(LAM, 1, [ErrorChannel("detuning_additive", 0.1)])
    assert det == pytest.approx(FROZEN["transfer_det_0p1_N1"], abs=1e-10)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.0, 0.5), st.integers(1, 4))
def test_detuning_sign_symmetry(d, N):
    plus = transfer_efficiency(LAM, N, [ErrorChannel("detuning_additive", d)])
    minus = transfer_efficiency(LAM, N, [ErrorChannel("detuning_additive", -d)])
    assert abs(plus - minus) < 1e-10


@settings(max_examples=20, deadline=None)
@given(st.floats(-0.5, 0.5), st.floats(-0.5, 0.5), st.integers(1, 4))
def test_transfer_is_a_probability(a, d, N):
    f = transfer_efficiency(LAM, N, [ErrorChannel("amplitude_relative", a), ErrorChannel("detuning_additive", d)])
    assert -1e-12 <= f <= 1 + 1e-12


def test_decay_lowers_gate_merit():
    clean = six_state_gate_fidelity(LAM, 1, lambda_noise(0.0, 0.0))
    noisy = six_state_gate_fidelity(LAM, 1, lambda_noise(0.2, 0.01))
    assert noisy < clean - 1e-3 and 0 <= noisy <= 1


def test_coherent_merit():
    f, leak = coherent_fidelity(BosonicModel(40, 1.0, 1.0))
    assert f >= 1 - 1e-6 and leak < 1e-8


def test_stam_and_ramp_frozen():
    m = CoupledQubitModel()
    assert coupled_stam_fidelity(m, 1, [ErrorChannel("local_pauli", 0.05)]) == pytest.approx(
        FROZEN["stam_eps_0p05"], abs=1e-10)
    assert coupled_ramp_fidelity(m, 100.0, 0.05) == pytest.approx(FROZEN["ramp_ET100_eps_0p05"], abs=1e-6)
    assert coupled_ramp_fidelity(m, 50.0, 0.05) == pytest.approx(FROZEN["ramp_ET50_eps_0p05"], abs=1e-6)


# ---------------------------------------------------------------- pulse-area statistics


def test_area_statistics_degenerate_cases():
    assert pulse_area_statistics(ErrorChannel("stochastic_drift"), 2.0) == (0.0, 0.0)
    assert pulse_area_statistics(ErrorChannel("stochastic_drift", offset=0.3), 2.0) == (pytest.approx(0.6), 0.0)
    with pytest.raises(InvalidArgument):
        pulse_area_statistics(ErrorChannel("stochastic_drift", variance=1.0), 1.0, trials=10)


def test_area_mean_is_zero_within_three_standard_errors():
    ch = ErrorChannel("stochastic_drift", variance=0.5, correlation_time=0.3, seed=1)
    mean, var = pulse_area_statistics(ch, math.pi, trials=10_000)
    assert abs(mean) <= 3 * math.sqrt(var / 10_000)


@pytest.mark.parametrize("tau_c", [0.01, 0.3, 3.0])
def test_area_variance_matches_closed_form(tau_c):
    ch = ErrorChannel("stochastic_drift", variance=1.0, correlation_time=tau_c, seed=7)
    _, var = pulse_area_statistics(ch, math.pi, trials=20_000)
    assert var == pytest.approx(ou_area_variance(tau_c, 1.0, math.pi), rel=0.05)


def test_white_noise_limit_suppresses_area():
    tau_p = math.pi
    fast = pulse_area_statistics(ErrorChannel("stochastic_drift", variance=1.0, correlation_time=tau_p / 1000), tau_p)[1]
    slow = pulse_area_statistics(ErrorChannel("stochastic_drift", variance=1.0, correlation_time=tau_p), tau_p)[1]
    assert fast / slow <= 0.01


def test_area_variance_linear_in_correlation_time():
    tau_p = math.pi
    taus = np.linspace(0.002, 0.03, 8)
    var = [pulse_area_statistics(ErrorChannel("stochastic_drift", variance=1.0, correlation_time=t, seed=k), tau_p)[1]
           for k, t in enumerate(taus)]
    slope, icpt = np.polyfit(taus, var, 1)
    resid = np.array(var) - (slope * taus + icpt)
    r2 = 1 - resid.var() / np.var(var)
    assert r2 >= 0.95 and slope > 0


def test_ou_coefficients_limits():
    assert ou_coefficients(0.1, math.inf, 1.0) == (1.0, 0.1, 0.0, 0.0, 0.0)
    a, gain, l11, l21, l22 = ou_coefficients(1e-4, 1.0, 2.0)
    assert a == pytest.approx(math.exp(-1e-4)) and l22 >= 0
    # series and closed branches agree near the switch
    lo = ou_coefficients(0.0099999, 1.0, 1.0)
    hi = ou_coefficients(0.0100001, 1.0, 1.0)
    assert lo[4] == pytest.approx(hi[4], rel=1e-3)


def test_static_drift_is_constant_per_run():
    ch = ErrorChannel("stochastic_drift", variance=0.04, seed=2, samples_per_pulse=4)
    slices = drift_slices(ch, [1.0, 2.0], np.random.default_rng(0))
    vals = np.concatenate(slices)
    assert np.allclose(vals, vals[0])


# ---------------------------------------------------------------- sweeps


def test_sweep_shape_and_csv_header():
    res = sweep(LAM, "transfer", {"amplitude_relative": [0.0, 0.1], "detuning_additive": [0.0, 0.2, -0.2]}, (1, 2))
    assert res.values.shape == (2, 2, 3)
    lines = res.to_csv().splitlines()
    assert lines[0] == "amplitude_relative,detuning_additive,merit,model,N,seed"
    assert len(lines) == 1 + 12
    assert res.for_n(2)[1, 0] == pytest.approx(FROZEN["transfer_amp_0p1"][1], abs=1e-10)


def test_single_point_grid_equals_direct_call():
    res = sweep(LAM, "transfer", {"amplitude_relative": [0.1]}, (3,))
    assert res.values[0, 0] == transfer_efficiency(LAM, 3, [ErrorChannel("amplitude_relative", 0.1)])


def test_sweep_is_deterministic_and_worker_independent():
    axes = {"phase_relative": np.linspace(-0.1, 0.1, 5)}
    chans = [ErrorChannel("stochastic_drift", variance=0.01, correlation_time=1.0, samples_per_pulse=8)]
    a = sweep(LAM, "transfer", axes, (1, 2), seed=5, channels=chans)
    b = sweep(LAM, "transfer", axes, (1, 2), seed=5, channels=chans, workers=3)
    c = sweep(LAM, "transfer", axes, (1, 2), seed=6, channels=chans)
    assert a.to_csv() == b.to_csv()
    assert a.to_csv() != c.to_csv()


def test_sweep_validation():
    with pytest.raises(InvalidArgument):
        sweep(LAM, "speed", {"amplitude_relative": [0.0]})
    with pytest.raises(InvalidArgument):
        sweep(LAM, "transfer", {"colour": [0.0]})
    with pytest.raises(InvalidArgument):
        sweep(LAM, "transfer", {"amplitude_relative": []})
    with pytest.raises(InvalidArgument):
        sweep(LAM, "transfer", {})
    with pytest.raises(InvalidArgument):
        ScanResult({"a": np.zeros(2)}, np.zeros((1, 3)), (1,))


def test_delta_axis_sweep_uses_ladder_models():
    res = sweep(LAM, "gate", {"Delta_per_omega": [0.0, 2 / math.sqrt(3)]}, noise_rates={"gamma_e_per_omega": 0.1})
    assert np.all((0 <= res.values) & (res.values <= 1))


def test_delta_ladder():
    ks = lambda_delta_ladder(5.0)
    assert ks[0] == 0
    ratios = [2 * k / math.sqrt(2 * k + 1) for k in ks]
    assert ratios[-1] <= 5.0 and 2 * (ks[-1] + 1) / math.sqrt(2 * ks[-1] + 3) > 5.0


def test_amplitude_detuning_scan_ordering_at_small_errors():
    grid = np.linspace(-0.15, 0.15, 7)
    res = amplitude_detuning_scan(grid, (1, 4))
    assert np.all(res.for_n(4) >= res.for_n(1) - 1e-12)


def test_dissipation_tradeoff_interior_maximum():
    res = dissipation_tradeoff_scan()
    on = res.values[0, 0]
    assert on[0] == pytest.approx(FROZEN["gate_merit_delta0_both"], abs=1e-10)
    k = int(np.argmax(on))
    assert 0 < k < len(on) - 1
    assert on[k] == pytest.approx(FROZEN["gate_merit_peak_both"], abs=1e-7)


def test_ramp_time_scan_rows():
    rows = ramp_time_scan(np.array([10.0, 100.0]), 0.0)
    assert [r[0] for r in rows] == ["ramp", "ramp", "stam"]
    assert rows[-1][1] == pytest.approx(math.pi / 2)
    assert rows[-1][3] >= 1 - 1e-9
    assert rows[1][3] > rows[0][3]


def test_local_field_scan_contrast():
    rows = local_field_scan(np.array([0.0, 0.05]))
    assert rows[0][2] >= 1 - 1e-9
    assert rows[1][2] >= 0.99 and rows[1][1] <= 0.6
