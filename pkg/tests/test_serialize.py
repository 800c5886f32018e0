import json
import math
import os

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from stamkit.dynamics import propagator_of
from stamkit.errors import InvalidArgument
from stamkit.models import BosonicModel, CoupledQubitModel, LambdaModel, build_bosonic, build_coupled_qubits, build_lambda
from stamkit.protocol import compile_sequence, make_schedule
from stamkit.serialize import (
    dumps,
    load_json,
    matrix_entries,
    matrix_from_entries,
    save_json,
    sequence_from_dict,
    sequence_to_dict,
    spec_from_dict,
    spec_to_dict,
    write_atomic,
)


def roundtrip(doc):
    return json.loads(dumps(doc))


complex_mats = arrays(np.complex128, (4, 4), elements=st.complex_numbers(max_magnitude=1e6, allow_nan=False,
                                                                        allow_infinity=False))


@settings(max_examples=50, deadline=None)
@given(complex_mats)
def test_matrix_entries_lossless(a):
    b = matrix_from_entries(roundtrip({"m": matrix_entries(a)})["m"], 4)
    assert np.array_equal(a, b)


def test_matrix_entry_out_of_range():
    with pytest.raises(InvalidArgument):
        matrix_from_entries([[3, 0, 1.0, 0.0]], 3)


def test_lambda_spec_roundtrip():
    spec = build_lambda(LambdaModel(1, 2, 2.5, 0.3))
    back, sched = spec_from_dict(roundtrip(spec_to_dict(spec)))
    assert sched is None
    assert np.array_equal(back.generator, spec.generator)
    assert np.array_equal(back.initial_basis, spec.initial_basis)
    assert np.array_equal(back.energies, spec.energies)
    assert np.array_equal(back.detuning_op, spec.detuning_op)
    assert back.connected_pairs == spec.connected_pairs and back.name == spec.name


def test_callable_energies_need_schedule():
    spec = build_coupled_qubits(CoupledQubitModel(1.3))
    with pytest.raises(InvalidArgument):
        spec_to_dict(spec)
    sched = make_schedule(3, math.pi / 4)
    back, s2 = spec_from_dict(roundtrip(spec_to_dict(spec, sched)))
    assert np.array_equal(s2.lambda_points, sched.lambda_points)
    a = propagator_of(compile_sequence(spec, sched))
    b = propagator_of(compile_sequence(back, s2))
    assert np.array_equal(a, b)
    assert back.n_qubits == 2


@pytest.mark.parametrize("spec,theta", [
    (build_lambda(LambdaModel(0, 1, math.pi, 0.4)), math.pi / 3),
    (build_bosonic(BosonicModel(30, 1.0, 0.5)), 1.0),
    (build_coupled_qubits(CoupledQubitModel()), math.pi / 4),
])
def test_sequence_roundtrip_is_bit_exact(spec, theta):
    sched = make_schedule(3, theta)
    seq = compile_sequence(spec, sched)
    doc = roundtrip(sequence_to_dict(seq, sched))
    back = sequence_from_dict(doc)
    assert len(back) == len(seq) and back.model == seq.model
    for p, q in zip(seq.pulses, back.pulses):
        assert p.lam == q.lam and p.duration == q.duration
        assert np.array_equal(p.hamiltonian, q.hamiltonian) and np.array_equal(p.energies, q.energies)
    assert np.array_equal(propagator_of(seq), propagator_of(back))
    assert dumps(sequence_to_dict(back, sched)) == dumps(sequence_to_dict(seq, sched))


def test_wrong_format_rejected():
    with pytest.raises(InvalidArgument):
        spec_from_dict({"format": "other"})
    with pytest.raises(InvalidArgument):
        sequence_from_dict({"format": "stamkit.gauge_spec/1"})


def test_nonpositive_duration_rejected():
    seq = compile_sequence(build_lambda(LambdaModel()), make_schedule(1, math.pi / 2))
    doc = roundtrip(sequence_to_dict(seq))
    doc["pulses"][0]["duration"] = 0.0
    with pytest.raises(InvalidArgument):
        sequence_from_dict(doc)


def test_dumps_rejects_nan_and_is_sorted():
    with pytest.raises(ValueError):
        dumps({"x": math.nan})
    assert dumps({"b": 1, "a": 2}).index('"a"') < dumps({"b": 1, "a": 2}).index('"b"')


def test_atomic_write_and_load(tmp_path):
    target = tmp_path / "sub" / "doc.json"
    save_json(target, {"k": [1, 2.5]})
    assert load_json(target) == {"k": [1, 2.5]}
    write_atomic(target, "replaced\n")
    assert target.read_text() == "replaced\n"
    assert [f for f in os.listdir(target.parent) if f.endswith(".tmp")] == []


def test_atomic_write_leaves_old_file_on_failure(tmp_path):
    target = tmp_path / "doc.txt"
    write_atomic(target, "old")

    with pytest.raises(TypeError):
        write_atomic(target, 123)  # not a str
    assert target.read_text() == "old"
    assert [f for f in os.listdir(tmp_path) if f.endswith(".tmp")] == []
