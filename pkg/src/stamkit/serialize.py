"""JSON round-trip for gauge specifications and pulse sequences, plus atomic writes.

Matrices are stored as lists of nonzero ``[row, col, re, im]`` entries.
Floats go through ``repr`` (the json default), so reading a file back yields
bit-identical arrays.
"""
from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import InvalidArgument
from .protocol import GaugeSpec, Pulse, PulseSequence, Schedule

SPEC_FORMAT = "stamkit.gauge_spec/1"
SEQUENCE_FORMAT = "stamkit.pulse_sequence/1"


def matrix_entries(a: np.ndarray) -> list:
    a = np.asarray(a, dtype=np.complex128)
    rows, cols = np.nonzero(a)
    return [[int(r), int(c), float(a[r, c].real), float(a[r, c].imag)] for r, c in zip(rows, cols)]


def matrix_from_entries(entries: list, dim: int) -> np.ndarray:
    a = np.zeros((dim, dim), dtype=np.complex128)
    for r, c, re, im in entries:
        if not (0 <= r < dim and 0 <= c < dim):
            raise InvalidArgument(f"matrix entry ({r}, {c}) outside dim {dim}")
        a[r, c] = complex(re, im)
    return a


def schedule_to_dict(s: Schedule) -> dict:
    return {"N": s.N, "theta_N": s.theta_N, "spacing": s.spacing,
            "lambda_points": [float(x) for x in s.lambda_points],
            "theta_points": [float(x) for x in s.theta_points]}


def schedule_from_dict(d: dict) -> Schedule:
    return Schedule(int(d["N"]), float(d["theta_N"]), np.array(d["lambda_points"], dtype=float),
                    np.array(d["theta_points"], dtype=float), d.get("spacing", "equal"))


def spec_to_dict(spec: GaugeSpec, schedule: Schedule | None = None) -> dict:
    """Serializable form; path-dependent energies are tabulated on ``schedule``."""
    if callable(spec.energies):
        if schedule is None:
            raise InvalidArgument("energies given as a function need a schedule to be tabulated")
        spec = spec.tabulate(schedule)
    out = {
        "format": SPEC_FORMAT,
        "name": spec.name,
        "dim": spec.dim,
        "generator": matrix_entries(spec.generator),
        "initial_basis": matrix_entries(spec.initial_basis),
        "energies": spec.energies.tolist(),
        "connected_pairs": sorted([list(p) for p in spec.connected_pairs]),
        "detuning_op": None if spec.detuning_op is None else matrix_entries(spec.detuning_op),
        "n_qubits": spec.n_qubits,
        "meta": spec.meta,
    }
    if schedule is not None:
        out["schedule"] = schedule_to_dict(schedule)
    return out


def spec_from_dict(d: dict) -> tuple[GaugeSpec, Schedule | None]:
    if d.get("format") != SPEC_FORMAT:
        raise InvalidArgument(f"not a gauge spec document (format {d.get('format')!r})")
    dim = int(d["dim"])
    det = d.get("detuning_op")
    spec = GaugeSpec(matrix_from_entries(d["generator"], dim), matrix_from_entries(d["initial_basis"], dim),
                     np.array(d["energies"], dtype=float), frozenset(tuple(p) for p in d["connected_pairs"]),
                     d.get("name", "custom"), None if det is None else matrix_from_entries(det, dim),
                     d.get("n_qubits"), dict(d.get("meta", {})))
    sched = schedule_from_dict(d["schedule"]) if "schedule" in d else None
    return spec, sched


def sequence_to_dict(seq: PulseSequence, schedule: Schedule | None = None) -> dict:
    out = {
        "format": SEQUENCE_FORMAT,
        "model": seq.model,
        "dim": seq.dim,
        "connected_pairs": sorted([list(p) for p in seq.connected_pairs]),
        "n_qubits": seq.n_qubits,
        "detuning_op": None if seq.detuning_op is None else matrix_entries(seq.detuning_op),
        "pulses": [{"lambda": float(p.lam), "duration": float(p.duration),
                    "energies": [float(e) for e in p.energies],
                    "hamiltonian": matrix_entries(p.hamiltonian)} for p in seq.pulses],
    }
    if schedule is not None:
        out["schedule"] = schedule_to_dict(schedule)
    return out


def sequence_from_dict(d: dict) -> PulseSequence:
    if d.get("format") != SEQUENCE_FORMAT:
        raise InvalidArgument(f"not a pulse sequence document (format {d.get('format')!r})")
    dim = int(d["dim"])
    det = d.get("detuning_op")
    pulses = tuple(Pulse(float(p["lambda"]), matrix_from_entries(p["hamiltonian"], dim), float(p["duration"]),
                         np.array(p["energies"], dtype=float)) for p in d["pulses"])
    for p in pulses:
        if not p.duration > 0:
            raise InvalidArgument("pulse durations must be positive")
    return PulseSequence(pulses, frozenset(tuple(p) for p in d["connected_pairs"]), d.get("model", "custom"),
                         None if det is None else matrix_from_entries(det, dim), d.get("n_qubits"))


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=1, sort_keys=True, allow_nan=False) + "\n"


def write_atomic(path: str | os.PathLike, text: str) -> Path:
    """Write ``text`` to a sibling temp file and rename it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def save_json(path: str | os.PathLike, doc: dict) -> Path:
    return write_atomic(path, dumps(doc))


def load_json(path: str | os.PathLike) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
