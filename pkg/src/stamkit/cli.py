"""Command-line front end.

``stamkit <command> [--config FILE] [--seed N] [--out DIR] [--grid-scale X]``

Every run writes ``manifest.json`` into the output directory, including runs
that fail. CSV and JSON artifacts are written atomically.
Exit status: 0 when all checks pass, 2 for configuration errors, 3 when a
numerical check fails, 4 for I/O errors.
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
import time
from dataclasses import dataclass, field
from importlib import metadata
from pathlib import Path

import numpy as np

from . import diagnostics, dynamics, qla, robustness
from .config import FIGURES, RunConfig, config_from_dict, dump_config, load_config
from .errors import (
    ChannelNotApplicable,
    ConfigError,
    ConvergenceNotReached,
    IncommensurateEnergies,
    InconsistentAngles,
    InconsistentPairs,
    InvalidArgument,
    InvalidTruncation,
    MissingEnergy,
    NonFinite,
    NonPhysicalState,
    NotBipartite,
    NumericalCheckFailed,
    SingularPoint,
)
from .models import BosonicModel, CoupledQubitModel, LambdaModel, build_bosonic, build_coupled_qubits, build_lambda
from .protocol import GaugeSpec, compile_sequence, eigenstate_at, make_schedule, phase_condition_defects
from .serialize import save_json, sequence_to_dict, write_atomic

OUT_ENV = "STAMKIT_OUT"

# model-input problems are reported like configuration errors
_INPUT_ERRORS = (ConfigError, InvalidArgument, InconsistentAngles, IncommensurateEnergies, NotBipartite,
                 InconsistentPairs, InvalidTruncation, SingularPoint, ChannelNotApplicable, MissingEnergy)
_NUMERIC_ERRORS = (NumericalCheckFailed, ConvergenceNotReached, NonPhysicalState, NonFinite)


def toolkit_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


@dataclass
class RunContext:
    cfg: RunConfig
    out: Path
    checks: list = field(default_factory=list)
    artifacts: list = field(default_factory=list)
    columns: dict = field(default_factory=dict)

    def check(self, name: str, passed: bool, value=None, threshold=None):
        self.checks.append({"name": name, "passed": bool(passed),
                            "value": None if value is None else float(value),
                            "threshold": threshold})

    def write_csv(self, name: str, header: list, rows) -> None:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([f"{v:.12g}" if isinstance(v, float) else v for v in row])
        self.write_text(name, buf.getvalue(), header)

    def write_text(self, name: str, text: str, header: list | None = None) -> None:
        write_atomic(self.out / name, text)
        self.artifacts.append(name)
        if header is not None:
            self.columns[name] = list(header)


# ---------------------------------------------------------------- model plumbing


def model_of(cfg: RunConfig):
    b = cfg.model
    if b.kind == "lambda":
        return LambdaModel(b.k2, b.k3, b.t_p_per_pi * math.pi, b.phi_rad)
    if b.kind == "bosonic":
        return BosonicModel(b.truncation_levels, b.omega, complex(b.alpha_re, b.alpha_im))
    return CoupledQubitModel(b.E, b.beta_mix_rad, b.xi_mix_rad, b.interpolation)


def spec_of(model) -> GaugeSpec:
    if isinstance(model, LambdaModel):
        return build_lambda(model)
    if isinstance(model, BosonicModel):
        return build_bosonic(model)
    return build_coupled_qubits(model)


def frequency_scale(model) -> float:
    if isinstance(model, LambdaModel):
        return model.Omega
    if isinstance(model, BosonicModel):
        return model.omega
    return abs(model.E)


def default_theta(model) -> float:
    if isinstance(model, LambdaModel):
        return math.pi / 2
    if isinstance(model, BosonicModel):
        return 1.0
    return math.pi / 4


def schedule_of(cfg: RunConfig, model):
    s = cfg.schedule
    theta = default_theta(model) if s.theta_N_rad is None else s.theta_N_rad
    if s.spacing == "custom":
        return make_schedule(s.N, spacing="custom", lambdas=np.array(s.lambda_points_rad, dtype=float))
    return make_schedule(s.N, theta)


def channels_of(cfg: RunConfig, model) -> list:
    scale = frequency_scale(model)
    out = []
    for c in cfg.channels:
        mag = c.magnitude_rel if c.kind in ("amplitude_relative", "phase_relative") else c.magnitude_per_scale * scale
        tau = math.inf if c.correlation_time_times_scale is None else c.correlation_time_times_scale / scale
        out.append(robustness.ErrorChannel(c.kind, mag, c.site, c.axis, tau, c.variance_per_scale_sq * scale ** 2,
                                           c.offset_per_scale * scale, cfg.seed if c.seed is None else c.seed,
                                           c.samples_per_pulse))
    return out


def _compiled(ctx: RunContext):
    model = model_of(ctx.cfg)
    spec = spec_of(model)
    sched = schedule_of(ctx.cfg, model)
    seq = compile_sequence(spec, sched)
    defects = phase_condition_defects(seq)
    worst = float(defects.max()) if defects.size else 0.0
    ctx.check("phase_condition", worst <= 1e-9, worst, 1e-9)
    fids = diagnostics.checkpoint_fidelities(seq, spec)
    ctx.check("checkpoint_identity", fids.min() >= 1 - 1e-10, fids.min(), 1 - 1e-10)
    return model, spec, sched, seq


# ---------------------------------------------------------------- commands


def cmd_compile(ctx: RunContext):
    model, spec, sched, seq = _compiled(ctx)
    save_json(ctx.out / "sequence.json", sequence_to_dict(seq, sched))
    ctx.artifacts.append("sequence.json")
    header = ["j", "lambda_rad", "theta_j_rad", "duration"] + [f"E_{n}" for n in range(spec.dim)]
    if isinstance(model, LambdaModel):
        header += ["Omega_s", "Omega_p"]
    rows = []
    for j, p in enumerate(seq.pulses):
        row = [j + 1, float(p.lam), float(sched.theta_points[j]), float(p.duration)] + [float(e) for e in p.energies]
        if isinstance(model, LambdaModel):
            row += [float(v) for v in model.envelopes(p.lam)]
        rows.append(row)
    ctx.write_csv("pulses.csv", header, rows)


def cmd_simulate(ctx: RunContext):
    model, spec, sched, seq = _compiled(ctx)
    perturbed = robustness.apply_channels(seq, channels_of(ctx.cfg, model))
    psi0 = spec.initial_basis[:, 0]
    psi = dynamics.propagate_unitary(perturbed, psi0)
    norm_err = abs(np.linalg.norm(psi) - 1)
    ctx.check("norm_preservation", norm_err <= 1e-10, norm_err, 1e-10)
    target = eigenstate_at(spec, sched.theta_N, 0)
    fid = qla.state_fidelity(target, psi)
    if not ctx.cfg.channels:
        ctx.check("target_fidelity", fid >= 1 - 1e-9, fid, 1 - 1e-9)
    header = ["model", "N", "theta_N_rad", "total_time", "fidelity"]
    row = [spec.name, sched.N, float(sched.theta_N), perturbed.total_time, float(fid)]
    if isinstance(model, BosonicModel):
        from .models import leakage
        leak = leakage(psi)
        ctx.check("truncation_leakage", leak <= 1e-8, leak, 1e-8)
        header.append("leakage")
        row.append(float(leak))
    ctx.write_csv("simulate.csv", header, [row])


def cmd_lindblad(ctx: RunContext):
    model, spec, sched, seq = _compiled(ctx)
    if not isinstance(model, LambdaModel):
        raise ConfigError("the lindblad command needs the lambda model")
    nb = ctx.cfg.noise
    noise = dynamics.lambda_noise(nb.gamma_e_per_omega * model.Omega, nb.gamma_dep_per_omega * model.Omega,
                                  nb.branching_to_1)
    perturbed = robustness.apply_channels(seq, channels_of(ctx.cfg, model))
    rho0 = qla.density_from_state(spec.initial_basis[:, 0])
    try:
        rho = dynamics.propagate_lindblad(perturbed, rho0, noise)
        ctx.check("trace_preservation", True, abs(np.trace(rho).real - 1), qla.TOL_PHYSICS)
    except NonPhysicalState:
        ctx.check("trace_preservation", False)
        raise
    target = eigenstate_at(spec, sched.theta_N, 0)
    transfer = qla.fidelity_to_state(rho, target)
    merit = robustness.six_state_gate_fidelity(model, sched.N, noise, channels_of(ctx.cfg, model), sched.theta_N)
    ctx.write_csv("lindblad.csv",
                  ["Delta_per_omega", "gamma_e_per_omega", "gamma_dep_per_omega", "N", "state_fidelity",
                   "six_state_gate_merit"],
                  [[model.Delta / model.Omega, nb.gamma_e_per_omega, nb.gamma_dep_per_omega, sched.N,
                    float(transfer), float(merit)]])


def cmd_scan(ctx: RunContext):
    cfg = ctx.cfg
    model = model_of(cfg)
    axes = {a.name: np.linspace(a.start, a.stop, max(1, int(round(a.points * cfg.grid_scale))))
            for a in cfg.scan.axes}
    nb = cfg.noise
    res = robustness.sweep(model, cfg.scan.merit, axes, cfg.scan.N_list, cfg.seed, channels_of(cfg, model),
                           {"gamma_e_per_omega": nb.gamma_e_per_omega, "gamma_dep_per_omega": nb.gamma_dep_per_omega},
                           cfg.scan.workers)
    lo, hi = float(res.values.min()), float(res.values.max())
    ctx.check("merit_in_unit_interval", lo >= -1e-9 and hi <= 1 + 1e-9, max(-lo, hi - 1, 0.0), 1e-9)
    text = res.to_csv()
    ctx.write_text("scan.csv", text, text.splitlines()[0].split(","))


def cmd_bound(ctx: RunContext):
    cfg = ctx.cfg
    b = cfg.bound
    ppi = max(1, int(round(b.points_per_interval * cfg.grid_scale)))
    if b.lambda_rad is not None:
        _, spec, _, seq = _compiled(ctx)
        reports = [diagnostics.bound_report(spec, seq, b.lambda_rad, ppi)]
    else:
        reports, _ = diagnostics.bound_soundness(b.trials, cfg.seed, ppi)
    violations = sum(not r.holds for r in reports)
    ctx.check("bound_soundness", violations == 0, violations, 0)
    ctx.write_text("bound.csv", ",".join(diagnostics.BOUND_COLUMNS) + "\n"
                   + "".join(r.to_csv_row() for r in reports), list(diagnostics.BOUND_COLUMNS))


def cmd_ramp(ctx: RunContext):
    cfg = ctx.cfg
    model = model_of(cfg)
    if not isinstance(model, CoupledQubitModel):
        raise ConfigError("the ramp command needs the coupled_qubits model")
    rb = cfg.ramp
    ramp = dynamics.RampSpec(rb.ET / abs(model.E), energy_scale=model.E)
    family = robustness.coupled_ramp_family(model, rb.eps_x_per_E * model.E)
    from .models import PSI_PLUS, product_state
    try:
        res = dynamics.propagate_ramp(ramp, family, product_state("11"), rb.tol_state, rb.max_doublings, full=True)
    except ConvergenceNotReached:
        ctx.check("grid_doubling_stability", False, None, rb.tol_state)
        raise
    ctx.check("grid_doubling_stability", res.doubling_change < rb.tol_state, res.doubling_change, rb.tol_state)
    ctx.write_csv("ramp.csv", ["ET", "eps_x_per_E", "fidelity", "steps", "doubling_change"],
                  [[rb.ET, rb.eps_x_per_E, float(qla.state_fidelity(PSI_PLUS, res.state)), res.steps,
                    res.doubling_change]])


def cmd_figure(ctx: RunContext):
    cfg = ctx.cfg
    name = cfg.figure.name
    gs = cfg.grid_scale
    if name == "fig2c":
        nb = cfg.noise
        res = robustness.dissipation_tradeoff_scan(nb.gamma_e_per_omega, nb.gamma_dep_per_omega, N=cfg.schedule.N)
        text = res.to_csv()
        ctx.write_text("fig2c.csv", text, text.splitlines()[0].split(","))
    elif name == "fig2d":
        grid = np.linspace(-0.5, 0.5, robustness._points(51, gs))
        res = robustness.amplitude_detuning_scan(grid, (1, 2, 3, 4), seed=cfg.seed)
        text = res.to_csv()
        ctx.write_text("fig2d.csv", text, text.splitlines()[0].split(","))
    elif name in ("fig3b", "fig3d"):
        eps = 0.0 if name == "fig3b" else 0.05
        et = np.linspace(2.5, 100.0, robustness._points(40, gs))
        rows = robustness.ramp_time_scan(et, eps)
        stam = rows[-1][3]
        if eps == 0:
            ctx.check("stam_target_fidelity", stam >= 1 - 1e-9, stam, 1 - 1e-9)
        ctx.write_csv(f"{name}.csv", ["protocol", "ET", "eps_x_per_E", "fidelity"], rows)
    else:
        eps = np.linspace(0.0, 0.1, robustness._points(21, gs))
        ctx.write_csv("fig3c.csv", ["eps_x_per_E", "ramp_fidelity_ET100", "stam_fidelity_N1"],
                      robustness.local_field_scan(eps))


COMMANDS = {"compile": cmd_compile, "simulate": cmd_simulate, "lindblad": cmd_lindblad, "scan": cmd_scan,
            "bound": cmd_bound, "ramp": cmd_ramp, "figure": cmd_figure}


# ---------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="stamkit", description="Compile, simulate and verify modulated pulse sequences.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", help="YAML run configuration")
    p.add_argument("--seed", type=int, help="master seed (overrides the config)")
    p.add_argument("--out", help=f"output directory (overrides ${OUT_ENV} and the config)")
    p.add_argument("--grid-scale", type=float, help="multiply grid resolutions by this factor")
    p.add_argument("--figure", choices=FIGURES, help="figure tag for the figure command")
    return p


def _resolve_config(args) -> RunConfig:
    if args.config:
        cfg = load_config(args.config)
        if cfg.command != args.command and _config_names_command(args.config):
            raise ConfigError(f"config is for {cfg.command!r}, not {args.command!r}")
        data = cfg.to_dict()
    else:
        data = RunConfig().to_dict()
    data["command"] = args.command
    if args.seed is not None:
        data["seed"] = args.seed
    if args.grid_scale is not None:
        data["grid_scale"] = args.grid_scale
    if args.figure is not None:
        data["figure"] = {"name": args.figure}
    return config_from_dict(data)


def _config_names_command(path) -> bool:
    import yaml
    with open(path, encoding="utf-8") as fh:
        data = yaml.safe_load(fh) or {}
    return "command" in data


def _out_dir(args, cfg: RunConfig | None) -> Path:
    if args.out:
        return Path(args.out)
    if os.environ.get(OUT_ENV):
        return Path(os.environ[OUT_ENV])
    return Path(cfg.out_dir if cfg is not None else RunConfig().out_dir)


def run(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    started = time.perf_counter()
    cfg = None
    ctx = None
    status, error = 0, None
    try:
        cfg = _resolve_config(args)
        ctx = RunContext(cfg, _out_dir(args, cfg))
        COMMANDS[args.command](ctx)
        failed = [c["name"] for c in ctx.checks if not c["passed"]]
        if failed:
            raise NumericalCheckFailed(f"failed checks: {', '.join(failed)}")
    except _INPUT_ERRORS as exc:
        status, error = 2, f"{type(exc).__name__}: {exc}"
    except _NUMERIC_ERRORS as exc:
        status, error = 3, f"{type(exc).__name__}: {exc}"
    except OSError as exc:
        status, error = 4, f"{type(exc).__name__}: {exc}"
    manifest = {
        "command": args.command,
        "config": cfg.to_dict() if cfg is not None else None,
        "config_yaml": dump_config(cfg) if cfg is not None else None,
        "version": toolkit_version(),
        "numba": _numba_state(),
        "wall_time_s": time.perf_counter() - started,
        "checks": ctx.checks if ctx else [],
        "artifacts": ctx.artifacts if ctx else [],
        "columns": ctx.columns if ctx else {},
        "exit_status": status,
        "error": error,
    }
    try:
        save_json(_out_dir(args, cfg) / "manifest.json", manifest)
    except OSError as exc:
        print(f"stamkit: cannot write manifest: {exc}", file=sys.stderr)
        status = status or 4
    if error:
        print(f"stamkit: {error}", file=sys.stderr)
    return status


def _numba_state() -> dict:
    from . import _kernels
    return {"available": _kernels.HAS_NUMBA, "disabled": _kernels._DISABLED}


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
