"""Configuration, orchestration, persistence, and the command line.

Run configurations are YAML documents with fixed sections parsed strictly
(unknown sections or keys are errors: a silent typo in N, b or p would
invalidate every conclusion downstream).  Time series go to CSV with 17
significant digits (bit-exact round trip), manifests to JSON written via
an atomic rename.

Exit codes: 0 success, 1 validation/config, 2 solver failure, 3 I/O,
4 failed verification check.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import copy
import json
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .dichotomy import classify, ode_mechanism_check, rate_report
from .errors import (
    ConfigError,
    InlsLabError,
    InsufficientDataError,
    RegimeError,
    SolverError,
    ValidationError,
)
from .evolution import EvolutionConfig, evolve
from .fields import FieldState, RadialGrid, gaussian_field
from .functionals import K_functional
from .ground_state import (
    GroundState,
    load_profile,
    save_profile,
    solve_ground_state,
)
from .model import ModelParams, compute_criticality
from .records import read_series, write_series
from .virial import (
    ADAPTIVE_RT,
    CERTIFIED_QUARTIC_CONSTANT,
    FIXED_R,
    CutoffProfile,
    VirialMonitor,
    build_cutoff,
    decompose_remainders,
    local_virial_Iprime,
)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_SOLVER = 2
EXIT_IO = 3
EXIT_VERIFY = 4

ENV_OUTPUT_ROOT = "INLS_LAB_OUT"

GAUSSIAN = "gaussian"
GROUND_STATE_MULTIPLE = "ground_state_multiple"
FROM_FILE = "from_file"


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InitialDataConfig:
    kind: str = GAUSSIAN
    amplitude: float = 1.0
    width: float = 1.0
    factor: float = 1.0
    path: str | None = None

    def __post_init__(self):
        if self.kind not in (GAUSSIAN, GROUND_STATE_MULTIPLE, FROM_FILE):
            raise ConfigError(f"unknown initial data kind {self.kind!r}")
        if self.kind == FROM_FILE:
            if not self.path:
                raise ConfigError("initial_data.path is required for kind from_file")
            if not Path(self.path).exists():
                raise ConfigError(f"initial_data.path does not exist: {self.path}")


@dataclass(frozen=True)
class DiagnosticsConfig:
    cutoff_mode: str = FIXED_R
    R: float | None = None

    def __post_init__(self):
        if self.cutoff_mode not in (FIXED_R, ADAPTIVE_RT):
            raise ConfigError(f"unknown cutoff mode {self.cutoff_mode!r}")


@dataclass(frozen=True)
class OutputConfig:
    directory: str | None = None
    label: str = "run"


@dataclass(frozen=True)
class RunConfig:
    model: ModelParams
    grid_r_max: float
    grid_M: int
    initial: InitialDataConfig = InitialDataConfig()
    evolution: EvolutionConfig = EvolutionConfig(dt_initial=1e-3, t_final=1.0)
    diagnostics: DiagnosticsConfig = DiagnosticsConfig()
    output: OutputConfig = OutputConfig()
    raw: dict = field(default_factory=dict, compare=False)

    def make_grid(self) -> RadialGrid:
        return RadialGrid(self.model.N, self.grid_r_max, self.grid_M)


_SCHEMA = {
    "model": {"N", "b", "p"},
    "grid": {"r_max", "M"},
    "initial_data": {"kind", "amplitude", "width", "factor", "path"},
    "evolution": {
        "dt_initial",
        "t_final",
        "dt_min",
        "c_adapt",
        "blowup_gradient_factor",
        "record_stride",
    },
    "diagnostics": {"cutoff_mode", "R"},
    "output": {"directory", "label"},
    "sweep": {"parameter", "values", "parallelism"},
}


def _check_strict(doc: dict, allow_sweep: bool) -> None:
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a mapping of sections")
    for section, content in doc.items():
        if section not in _SCHEMA or (section == "sweep" and not allow_sweep):
            raise ConfigError(f"unknown config section {section!r}")
        if not isinstance(content, dict):
            raise ConfigError(f"section {section!r} must be a mapping")
        unknown = set(content) - _SCHEMA[section]
        if unknown:
            raise ConfigError(f"unknown keys in section {section!r}: {sorted(unknown)}")


def parse_config(doc: dict, allow_sweep: bool = False) -> RunConfig:
    """Build a RunConfig from a parsed YAML document, strictly."""
    _check_strict(doc, allow_sweep)
    try:
        model_sec = doc["model"]
        grid_sec = doc["grid"]
    except KeyError as exc:
        raise ConfigError(f"missing required config section {exc.args[0]!r}") from exc
    try:
        model = ModelParams(int(model_sec["N"]), float(model_sec["b"]),
                            float(model_sec["p"]))
        r_max = float(grid_sec["r_max"])
        M = int(grid_sec["M"])
        init_sec = dict(doc.get("initial_data", {}))
        initial = InitialDataConfig(
            kind=str(init_sec.get("kind", GAUSSIAN)),
            amplitude=float(init_sec.get("amplitude", 1.0)),
            width=float(init_sec.get("width", 1.0)),
            factor=float(init_sec.get("factor", 1.0)),
            path=init_sec.get("path"),
        )
        evo_sec = dict(doc.get("evolution", {}))
        c_adapt = evo_sec.get("c_adapt")
        evolution = EvolutionConfig(
            dt_initial=float(evo_sec.get("dt_initial", 1e-3)),
            t_final=float(evo_sec.get("t_final", 1.0)),
            dt_min=float(evo_sec.get("dt_min", 1e-12)),
            c_adapt=None if c_adapt is None else float(c_adapt),
            blowup_gradient_factor=float(evo_sec.get("blowup_gradient_factor", 1e3)),
            record_stride=int(evo_sec.get("record_stride", 10)),
        )
        diag_sec = dict(doc.get("diagnostics", {}))
        diag_R = diag_sec.get("R")
        diagnostics = DiagnosticsConfig(
            cutoff_mode=str(diag_sec.get("cutoff_mode", FIXED_R)),
            R=None if diag_R is None else float(diag_R),
        )
        out_sec = dict(doc.get("output", {}))
        output = OutputConfig(
            directory=out_sec.get("directory"),
            label=str(out_sec.get("label", "run")),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad config value: {exc}") from exc
    return RunConfig(
        model=model,
        grid_r_max=r_max,
        grid_M=M,
        initial=initial,
        evolution=evolution,
        diagnostics=diagnostics,
        output=output,
        raw=copy.deepcopy(doc),
    )


def load_config(path, allow_sweep: bool = False) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        doc = yaml.safe_load(fh)
    return parse_config(doc or {}, allow_sweep=allow_sweep)


def resolve_output_root(config: RunConfig, override: str | None = None) -> Path:
    if override:
        return Path(override)
    if config.output.directory:
        return Path(config.output.directory)
    env = os.environ.get(ENV_OUTPUT_ROOT)
    if env:
        return Path(env)
    return Path("inls_runs")


# ---------------------------------------------------------------------------
# pipeline
# ---------------------------------------------------------------------------


@dataclass
class RunManifest:
    data: dict
    exit_code: int
    path: Path | None = None


def _json_safe(obj):
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_json_safe(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return obj


def _write_manifest(directory: Path, data: dict) -> Path:
    """Write manifest.json atomically: the rename marks run completion."""
    tmp = directory / "manifest.json.tmp"
    final = directory / "manifest.json"
    with tmp.open("w", encoding="utf-8") as fh:
        json.dump(_json_safe(data), fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, final)
    return final


def _exit_code_for(exc: Exception) -> int:
    if isinstance(exc, (ConfigError, ValidationError)):
        return EXIT_VALIDATION
    if isinstance(exc, InlsLabError):
        return EXIT_SOLVER
    if isinstance(exc, OSError):
        return EXIT_IO
    return EXIT_SOLVER


def _build_initial_data(config: RunConfig, grid: RadialGrid,
                        gs: GroundState | None) -> FieldState:
    init = config.initial
    if init.kind == GAUSSIAN:
        return gaussian_field(grid, init.amplitude, init.width)
    if init.kind == GROUND_STATE_MULTIPLE:
        if gs is None:
            raise SolverError("ground state required for ground_state_multiple data")
        return FieldState(grid, init.factor * np.real(gs.profile.values), 0.0)
    gs_file = load_profile(init.path)
    if gs_file.profile.grid != grid:
        raise ValidationError(
            "profile file grid does not match the run grid "
            f"({gs_file.profile.grid!r} vs {grid!r})"
        )
    return FieldState(grid, init.factor * np.real(gs_file.profile.values), 0.0)


def _ground_state_for(config: RunConfig, grid: RadialGrid):
    """Solve the ground state when it exists and the grid supports it."""
    model = config.model
    if not model.p < model.p_star:
        return None, f"no ground state at p={model.p} >= 2*={model.p_star:.6g}"
    if grid.M < 512:
        return None, "grid below 512 cells; ground-state solve skipped"
    try:
        return solve_ground_state(model, grid), None
    except InlsLabError as exc:
        return None, f"ground-state solve failed: {exc}"


def _verdict_dict(verdict) -> dict:
    out = asdict(verdict)
    return out


def run_simulation(config: RunConfig, out_root: Path | None = None,
                   quiet: bool = True) -> RunManifest:
    """Solve/load, classify, evolve, post-process, persist.

    Any stage error is recorded in the manifest and mapped to the exit
    code; the manifest file is still written whenever the directory is
    writable.
    """
    t_wall = time.perf_counter()
    root = resolve_output_root(config) if out_root is None else Path(out_root)
    run_dir = root / config.output.label
    manifest: dict = {
        "config": config.raw,
        "version": __version__,
        "label": config.output.label,
    }
    exit_code = EXIT_OK
    try:
        run_dir.mkdir(parents=True, exist_ok=True)
        grid = config.make_grid()
        model = config.model
        s_c, alpha, rate_exp, regime = compute_criticality(model)
        manifest["criticality"] = {
            "s_c": s_c,
            "alpha": alpha,
            "rate_exponent": rate_exp,
            "regime": regime,
        }

        gs, gs_skip_reason = _ground_state_for(config, grid)
        if gs is not None:
            manifest["ground_state"] = {
                "mass_Q": gs.mass_Q,
                "energy_Q": gs.energy_Q,
                "grad_Q": gs.grad_Q,
                "threshold_EM": gs.threshold_EM,
                "threshold_GM": gs.threshold_GM,
                "residual": gs.residual,
                "method": gs.method,
                "iterations": gs.iterations,
            }
            save_profile(gs, run_dir / "ground_state.txt")
        else:
            manifest["ground_state"] = {"skipped": gs_skip_reason}

        u0 = _build_initial_data(config, grid, gs)

        if gs is not None and np.isfinite(gs.threshold_EM):
            verdict = classify(u0, model, gs)
            manifest["verdict"] = _verdict_dict(verdict)
        else:
            verdict = None
            manifest["verdict"] = None

        monitor = VirialMonitor(
            model, grid, mode=config.diagnostics.cutoff_mode, R=config.diagnostics.R
        )
        outcome = evolve(u0, model, config.evolution, monitor=monitor)
        write_series(run_dir / "series.csv", outcome.series)
        manifest["outcome"] = {
            "status": outcome.status,
            "t_end": outcome.t_end,
            "n_records": len(outcome.series),
        }

        deltas = [r.delta_instant for r in outcome.series]
        manifest["empirical_delta0"] = min(deltas) if deltas else None

        try:
            ode = ode_mechanism_check(outcome.series)
            manifest["ode_mechanism"] = {
                "T0": ode.T0,
                "ode_constant": ode.ode_constant,
                "monotonic": ode.monotonic,
            }
        except InsufficientDataError as exc:
            manifest["ode_mechanism"] = {"skipped": str(exc)}

        try:
            rate = rate_report(outcome.series, model)
            manifest["rate"] = {
                "fitted_exponent": rate.fitted_exponent,
                "min_ratio": rate.min_ratio,
                "rate_exponent_theory": rate_exp,
                "sup_grad_final": float(rate.sup_grad[-1]),
            }
        except (RegimeError, InsufficientDataError) as exc:
            manifest["rate"] = {"skipped": str(exc)}

        if not quiet:
            print(f"[{config.output.label}] {outcome.status} at t={outcome.t_end:.6g}")
    except Exception as exc:  # noqa: BLE001 - recorded in the manifest
        exit_code = _exit_code_for(exc)
        manifest["error"] = {"type": type(exc).__name__, "message": str(exc)}
        if not quiet:
            print(f"[{config.output.label}] failed: {exc}", file=sys.stderr)

    manifest["exit_code"] = exit_code
    manifest["wall_clock_seconds"] = time.perf_counter() - t_wall
    path = None
    try:
        run_dir.mkdir(parents=True, exist_ok=True)
        path = _write_manifest(run_dir, manifest)
    except OSError as exc:
        exit_code = max(exit_code, EXIT_IO)
        manifest["error"] = {"type": type(exc).__name__, "message": str(exc)}
    return RunManifest(data=manifest, exit_code=exit_code, path=path)


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------


def _set_dotted(doc: dict, dotted: str, value) -> None:
    keys = dotted.split(".")
    cursor = doc
    for key in keys[:-1]:
        cursor = cursor.setdefault(key, {})
    cursor[keys[-1]] = value


def expand_sweep(doc: dict) -> tuple[list[RunConfig], int]:
    """Materialize one RunConfig per swept value; labels get -<index> suffixes."""
    _check_strict(doc, allow_sweep=True)
    sweep = doc.get("sweep")
    if sweep is None:
        raise ConfigError("sweep config requires a 'sweep' section")
    parameter = sweep.get("parameter")
    values = sweep.get("values")
    parallelism = int(sweep.get("parallelism", 1))
    if parallelism < 1:
        raise ConfigError("sweep.parallelism must be >= 1")
    if values is None or parameter is None:
        raise ConfigError("sweep section needs 'parameter' and 'values'")
    configs = []
    for i, value in enumerate(values):
        member = copy.deepcopy(doc)
        member.pop("sweep", None)
        _set_dotted(member, parameter, value)
        label = member.setdefault("output", {}).get("label", "run")
        member["output"]["label"] = f"{label}-{i:03d}"
        configs.append(parse_config(member))
    return configs, parallelism


def _sweep_worker(args):
    config, out_root = args
    manifest = run_simulation(config, out_root=out_root, quiet=True)
    return {
        "label": config.output.label,
        "status": manifest.data.get("outcome", {}).get("status", "error"),
        "t_end": manifest.data.get("outcome", {}).get("t_end"),
        "exit_code": manifest.exit_code,
        "manifest": str(manifest.path) if manifest.path else "",
    }


def run_sweep(configs: list[RunConfig], parallelism: int,
              out_root: Path | None = None) -> list[dict]:
    """Run configs with at most `parallelism` worker processes.

    Per-run failures are isolated; the aggregate exit code is the maximum
    per-run code.  Output directories must be disjoint.
    """
    if parallelism < 1:
        raise ValidationError("parallelism must be >= 1")
    labels = [c.output.label for c in configs]
    if len(set(labels)) != len(labels):
        raise ConfigError("sweep labels collide; output directories must be disjoint")
    if not configs:
        return []
    roots = [resolve_output_root(c) if out_root is None else Path(out_root)
             for c in configs]
    jobs = list(zip(configs, roots))
    if parallelism == 1 or len(configs) == 1:
        results = [_sweep_worker(job) for job in jobs]
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=parallelism) as pool:
            results = list(pool.map(_sweep_worker, jobs))
    summary_root = roots[0]
    summary_root.mkdir(parents=True, exist_ok=True)
    summary = summary_root / "sweep_summary.csv"
    with summary.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write("label,status,t_end,exit_code,manifest\n")
        for row in results:
            t_end = row["t_end"]
            t_str = format(t_end, ".17g") if isinstance(t_end, float) else ""
            fh.write(
                f"{row['label']},{row['status']},{t_str},{row['exit_code']},"
                f"{row['manifest']}\n"
            )
    return results


# ---------------------------------------------------------------------------
# identity verification suite
# ---------------------------------------------------------------------------


class _CorruptedCutoff(CutoffProfile):
    """Negative control: a band where phi'' reads 3 (inadmissible)."""

    def d2(self, r):
        base = super().d2(r)
        r = np.atleast_1d(np.asarray(r, dtype=float))
        band = (r > 1.2 * self.R) & (r < 1.4 * self.R)
        return np.where(band, 3.0, base)


def _random_smooth_field(grid: RadialGrid, rng: np.random.Generator) -> FieldState:
    """Seeded random bump mixture with decaying tail; complex phases."""
    r = grid.nodes
    vals = np.zeros(grid.M, dtype=complex)
    for _ in range(4):
        amp = rng.uniform(0.2, 1.5) * np.exp(1j * rng.uniform(0, 2 * np.pi))
        center = rng.uniform(0.0, 0.3 * grid.r_max)
        width = rng.uniform(0.3, 1.5)
        chirp = rng.uniform(-2.0, 2.0)
        vals += amp * np.exp(-((r - center) / width) ** 2) * np.exp(1j * chirp * r)
    return FieldState(grid, vals, 0.0)


def verify_identities(model: ModelParams | None = None,
                      grid: RadialGrid | None = None,
                      corrupt_cutoff: bool = False,
                      quiet: bool = False) -> list[dict]:
    """Manufactured-field identity suite; returns one row per check."""
    model = model or ModelParams(3, 0.5, 3.0)
    grid = grid or RadialGrid(model.N, 12.0, 1024)
    rng = np.random.default_rng(20240817)
    rows: list[dict] = []

    def check(name: str, measured: float, threshold: float, passed: bool | None = None):
        ok = (measured <= threshold) if passed is None else passed
        rows.append(
            {"check": name, "measured": measured, "threshold": threshold,
             "passed": bool(ok)}
        )
        if not quiet:
            status = "PASS" if ok else "FAIL"
            print(f"{status}  {name}: measured {measured:.3e} vs {threshold:.3e}")

    # cutoff admissibility (certified constraint set)
    for R in (0.5, 1.0, 3.0, 10.0):
        phi = build_cutoff(R)
        if corrupt_cutoff:
            phi = _CorruptedCutoff(phi.R, phi.construction, phi.plateau_over_R2,
                                   phi.certificate)
        rep = phi.admissibility_report(20_000)
        check(f"cutoff[R={R}] phi >= 0", -rep["phi_min"], 1e-9)
        check(f"cutoff[R={R}] phi <= r^2", rep["phi_excess_over_r2"], 1e-9)
        check(f"cutoff[R={R}] phi'' <= 2", rep["d2_max"] - 2.0, 1e-9)
        check(
            f"cutoff[R={R}] phi'''' <= c4/R^2 (c4 certified {CERTIFIED_QUARTIC_CONSTANT:.4g})",
            rep["d4_max_times_R2"] - CERTIFIED_QUARTIC_CONSTANT,
            1e-9,
        )

    # decomposition identity + sign checks on random smooth fields
    worst_resid = 0.0
    worst_r1 = -math.inf
    for R in (1.0, 3.0):
        phi = build_cutoff(R)
        for _ in range(20):
            u = _random_smooth_field(grid, rng)
            rep = decompose_remainders(u, phi, model)
            denom = abs(rep.I_doubleprime_direct) + 8.0 * abs(rep.K) + 1e-30
            worst_resid = max(worst_resid, abs(rep.decomposition_residual) / denom)
            worst_r1 = max(worst_r1, rep.R1)
    check("decomposition |I'' - (8K+R1+R2+R3)| relative", worst_resid, 1e-6)
    check("sign R1 <= 0", worst_r1, 1e-10)

    # real fields have I' = 0
    phi1 = build_cutoff(3.0)
    u_real = FieldState(grid, np.exp(-grid.nodes**2), 0.0)
    check("real field I' = 0", abs(local_virial_Iprime(u_real, phi1)), 1e-12)

    # covering cutoff reduces I'' to 8K
    phi_cover = build_cutoff(grid.r_max)
    u = _random_smooth_field(grid, rng)
    rep = decompose_remainders(u, phi_cover, model)
    K = K_functional(u, model)
    check(
        "covering cutoff: |I'' - 8K| / |8K|",
        abs(rep.I_doubleprime_direct - 8.0 * K) / max(abs(8.0 * K), 1e-30),
        1e-6,
    )
    check("covering cutoff: |R1|+|R2|+|R3|",
          abs(rep.R1) + abs(rep.R2) + abs(rep.R3),
          1e-8 * max(abs(rep.I_doubleprime_direct), 1.0))

    # zero field: every integral is zero
    u0 = FieldState(grid, np.zeros(grid.M), 0.0)
    rep0 = decompose_remainders(u0, phi1, model)
    zero_mag = max(abs(x) for x in (rep0.I, rep0.I_prime, rep0.I_doubleprime_direct,
                                    rep0.K, rep0.R1, rep0.R2, rep0.R3))
    check("zero field: all integrals zero", zero_mag, 0.0 + 1e-300, zero_mag == 0.0)

    # time consistency: finite differences of recorded I against I' and I''
    small_grid = RadialGrid(model.N, 12.0, 512)
    u_small = gaussian_field(small_grid, 0.8, 1.0)
    cfg = EvolutionConfig(dt_initial=2e-3, t_final=0.6, c_adapt=math.inf,
                          record_stride=5, blowup_gradient_factor=1e6)
    monitor = VirialMonitor(model, small_grid, mode=FIXED_R, R=small_grid.r_max)
    outcome = evolve(u_small, model, cfg, monitor=monitor)
    t = np.array([rec.t for rec in outcome.series])
    I = np.array([rec.I for rec in outcome.series])
    Ip = np.array([rec.Iprime for rec in outcome.series])
    Ipp = np.array([rec.Idoubleprime for rec in outcome.series])
    h = t[1] - t[0]
    fd_ip = (I[2:] - I[:-2]) / (2 * h)
    fd_ipp = (Ip[2:] - Ip[:-2]) / (2 * h)
    err_ip = np.max(np.abs(fd_ip - Ip[1:-1])) / np.max(np.abs(Ip))
    err_ipp = np.max(np.abs(fd_ipp - Ipp[1:-1])) / np.max(np.abs(Ipp))
    check("time consistency dI/dt vs I'", float(err_ip), 1e-2)
    check("time consistency dI'/dt vs I''", float(err_ipp), 1e-2)

    return rows


# ---------------------------------------------------------------------------
# command line
# ---------------------------------------------------------------------------


def _cmd_ground_state(config: RunConfig, out_root: Path, quiet: bool) -> int:
    grid = config.make_grid()
    gs = solve_ground_state(config.model, grid)
    run_dir = out_root / config.output.label
    run_dir.mkdir(parents=True, exist_ok=True)
    save_profile(gs, run_dir / "ground_state.txt")
    data = {
        "mass_Q": gs.mass_Q,
        "energy_Q": gs.energy_Q,
        "grad_Q": gs.grad_Q,
        "threshold_EM": gs.threshold_EM,
        "threshold_GM": gs.threshold_GM,
        "residual": gs.residual,
        "iterations": gs.iterations,
        "K_over_grad_sq": K_functional(gs.profile, config.model) / gs.grad_Q**2,
    }
    _write_manifest(run_dir, {"config": config.raw, "ground_state": _json_safe(data),
                              "version": __version__, "exit_code": 0})
    if not quiet:
        for key, value in data.items():
            print(f"{key} = {value:.12g}")
    return EXIT_OK


def _cmd_classify(config: RunConfig, out_root: Path, quiet: bool) -> int:
    grid = config.make_grid()
    gs = solve_ground_state(config.model, grid)
    u0 = _build_initial_data(config, grid, gs)
    verdict = classify(u0, config.model, gs)
    run_dir = out_root / config.output.label
    run_dir.mkdir(parents=True, exist_ok=True)
    _write_manifest(run_dir, {"config": config.raw, "verdict": _verdict_dict(verdict),
                              "version": __version__, "exit_code": 0})
    if not quiet:
        print(f"regime    = {verdict.regime}")
        print(f"cond_EM   = {verdict.cond_EM_satisfied} (margin {verdict.margin_EM:.6g})")
        print(f"cond_GM   = {verdict.cond_GM_satisfied} (margin {verdict.margin_GM:.6g})")
        print(f"predicted = {verdict.predicted}")
    return EXIT_OK


def _cmd_rate(config: RunConfig, series_path: str, out_root: Path, quiet: bool) -> int:
    series = read_series(series_path)
    report = rate_report(series, config.model)
    run_dir = out_root / config.output.label
    run_dir.mkdir(parents=True, exist_ok=True)
    data = {
        "fitted_exponent": report.fitted_exponent,
        "min_ratio": report.min_ratio,
        "rate_exponent_theory": config.model.rate_exponent,
        "T0": report.T0,
        "ode_constant": report.ode_constant,
    }
    _write_manifest(run_dir, {"config": config.raw, "rate": _json_safe(data),
                              "version": __version__, "exit_code": 0})
    if not quiet:
        for key, value in data.items():
            print(f"{key} = {value}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="inls-lab",
        description="Ground states, blow-up thresholds, and virial diagnostics "
        "for the inhomogeneous nonlinear Schrodinger equation.",
    )
    parser.add_argument("--config", help="path to a YAML run configuration")
    parser.add_argument("--out", help="output root directory (overrides config/env)")
    parser.add_argument("--quiet", action="store_true", help="suppress progress output")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("ground-state", help="solve the ground state and save the profile")
    sub.add_parser("evolve", help="run the full simulation pipeline")
    sub.add_parser("classify", help="evaluate the threshold conditions on the data")
    p_verify = sub.add_parser("verify-identities", help="run the identity test battery")
    p_verify.add_argument("--corrupt-cutoff", action="store_true",
                          help="negative control: corrupt the cutoff and expect failure")
    p_rate = sub.add_parser("rate", help="rate report from a recorded series")
    p_rate.add_argument("--series", required=True, help="path to a series.csv")
    sub.add_parser("sweep", help="run a parameter sweep from a sweep config")

    args = parser.parse_args(argv)

    try:
        if args.command == "verify-identities":
            model = None
            grid = None
            if args.config:
                config = load_config(args.config)
                model = config.model
                grid = config.make_grid()
            rows = verify_identities(model, grid, corrupt_cutoff=args.corrupt_cutoff,
                                     quiet=args.quiet)
            return EXIT_OK if all(r["passed"] for r in rows) else EXIT_VERIFY

        if not args.config:
            raise ConfigError(f"--config is required for {args.command}")

        if args.command == "sweep":
            with open(args.config, "r", encoding="utf-8") as fh:
                doc = yaml.safe_load(fh)
            configs, parallelism = expand_sweep(doc or {})
            out_root = Path(args.out) if args.out else None
            results = run_sweep(configs, parallelism, out_root=out_root)
            if not args.quiet:
                for row in results:
                    print(f"{row['label']}: {row['status']} (exit {row['exit_code']})")
            return max((r["exit_code"] for r in results), default=EXIT_OK)

        config = load_config(args.config)
        out_root = resolve_output_root(config, args.out)
        if args.command == "ground-state":
            return _cmd_ground_state(config, out_root, args.quiet)
        if args.command == "classify":
            return _cmd_classify(config, out_root, args.quiet)
        if args.command == "rate":
            return _cmd_rate(config, args.series, out_root, args.quiet)
        if args.command == "evolve":
            manifest = run_simulation(config, out_root=out_root, quiet=args.quiet)
            return manifest.exit_code
        raise ConfigError(f"unknown command {args.command!r}")
    except InlsLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _exit_code_for(exc)
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
