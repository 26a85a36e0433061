"""Experiment drivers behind the command-line tool.

Every driver takes a Config, an output directory, and a thread count, and
returns an ExperimentOutcome with a verdict and the exit code the CLI should
use: 0 for PASS or COMPLETED, 2 for FAIL, 3 for a solver failure.

All drivers write manifest.txt (experiment, code version, and the resolved
key=value pairs, sorted) and rows.csv. Runs that solve also write
solution.rwf1 (the last solved field) and solver_stats.csv. Every output
except solver_stats.csv is byte-identical across reruns and thread counts:
rows are assembled in ladder order regardless of completion order, and all
floats are printed with the same format. solver_stats.csv carries wall-clock
times and is the one deliberately non-reproducible file.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import diagnostics, oracles
from .config import (Config, ConfigError, build_geometry, build_grid,
                     build_param, build_solve_config, sorted_pairs)
from .diagnostics import (ALPHA_INV_SQRT_MU, ALPHA_ONE, MinusLimit, PlusLimit,
                          SignedK)
from .field import (Field, Grid, WeightProfile, annulus_integral,
                    node_radii, sobolev_norm, weighted_norm, write_rwf1)
from .geometry import Geometry, check_interface_sign_condition
from .operator import SolverError, apply_resolvent, assemble
from .spectral import MINUS, PLUS, SpectralParam
from .version import VERSION

PASS = "PASS"
FAIL = "FAIL"
COMPLETED = "COMPLETED"
SOLVER_FAILURE = "SOLVER-FAILURE"

SIGN_TAG = "interface-sign-condition-violated"

_EXIT = {PASS: 0, COMPLETED: 0, FAIL: 2, SOLVER_FAILURE: 3}


@dataclass
class ExperimentOutcome:
    verdict: str
    notes: "list[str]" = dc_field(default_factory=list)

    @property
    def exit_code(self) -> int:
        return _EXIT[self.verdict]


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


class RunWriter:
    """Collects the per-run artifacts under one directory."""

    def __init__(self, out_dir):
        self.out_dir = out_dir
        os.makedirs(out_dir, exist_ok=True)
        self.stats_rows = []

    def path(self, name: str) -> str:
        return os.path.join(self.out_dir, name)

    def manifest(self, experiment: str, cfg: Config) -> None:
        lines = [f"experiment={experiment}", f"version={VERSION}"]
        lines += [f"{k}={v}" for k, v in sorted_pairs(cfg)]
        with open(self.path("manifest.txt"), "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")

    def csv_rows(self, name: str, header, rows) -> None:
        with open(self.path(name), "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(v) for v in row])

    def record_solve(self, index: int, report) -> None:
        self.stats_rows.append((index, report.method, report.iterations,
                                report.final_residual, report.wall_seconds))

    def flush_stats(self) -> None:
        if self.stats_rows:
            self.csv_rows("solver_stats.csv",
                          ("index", "method", "iterations", "final_residual",
                           "wall_seconds"),
                          sorted(self.stats_rows))

    def field(self, name: str, u: Field) -> None:
        write_rwf1(self.path(name), u)

    def verdict(self, outcome: ExperimentOutcome) -> None:
        lines = [f"verdict={outcome.verdict}"] + list(outcome.notes)
        with open(self.path("verdict.txt"), "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")


def _run_indexed(jobs, threads: int):
    """Run zero-argument jobs, preserving list order in the results."""
    if threads <= 1 or len(jobs) <= 1:
        return [job() for job in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(job) for job in jobs]
        return [f.result() for f in futures]


def _analytic_kind(cfg: Config, prefix: str, dim: int):
    kind = cfg.get_str(f"{prefix}.kind")
    if kind == "gaussian":
        return oracles.GaussianBump(cfg.get_float(f"{prefix}.width", 1.0))
    if kind == "plane_wave":
        direction = cfg.get_floats(f"{prefix}.direction",
                                   [1.0] + [0.0] * (dim - 1))
        return oracles.PlaneWave(cfg.get_float(f"{prefix}.k"), direction)
    if kind == "spherical_wave":
        center = cfg.get_floats(f"{prefix}.center", [0.0, 0.0, 0.0])
        return oracles.SphericalWave3D(cfg.get_float(f"{prefix}.k"), center)
    if kind == "hankel_wave":
        center = cfg.get_floats(f"{prefix}.center", [0.0, 0.0])
        return oracles.HankelWave2D(cfg.get_float(f"{prefix}.k"), center)
    raise ConfigError(f"unknown {prefix}.kind {kind!r}")


def _source_field(cfg: Config, grid: Grid) -> Field:
    kind = cfg.get_str("source.kind", "gaussian")
    if kind == "zero":
        return Field(grid, np.zeros(grid.shape, dtype=np.complex128))
    return oracles.field_from_analytic(_analytic_kind(cfg, "source", grid.dim),
                                       grid)


_NORM_HEADER = ("half_plane", "lambda", "eta", "norm_minus_delta",
                "sqrtz_ratio", "radiation_ratio", "h2_ratio")


def _norm_columns(u: Field, f: Field, f_norm: float, p: SpectralParam,
                  geom: Geometry, delta: float):
    nu = weighted_norm(u, -delta)
    if f_norm == 0.0:
        return nu, 0.0, 0.0, 0.0
    sqrtz = math.sqrt(abs(p.z)) * nu / f_norm
    rad = diagnostics.radiation_source_ratio(u, f, delta, geom, SignedK(p))
    h2 = sobolev_norm(u, 2, -delta) / f_norm
    return nu, sqrtz, rad, h2


def _solve_one(grid, geom, p, scfg, f, writer, index):
    op = assemble(grid, geom, p, scfg.closure)
    u, report = apply_resolvent(op, f, scfg)
    writer.record_solve(index, report)
    return u, report


def run_solve(cfg: Config, out_dir, threads: int) -> ExperimentOutcome:
    writer = RunWriter(out_dir)
    writer.manifest("solve", cfg)
    grid, geom = build_grid(cfg), build_geometry(cfg)
    p, scfg = build_param(cfg), build_solve_config(cfg)
    delta = cfg.get_float("delta", 1.0)
    f = _source_field(cfg, grid)
    try:
        u, report = _solve_one(grid, geom, p, scfg, f, writer, 0)
    except SolverError as exc:
        out = ExperimentOutcome(SOLVER_FAILURE, [f"error={exc}"])
        writer.verdict(out)
        return out
    f_norm = weighted_norm(f, delta)
    cols = _norm_columns(u, f, f_norm, p, geom, delta)
    writer.csv_rows("rows.csv", _NORM_HEADER + ("method", "iterations"),
                    [(p.half_plane, p.lam, p.eta) + cols
                     + (report.method, report.iterations)])
    writer.field("solution.rwf1", u)
    writer.flush_stats()
    out = ExperimentOutcome(COMPLETED, [f"norm_minus_delta={_fmt(cols[0])}"])
    writer.verdict(out)
    return out


def _eta_ladder(cfg: Config):
    ladder = cfg.get_floats("spectral.eta_ladder")
    if any(e <= 0 for e in ladder):
        raise ConfigError("spectral.eta_ladder entries must be positive")
    if any(b >= a for a, b in zip(ladder, ladder[1:])):
        raise ConfigError("spectral.eta_ladder must be strictly decreasing")
    return ladder


def cauchy_verdict(distances, shrink_limit: float, tail_fraction: float):
    """PASS when the tail is monotone decreasing and the ladder shrank enough.

    The monotone tail has to span at least tail_fraction of the distance
    list (and at least two steps) so a final lucky downtick cannot pass.
    """
    d = list(distances)
    if not d:
        return False, ["no distances"]
    if max(d) <= 1e-300:
        return True, ["all distances zero"]
    tail_start = len(d) - 1
    while tail_start > 0 and d[tail_start] <= d[tail_start - 1]:
        tail_start -= 1
    tail_len = len(d) - tail_start
    need = max(2, math.ceil(tail_fraction * len(d)))
    monotone_ok = tail_len >= need
    shrink = d[-1] / d[0] if d[0] > 0 else math.inf
    notes = [f"d_first={_fmt(d[0])}", f"d_last={_fmt(d[-1])}",
             f"shrink={_fmt(shrink)}", f"monotone_tail_len={tail_len}",
             f"monotone_tail_need={need}"]
    return monotone_ok and shrink <= shrink_limit, notes


def run_sweep_eta(cfg: Config, out_dir, threads: int) -> ExperimentOutcome:
    writer = RunWriter(out_dir)
    writer.manifest("sweep-eta", cfg)
    grid, geom = build_grid(cfg), build_geometry(cfg)
    scfg = build_solve_config(cfg)
    lam = cfg.get_float("spectral.lambda")
    half = cfg.get_str("spectral.half_plane", PLUS)
    if half not in (PLUS, MINUS):
        raise ConfigError("spectral.half_plane must be 'plus' or 'minus'")
    sign = 1.0 if half == PLUS else -1.0
    ladder = _eta_ladder(cfg)
    delta = cfg.get_float("delta", 1.0)
    f = _source_field(cfg, grid)
    f_norm = weighted_norm(f, delta)
    params = [SpectralParam(lam, sign * e) for e in ladder]

    def job(i):
        def run():
            try:
                return _solve_one(grid, geom, params[i], scfg, f, writer, i)
            except SolverError as exc:
                return exc
        return run

    results = _run_indexed([job(i) for i in range(len(params))], threads)
    rows, fields = [], []
    failure = None
    for i, res in enumerate(results):
        if isinstance(res, SolverError):
            failure = f"rung {i} (eta={_fmt(ladder[i])}): {res}"
            break
        u, report = res
        fields.append(u)
        cols = _norm_columns(u, f, f_norm, params[i], geom, delta)
        cauchy = ""
        if i > 0:
            diff = Field(grid, u.values - fields[i - 1].values)
            cauchy = weighted_norm(diff, -delta)
        rows.append((half, lam, ladder[i]) + cols
                    + (cauchy, report.method, report.iterations))
    writer.csv_rows("rows.csv",
                    _NORM_HEADER + ("cauchy_distance", "method", "iterations"),
                    rows)
    if fields:
        writer.field("solution.rwf1", fields[len(rows) - 1])
    writer.flush_stats()
    if failure is not None:
        out = ExperimentOutcome(SOLVER_FAILURE, [f"error={failure}"])
        writer.verdict(out)
        return out
    distances = [row[7] for row in rows[1:]]
    ok, notes = cauchy_verdict(
        distances, cfg.get_float("thresholds.cauchy_shrink", 0.05),
        cfg.get_float("thresholds.monotone_tail_fraction", 0.5))
    out = ExperimentOutcome(PASS if ok else FAIL, notes)
    writer.verdict(out)
    return out


def _scan_lambdas(cfg: Config):
    if "spectral.lambda_values" in cfg:
        lams = cfg.get_floats("spectral.lambda_values")
    else:
        c = cfg.get_float("spectral.c")
        d = cfg.get_float("spectral.d")
        if not 0 < c < d:
            raise ConfigError("need 0 < spectral.c < spectral.d")
        count = cfg.get_int("spectral.lambda_count", 3)
        lams = [c + (i + 1) * (d - c) / (count + 1) for i in range(count)]
    if any(v <= 0 for v in lams):
        raise ConfigError("lambda values must be positive")
    return lams


def run_scan_resolvent(cfg: Config, out_dir, threads: int) -> ExperimentOutcome:
    writer = RunWriter(out_dir)
    writer.manifest("scan-resolvent", cfg)
    grid, geom = build_grid(cfg), build_geometry(cfg)
    scfg = build_solve_config(cfg)
    delta = cfg.get_float("delta", 1.0)
    lams = _scan_lambdas(cfg)
    etas = cfg.get_floats("spectral.eta_values", [1.0, 0.1, 0.01, 0.001])
    if any(e <= 0 for e in etas) or any(b >= a for a, b in zip(etas, etas[1:])):
        raise ConfigError("spectral.eta_values must be positive and decreasing")
    f = _source_field(cfg, grid)
    f_norm = weighted_norm(f, delta)

    sign_ok, min_product, worst = check_interface_sign_condition(
        geom, cfg.get_float("geometry.check_radius", 2.0))
    tags = [] if sign_ok else [SIGN_TAG]

    plan = [(hp, lam, eta)
            for hp in (PLUS, MINUS) for lam in lams for eta in etas]
    params = [SpectralParam(lam, eta if hp == PLUS else -eta)
              for hp, lam, eta in plan]

    def job(i):
        def run():
            try:
                return _solve_one(grid, geom, params[i], scfg, f, writer, i)
            except SolverError as exc:
                return exc
        return run

    results = _run_indexed([job(i) for i in range(len(plan))], threads)
    rows, last_field = [], None
    for i, res in enumerate(results):
        if isinstance(res, SolverError):
            out = ExperimentOutcome(SOLVER_FAILURE,
                                    [f"error=row {i}: {res}"] + tags)
            writer.csv_rows("rows.csv",
                            _NORM_HEADER + ("method", "iterations"), rows)
            writer.flush_stats()
            writer.verdict(out)
            return out
        u, report = res
        last_field = u
        hp, lam, eta = plan[i]
        cols = _norm_columns(u, f, f_norm, params[i], geom, delta)
        rows.append((hp, lam, eta) + cols + (report.method, report.iterations))
    writer.csv_rows("rows.csv", _NORM_HEADER + ("method", "iterations"), rows)
    if last_field is not None:
        writer.field("solution.rwf1", last_field)
    writer.flush_stats()

    notes = [f"min_product={_fmt(min_product)}",
             "worst_point=" + ",".join(_fmt(c) for c in worst)] + tags
    if not sign_ok:
        out = ExperimentOutcome(COMPLETED, notes)
        writer.verdict(out)
        return out

    band_limit = cfg.get_float("thresholds.ratio_band", 10.0)
    growth_limit = cfg.get_float("thresholds.tail_growth", 1.2)
    ok = True
    for col in (4, 5, 6):
        values = [row[col] for row in rows]
        lo, hi = min(values), max(values)
        band = hi / lo if lo > 0 else (1.0 if hi == 0 else math.inf)
        notes.append(f"band_col{col}={_fmt(band)}")
        ok = ok and band <= band_limit
    n_eta = len(etas)
    if n_eta >= 2:
        for start in range(0, len(rows), n_eta):
            for col in (4, 5, 6):
                prev = rows[start + n_eta - 2][col]
                last = rows[start + n_eta - 1][col]
                if prev > 0 and last / prev > growth_limit:
                    ok = False
                    notes.append(
                        f"tail_growth_violation=row{start + n_eta - 1}_col{col}")
    out = ExperimentOutcome(PASS if ok else FAIL, notes)
    writer.verdict(out)
    return out


_IDENTITY_HEADER = ("profile", "lhs1", "lhs2", "lhs3", "lhs4", "lhs5",
                    "rhs1", "rhs2", "rhs3", "rhs4",
                    "lhs_sum", "rhs_sum", "residual")


def _identity_profiles(cfg: Config, r_in: float, r_out: float):
    kinds = cfg.get_str("weight.kinds", "truncated").replace(",", " ").split()
    out = []
    for kind in kinds:
        if kind == "truncated":
            out.append(WeightProfile.truncated(
                cfg.get_float("weight.r0", 0.5 * (r_in + r_out))))
        elif kind == "power_delta":
            out.append(WeightProfile.power_delta(
                cfg.get_float("weight.delta", 1.0)))
        elif kind == "twod_alpha":
            out.append(WeightProfile.twod_alpha(
                cfg.get_float("weight.r0", 0.5 * (r_in + r_out)),
                cfg.get_float("weight.alpha", 1.0)))
        elif kind == "twod_delta":
            out.append(WeightProfile.twod_delta(
                cfg.get_float("weight.delta", 1.0)))
        else:
            raise ConfigError(f"unknown weight kind {kind!r}")
    return out


def run_verify_identity(cfg: Config, out_dir, threads: int) -> ExperimentOutcome:
    writer = RunWriter(out_dir)
    writer.manifest("verify-identity", cfg)
    grid, geom = build_grid(cfg), build_geometry(cfg)
    p = build_param(cfg)
    r_in = cfg.get_float("identity.r_in")
    r_out = cfg.get_float("identity.r_out")
    alpha = cfg.get_str("identity.alpha", ALPHA_INV_SQRT_MU)
    if alpha not in (ALPHA_INV_SQRT_MU, ALPHA_ONE):
        raise ConfigError("identity.alpha must be 'inv_sqrt_mu' or 'one'")
    mode = cfg.get_str("identity.field", "manufactured")
    if mode == "manufactured":
        u, f = oracles.manufactured_pair(
            _analytic_kind(cfg, "source", grid.dim), p, geom, grid)
    elif mode == "analytic":
        u = oracles.field_from_analytic(
            _analytic_kind(cfg, "source", grid.dim), grid)
        f = Field(grid, np.zeros(grid.shape, dtype=np.complex128))
    elif mode == "solve":
        scfg = build_solve_config(cfg)
        f = _source_field(cfg, grid)
        try:
            u, _ = _solve_one(grid, geom, p, scfg, f, writer, 0)
        except SolverError as exc:
            out = ExperimentOutcome(SOLVER_FAILURE, [f"error={exc}"])
            writer.verdict(out)
            return out
        writer.field("solution.rwf1", u)
        writer.flush_stats()
    else:
        raise ConfigError("identity.field must be manufactured/analytic/solve")

    limit = cfg.get_float("thresholds.identity_residual", 2e-2)
    profiles = _identity_profiles(cfg, r_in, r_out)

    def job(profile):
        def run():
            return diagnostics.identity_residual(u, f, p, geom, profile,
                                                 r_in, r_out, alpha)
        return run

    reports = _run_indexed([job(pr) for pr in profiles], threads)
    rows, ok = [], True
    for profile, rep in zip(profiles, reports):
        rows.append((profile.kind,) + rep.lhs_terms + rep.rhs_terms
                    + (rep.lhs_sum, rep.rhs_sum, rep.residual))
        ok = ok and rep.residual <= limit
    writer.csv_rows("rows.csv", _IDENTITY_HEADER, rows)
    notes = [f"residual_limit={_fmt(limit)}",
             "max_residual=" + _fmt(max(r.residual for r in reports))]
    out = ExperimentOutcome(PASS if ok else FAIL, notes)
    writer.verdict(out)
    return out


def run_radiation_probe(cfg: Config, out_dir, threads: int) -> ExperimentOutcome:
    writer = RunWriter(out_dir)
    writer.manifest("radiation-probe", cfg)
    grid, geom = build_grid(cfg), build_geometry(cfg)
    lam = cfg.get_float("spectral.lambda")
    radii = cfg.get_floats("probe.radii")
    if any(b <= a for a, b in zip(radii, radii[1:])) or radii[0] <= grid.h:
        raise ConfigError("probe.radii must be increasing and exceed h")
    alpha = cfg.get_float("probe.alpha", 0.0)
    mode = cfg.get_str("probe.mode", diagnostics.PROBE_PLUS)
    source_mode = cfg.get_str("probe.field", "analytic")

    grads = None
    solved = False
    if source_mode == "analytic":
        kind = _analytic_kind(cfg, "source", grid.dim)
        u = oracles.field_from_analytic(kind, grid)
        grads = oracles.gradient_fields_from_analytic(kind, grid)
    elif source_mode == "solve":
        solved = True
        p, scfg = build_param(cfg), build_solve_config(cfg)
        f = _source_field(cfg, grid)
        try:
            u, _ = _solve_one(grid, geom, p, scfg, f, writer, 0)
        except SolverError as exc:
            out = ExperimentOutcome(SOLVER_FAILURE, [f"error={exc}"])
            writer.verdict(out)
            return out
        writer.field("solution.rwf1", u)
        writer.flush_stats()
    else:
        raise ConfigError("probe.field must be 'analytic' or 'solve'")

    decay = diagnostics.surface_decay_probe(u, geom, lam, radii, alpha, mode,
                                            grads)
    variant = MinusLimit(lam) if mode in (
        diagnostics.PROBE_MINUS,
        diagnostics.PROBE_SOMMERFELD_MINUS) else PlusLimit(lam)
    rad = diagnostics.radiation_term(u, geom, variant, grads)
    r = np.asarray(node_radii(grid))
    safe_r = np.where(rad.mask, r, 1.0)
    tail_integrand = Field(grid, np.where(
        rad.mask,
        (rad.radial.values.real**2 + rad.radial.values.imag**2) / safe_r,
        0.0))
    rows = []
    for (R, value) in decay:
        mean_plus = diagnostics.mean_radiation_residual(
            u, lam, geom, R, diagnostics.PROBE_PLUS, grads)
        mean_minus = diagnostics.mean_radiation_residual(
            u, lam, geom, R, diagnostics.PROBE_MINUS, grads)
        cumulative = annulus_integral(tail_integrand, grid.h, R).real
        rows.append((R, value, mean_plus, mean_minus, float(cumulative)))
    writer.csv_rows("rows.csv",
                    ("radius", "decay_value", "mean_residual_plus",
                     "mean_residual_minus", "radial_tail_integral"), rows)

    notes = []
    if solved and len(rows) >= 2:
        total = rows[-1][4]
        step = total - rows[-2][4]
        fraction = abs(step) / abs(total) if total != 0 else 0.0
        limit = cfg.get_float("thresholds.tail_fraction", 0.1)
        notes += [f"tail_step_fraction={_fmt(fraction)}",
                  f"tail_fraction_limit={_fmt(limit)}"]
        out = ExperimentOutcome(PASS if fraction <= limit else FAIL, notes)
    else:
        out = ExperimentOutcome(COMPLETED, notes)
    writer.verdict(out)
    return out


def run_check_geometry(cfg: Config, out_dir, threads: int) -> ExperimentOutcome:
    writer = RunWriter(out_dir)
    writer.manifest("check-geometry", cfg)
    geom = build_geometry(cfg)
    ok, min_product, worst = check_interface_sign_condition(
        geom, cfg.get_float("geometry.check_radius", 2.0),
        cfg.get_int("geometry.sample_count", 10000))
    coords = list(worst) + [""] * (3 - len(worst))
    writer.csv_rows("rows.csv",
                    ("kind", "dim", "mu1", "mu2", "min_product", "sign_ok",
                     "worst_x1", "worst_x2", "worst_x3"),
                    [(geom.kind, geom.dim, geom.media.mu1, geom.media.mu2,
                      min_product, ok) + tuple(coords)])
    out = ExperimentOutcome(PASS if ok else FAIL,
                            [f"min_product={_fmt(min_product)}"])
    writer.verdict(out)
    return out


DRIVERS = {
    "solve": run_solve,
    "sweep-eta": run_sweep_eta,
    "scan-resolvent": run_scan_resolvent,
    "check-geometry": run_check_geometry,
    "verify-identity": run_verify_identity,
    "radiation-probe": run_radiation_probe,
}
