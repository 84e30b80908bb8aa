"""Sweep driver, shear-verification pipeline, and report emission.

A sweep runs the paired solvers once per viscosity with everything else
pinned, evaluates the layer criteria, and fits the convergence rate of
the sup-in-time velocity gap.  All report files are byte-deterministic
for a fixed config and seed: floats are written with repr, rows follow
the config order, and nothing records wall-clock time.
"""

from __future__ import annotations

import configparser
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._version import __version__
from .analysis import ErrorSeries, calibrate_bound_constant, error_series, fit_rate
from .criteria import (
    CRITERIA_CSV_HEADER,
    CriterionReport,
    LayerSpec,
    MSchedule,
    evaluate_criteria,
    layer_height,
)
from .grid import ScalarField, VectorField, make_channel_grid, strength_for_min_spacing
from .initial_data import shear_profile_exp
from .solvers import FlowState, SimulationConfig, Trajectory, run_simulation
from .solvers import ShearFlow

__all__ = [
    "SweepConfig",
    "sweep_config_from_dict",
    "parse_config",
    "NuRecord",
    "SweepResult",
    "run_sweep",
    "emit_report",
    "ShearStudyResult",
    "shear_limit_study",
    "emit_shear_report",
]


@dataclass
class SweepConfig:
    """Everything a sweep needs, independent of nu."""

    nx: int = 128
    ny: int = 193
    period: float = 2.0 * np.pi
    height: float = 6.0
    clustering: str = "tanh"
    strength: float = 2.0
    dt: float = 2e-3
    t_final: float = 0.5
    n_outputs: int = 10
    preset: str = "shear"
    amplitude: float = 1.0
    seed: int = 0
    preset_options: dict = field(default_factory=dict)
    nu_values: tuple = (1e-2, 1e-3, 1e-4)
    jobs: int = 0  # 0 = auto (ILIM_JOBS env, else available cores)
    m_form: str = "power"
    m_c: float = 1.0
    m_a: float = 0.5
    layer_c: float = 10.0
    r: float = 2.0
    use_du1dy: bool = False

    def schedule(self) -> MSchedule:
        return MSchedule(form=self.m_form, c=self.m_c, a=self.m_a)

    def layer_spec(self) -> LayerSpec:
        return LayerSpec(C=self.layer_c, r=self.r, use_du1dy=self.use_du1dy)

    def simulation_config(self, nu: float) -> SimulationConfig:
        return SimulationConfig(
            nx=self.nx, ny=self.ny, period=self.period, height=self.height,
            clustering=self.clustering, strength=self.strength, nu=nu,
            dt=self.dt, t_final=self.t_final, n_outputs=self.n_outputs,
            preset=self.preset, amplitude=self.amplitude, seed=self.seed,
            preset_options=dict(self.preset_options),
        ).validate()

    def to_dict(self) -> dict:
        return {
            "grid": {
                "nx": self.nx, "ny": self.ny, "period": self.period,
                "height": self.height, "clustering": self.clustering,
                "strength": self.strength,
            },
            "time": {"dt": self.dt, "t_final": self.t_final,
                     "n_outputs": self.n_outputs},
            "data": {"preset": self.preset, "amplitude": self.amplitude,
                     "seed": self.seed, **self.preset_options},
            "sweep": {"nu": list(self.nu_values), "jobs": self.jobs},
            "schedule": {"form": self.m_form, "c": self.m_c, "a": self.m_a},
            "layer": {"C": self.layer_c,
                      "r": "inf" if np.isinf(self.r) else float(self.r),
                      "use_du1dy": self.use_du1dy},
        }


def sweep_config_from_dict(d: dict) -> SweepConfig:
    """Inverse of SweepConfig.to_dict (manifest round-trip)."""
    cfg = SweepConfig()
    g, t, s, sch, lay = (d["grid"], d["time"], d["sweep"], d["schedule"],
                         d["layer"])
    cfg.nx, cfg.ny = int(g["nx"]), int(g["ny"])
    cfg.period, cfg.height = float(g["period"]), float(g["height"])
    cfg.clustering, cfg.strength = g["clustering"], float(g["strength"])
    cfg.dt, cfg.t_final = float(t["dt"]), float(t["t_final"])
    cfg.n_outputs = int(t["n_outputs"])
    data = dict(d["data"])
    cfg.preset = data.pop("preset")
    cfg.amplitude = float(data.pop("amplitude"))
    cfg.seed = int(data.pop("seed"))
    cfg.preset_options = data
    cfg.nu_values = tuple(float(v) for v in s["nu"])
    cfg.jobs = int(s["jobs"])
    cfg.m_form, cfg.m_c, cfg.m_a = sch["form"], float(sch["c"]), float(sch["a"])
    cfg.layer_c = float(lay["C"])
    cfg.r = _parse_r(str(lay["r"]))
    cfg.use_du1dy = bool(lay["use_du1dy"])
    return cfg


_CONFIG_SCHEMA = {
    "grid": {"nx": int, "ny": int, "period": float, "height": float,
             "clustering": str, "strength": float},
    "time": {"dt": float, "t_final": float, "n_outputs": int},
    "data": None,  # preset/amplitude/seed plus free-form preset options
    "sweep": {"nu": "floats", "jobs": int},
    "schedule": {"form": str, "c": float, "a": float},
    "layer": {"C": float, "r": "r", "use_du1dy": bool},
}

_FIELD_BY_KEY = {
    ("grid", "nx"): "nx", ("grid", "ny"): "ny", ("grid", "period"): "period",
    ("grid", "height"): "height", ("grid", "clustering"): "clustering",
    ("grid", "strength"): "strength",
    ("time", "dt"): "dt", ("time", "t_final"): "t_final",
    ("time", "n_outputs"): "n_outputs",
    ("sweep", "nu"): "nu_values", ("sweep", "jobs"): "jobs",
    ("schedule", "form"): "m_form", ("schedule", "c"): "m_c",
    ("schedule", "a"): "m_a",
    ("layer", "C"): "layer_c", ("layer", "r"): "r",
    ("layer", "use_du1dy"): "use_du1dy",
}


def _parse_r(text: str) -> float:
    return np.inf if text.strip().lower() in ("inf", "infinity") else float(text)


def parse_config(path) -> SweepConfig:
    """Read an INI sweep config, rejecting unknown sections and keys."""
    cp = configparser.ConfigParser()
    cp.optionxform = str  # keys are case-sensitive ([layer] C vs [schedule] c)
    read = cp.read(path)
    if not read:
        raise ValueError(f"config file {path!r} not found or unreadable")
    cfg = SweepConfig()
    for section in cp.sections():
        if section not in _CONFIG_SCHEMA:
            raise ValueError(f"unknown config section [{section}]")
        schema = _CONFIG_SCHEMA[section]
        for key, text in cp.items(section):
            if section == "data":
                if key == "preset":
                    cfg.preset = text.strip()
                elif key == "amplitude":
                    cfg.amplitude = float(text)
                elif key == "seed":
                    cfg.seed = int(text)
                else:
                    try:
                        val = int(text)
                    except ValueError:
                        val = float(text)
                    cfg.preset_options[key] = val
                continue
            if key not in schema:
                raise ValueError(f"unknown config key {key!r} in [{section}]")
            kind = schema[key]
            if kind == "floats":
                val = tuple(float(v) for v in text.replace(",", " ").split())
            elif kind == "r":
                val = _parse_r(text)
            elif kind is bool:
                val = cp.getboolean(section, key)
            else:
                val = kind(text)
            setattr(cfg, _FIELD_BY_KEY[(section, key)], val)
    if not cfg.nu_values:
        raise ValueError("sweep needs at least one nu")
    if any(nu <= 0.0 for nu in cfg.nu_values):
        raise ValueError("sweep nu values must be positive")
    return cfg


@dataclass
class NuRecord:
    nu: float
    status: str
    message: str = ""
    times: np.ndarray | None = None
    err_sq: np.ndarray | None = None
    criteria: CriterionReport | None = None

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    @property
    def sup_err_sq(self) -> float:
        return float(self.err_sq.max())

    def error_series(self) -> ErrorSeries:
        return ErrorSeries(nu=self.nu, times=self.times, values=self.err_sq)


@dataclass
class SweepResult:
    config: SweepConfig
    records: list
    c_fit: float | None
    fit_sq: object
    fit: object


def _criteria_to_lists(rep: CriterionReport) -> dict:
    return {
        "times": rep.times.tolist(),
        "layer_heights": rep.layer_heights.tolist(),
        "layer_clamped": rep.layer_clamped.tolist(),
        "backflow_margin": rep.backflow_margin.tolist(),
        "cond_lhs": rep.cond_lhs.tolist(),
        "cond_rhs": rep.cond_rhs.tolist(),
        "cond_pass": rep.cond_pass.tolist(),
        "wall_vort_margin": rep.wall_vort_margin.tolist(),
        "under_resolved": rep.under_resolved.tolist(),
    }


def _criteria_from_lists(nu: float, d: dict) -> CriterionReport:
    return CriterionReport(
        nu=nu,
        times=np.array(d["times"]),
        layer_heights=np.array(d["layer_heights"]),
        layer_clamped=np.array(d["layer_clamped"], dtype=bool),
        backflow_margin=np.array(d["backflow_margin"]),
        cond_lhs=np.array(d["cond_lhs"]),
        cond_rhs=np.array(d["cond_rhs"]),
        cond_pass=np.array(d["cond_pass"], dtype=bool),
        wall_vort_margin=np.array(d["wall_vort_margin"]),
        under_resolved=np.array(d["under_resolved"], dtype=bool),
    )


def _sweep_worker(task):
    """Run one nu end to end; never raises (per-nu isolation)."""
    cfg_fields, nu = task
    try:
        cfg = SweepConfig(**cfg_fields)
        pair = run_simulation(cfg.simulation_config(nu))
        series = error_series(pair.ns, pair.euler)
        report = evaluate_criteria(
            pair.ns, pair.euler, cfg.schedule(), cfg.layer_spec()
        )
        return {
            "nu": nu,
            "status": "ok",
            "message": "",
            "times": series.times.tolist(),
            "err_sq": series.values.tolist(),
            "criteria": _criteria_to_lists(report),
        }
    except Exception as exc:  # noqa: BLE001 - isolate per-nu failures
        return {"nu": nu, "status": "failed", "message": str(exc)}


def _config_fields(cfg: SweepConfig) -> dict:
    d = {f: getattr(cfg, f) for f in (
        "nx", "ny", "period", "height", "clustering", "strength", "dt",
        "t_final", "n_outputs", "preset", "amplitude", "seed", "jobs",
        "m_form", "m_c", "m_a", "layer_c", "r", "use_du1dy",
    )}
    d["preset_options"] = dict(cfg.preset_options)
    d["nu_values"] = tuple(cfg.nu_values)
    return d


def run_sweep(config: SweepConfig, jobs: int | None = None) -> SweepResult:
    """Run the sweep, one isolated paired run per nu.

    Worker count precedence: explicit `jobs` argument (the --jobs flag),
    else a positive jobs value in the config, else the ILIM_JOBS
    environment variable, else all available cores.  Results are ordered
    by the config's nu list regardless of worker scheduling, so output is
    identical for any worker count.  Raises RuntimeError if every nu
    failed.
    """
    if not config.nu_values:
        raise ValueError("sweep needs at least one nu")
    if jobs is None:
        if config.jobs > 0:
            jobs = config.jobs
        else:
            env = os.environ.get("ILIM_JOBS")
            jobs = int(env) if env is not None else (os.cpu_count() or 1)
    jobs = max(1, min(jobs, len(config.nu_values)))
    tasks = [(_config_fields(config), nu) for nu in config.nu_values]
    if jobs > 1:
        import multiprocessing

        with multiprocessing.Pool(jobs) as pool:
            raw = pool.map(_sweep_worker, tasks)
    else:
        raw = [_sweep_worker(t) for t in tasks]

    records = []
    for r in raw:
        if r["status"] == "ok":
            records.append(
                NuRecord(
                    nu=r["nu"],
                    status="ok",
                    times=np.array(r["times"]),
                    err_sq=np.array(r["err_sq"]),
                    criteria=_criteria_from_lists(r["nu"], r["criteria"]),
                )
            )
        else:
            records.append(NuRecord(nu=r["nu"], status="failed", message=r["message"]))
    ok = [r for r in records if r.ok]
    if not ok:
        detail = "; ".join(f"nu={r.nu!r}: {r.message}" for r in records)
        raise RuntimeError(f"every nu failed: {detail}")
    c_fit = None
    if ok:
        try:
            c_fit = calibrate_bound_constant(
                [r.error_series() for r in ok], config.schedule()
            )
        except ValueError:
            c_fit = None
    fit_sq = fit = None
    if len(ok) >= 3:
        sups = np.array([r.sup_err_sq for r in ok])
        nus = np.array([r.nu for r in ok])
        if np.all(sups > 0.0):
            fit_sq = fit_rate(nus, sups)
            fit = fit_rate(nus, np.sqrt(sups))
    return SweepResult(config=config, records=records, c_fit=c_fit,
                       fit_sq=fit_sq, fit=fit)


def _fit_dict(f):
    if f is None:
        return None
    return {
        "exponent": f.exponent,
        "prefactor": f.prefactor,
        "residual": f.residual,
        "n_samples": f.n_samples,
    }


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_dat(path, cols):
    with open(path, "w") as fh:
        for row in zip(*cols):
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def emit_report(result: SweepResult, directory) -> list:
    """Write the sweep report files; returns the file names written.

    Files: manifest.json (config + version), sweep.csv (one row per nu),
    criteria.csv (all per-time rows), rates.json (fits and calibrated
    constant), rate_points.dat and per-nu error_series_NN.dat /
    bound_series_NN.dat two-column files for plotting.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    schedule = result.config.schedule()
    names = []

    with open(directory / "sweep.csv", "w", newline="") as fh:
        fh.write(
            "nu,status,sup_error_sq,sup_error,bound_at_t_final,"
            "backflow_margin_min,cond_pass_all,wall_vort_margin_min,"
            "under_resolved_any,message\n"
        )
        for rec in result.records:
            if rec.ok:
                sup_sq = rec.sup_err_sq
                t_end = float(rec.times[-1])
                bound = (
                    result.c_fit
                    * (rec.nu * t_end + schedule.integral(rec.nu, t_end))
                    if result.c_fit is not None
                    else float("nan")
                )
                c = rec.criteria
                fh.write(
                    f"{rec.nu!r},ok,{sup_sq!r},{float(np.sqrt(sup_sq))!r},"
                    f"{bound!r},{float(c.backflow_margin.min())!r},"
                    f"{bool(np.all(c.cond_pass))!r},"
                    f"{float(c.wall_vort_margin.min())!r},"
                    f"{bool(np.any(c.under_resolved))!r},\n"
                )
            else:
                msg = rec.message.replace(",", ";").replace("\n", " ")
                fh.write(f"{rec.nu!r},failed,,,,,,,,{msg}\n")
    names.append("sweep.csv")

    with open(directory / "criteria.csv", "w", newline="") as fh:
        fh.write(CRITERIA_CSV_HEADER + "\n")
        for rec in result.records:
            if rec.ok:
                for row in rec.criteria.rows():
                    fh.write(",".join(repr(v) for v in row) + "\n")
    names.append("criteria.csv")

    ok = [r for r in result.records if r.ok]
    rates = {
        "nu": [r.nu for r in ok],
        "sup_error_sq": [r.sup_err_sq for r in ok],
        "sup_error": [float(np.sqrt(r.sup_err_sq)) for r in ok],
        "fit_error_sq": _fit_dict(result.fit_sq),
        "fit_error": _fit_dict(result.fit),
        "c_fit": result.c_fit,
        "failed_nu": [r.nu for r in result.records if not r.ok],
    }
    _write_json(directory / "rates.json", rates)
    names.append("rates.json")

    if ok:
        _write_dat(
            directory / "rate_points.dat",
            ([r.nu for r in ok], [float(np.sqrt(r.sup_err_sq)) for r in ok]),
        )
        names.append("rate_points.dat")
    for i, rec in enumerate(result.records):
        if not rec.ok:
            continue
        name = f"error_series_{i:02d}.dat"
        _write_dat(directory / name, (rec.times, rec.err_sq))
        names.append(name)
        if result.c_fit is not None:
            bname = f"bound_series_{i:02d}.dat"
            bounds = [
                result.c_fit * (rec.nu * t + schedule.integral(rec.nu, t))
                for t in rec.times
            ]
            _write_dat(directory / bname, (rec.times, bounds))
            names.append(bname)

    manifest = {
        "config": result.config.to_dict(),
        "version": __version__,
        "files": sorted(names + ["manifest.json"]),
    }
    _write_json(directory / "manifest.json", manifest)
    names.append("manifest.json")
    return names


# ---------------------------------------------------------------------------
# Shear verification pipeline (exact-series reference, no solver error)


@dataclass
class ShearStudyResult:
    nu_values: tuple
    times: np.ndarray
    err_sq: np.ndarray            # shape (n_nu, n_times), exact series values
    reports_by_r: dict            # r -> list of CriterionReport per nu
    c_fit: float
    calibration_nu: tuple
    holdout_bound_ok: dict        # nu -> bool for the non-calibration nus
    fit_sq: object
    fit: object
    params: dict

    @property
    def sup_err_sq(self) -> np.ndarray:
        return self.err_sq.max(axis=1)


def _shear_series_trajectory(flow: ShearFlow, grid, nu: float, times,
                             viscous: bool) -> Trajectory:
    states = []
    for t in times:
        t_eff = float(t) if viscous else 0.0
        w = flow.profile(grid.y, nu, t_eff)
        om = -flow.dprofile(grid.y, nu, t_eff)
        u1 = np.broadcast_to(w, grid.shape).copy()
        u1[:, 0] = 0.0
        states.append(
            FlowState(
                grid=grid,
                t=float(t),
                nu=nu if viscous else 0.0,
                velocity=VectorField(grid, u1, np.zeros(grid.shape)),
                vorticity=ScalarField(grid, np.broadcast_to(om, grid.shape).copy()),
            )
        )
    return Trajectory(
        grid=grid,
        scheme="shear-series" if viscous else "shear-series-steady",
        nu=nu if viscous else 0.0,
        dt=float(times[1] - times[0]),
        states=tuple(states),
    )


def shear_limit_study(
    nu_values=(1e-2, 1e-3, 1e-4, 1e-5),
    t_final: float = 1.0,
    n_times: int = 20,
    period: float = 2.0 * np.pi,
    height: float = 6.0,
    nx: int = 8,
    ny: int = 193,
    n_modes: int = 4096,
    profile=None,
    schedule: MSchedule | None = None,
    layer_c: float = 10.0,
    r_values=(1.0, 2.0, np.inf),
    n_calibration: int = 2,
) -> ShearStudyResult:
    """Inviscid-limit study on the exact shear pair.

    The viscous run is the eigenseries heat flow of the profile, the
    inviscid run is the frozen profile, so the squared velocity gap is
    exact (eigenmode orthogonality) and the study isolates the criteria
    and the rates from solver error.  Each nu gets a wall-clustered grid
    sized to its own layer so the strip is resolved at every positive
    output time; the layered bound constant is calibrated on the first
    `n_calibration` nu values and checked on the rest.
    """
    if not nu_values:
        raise ValueError("study needs at least one nu value")
    if any(nu <= 0.0 for nu in nu_values):
        raise ValueError("nu values must be positive")
    if schedule is None:
        schedule = MSchedule(form="power", c=1.0, a=0.5)
    flow = ShearFlow(v0=profile or shear_profile_exp, height=height,
                     n_modes=n_modes)
    times = np.linspace(0.0, t_final, n_times + 1)
    err_sq = np.zeros((len(nu_values), times.size))
    reports_by_r = {r: [] for r in r_values}
    for i, nu in enumerate(nu_values):
        h1 = layer_height(nu, float(times[1]), schedule, layer_c).value
        uniform_gap = height / (ny - 1)
        target = min(h1 / 3.0, 0.5 * uniform_gap) if h1 > 0.0 else 0.5 * uniform_gap
        strength = strength_for_min_spacing(ny, height, target)
        grid = make_channel_grid(nx, ny, period, height,
                                 clustering="tanh", strength=strength)
        ns = _shear_series_trajectory(flow, grid, nu, times, viscous=True)
        euler = _shear_series_trajectory(flow, grid, nu, times, viscous=False)
        err_sq[i] = period * np.array(
            [flow.l2_error_sq(nu, float(t)) for t in times]
        )
        for r in r_values:
            spec = LayerSpec(C=layer_c, r=r)
            reports_by_r[r].append(evaluate_criteria(ns, euler, schedule, spec))

    n_calibration = min(n_calibration, len(nu_values))
    calib = tuple(nu_values[:n_calibration])
    calib_series = [
        ErrorSeries(nu=nu_values[i], times=times, values=err_sq[i])
        for i in range(n_calibration)
    ]
    c_fit = calibrate_bound_constant(calib_series, schedule)
    holdout = {}
    for i in range(n_calibration, len(nu_values)):
        nu = nu_values[i]
        bounds = np.array(
            [c_fit * (nu * t + schedule.integral(nu, t)) for t in times]
        )
        holdout[nu] = bool(np.all(err_sq[i] <= bounds + 1e-300))
    sups = err_sq.max(axis=1)
    if len(nu_values) >= 3 and np.all(sups > 0.0):
        fit_sq = fit_rate(np.array(nu_values), sups)
        fit = fit_rate(np.array(nu_values), np.sqrt(sups))
    else:
        fit_sq = fit = None
    return ShearStudyResult(
        nu_values=tuple(nu_values),
        times=times,
        err_sq=err_sq,
        reports_by_r=reports_by_r,
        c_fit=c_fit,
        calibration_nu=calib,
        holdout_bound_ok=holdout,
        fit_sq=fit_sq,
        fit=fit,
        params={
            "t_final": t_final, "n_times": n_times, "period": period,
            "height": height, "nx": nx, "ny": ny, "n_modes": n_modes,
            "schedule": {"form": schedule.form, "c": schedule.c, "a": schedule.a},
            "layer_c": layer_c,
            "r_values": [("inf" if np.isinf(r) else r) for r in r_values],
            "n_calibration": n_calibration,
        },
    )


def emit_shear_report(result: ShearStudyResult, directory) -> list:
    """Write the shear-study report files (same family as emit_report)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    names = []

    primary_r = 2.0 if 2.0 in result.reports_by_r else next(iter(result.reports_by_r))
    with open(directory / "criteria.csv", "w", newline="") as fh:
        fh.write(CRITERIA_CSV_HEADER + "\n")
        for rep in result.reports_by_r[primary_r]:
            for row in rep.rows():
                fh.write(",".join(repr(v) for v in row) + "\n")
    names.append("criteria.csv")

    all_pass = {
        ("inf" if np.isinf(r) else repr(float(r))): bool(
            all(rep.all_pass for rep in reps)
        )
        for r, reps in result.reports_by_r.items()
    }
    rates = {
        "nu": list(result.nu_values),
        "sup_error_sq": [float(v) for v in result.sup_err_sq],
        "sup_error": [float(np.sqrt(v)) for v in result.sup_err_sq],
        "fit_error_sq": _fit_dict(result.fit_sq),
        "fit_error": _fit_dict(result.fit),
        "c_fit": result.c_fit,
        "calibration_nu": list(result.calibration_nu),
        "holdout_bound_ok": {repr(k): v for k, v in result.holdout_bound_ok.items()},
        "criteria_all_pass": all_pass,
    }
    _write_json(directory / "rates.json", rates)
    names.append("rates.json")

    _write_dat(
        directory / "rate_points.dat",
        (list(result.nu_values), [float(np.sqrt(v)) for v in result.sup_err_sq]),
    )
    names.append("rate_points.dat")
    for i, nu in enumerate(result.nu_values):
        name = f"error_series_{i:02d}.dat"
        _write_dat(directory / name, (result.times, result.err_sq[i]))
        names.append(name)

    manifest = {
        "pipeline": "shear-verify",
        "params": result.params,
        "version": __version__,
        "files": sorted(names + ["manifest.json"]),
    }
    _write_json(directory / "manifest.json", manifest)
    names.append("manifest.json")
    return names
