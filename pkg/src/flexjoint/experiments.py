"""Experiment runners behind the CLI. Each writes CSV artifacts plus a
manifest (the resolved config) into its output directory."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .config import ScenarioConfig
from .control import TrackingController
from .linear import characteristic_polynomial_derived, root_locus
from .nonlinear import friction_torque, hysteresis_loop, lost_motion
from .observer import BatchObserver
from .plant import SimTrace, simulate

RAD2DEG = 180.0 / np.pi
EXPERIMENTS = ("free-fall", "track", "curves", "rootlocus")


@dataclass
class ExperimentResult:
    name: str
    summary: dict[str, list[float]]
    files: list[Path] = field(default_factory=list)
    finite: bool = True
    trace: SimTrace | None = None
    loci: dict | None = None


def write_manifest(cfg: ScenarioConfig, out: Path, experiment: str) -> Path:
    path = out / "manifest.yaml"
    cfg.dump(path)
    head = f"# flexjoint {experiment}; kernel backend: {kernels.BACKEND_NAME}\n"
    path.write_text(head + path.read_text(encoding="utf-8"), encoding="utf-8")
    return path


def write_summary(summary: dict, path: Path) -> Path:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["metric", "joint1", "joint2"])
        for key, vals in summary.items():
            w.writerow([key, *(repr(float(v)) for v in np.atleast_1d(vals))])
    return path


def _finite(trace: SimTrace) -> bool:
    return bool(np.all(np.isfinite(trace.table())))


def settling_time(t, velocities, threshold: float) -> float:
    """Start of the final stretch where every |velocity| stays below
    ``threshold``; nan if the run ends above it."""
    above = np.any(np.abs(velocities) >= threshold, axis=1)
    if above[-1]:
        return float("nan")
    idx = np.nonzero(above)[0]
    return float(t[0] if idx.size == 0 else t[idx[-1] + 1])


def free_fall_summary(trace: SimTrace, creep_after: float, settle_velocity: float) -> dict:
    k5 = int(np.searchsorted(trace.t, creep_after))
    k5 = min(k5, len(trace.t) - 1)
    vel = np.hstack([trace.qd, trace.thetad])
    ts = settling_time(trace.t, vel, settle_velocity)
    return {
        "motor_creep_deg": (trace.theta[-1] - trace.theta[k5]) * RAD2DEG,
        "link_creep_deg": (trace.q[-1] - trace.q[k5]) * RAD2DEG,
        "motor_displacement_deg": (trace.theta[-1] - trace.theta[0]) * RAD2DEG,
        "final_torsion_deg": trace.delta[-1] * RAD2DEG,
        "final_speed_rad_s": np.abs(trace.thetad[-1]),
        "settling_time_s": [ts, ts],
    }


def run_free_fall(cfg: ScenarioConfig, out: Path | None = None) -> ExperimentResult:
    ff = cfg.data["free_fall"]
    sim = cfg.data["simulation"]
    duration = sim["duration"] if sim["duration"] is not None else ff["duration"]
    p = cfg.plant_params()
    dt, tc = sim["dt"], sim["control_period"]
    obs = BatchObserver(cfg.observer_gains(), cfg.observer_friction() or p.friction, p.J, p.hysteresis, tc)
    try:
        trace = simulate(p, cfg.initial_state(ff["theta_deg"]), duration, None, dt, tc, observer=obs)
    except FloatingPointError:
        return ExperimentResult("free-fall", {}, finite=False)
    finite = _finite(trace)
    summary = free_fall_summary(trace, ff["creep_after"], ff["settle_velocity"])
    res = ExperimentResult("free-fall", summary, finite=finite, trace=trace)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        trace.to_csv(out / "trace.csv", every=int(sim["trace_every"]))
        res.files = [out / "trace.csv", write_summary(summary, out / "summary.csv"),
                     write_manifest(cfg, out, "free-fall")]
    return res


def motion_mask(traj, t) -> np.ndarray:
    """True while the reference is moving (transients)."""
    d = traj.derivatives(t)
    return np.any(np.abs(d[1]) > 0.0, axis=1)


def tracking_summary(trace: SimTrace, traj, motion_window: float, terminal_window: float) -> dict:
    e = (traj(trace.t) - trace.q) * RAD2DEG
    moving = motion_mask(traj, trace.t)
    win = trace.t <= motion_window + 1e-12
    term = trace.t >= trace.t[-1] - terminal_window - 1e-12
    return {
        "max_abs_error_deg": np.abs(e).max(axis=0),
        "max_abs_error_transient_deg": np.abs(e[moving]).max(axis=0) if moving.any() else np.zeros(2),
        "rms_error_deg": np.sqrt(np.mean(e[win] ** 2, axis=0)),
        "terminal_error_deg": np.abs(e[term]).max(axis=0),
        "max_torsion_deg": np.abs(trace.delta).max(axis=0) * RAD2DEG,
    }


def build_controller(cfg: ScenarioConfig, law: str, variant: str, duration: float) -> TrackingController:
    c = cfg.data["controller"]
    p = cfg.plant_params()
    return TrackingController(
        law, variant, p, cfg.trajectory(), duration,
        control_period=cfg.data["simulation"]["control_period"], gains=cfg.gains(),
        observer_gains=cfg.observer_gains(), observer_friction=cfg.observer_friction(),
        curvature=bool(c["curvature"]), feedforward_lead=c["feedforward_lead"],
    )


def run_tracking(cfg: ScenarioConfig, out: Path | None = None) -> ExperimentResult:
    tk = cfg.data["tracking"]
    sim = cfg.data["simulation"]
    duration = sim["duration"] if sim["duration"] is not None else tk["duration"]
    c = cfg.data["controller"]
    law, variant = c["law"], c["variant"]
    traj = cfg.trajectory()
    try:
        ctl = build_controller(cfg, law, variant, duration)
        trace = simulate(cfg.plant_params(), cfg.initial_state(), duration, ctl, sim["dt"], sim["control_period"])
    except FloatingPointError:
        return ExperimentResult("track", {}, finite=False)
    summary = tracking_summary(trace, traj, tk["motion_window"], tk["terminal_window"])
    res = ExperimentResult("track", summary, finite=_finite(trace), trace=trace)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        every = int(sim["trace_every"])
        trace.to_csv(out / "trace.csv", every=every)
        qr = traj(trace.t)
        err = np.column_stack([trace.t, qr, qr - trace.q])[::every]
        with open(out / "error.csv", "w", encoding="utf-8", newline="") as fh:
            fh.write("t,qr1,qr2,e1,e2\n")
            np.savetxt(fh, err, fmt="%.15g", delimiter=",")
        res.files = [out / "trace.csv", out / "error.csv", write_summary(summary, out / "summary.csv"),
                     write_manifest(cfg, out, f"track {law}:{variant}")]
    return res


def friction_curve(cfg: ScenarioConfig) -> np.ndarray:
    cv = cfg.data["curves"]
    p = cfg.plant_params()
    v = np.linspace(-cv["velocity_max"], cv["velocity_max"], int(cv["velocity_points"]))
    return np.column_stack([v] + [friction_torque(v, p.friction[j]) for j in range(2)])


def hysteresis_curve(cfg: ScenarioConfig) -> np.ndarray:
    """Sinusoidal torsion sweep from the virgin state, ``loop_cycles`` cycles."""
    cv = cfg.data["curves"]
    p = cfg.plant_params()
    n = int(cv["loop_points_per_cycle"])
    k = np.arange(int(cv["loop_cycles"]) * n + 1)
    d = cv["loop_amplitude_deg"] * np.sin(2.0 * np.pi * k / n)
    taus = [hysteresis_loop(d, p.hysteresis[j])[0] for j in range(2)]
    return np.column_stack([k / n, d, *taus])


def loop_area(delta, tau) -> float:
    """Closed-loop integral of tau d(delta); positive for a dissipative loop."""
    return float(np.sum(0.5 * (tau[1:] + tau[:-1]) * np.diff(delta)))


def run_curves(cfg: ScenarioConfig, out: Path | None = None) -> ExperimentResult:
    fr = friction_curve(cfg)
    hy = hysteresis_curve(cfg)
    n = int(cfg.data["curves"]["loop_points_per_cycle"])
    last = slice(len(hy) - 1 - n, len(hy))
    p = cfg.plant_params()
    summary = {
        "loop_area_Nm_deg": [loop_area(hy[last, 1], hy[last, 2 + j]) for j in range(2)],
        "loop_closure_Nm": [abs(hy[-1, 2 + j] - hy[-1 - n, 2 + j]) for j in range(2)] if len(hy) > n + 1 else [np.nan] * 2,
        "lost_motion_deg": [lost_motion(p.hysteresis[j]) for j in range(2)],
        "friction_at_zero_Nm": [float(friction_torque(0.0, p.friction[j])) for j in range(2)],
    }
    res = ExperimentResult("curves", summary)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "friction.csv", "w", encoding="utf-8", newline="") as fh:
            fh.write("thetad,f1,f2\n")
            np.savetxt(fh, fr, fmt="%.15g", delimiter=",")
        with open(out / "hysteresis.csv", "w", encoding="utf-8", newline="") as fh:
            fh.write("cycle,delta_deg,tau1,tau2\n")
            np.savetxt(fh, hy, fmt="%.15g", delimiter=",")
        res.files = [out / "friction.csv", out / "hysteresis.csv", write_summary(summary, out / "summary.csv"),
                     write_manifest(cfg, out, "curves")]
    return res


def kp_grid(cfg: ScenarioConfig) -> np.ndarray:
    rl = cfg.data["rootlocus"]
    n = int(rl["points"])
    if n < 1:
        raise ValueError("rootlocus.points must be >= 1")
    if n == 1:
        return np.array([float(rl["Kp_min"])])
    return np.geomspace(rl["Kp_min"], rl["Kp_max"], n)


def locus_table(locus) -> tuple[list[str], np.ndarray]:
    n = max(len(r) for _, r in locus)
    header = ["Kp"] + [f"{c}{i + 1}" for i in range(n) for c in ("re", "im")]
    rows = np.full((len(locus), 1 + 2 * n), np.nan)
    for k, (kp, r) in enumerate(locus):
        rows[k, 0] = kp
        rows[k, 1:1 + 2 * len(r):2] = r.real
        rows[k, 2:2 + 2 * len(r):2] = r.imag
    return header, rows


def run_rootlocus(cfg: ScenarioConfig, out: Path | None = None) -> ExperimentResult:
    m = cfg.linear_model()
    grid = kp_grid(cfg)
    loci = {form: root_locus(m, grid, form) for form in ("derived", "gain_form")}
    summary = {
        f"{form}_max_real_part": [max(float(r.real.max()) for _, r in loc)] * 2 for form, loc in loci.items()
    }
    summary["derived_degree"] = [characteristic_polynomial_derived(m, grid[0]).degree] * 2
    res = ExperimentResult("rootlocus", summary, loci=loci)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        for form, loc in loci.items():
            header, rows = locus_table(loc)
            path = out / f"rootlocus_{form}.csv"
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(",".join(header) + "\n")
                np.savetxt(fh, rows, fmt="%.15g", delimiter=",")
            res.files.append(path)
        res.files += [write_summary(summary, out / "summary.csv"), write_manifest(cfg, out, "rootlocus")]
    return res


RUNNERS = {"free-fall": run_free_fall, "track": run_tracking, "curves": run_curves, "rootlocus": run_rootlocus}
