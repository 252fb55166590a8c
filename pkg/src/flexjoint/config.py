"""Scenario configuration: built-in defaults, YAML overrides, manifests.

Every section is optional in a config file; missing keys fall back to the
defaults below, unknown keys are rejected. Angles in configs are degrees.
Per-joint parameter sections (``friction``, ``hysteresis``) take either one
mapping shared by both joints or a list of two mappings.
"""
from __future__ import annotations

import copy
from pathlib import Path

import numpy as np
import yaml

from .control import CONTROL_I_VARIANTS, CONTROL_II_VARIANTS, GainSet
from .dynamics import ArmGeometry
from .linear import LinearJointModel
from .nonlinear import FrictionParams, HysteresisParams
from .observer import ObserverGains
from .plant import PlantParams, PlantState
from .trajectory import PolynomialTrajectory, Segment

DEFAULTS: dict = {
    "plant": {
        "geometry": {"m": 10.0, "l": 0.5, "I_link": 0.5, "g": 9.8, "h11_mass_ratio": 1.0},
        "J": [1.0, 1.0],
        "D": [1.0, 1.0],
        "encoder_bits": 14,
        "friction": {"Fc": 10.0, "Fs": 5.0, "B": 1.0, "V": 2.0, "mu": -2.0, "gamma": 500.0},
        "hysteresis": {"k1": 300.0, "k3": 50000.0, "w": 0.4, "psi": 300.0, "xi": 500.0, "eta": 1.5},
    },
    "simulation": {"dt": 1e-4, "control_period": 1e-3, "duration": None, "trace_every": 1},
    "initial": {"theta_deg": None},
    "trajectory": {
        "start_deg": [-90.0, 0.0],
        "segments": [
            {"duration": 1.1, "target_deg": [0.0, 90.0]},
            {"duration": 0.5},
            {"duration": 1.1, "target_deg": [-90.0, 0.0]},
            {"duration": 0.5},
        ],
    },
    "controller": {
        "law": "I",
        "variant": "FULL",
        "Kp": [1.3, 1.3],
        "Kd": [0.43, 0.43],
        "feedforward_lead": None,
        "curvature": True,
    },
    "observer": {"L": [100.0, 100.0], "method": "exact", "friction": None},
    "free_fall": {"duration": 1000.0, "theta_deg": [0.0, 0.0], "creep_after": 5.0, "settle_velocity": 1e-5},
    "tracking": {"duration": 4.0, "motion_window": 3.2, "terminal_window": 0.2},
    "curves": {"velocity_max": 10.0, "velocity_points": 2001, "loop_amplitude_deg": 0.25,
               "loop_cycles": 2, "loop_points_per_cycle": 4000},
    "rootlocus": {"Kp_min": 0.1, "Kp_max": 100.0, "points": 200, "H_hat": None, "pose_deg": [0.0, 0.0]},
}

JOINT_RANGE_DEG = 360.0


def _merge(base: dict, over: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, val in over.items():
        where = f"{path}.{key}" if path else key
        if key not in base:
            raise KeyError(f"unknown config key {where!r}")
        if isinstance(base[key], dict) and isinstance(val, dict):
            out[key] = _merge(base[key], val, where)
        else:
            out[key] = copy.deepcopy(val)
    return out


def _per_joint(section, cls, defaults: dict):
    if isinstance(section, dict):
        section = [section, section]
    if len(section) != 2:
        raise ValueError(f"{cls.__name__} needs one mapping or a list of two")
    return tuple(cls(**_merge(defaults, dict(s))) for s in section)


def parse_controller(name: str) -> tuple[str, str]:
    """"I:FULL", "II:FF+PD+VS" or an unambiguous bare variant name."""
    if ":" in name:
        law, variant = name.split(":", 1)
        law = law.strip().upper()
        valid = {"I": CONTROL_I_VARIANTS, "II": CONTROL_II_VARIANTS}.get(law)
        if valid is None or variant not in valid:
            raise ValueError(f"unknown controller {name!r}")
        return law, variant
    hits = [("I", name)] * (name in CONTROL_I_VARIANTS) + [("II", name)] * (name in CONTROL_II_VARIANTS)
    if len(hits) != 1:
        raise ValueError(f"controller {name!r} is unknown or ambiguous; use I:<variant> or II:<variant>")
    return hits[0]


class ScenarioConfig:
    """Fully resolved configuration with builders for the runtime objects."""

    def __init__(self, data: dict | None = None):
        self.data = _merge(DEFAULTS, data or {})
        self._validate()

    def _validate(self):
        d = self.data
        for sec in ("simulation",):
            for key in ("dt", "control_period"):
                if not d[sec][key] > 0:
                    raise ValueError(f"{sec}.{key} must be positive")
        if d["simulation"]["duration"] is not None and not d["simulation"]["duration"] > 0:
            raise ValueError("simulation.duration must be positive")
        if int(d["simulation"]["trace_every"]) < 1:
            raise ValueError("simulation.trace_every must be >= 1")
        for seg in d["trajectory"]["segments"]:
            if not seg.get("duration", 0) > 0:
                raise ValueError("segment durations must be positive")
            if set(seg) - {"duration", "target_deg"}:
                raise KeyError(f"unknown segment keys {sorted(set(seg) - {'duration', 'target_deg'})}")
        poses = [d["trajectory"]["start_deg"]] + [s["target_deg"] for s in d["trajectory"]["segments"] if s.get("target_deg")]
        if np.any(np.abs(np.asarray(poses, dtype=float)) > JOINT_RANGE_DEG):
            raise ValueError("waypoints outside the joint range")
        parse_controller(f"{d['controller']['law']}:{d['controller']['variant']}")
        self.plant_params()
        self.gains()
        self.observer_gains()

    @classmethod
    def load(cls, path=None, overrides: dict | None = None) -> ScenarioConfig:
        data = {}
        if path is not None:
            with open(path, encoding="utf-8") as fh:
                data = yaml.safe_load(fh) or {}
            if not isinstance(data, dict):
                raise ValueError(f"{path}: top level must be a mapping")
        cfg = cls(data)
        return cfg.with_overrides(overrides) if overrides else cfg

    def with_overrides(self, overrides: dict) -> ScenarioConfig:
        return ScenarioConfig(_merge(self.data, overrides))

    def dump(self, path) -> None:
        Path(path).write_text(yaml.safe_dump(self.data, sort_keys=False), encoding="utf-8")

    def plant_params(self) -> PlantParams:
        pl = self.data["plant"]
        return PlantParams(
            geometry=ArmGeometry(**pl["geometry"]),
            J=tuple(float(v) for v in pl["J"]),
            friction=_per_joint(pl["friction"], FrictionParams, DEFAULTS["plant"]["friction"]),
            hysteresis=_per_joint(pl["hysteresis"], HysteresisParams, DEFAULTS["plant"]["hysteresis"]),
            D=tuple(float(v) for v in pl["D"]),
            encoder_bits=int(pl["encoder_bits"]),
        )

    def trajectory(self) -> PolynomialTrajectory:
        tr = self.data["trajectory"]
        segs = [Segment(float(s["duration"]),
                        None if s.get("target_deg") is None else tuple(np.deg2rad(s["target_deg"])))
                for s in tr["segments"]]
        return PolynomialTrajectory(np.deg2rad(tr["start_deg"]), segs)

    def gains(self) -> GainSet:
        c = self.data["controller"]
        return GainSet(tuple(float(v) for v in c["Kp"]), tuple(float(v) for v in c["Kd"]))

    def observer_gains(self) -> ObserverGains:
        o = self.data["observer"]
        return ObserverGains(tuple(float(v) for v in o["L"]), o["method"])

    def observer_friction(self):
        f = self.data["observer"]["friction"]
        if f is None:
            return None
        return _per_joint(f, FrictionParams, DEFAULTS["plant"]["friction"])

    def initial_state(self, theta_deg=None) -> PlantState:
        """Links start aligned with the motors (zero torsion), at rest."""
        if theta_deg is None:
            theta_deg = self.data["initial"]["theta_deg"]
        theta = np.deg2rad(theta_deg) if theta_deg is not None else self.trajectory().start
        return PlantState.at_rest(theta)

    def linear_model(self) -> LinearJointModel:
        rl = self.data["rootlocus"]
        p = self.plant_params()
        m = LinearJointModel.from_parameters(p.geometry, p.J[0], p.friction[0], p.hysteresis[0],
                                             float(self.data["observer"]["L"][0]), np.deg2rad(rl["pose_deg"]))
        if rl["H_hat"] is not None:
            m = LinearJointModel(float(rl["H_hat"]), m.J, m.B, m.K, m.L)
        return m
