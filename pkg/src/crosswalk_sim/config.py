"""Run configuration: INI files, environment overrides, presets, echo.

Configuration is a flat key-value file with one section per subsystem.
Unknown sections or keys are rejected so typos fail loudly. Every key can
also be overridden from the environment as ``CWSIM_<SECTION>__<KEY>``
(for example ``CWSIM_CONTROLLER__K_S=1.5``). After resolution the full
config, defaults included, is echoed beside the outputs so a run can be
reproduced bit-for-bit.
"""

from __future__ import annotations

import configparser
import io
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional

from .core import ControllerParams, EntrySide, WorldGeometry
from .pedestrian import GapAcceptanceModel
from .pomdp import PomdpModel, RewardWeights
from .simulator import ControllerKind, Lane, Scenario

ENV_PREFIX = "CWSIM_"

DEFAULTS: dict[str, dict[str, object]] = {
    "world": {
        "n_lanes": 4,
        "lane_width": 3.5,
        "delta": 5.0,
        "crosswalk_depth": 3.0,
        "x_f_span": "full",  # full | half
    },
    "controller": {
        "k_s": 2.0,
        "t_delay": 0.0,
        "v_speedlimit": 4.5,
        "a_cmf": 2.0,
        "a_max": 9.0,
        "tau_max": 4.0,
    },
    "pedestrian": {
        "mu_gap": 4.0,
        "sigma2_gap": 2.5,
        "walk_speed": 1.2,
        "min_gap": 0.5,
        "max_trigger_gap": 6.0,
        "start_delay": 0.2,
        "near_setback": 2.5,
        "far_setback": 0.25,
    },
    "pomdp": {
        "w_legality": 10.0,
        "w_safety": 50.0,
        "w_efficient": 1.0,
        "w_smooth": 2.0,
        "gamma": 0.99,
        "dt": 0.25,
        "tol": 1e-6,
        "n_v_bins": 13,
        "n_d_bins": 51,
        "d_min": -5.0,
        "d_max": 45.0,
        "actions": "-4,-2,-1,0,1,2",
        "cache_dir": ".pomdp_cache",
    },
    "run": {
        "lane": "A",
        "side": "near",
        "controller": "hybrid",
        "trials": 750,
        "sweep": "",  # LO:STEP:HI, overrides trials when set
        "seed": 0,
        "initial_d": 50.0,
        "initial_v": -1.0,  # negative = use the speed limit
        "dt": 0.05,
        "t_delay_plant": 0.0,
        "max_sim_time": 60.0,
        "collision_radius": 1.0,
        "out_dir": "out",
    },
}

PRESETS: dict[str, dict[str, dict[str, object]]] = {
    # Two-lane experimental setup: slower gains, brake delay in both the
    # controller lead term and the plant, higher speed limit, and a
    # pedestrian population that acts on any offered gap.
    "experiment": {
        "world": {"n_lanes": 2},
        "controller": {"k_s": 1.0, "t_delay": 0.5, "v_speedlimit": 7.0},
        "pedestrian": {"max_trigger_gap": 10.0},
        "run": {"t_delay_plant": 0.5},
    },
}

# Gap accepted, entry side, expected dominant controller mode for the six
# scripted two-lane trials exercised by `replay --preset experiment`.
EXPERIMENT_TRIALS: list[tuple[float, str, str]] = [
    (4.0, "near", "Yielding"),
    (1.0, "near", "SpeedUp"),
    (7.0, "near", "Yielding"),
    (2.5, "near", "HardBraking"),
    (3.0, "far", "Yielding"),
    (1.0, "far", "SpeedUp"),
]


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved configuration; one attribute per section."""

    world: dict = field(default_factory=dict)
    controller: dict = field(default_factory=dict)
    pedestrian: dict = field(default_factory=dict)
    pomdp: dict = field(default_factory=dict)
    run: dict = field(default_factory=dict)

    # -- factories -----------------------------------------------------------

    def geometry(self) -> WorldGeometry:
        w = self.world
        width = w["n_lanes"] * w["lane_width"]
        span = w["x_f_span"]
        if span not in ("full", "half"):
            raise ConfigError(f"world.x_f_span must be full or half, got {span!r}")
        x_f = width if span == "full" else width / 2.0
        return WorldGeometry(
            n_lanes=w["n_lanes"],
            lane_width=w["lane_width"],
            x_f=x_f,
            delta=w["delta"],
            crosswalk_depth=w["crosswalk_depth"],
        )

    def controller_params(self) -> ControllerParams:
        return ControllerParams(**self.controller)

    def gap_model(self) -> GapAcceptanceModel:
        p = dict(self.pedestrian)
        sigma2 = p.pop("sigma2_gap")
        return GapAcceptanceModel(sigma_gap=math.sqrt(sigma2), **p)

    def reward_weights(self) -> RewardWeights:
        p = self.pomdp
        return RewardWeights(
            w_legality=p["w_legality"],
            w_safety=p["w_safety"],
            w_efficient=p["w_efficient"],
            w_smooth=p["w_smooth"],
        )

    def pomdp_model(self) -> PomdpModel:
        p = self.pomdp
        actions = tuple(float(tok) for tok in str(p["actions"]).split(","))
        return PomdpModel(
            self.controller_params(),
            self.geometry(),
            self.gap_model(),
            weights=self.reward_weights(),
            dt=p["dt"],
            discount=p["gamma"],
            n_v_bins=p["n_v_bins"],
            n_d_bins=p["n_d_bins"],
            d_range=(p["d_min"], p["d_max"]),
            actions=actions,
        )

    def scenario(
        self,
        lane: Optional[str] = None,
        side: Optional[str] = None,
        controller: Optional[str] = None,
        seed: Optional[int] = None,
    ) -> Scenario:
        r = self.run
        params = self.controller_params()
        initial_v = r["initial_v"] if r["initial_v"] >= 0.0 else params.v_speedlimit
        return Scenario(
            geometry=self.geometry(),
            params=params,
            gap_model=self.gap_model(),
            lane=Lane[(lane or r["lane"]).upper()],
            entry_side=EntrySide[(side or r["side"]).upper()],
            controller_kind=ControllerKind((controller or r["controller"]).lower()),
            initial_d=r["initial_d"],
            initial_v=initial_v,
            dt=r["dt"],
            t_delay_plant=r["t_delay_plant"],
            max_sim_time=r["max_sim_time"],
            seed=seed if seed is not None else r["seed"],
            collision_radius=r["collision_radius"],
        )

    def sweep_values(self) -> Optional[list[float]]:
        spec = str(self.run["sweep"]).strip()
        if not spec:
            return None
        try:
            lo, step, hi = (float(tok) for tok in spec.split(":"))
        except ValueError as exc:
            raise ConfigError(f"bad sweep spec {spec!r}, expected LO:STEP:HI") from exc
        if step <= 0 or hi < lo:
            raise ConfigError(f"bad sweep spec {spec!r}")
        n = int(round((hi - lo) / step))
        return [round(lo + k * step, 10) for k in range(n + 1)]


def _coerce(section: str, key: str, raw: str) -> object:
    default = DEFAULTS[section][key]
    try:
        if isinstance(default, bool):
            return raw.strip().lower() in ("1", "true", "yes", "on")
        if isinstance(default, int) and not isinstance(default, bool):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        return raw.strip()
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key}: cannot parse {raw!r}") from exc


def load_config(
    path: Optional[Path] = None,
    preset: Optional[str] = None,
    env: Optional[Mapping[str, str]] = None,
    cli_overrides: Optional[dict[str, dict[str, object]]] = None,
) -> RunConfig:
    """Resolve defaults -> preset -> file -> environment -> CLI flags."""
    sections = {name: dict(values) for name, values in DEFAULTS.items()}

    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; have {sorted(PRESETS)}")
        for name, values in PRESETS[preset].items():
            sections[name].update(values)

    if path is not None:
        parser = configparser.ConfigParser(interpolation=None)
        read = parser.read(path)
        if not read:
            raise ConfigError(f"config file not found: {path}")
        for name in parser.sections():
            if name not in sections:
                raise ConfigError(f"unknown config section [{name}]")
            for key, raw in parser.items(name):
                if key not in sections[name]:
                    raise ConfigError(f"unknown key {key!r} in section [{name}]")
                sections[name][key] = _coerce(name, key, raw)

    env = os.environ if env is None else env
    for var, raw in env.items():
        if not var.startswith(ENV_PREFIX):
            continue
        body = var[len(ENV_PREFIX):].lower()
        if "__" not in body:
            raise ConfigError(f"bad override {var}: expected {ENV_PREFIX}SECTION__KEY")
        name, key = body.split("__", 1)
        if name not in sections or key not in sections[name]:
            raise ConfigError(f"bad override {var}: no such key [{name}] {key}")
        sections[name][key] = _coerce(name, key, raw)

    if cli_overrides:
        for name, values in cli_overrides.items():
            for key, value in values.items():
                if value is None:
                    continue
                if name not in sections or key not in sections[name]:
                    raise ConfigError(f"bad override [{name}] {key}")
                sections[name][key] = value

    return RunConfig(**sections)


def resolved_ini(config: RunConfig) -> str:
    """Render the fully resolved config as an INI document."""
    parser = configparser.ConfigParser(interpolation=None)
    for name in DEFAULTS:
        parser[name] = {}
        for key, value in getattr(config, name).items():
            parser[name][key] = repr(value) if isinstance(value, float) else str(value)
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()


def write_config_echo(config: RunConfig, out_dir: Path) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "resolved_config.ini"
    path.write_text(resolved_ini(config), encoding="utf-8")
    return path
