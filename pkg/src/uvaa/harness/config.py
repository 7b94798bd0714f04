"""Experiment configuration: one JSON document, strictly validated.

Unknown keys are rejected with the full key path; every parameter has a
default except ``master_seed``.  ``scenario`` presets select the swarm
size (small: 8 UAVs, large: 16); explicit keys override the preset.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from ..dynamics import RotorParams
from ..env import EnvConfig, MobilityConfig
from ..errors import ConfigError
from ..evolve import EvolutionConfig, NetworkConfig, RunBundle
from ..mobility import AreaBounds
from ..moppo import PpoConfig
from ..physics import ChannelParams, QuadratureSpec, free_space_k0

_NUMBER = (int, float)

# schema: key -> (type tuple or "section", default).  None default means
# "derived"; such keys may be null in the document.
_SCHEMA: dict[str, Any] = {
    "scenario": (str, "custom"),
    "master_seed": (int, None),
    "output_dir": (str, None),
    "env": {
        "n_uav": (int, 8),
        "horizon": (int, 300),
        "slot_duration": (_NUMBER, 1.0),
        "l_min": (_NUMBER, 0.0),
        "l_max": (_NUMBER, 100.0),
        "h_min": (_NUMBER, 60.0),
        "h_max": (_NUMBER, 90.0),
        "d_h_max": (_NUMBER, 20.0),
        "d_v_max": (_NUMBER, 10.0),
        "d_min": (_NUMBER, 0.5),
        "bs_position": (list, [100.0, 100.0]),
        "eps1": (_NUMBER, 1e-3),
        "eps2": (_NUMBER, 0.5),
        "eps3": (_NUMBER, 2.0),
        "clamp_negative_energy": (bool, False),
        "gain_method": (str, "exact"),
        "quadrature_n_theta": (int, 64),
        "quadrature_n_phi": (int, 128),
    },
    "channel": {
        "wavelength": (_NUMBER, 0.125),
        "k0": (_NUMBER, None),  # null -> free-space (wavelength/4pi)^2
        "alpha": (_NUMBER, 2.0),
        "rician_k": (_NUMBER, 10.0),
        "noise_psd_dbm_hz": (_NUMBER, -155.0),
        "bandwidth_hz": (_NUMBER, 1e6),
        "noise_power": (_NUMBER, None),  # null -> psd * bandwidth
        "antenna_efficiency": (_NUMBER, 1.0),
        "bs_sidelobe_gain": (_NUMBER, 0.1),
        "tx_power_per_uav": (_NUMBER, 0.1),
        "bs_tx_power": (_NUMBER, 10.0),
    },
    "rotor": {
        "blade_power": (_NUMBER, 79.86),
        "induced_power": (_NUMBER, 88.63),
        "tip_speed": (_NUMBER, 120.0),
        "hover_induced_velocity": (_NUMBER, 4.03),
        "fuselage_drag_ratio": (_NUMBER, 0.6),
        "air_density": (_NUMBER, 1.225),
        "rotor_solidity": (_NUMBER, 0.05),
        "rotor_disc_area": (_NUMBER, 0.503),
        "uav_mass": (_NUMBER, 2.0),
        "gravity": (_NUMBER, 9.8),
    },
    "mobility": {
        "mean_speed": (_NUMBER, 1.0),
        "mean_heading": (_NUMBER, 0.0),
        "memory": (_NUMBER, 0.8),
        "sigma_speed": (_NUMBER, 0.3),
        "sigma_heading": (_NUMBER, 0.3),
        "area": (list, [0.0, 100.0, 0.0, 100.0]),
    },
    "network": {
        "lstm_hidden": (int, 128),
        "fc_layers": (list, [256, 256, 256]),
        "initial_log_std": (_NUMBER, -0.5),
    },
    "ppo": {
        "gamma": (_NUMBER, 0.99),
        "gae_lambda": (_NUMBER, 0.95),
        "clip_epsilon": (_NUMBER, 0.2),
        "epochs": (int, 10),
        "episodes_per_iteration": (int, 4),
        "learning_rate": (_NUMBER, 1e-4),
        "bptt_chunk": (int, None),
    },
    "evolution": {
        "n_weights": (int, 15),
        "g_max": (int, 100),
        "n_warm": (int, 60),
        "n_evo": (int, 10),
        "b_num": (int, 50),
        "b_size": (int, 2),
        "k_can": (int, 5),
        "c": (_NUMBER, 2.0),
        "n_sectors": (int, 8),
        "n_eval": (int, 3),
    },
    "ablation": {
        "disable_lstm": (bool, False),
        "disable_hypersphere": (bool, False),
    },
}

_SCENARIO_PRESETS = {
    "small": {"env": {"n_uav": 8}},
    "large": {"env": {"n_uav": 16}},
    "custom": {},
}

_NULLABLE = {"channel.k0", "channel.noise_power", "ppo.bptt_chunk", "output_dir"}


def _check_type(path: str, value: Any, expected) -> None:
    if expected is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"'{path}' must be an integer, got {value!r}")
    elif expected is _NUMBER:
        if isinstance(value, bool) or not isinstance(value, _NUMBER):
            raise ConfigError(f"'{path}' must be a number, got {value!r}")
    elif not isinstance(value, expected):
        raise ConfigError(f"'{path}' must be {expected.__name__}, got {value!r}")


def _resolve_section(
    section_schema: dict, provided: Any, path: str
) -> dict[str, Any]:
    if provided is None:
        provided = {}
    if not isinstance(provided, dict):
        raise ConfigError(f"'{path}' must be an object")
    for key in provided:
        if key not in section_schema:
            raise ConfigError(f"unknown key '{path}.{key}'")
    resolved: dict[str, Any] = {}
    for key, (expected, default) in section_schema.items():
        full = f"{path}.{key}"
        if key in provided and provided[key] is not None:
            _check_type(full, provided[key], expected)
            resolved[key] = provided[key]
        elif key in provided and provided[key] is None:
            if full not in _NULLABLE:
                raise ConfigError(f"'{full}' may not be null")
            resolved[key] = None
        else:
            resolved[key] = default
    return resolved


def resolve_config(document: dict[str, Any]) -> dict[str, Any]:
    """Validate a raw config dict and fill every default.

    The result is JSON-serializable and round-trips: resolving an already
    resolved document is the identity.
    """
    if not isinstance(document, dict):
        raise ConfigError("config document must be a JSON object")
    for key in document:
        if key not in _SCHEMA:
            raise ConfigError(f"unknown key '{key}'")
    scenario = document.get("scenario", "custom")
    if scenario not in _SCENARIO_PRESETS:
        raise ConfigError(
            f"'scenario' must be one of {sorted(_SCENARIO_PRESETS)}, got {scenario!r}"
        )
    preset = _SCENARIO_PRESETS[scenario]

    if "master_seed" not in document or document["master_seed"] is None:
        raise ConfigError("'master_seed' is required")
    _check_type("master_seed", document["master_seed"], int)
    if document["master_seed"] < 0:
        raise ConfigError("'master_seed' must be non-negative")

    resolved: dict[str, Any] = {"scenario": scenario, "master_seed": document["master_seed"]}
    output_dir = document.get("output_dir")
    if output_dir is not None:
        _check_type("output_dir", output_dir, str)
    resolved["output_dir"] = output_dir

    for section, schema in _SCHEMA.items():
        if not isinstance(schema, dict):
            continue
        merged = dict(preset.get(section, {}))
        provided = document.get(section) or {}
        if not isinstance(provided, dict):
            raise ConfigError(f"'{section}' must be an object")
        merged.update(provided)
        resolved[section] = _resolve_section(schema, merged, section)

    # Derived channel quantities.
    ch = resolved["channel"]
    if ch["k0"] is None:
        ch["k0"] = free_space_k0(float(ch["wavelength"]))
    if ch["noise_power"] is None:
        psd_w_hz = 10.0 ** ((ch["noise_psd_dbm_hz"] - 30.0) / 10.0)
        ch["noise_power"] = psd_w_hz * float(ch["bandwidth_hz"])

    _validate_values(resolved)
    return resolved


def _validate_values(resolved: dict[str, Any]) -> None:
    env = resolved["env"]
    if len(env["bs_position"]) != 2 or not all(
        isinstance(v, _NUMBER) for v in env["bs_position"]
    ):
        raise ConfigError("'env.bs_position' must be [x, y]")
    if env["gain_method"] not in ("exact", "quadrature"):
        raise ConfigError("'env.gain_method' must be 'exact' or 'quadrature'")
    mob = resolved["mobility"]
    area = mob["area"]
    if len(area) != 4 or not all(isinstance(v, _NUMBER) for v in area):
        raise ConfigError("'mobility.area' must be [x_min, x_max, y_min, y_max]")
    net = resolved["network"]
    if not net["fc_layers"] or not all(
        isinstance(v, int) and not isinstance(v, bool) and v > 0 for v in net["fc_layers"]
    ):
        raise ConfigError("'network.fc_layers' must be a non-empty list of positive ints")
    try:
        build_bundle(resolved)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path) -> dict[str, Any]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return resolve_config(document)


@dataclass(frozen=True)
class Experiment:
    """Resolved configuration bound into typed runtime objects."""

    resolved: dict[str, Any]
    bundle: RunBundle
    output_dir: str | None


def build_bundle(resolved: dict[str, Any]) -> RunBundle:
    env = resolved["env"]
    ch = resolved["channel"]
    rotor = resolved["rotor"]
    mob = resolved["mobility"]
    net = resolved["network"]
    ppo = resolved["ppo"]
    evo = resolved["evolution"]
    ablation = resolved["ablation"]
    channel = ChannelParams(
        k0=float(ch["k0"]),
        alpha=float(ch["alpha"]),
        rician_k=float(ch["rician_k"]),
        noise_power=float(ch["noise_power"]),
        wavelength=float(ch["wavelength"]),
        antenna_efficiency=float(ch["antenna_efficiency"]),
        bs_sidelobe_gain=float(ch["bs_sidelobe_gain"]),
        tx_power_per_uav=float(ch["tx_power_per_uav"]),
        bs_tx_power=float(ch["bs_tx_power"]),
    )
    rotor_params = RotorParams(
        blade_power=float(rotor["blade_power"]),
        induced_power=float(rotor["induced_power"]),
        tip_speed=float(rotor["tip_speed"]),
        hover_induced_velocity=float(rotor["hover_induced_velocity"]),
        fuselage_drag_ratio=float(rotor["fuselage_drag_ratio"]),
        air_density=float(rotor["air_density"]),
        rotor_solidity=float(rotor["rotor_solidity"]),
        rotor_disc_area=float(rotor["rotor_disc_area"]),
        uav_mass=float(rotor["uav_mass"]),
        gravity=float(rotor["gravity"]),
    )
    mobility = MobilityConfig(
        mean_speed=float(mob["mean_speed"]),
        mean_heading=float(mob["mean_heading"]),
        memory=float(mob["memory"]),
        sigma_speed=float(mob["sigma_speed"]),
        sigma_heading=float(mob["sigma_heading"]),
        area=AreaBounds(*[float(v) for v in mob["area"]]),
    )
    env_config = EnvConfig(
        n_uav=env["n_uav"],
        horizon=env["horizon"],
        slot_duration=float(env["slot_duration"]),
        l_min=float(env["l_min"]),
        l_max=float(env["l_max"]),
        h_min=float(env["h_min"]),
        h_max=float(env["h_max"]),
        d_h_max=float(env["d_h_max"]),
        d_v_max=float(env["d_v_max"]),
        d_min=float(env["d_min"]),
        bs_position=(float(env["bs_position"][0]), float(env["bs_position"][1])),
        eps1=float(env["eps1"]),
        eps2=float(env["eps2"]),
        eps3=float(env["eps3"]),
        clamp_negative_energy=env["clamp_negative_energy"],
        gain_method=env["gain_method"],
        quadrature=QuadratureSpec(env["quadrature_n_theta"], env["quadrature_n_phi"]),
        channel=channel,
        rotor=rotor_params,
        mobility=mobility,
    )
    ppo_config = PpoConfig(
        gamma=float(ppo["gamma"]),
        gae_lambda=float(ppo["gae_lambda"]),
        clip_epsilon=float(ppo["clip_epsilon"]),
        epochs=ppo["epochs"],
        episodes_per_iteration=ppo["episodes_per_iteration"],
        learning_rate=float(ppo["learning_rate"]),
        bptt_chunk=ppo["bptt_chunk"],
    )
    evolution = EvolutionConfig(
        n_weights=evo["n_weights"],
        g_max=evo["g_max"],
        n_warm=evo["n_warm"],
        n_evo=evo["n_evo"],
        b_num=evo["b_num"],
        b_size=evo["b_size"],
        k_can=evo["k_can"],
        c=float(evo["c"]),
        n_sectors=evo["n_sectors"],
        n_eval=evo["n_eval"],
    )
    network = NetworkConfig(
        lstm_hidden=net["lstm_hidden"],
        fc_layers=tuple(net["fc_layers"]),
        initial_log_std=float(net["initial_log_std"]),
        recurrent=not ablation["disable_lstm"],
    )
    return RunBundle(
        env=env_config,
        ppo=ppo_config,
        evolution=evolution,
        network=network,
        master_seed=resolved["master_seed"],
        disable_hypersphere=ablation["disable_hypersphere"],
    )


def load_experiment(path: str | Path, output_dir_override: str | None = None) -> Experiment:
    resolved = load_config(path)
    if output_dir_override is not None:
        resolved = dict(resolved)
        resolved["output_dir"] = output_dir_override
    return Experiment(
        resolved=resolved,
        bundle=build_bundle(resolved),
        output_dir=resolved["output_dir"],
    )
