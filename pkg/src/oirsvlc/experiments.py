"""Experiment harness: configuration files, seeded sweeps, CSV emission.

Configs are flat key = value text with dotted section keys (diff friendly);
unknown keys are rejected and every validation error names the offending
key. An empty file yields the default desk-scale setup: a 4 x 4 x 3 m room,
a 24 x 24 reflecting grid with 0.1 m pitch on the y = 0 wall, two LEDs and
two PDs, 100 pilot slots per block.

Four runners emit CSV: the single-link gain sweep (fig4.csv), the coherence
profile (coherence.csv), the NMSE-versus-noise sweep (noise_sweep.csv), and
the parameter/complexity overhead table (overhead.csv). Identical config and
seed reproduce byte-identical files.
"""

from __future__ import annotations

import hashlib
import math
import os
from dataclasses import dataclass, fields, replace

import numpy as np

from .channel import SceneConfig, aperture_gain, build_csi_tensor, point_gain
from .coherence import CoherenceReport, coherence_distance, growth_rate_taylor, taylor_coeffs
from .errors import ConfigError, ShapeError, ZeroReferenceError
from .estimator import design_layout, flops_estimate, run_algorithm1
from .geometry import OirsGrid, alignment_normal, plane_basis_from

NMSE_DB_FLOOR = -300.0
_FIG4_STEP = 0.01        # meters; sweep covers [-1, 1]


def nmse(estimate, truth) -> float:
    """Normalized mean square error ||est - truth||_F^2 / ||truth||_F^2."""
    est = np.asarray(getattr(estimate, "gains", estimate), dtype=float)
    ref = np.asarray(getattr(truth, "gains", truth), dtype=float)
    if est.shape != ref.shape:
        raise ShapeError(f"shape mismatch: {est.shape} vs {ref.shape}")
    denom = float(np.sum(ref**2))
    if denom == 0.0:
        raise ZeroReferenceError("reference tensor is identically zero")
    return float(np.sum((est - ref) ** 2) / denom)


def nmse_db(value: float) -> float:
    """NMSE in dB, floored so that exact recovery stays finite in CSV."""
    if value <= 0.0:
        return NMSE_DB_FLOOR
    return max(10.0 * math.log10(value), NMSE_DB_FLOOR)


# --------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class ExperimentConfig:
    """Plain-data experiment description; scenes are built on demand."""

    room: tuple = (4.0, 4.0, 3.0)
    grid_rows: int = 24
    grid_cols: int = 24
    grid_center: tuple = (2.0, 0.0, 1.5)
    grid_pitch: float = 0.1
    grid_element_size: float = 0.05
    grid_reflectivity: float = 0.9
    led_positions: tuple = ((1.9, 2.0, 3.0), (2.1, 2.0, 3.0))
    led_normal: tuple = (0.0, 0.0, -1.0)
    lambertian_order: float = 1.0
    pd_positions: tuple = ((1.8, 2.0, 0.0), (2.2, 2.0, 0.0))
    pd_normal: tuple = (0.0, 0.0, 1.0)
    pd_side: float = 0.05
    fov_semi_angle: float = math.pi / 2
    gain_mode: str = "unit"
    xi_c: float = 0.04
    coherence_led: tuple = (1.0, 2.0, 3.0)
    coherence_pd: tuple = (2.0, 2.0, 0.0)
    coherence_element: tuple = (1.0, 2.0, 1.5)
    angular_samples: int = 360
    sigmas: tuple = (0.0, 5e-5, 7e-5, 1e-4, 3e-4, 1e-3)
    spacings: tuple = (2, 3, 4)
    trials: int = 100
    pilot_slots: int = 100
    pilot_power: float = 1.0
    master_seed: int = 20240917
    truth_model: str = "quadrature"
    quadrature_order: int = 8
    output_dir: str = "out"

    def build_scene(self) -> SceneConfig:
        """Desk-scale MIMO scene with the grid on the y = 0 wall."""
        grid = OirsGrid(
            center=self.grid_center,
            axis_u=(1.0, 0.0, 0.0),
            axis_v=(0.0, 0.0, 1.0),
            normal=(0.0, -1.0, 0.0),
            rows=self.grid_rows,
            cols=self.grid_cols,
            element_size=self.grid_element_size,
            element_pitch=self.grid_pitch,
            reflectivity=self.grid_reflectivity,
        )
        return SceneConfig(
            room=self.room,
            led_positions=self.led_positions,
            led_normal=self.led_normal,
            lambertian_order=self.lambertian_order,
            pd_positions=self.pd_positions,
            pd_normal=self.pd_normal,
            pd_side=self.pd_side,
            fov_semi_angle=self.fov_semi_angle,
            grid=grid,
            gain_mode=self.gain_mode,
        )

    def build_single_link(self):
        """Single LED/element/PD study geometry for the gain and coherence runs.

        The one-element grid is oriented to the element's aligned mirror
        normal, so its in-plane axes span the reflecting surface itself; the
        first axis is the room X axis projected onto that surface.
        """
        normal = alignment_normal(self.coherence_led, self.coherence_element,
                                  self.coherence_pd)
        axis_u, axis_v = plane_basis_from(normal)
        grid = OirsGrid(
            center=self.coherence_element,
            axis_u=axis_u,
            axis_v=axis_v,
            normal=normal,
            rows=1,
            cols=1,
            element_size=self.grid_element_size,
            element_pitch=self.grid_pitch,
            reflectivity=self.grid_reflectivity,
        )
        scene = SceneConfig(
            room=self.room,
            led_positions=(self.coherence_led,),
            led_normal=self.led_normal,
            lambertian_order=self.lambertian_order,
            pd_positions=(self.coherence_pd,),
            pd_normal=self.pd_normal,
            pd_side=self.pd_side,
            fov_semi_angle=self.fov_semi_angle,
            grid=grid,
            gain_mode=self.gain_mode,
        )
        link = scene.link(0, grid.center, 0)
        return scene, link


def _parse_float(key, text):
    try:
        return float(text)
    except ValueError as exc:
        raise ConfigError(f"{key}: not a number: {text!r}") from exc


def _parse_int(key, text):
    try:
        return int(text)
    except ValueError as exc:
        raise ConfigError(f"{key}: not an integer: {text!r}") from exc


def _parse_vec3(key, text):
    parts = [p for p in text.split(",") if p.strip()]
    if len(parts) != 3:
        raise ConfigError(f"{key}: expected three comma-separated numbers")
    return tuple(_parse_float(key, p) for p in parts)


def _parse_vec3_list(key, text):
    groups = [g for g in text.split(";") if g.strip()]
    if not groups:
        raise ConfigError(f"{key}: expected at least one x,y,z triple")
    return tuple(_parse_vec3(key, g) for g in groups)


def _parse_floats(key, text):
    parts = [p for p in text.split(",") if p.strip()]
    if not parts:
        raise ConfigError(f"{key}: expected a comma-separated list")
    return tuple(_parse_float(key, p) for p in parts)


def _parse_ints(key, text):
    return tuple(_parse_int(key, p) for p in text.split(",") if p.strip())


def _fmt_value(value) -> str:
    if isinstance(value, tuple):
        if value and isinstance(value[0], tuple):
            return "; ".join(", ".join(str(float(x)) for x in v) for v in value)
        if all(isinstance(x, int) for x in value):
            return ", ".join(str(int(x)) for x in value)
        return ", ".join(str(float(x)) for x in value)
    if isinstance(value, float):
        return str(value)
    return str(value)


# key -> (field name, parser)
_SCHEMA = {
    "scene.room": ("room", _parse_vec3),
    "scene.grid.rows": ("grid_rows", _parse_int),
    "scene.grid.cols": ("grid_cols", _parse_int),
    "scene.grid.center": ("grid_center", _parse_vec3),
    "scene.grid.pitch_m": ("grid_pitch", _parse_float),
    "scene.grid.element_size_m": ("grid_element_size", _parse_float),
    "scene.grid.reflectivity": ("grid_reflectivity", _parse_float),
    "scene.led_positions": ("led_positions", _parse_vec3_list),
    "scene.led_normal": ("led_normal", _parse_vec3),
    "scene.lambertian_order": ("lambertian_order", _parse_float),
    "scene.pd_positions": ("pd_positions", _parse_vec3_list),
    "scene.pd_normal": ("pd_normal", _parse_vec3),
    "scene.pd_side_m": ("pd_side", _parse_float),
    "scene.fov_semi_angle_rad": ("fov_semi_angle", _parse_float),
    "scene.gain_mode": ("gain_mode", lambda k, t: t),
    "coherence.xi_c": ("xi_c", _parse_float),
    "coherence.led": ("coherence_led", _parse_vec3),
    "coherence.pd": ("coherence_pd", _parse_vec3),
    "coherence.element": ("coherence_element", _parse_vec3),
    "coherence.angular_samples": ("angular_samples", _parse_int),
    "sweep.sigmas": ("sigmas", _parse_floats),
    "sweep.spacings": ("spacings", _parse_ints),
    "sweep.trials": ("trials", _parse_int),
    "pilots.slots": ("pilot_slots", _parse_int),
    "pilots.power": ("pilot_power", _parse_float),
    "seed": ("master_seed", _parse_int),
    "truth.model": ("truth_model", lambda k, t: t),
    "truth.quadrature_order": ("quadrature_order", _parse_int),
    "output.dir": ("output_dir", lambda k, t: t),
}

_FIELD_TO_KEY = {field: key for key, (field, _) in _SCHEMA.items()}


def _validate(config: ExperimentConfig) -> ExperimentConfig:
    def bad(key, msg):
        raise ConfigError(f"{key}: {msg}")

    if config.trials < 1:
        bad("sweep.trials", "must be >= 1")
    if any(s < 0 for s in config.sigmas):
        bad("sweep.sigmas", "noise levels must be >= 0")
    if any(s < 1 for s in config.spacings):
        bad("sweep.spacings", "spacings must be >= 1")
    if config.pilot_slots < 1:
        bad("pilots.slots", "must be >= 1")
    if config.pilot_power <= 0:
        bad("pilots.power", "must be positive")
    if config.xi_c <= 0:
        bad("coherence.xi_c", "must be positive")
    if config.angular_samples < 8:
        bad("coherence.angular_samples", "must be >= 8")
    if config.truth_model not in ("point", "quadrature"):
        bad("truth.model", "must be 'point' or 'quadrature'")
    if config.quadrature_order < 1:
        bad("truth.quadrature_order", "must be >= 1")
    if config.gain_mode not in ("unit", "lambertian"):
        bad("scene.gain_mode", "must be 'unit' or 'lambertian'")
    if config.grid_rows < 1 or config.grid_cols < 1:
        bad("scene.grid.rows", "grid must have positive dimensions")
    return config


def loads(text: str) -> ExperimentConfig:
    """Parse config text; missing keys take the desk-scale defaults."""
    values = {}
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key not in _SCHEMA:
            raise ConfigError(f"{key}: unknown key")
        if key in seen:
            raise ConfigError(f"{key}: duplicate key")
        seen.add(key)
        field_name, parser = _SCHEMA[key]
        values[field_name] = parser(key, val)
    return _validate(replace(ExperimentConfig(), **values))


def dumps(config: ExperimentConfig) -> str:
    """Serialize with sorted keys; loads(dumps(c)) equals c."""
    lines = []
    for f in sorted(fields(ExperimentConfig), key=lambda f: _FIELD_TO_KEY[f.name]):
        key = _FIELD_TO_KEY[f.name]
        lines.append(f"{key} = {_fmt_value(getattr(config, f.name))}")
    return "\n".join(lines) + "\n"


def load_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return loads(fh.read())


def config_hash(config: ExperimentConfig) -> str:
    return hashlib.sha256(dumps(config).encode()).hexdigest()


# --------------------------------------------------------------------------
# runners


def _footer(config: ExperimentConfig):
    return (f"# config_sha256={config_hash(config)} seed={config.master_seed}",)


def _write_csv(path, header, rows, comments):
    lines = [header]
    for row in rows:
        lines.append(",".join(str(int(x)) if isinstance(x, (int, np.integer))
                              else str(float(x)) for x in row))
    lines.extend(comments)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def run_coherence(config: ExperimentConfig):
    """Coherence report of the single-link geometry over its mirror plane."""
    scene, link = config.build_single_link()
    return coherence_distance(link, (scene.grid.axis_u, scene.grid.axis_v),
                              config.xi_c, config.angular_samples)


def write_coherence_csv(config: ExperimentConfig, report: CoherenceReport, path):
    rows = [(angle, length) for angle, length in report.per_direction_lengths]
    comments = (f"# d_c_m={float(report.d_c)}",) + _footer(config)
    _write_csv(path, "angle_rad,length_m", rows, comments)


def run_fig4(config: ExperimentConfig):
    """Normalized gain versus element shift along the surface's first axis.

    Returns (rows, d_c): rows of (shift_m, gain_point_norm, gain_quad_norm,
    gain_taylor_norm), each column normalized by its zero-shift value, and
    the coherence distance at the configured threshold.
    """
    scene, link = config.build_single_link()
    grid = scene.grid
    coeffs = taylor_coeffs(link)
    steps = int(round(1.0 / _FIG4_STEP))
    shifts = np.arange(-steps, steps + 1) * _FIG4_STEP
    direction = grid.axis_u

    def quad(shifted_link):
        return aperture_gain(shifted_link, grid.axis_u, grid.axis_v,
                             grid.element_size, config.quadrature_order,
                             scene.gain_mode, reflectivity=grid.reflectivity,
                             pd_side=scene.pd_side)

    p0 = point_gain(link, scene.gain_mode, reflectivity=grid.reflectivity,
                    pd_side=scene.pd_side)
    q0 = quad(link)
    rows = []
    for t in shifts:
        moved = link.shifted(t * direction)
        p = point_gain(moved, scene.gain_mode, reflectivity=grid.reflectivity,
                       pd_side=scene.pd_side)
        rows.append((float(t), p / p0, quad(moved) / q0,
                     1.0 + growth_rate_taylor(coeffs, t * direction)))
    report = run_coherence(config)
    return rows, float(report.d_c)


def write_fig4_csv(config: ExperimentConfig, rows, d_c, path):
    comments = (f"# d_c_m={float(d_c)}",) + _footer(config)
    _write_csv(path, "shift_m,gain_point_norm,gain_quad_norm,gain_taylor_norm",
               rows, comments)


def sweep_schemes(config: ExperimentConfig):
    """Baseline (spacing 1) followed by the configured sampling spacings."""
    return (1,) + tuple(config.spacings)


def run_noise_sweep(config: ExperimentConfig):
    """Trial-averaged NMSE for every (sigma, scheme) pair.

    Returns rows (sigma, spacing, nmse_db, trials); per-run seeds derive
    from the master seed, the scheme, the sigma index, and the trial index.
    """
    scene = config.build_scene()
    truth = build_csi_tensor(scene, config.truth_model, config.quadrature_order)
    rows = []
    for i_sigma, sigma in enumerate(config.sigmas):
        for spacing in sweep_schemes(config):
            total = 0.0
            for trial in range(config.trials):
                result = run_algorithm1(
                    scene, spacing, config.pilot_slots, sigma,
                    config.pilot_power,
                    seed=(config.master_seed, spacing, i_sigma, trial),
                    truth=truth)
                total += result.nmse
            rows.append((float(sigma), int(spacing),
                         nmse_db(total / config.trials), int(config.trials)))
    return rows


def write_noise_sweep_csv(config: ExperimentConfig, rows, path):
    _write_csv(path, "sigma,spacing,nmse_db,trials", rows, _footer(config))


def run_overhead_report(config: ExperimentConfig):
    """Parameter counts and estimation flops per scheme: rows
    (spacing, csi_params, flops_estimate)."""
    scene = config.build_scene()
    nt, nr = scene.n_leds, scene.n_pds
    rows = []
    for spacing in sweep_schemes(config):
        if spacing == 1 and max(nt, nr) > 1:
            blocks = scene.grid.n_elements
        else:
            blocks = design_layout(scene.grid, nt, nr, spacing).n_blocks
        rows.append((int(spacing), blocks * nt * nr,
                     flops_estimate(nt, nr, config.pilot_slots, blocks)))
    return rows


def write_overhead_csv(config: ExperimentConfig, rows, path):
    _write_csv(path, "spacing,csi_params,flops_estimate", rows, _footer(config))


def resolve_output_dir(config: ExperimentConfig, override=None) -> str:
    """CLI flag beats the OIRS_OUT_DIR environment variable beats the config."""
    if override:
        return str(override)
    env = os.environ.get("OIRS_OUT_DIR")
    if env:
        return env
    return config.output_dir
