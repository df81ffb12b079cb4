"""Experiment configuration, initial data, and run persistence."""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from . import diagnostics
from .biot_savart import KernelTable
from .evolution import RunResult, SimConfig, run
from .grid import GridSpec, ScalarField, _atomic_write, make_grid, save_field

SUPPORT_THRESHOLD = 1e-10   # relative cut defining the numerical support
MARGIN_FRACTION = 0.25      # support must stay this far (x extent) from boundaries

_DEFAULTS = {
    # initial data (reference Gaussian ring)
    "kind": "gaussian_ring",
    "amplitude": 1.0,
    "r0": 0.5,
    "z0": 0.0,
    "sigma": 0.15,
    "patch_radius": 0.3,
    "separation": 0.5,
    # domain
    "r_max": 2.0,
    "z_min": -2.0,
    "z_max": 2.0,
    "n_r": 96,
    "n_z": 192,
    # solver
    "n_theta": 64,
    "dt_cfl_factor": 0.9,
    "eps_h": 0.0,
    "t_end": 1.0,
    "cadence": 10,
    "evolve_omega_direct": False,
    # harness
    "snapshot_times": (),
    "out_dir": "out",
    "seed": 0,
}

_POSITIVE_INT_KEYS = {"n_r", "n_z", "n_theta", "cadence"}
_BOOL_KEYS = {"evolve_omega_direct"}
_INT_KEYS = {"seed"} | _POSITIVE_INT_KEYS
_STR_KEYS = {"kind", "out_dir"}
_KINDS = ("gaussian_ring", "yudovich_patch", "ring_pair")


@dataclass
class InitialData:
    kind: str = "gaussian_ring"
    amplitude: float = 1.0
    r0: float = 0.5
    z0: float = 0.0
    sigma: float = 0.15
    patch_radius: float = 0.3
    separation: float = 0.5


@dataclass
class ExperimentConfig:
    initial: InitialData = field(default_factory=InitialData)
    r_max: float = 2.0
    z_min: float = -2.0
    z_max: float = 2.0
    n_r: int = 96
    n_z: int = 192
    n_theta: int = 64
    dt_cfl_factor: float = 0.9
    eps_h: float = 0.0
    t_end: float = 1.0
    cadence: int = 10
    evolve_omega_direct: bool = False
    snapshot_times: tuple = ()
    out_dir: str = "out"
    seed: int = 0

    def grid(self) -> GridSpec:
        return make_grid(self.r_max, self.z_min, self.z_max, self.n_r, self.n_z)

    def sim_config(self) -> SimConfig:
        return SimConfig(self.grid(), self.dt_cfl_factor, self.n_theta,
                         self.eps_h, self.t_end, self.cadence,
                         self.evolve_omega_direct)


def build_initial(d: InitialData, g: GridSpec) -> ScalarField:
    """Initial q0 = omega0/r on the grid; rejects data leaking into the margin."""
    R = g.r[:, None]
    Z = g.z[None, :]
    a = d.amplitude
    if d.kind == "gaussian_ring":
        vals = a * np.exp(-((R - d.r0) ** 2 + (Z - d.z0) ** 2) / d.sigma ** 2)
    elif d.kind == "yudovich_patch":
        vals = a * ((R - d.r0) ** 2 + (Z - d.z0) ** 2 < d.patch_radius ** 2)
    elif d.kind == "ring_pair":
        vals = a * (np.exp(-((R - d.r0) ** 2 + (Z - d.z0 - d.separation) ** 2)
                           / d.sigma ** 2)
                    - np.exp(-((R - d.r0) ** 2 + (Z - d.z0 + d.separation) ** 2)
                             / d.sigma ** 2))
    else:
        raise ValueError(f"unknown initial data kind {d.kind!r}")
    f = ScalarField(g, vals.astype(np.float64), "q_omega_over_r")
    if a != 0 and support_margin_violation(f):
        raise ValueError(
            "initial data support reaches the outer boundary margin "
            f"({MARGIN_FRACTION:.0%} of the box)")
    return f


def support_margin_violation(f: ScalarField) -> bool:
    """True when the numerical support intrudes into the truncation margin."""
    vmax = float(np.max(np.abs(f.values)))
    if vmax == 0.0:
        return False
    g = f.grid
    mask = np.abs(f.values) > SUPPORT_THRESHOLD * vmax
    i, j = np.nonzero(mask)
    r_hi = g.r_max - MARGIN_FRACTION * g.r_max
    z_margin = MARGIN_FRACTION * (g.z_max - g.z_min)
    return bool(np.any(g.r[i] > r_hi)
                or np.any(g.z[j] < g.z_min + z_margin)
                or np.any(g.z[j] > g.z_max - z_margin))


# ---------------------------------------------------------------------------
# flat key=value config files

def parse_config(text: str) -> ExperimentConfig:
    values = dict(_DEFAULTS)
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key=value, got {raw!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in values:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        try:
            values[key] = _parse_value(key, val)
        except ValueError as exc:
            raise ValueError(f"line {lineno}: key {key!r}: {exc}") from None
    if values["kind"] not in _KINDS:
        raise ValueError(f"key 'kind': must be one of {_KINDS}")
    initial = InitialData(values["kind"], values["amplitude"], values["r0"],
                          values["z0"], values["sigma"], values["patch_radius"],
                          values["separation"])
    kwargs = {k: values[k] for k in values
              if k not in ("kind", "amplitude", "r0", "z0", "sigma",
                           "patch_radius", "separation")}
    return ExperimentConfig(initial=initial, **kwargs)


def _parse_value(key: str, val: str):
    if key in _BOOL_KEYS:
        if val.lower() in ("true", "1", "yes"):
            return True
        if val.lower() in ("false", "0", "no"):
            return False
        raise ValueError(f"not a boolean: {val!r}")
    if key in _INT_KEYS:
        iv = int(val)
        if key in _POSITIVE_INT_KEYS and iv <= 0:
            raise ValueError(f"must be positive, got {iv}")
        return iv
    if key in _STR_KEYS:
        return val
    if key == "snapshot_times":
        if not val:
            return ()
        return tuple(float(s) for s in val.split(","))
    return float(val)


def format_config(cfg: ExperimentConfig) -> str:
    """Canonical text form; parse_config(format_config(c)) == c."""
    d = cfg.initial
    pairs = [
        ("kind", d.kind), ("amplitude", d.amplitude), ("r0", d.r0),
        ("z0", d.z0), ("sigma", d.sigma), ("patch_radius", d.patch_radius),
        ("separation", d.separation),
        ("r_max", cfg.r_max), ("z_min", cfg.z_min), ("z_max", cfg.z_max),
        ("n_r", cfg.n_r), ("n_z", cfg.n_z),
        ("n_theta", cfg.n_theta), ("dt_cfl_factor", cfg.dt_cfl_factor),
        ("eps_h", cfg.eps_h), ("t_end", cfg.t_end), ("cadence", cfg.cadence),
        ("evolve_omega_direct", str(cfg.evolve_omega_direct).lower()),
        ("snapshot_times", ",".join(repr(t) for t in cfg.snapshot_times)),
        ("out_dir", cfg.out_dir), ("seed", cfg.seed),
    ]
    return "".join(f"{k} = {v!r}\n" if isinstance(v, float) else f"{k} = {v}\n"
                   for k, v in pairs)


# ---------------------------------------------------------------------------
# run orchestration

def run_experiment(cfg: ExperimentConfig, out_dir: str | None = None,
                   kt: KernelTable | None = None) -> tuple[RunResult, list]:
    """Execute the configured run, write CSV/snapshots, return result + verdicts."""
    out = out_dir if out_dir is not None else cfg.out_dir
    os.makedirs(out, exist_ok=True)
    g = cfg.grid()
    q0 = build_initial(cfg.initial, g)
    sim = cfg.sim_config()
    result = run(sim, q0, kt=kt, snapshot_times=cfg.snapshot_times)

    _atomic_write(os.path.join(out, "config.txt"),
                  format_config(cfg).encode("utf-8"))
    _atomic_write(os.path.join(out, "diagnostics.csv"),
                  diagnostics.format_csv(result.records).encode("utf-8"))
    for t, (q, omega) in sorted(result.snapshots.items()):
        tag = f"{t:.6f}"
        save_field(os.path.join(out, f"q_t{tag}"), q, time=t)
        save_field(os.path.join(out, f"omega_t{tag}"), omega, time=t)

    verdicts = run_checks(result.records)
    _atomic_write(os.path.join(out, "summary.txt"),
                  ("".join(v.line() + "\n" for v in verdicts)).encode("utf-8"))
    return result, verdicts


def run_checks(records: list) -> list:
    return [
        diagnostics.energy_check(records),
        diagnostics.max_principle_check(records),
        diagnostics.growth_check(records),
        diagnostics.sqrt_t_check(records),
        diagnostics.dr_omega_monitor(records),
    ]
