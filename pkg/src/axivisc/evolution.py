"""Time stepping for the reduced (r,z) system.

The evolved unknown is q = omega/r, which satisfies pure transport plus
vertical diffusion and therefore a discrete maximum principle: advection is
semi-Lagrangian with clamped bilinear sampling (monotone), vertical diffusion
is backward Euler (an M-matrix solve).  omega = r*q is derived and the
velocity is closed through the Biot-Savart kernels each step.  A direct omega
scheme with the stretching term is kept as a cross-check, and an optional
explicit horizontal viscosity eps_h regularizes the system.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .biot_savart import KernelTable, velocity_from_vorticity
from .grid import GridSpec, ODD_ROLES, ScalarField, VelocityField


@dataclass
class SimConfig:
    grid: GridSpec
    dt_cfl_factor: float = 0.9
    n_theta: int = 64
    eps_h: float = 0.0            # horizontal viscosity (the regularization 1/n)
    t_end: float = 1.0
    cadence: int = 10             # diagnostics every this many steps
    evolve_omega_direct: bool = False

    def __post_init__(self):
        if not (0 < self.dt_cfl_factor <= 1):
            raise ValueError(f"dt_cfl_factor must be in (0,1], got {self.dt_cfl_factor}")
        if self.eps_h < 0:
            raise ValueError(f"eps_h must be >= 0, got {self.eps_h}")


@dataclass
class SimState:
    t: float
    step_index: int
    q: ScalarField
    omega: ScalarField
    u: VelocityField


def initial_state(q0: ScalarField, config: SimConfig, kt: KernelTable) -> SimState:
    g = config.grid
    omega = ScalarField(g, g.r[:, None] * q0.values, "omega_theta")
    u = velocity_from_vorticity(omega, kt)
    return SimState(0.0, 0, q0, omega, u)


# ---------------------------------------------------------------------------
# interpolation with role-aware axis reflection and zero outer extension

def _sample(values: np.ndarray, role: str, grid: GridSpec,
            r_pts: np.ndarray, z_pts: np.ndarray, clamp: bool) -> np.ndarray:
    n_r, n_z = grid.n_r, grid.n_z
    odd = role in ODD_ROLES
    sign = np.where(r_pts < 0, -1.0, 1.0) if odd else 1.0
    rr = np.abs(r_pts)

    padded = np.zeros((n_r + 2, n_z + 2))
    padded[1:-1, 1:-1] = values
    padded[0, 1:-1] = -values[0] if odd else values[0]

    pr = np.clip(rr / grid.dr + 0.5, 0.0, n_r + 1.0)
    pz = np.clip((z_pts - grid.z_min) / grid.dz + 0.5, 0.0, n_z + 1.0)
    i0 = np.clip(np.floor(pr).astype(np.intp), 0, n_r)
    j0 = np.clip(np.floor(pz).astype(np.intp), 0, n_z)
    fr = pr - i0
    fz = pz - j0

    c00 = padded[i0, j0]
    c10 = padded[i0 + 1, j0]
    c01 = padded[i0, j0 + 1]
    c11 = padded[i0 + 1, j0 + 1]
    out = ((1 - fr) * (1 - fz) * c00 + fr * (1 - fz) * c10
           + (1 - fr) * fz * c01 + fr * fz * c11)
    if clamp:
        lo = np.minimum(np.minimum(c00, c10), np.minimum(c01, c11))
        hi = np.maximum(np.maximum(c00, c10), np.maximum(c01, c11))
        out = np.clip(out, lo, hi)
    return sign * out


def _trace_feet(u: VelocityField, dt: float):
    """RK2 backward characteristic feet for every node."""
    g = u.grid
    R = np.broadcast_to(g.r[:, None], (g.n_r, g.n_z))
    Z = np.broadcast_to(g.z[None, :], (g.n_r, g.n_z))
    r_mid = R - 0.5 * dt * u.u_r.values
    z_mid = Z - 0.5 * dt * u.u_z.values
    ur_m = _sample(u.u_r.values, "u_r", g, r_mid, z_mid, clamp=False)
    uz_m = _sample(u.u_z.values, "u_z", g, r_mid, z_mid, clamp=False)
    return R - dt * ur_m, Z - dt * uz_m


def _advect(f: ScalarField, u: VelocityField, dt: float) -> np.ndarray:
    r_f, z_f = _trace_feet(u, dt)
    return _sample(f.values, f.role, f.grid, r_f, z_f, clamp=True)


def _diffuse_z(values: np.ndarray, grid: GridSpec, dt: float) -> np.ndarray:
    """Backward-Euler vertical diffusion, zero-extension ghosts at the z walls.

    Absorbing walls match the zero-extension convention used everywhere else
    at the outer boundary; reflecting (zero-flux) walls make diffused fields
    pile up against z_min/z_max and visibly break the energy balance once the
    support reaches the truncation margin.
    """
    n_z = grid.n_z
    lam = dt / grid.dz ** 2
    ab = np.zeros((3, n_z))
    ab[0, 1:] = -lam
    ab[2, :-1] = -lam
    ab[1, :] = 1.0 + 2.0 * lam
    return solve_banded((1, 1), ab, values.T).T


def _horizontal_laplacian(values: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Axisymmetric Delta_h = d_rr + (1/r) d_r, even axis ghost, zero outer ghost."""
    n_r = grid.n_r
    dr = grid.dr
    ext = np.empty((n_r + 2, values.shape[1]))
    ext[1:-1] = values
    ext[0] = values[0]
    ext[-1] = 0.0
    d2 = (ext[2:] - 2 * ext[1:-1] + ext[:-2]) / dr ** 2
    d1 = (ext[2:] - ext[:-2]) / (2 * dr)
    return d2 + d1 / grid.r[:, None]


def cfl_dt(state: SimState, config: SimConfig, t_cap: float | None = None) -> float:
    """Stable step: advective CFL, the dz^2/2 bound, and the eps_h bound."""
    ur = state.u.u_r.values
    uz = state.u.u_z.values
    if not (np.all(np.isfinite(ur)) and np.all(np.isfinite(uz))):
        raise ValueError("velocity field is not finite")
    g = config.grid
    bounds = [g.dz ** 2 / 2.0]
    max_ur = np.max(np.abs(ur))
    max_uz = np.max(np.abs(uz))
    if max_ur > 0:
        bounds.append(g.dr / max_ur)
    if max_uz > 0:
        bounds.append(g.dz / max_uz)
    if config.eps_h > 0:
        bounds.append(0.25 * g.dr ** 2 / config.eps_h)
    dt = config.dt_cfl_factor * min(bounds)
    if t_cap is not None:
        dt = min(dt, t_cap)
    if dt <= 0:
        raise ValueError("non-positive time step")
    return dt


def advance_q(q: ScalarField, u: VelocityField, dt: float,
              eps_h: float = 0.0) -> ScalarField:
    """One split step of transport + implicit vertical diffusion (+ eps_h term)."""
    g = q.grid
    vals = _advect(q, u, dt)
    vals = _diffuse_z(vals, g, dt)
    if eps_h > 0:
        vals = vals + dt * eps_h * _horizontal_laplacian(vals, g)
    return ScalarField(g, vals, q.role)


def advance_omega_direct(omega: ScalarField, u: VelocityField,
                         dt: float) -> ScalarField:
    """Direct omega step: advection, integrating-factor stretching, diffusion.

    The stretching factor exp(dt * u^r/r) uses u frozen at step start, so
    positivity of omega is preserved exactly.
    """
    g = omega.grid
    vals = _advect(omega, u, dt)
    vals = vals * np.exp(dt * u.u_r.values / g.r[:, None])
    vals = _diffuse_z(vals, g, dt)
    return ScalarField(g, vals, omega.role)


def step(state: SimState, config: SimConfig, kt: KernelTable,
         t_cap: float | None = None) -> SimState:
    g = config.grid
    dt = cfl_dt(state, config, t_cap)
    if config.evolve_omega_direct:
        omega = advance_omega_direct(state.omega, state.u, dt)
        if config.eps_h > 0:
            omega = ScalarField(
                g, omega.values
                + dt * config.eps_h * _horizontal_laplacian(omega.values, g),
                "omega_theta")
        q = ScalarField(g, omega.values / g.r[:, None], "q_omega_over_r")
    else:
        q = advance_q(state.q, state.u, dt, config.eps_h)
        omega = ScalarField(g, g.r[:, None] * q.values, "omega_theta")
    u = velocity_from_vorticity(omega, kt)
    return SimState(state.t + dt, state.step_index + 1, q, omega, u)


@dataclass
class RunResult:
    records: list                      # DiagnosticsRecord per output time
    sup_q_per_step: np.ndarray         # sup|q| after every step, index 0 = initial
    snapshots: dict                    # time -> (q, omega) fields
    final_state: SimState


def run(config: SimConfig, q0: ScalarField, kt: KernelTable | None = None,
        snapshot_times: tuple = ()) -> RunResult:
    """Advance to t_end, collecting diagnostics at the configured cadence.

    Snapshot times (and t_end) are hit exactly by capping the step.  The loop
    is fully deterministic for a given config and initial field.
    """
    from . import diagnostics

    if config.t_end < 0:
        raise ValueError("t_end must be >= 0")
    if kt is None:
        kt = KernelTable(config.n_theta)
    state = initial_state(q0, config, kt)

    targets = sorted(set(float(s) for s in snapshot_times if 0 < s <= config.t_end)
                     | {config.t_end})
    records = [diagnostics.compute_record(state, first=None, prev=None)]
    sup_q = [float(np.max(np.abs(state.q.values)))]
    snaps = {0.0: (state.q, state.omega)}

    eps_t = 1e-12
    while state.t < config.t_end - eps_t:
        next_target = next(s for s in targets if s > state.t + eps_t)
        state = step(state, config, kt, t_cap=next_target - state.t)
        sup_q.append(float(np.max(np.abs(state.q.values))))
        at_target = abs(state.t - next_target) <= eps_t
        if at_target:
            state.t = next_target
        if state.step_index % config.cadence == 0 or at_target:
            records.append(diagnostics.compute_record(
                state, first=records[0], prev=records[-1]))
        if at_target:
            snaps[next_target] = (state.q, state.omega)
    return RunResult(records, np.asarray(sup_q), snaps, state)
