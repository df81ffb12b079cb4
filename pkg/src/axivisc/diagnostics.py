"""Runtime verification of the a priori estimates.

Every inequality with an explicit constant (energy, the Gronwall bound on
Lebesgue norms, the gradient lemma with its derived constant 2/p, norm
monotonicity of q) is a pass/fail check.  Every inequality stated only up to
an unspecified constant is a bounded-ratio report: the ratio is emitted and
asserted finite/stable, never compared against an invented constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

from . import norms
from .biot_savart import ur_over_r
from .grid import ScalarField, ddr, ddz

INF = math.inf

# tolerances pinned at the reference resolution 96x192
ENERGY_SLACK = 0.02
GROWTH_SLACK = 0.05
LEMMA_SLACK = 0.05
NORM_MONOTONE_SLACK = 1e-3
SUP_MONOTONE_SLACK = 1e-12
SQRT_T_FACTOR = 10.0

GROWTH_EXPONENTS = (6 / 5, 3 / 2, 2.0)
MONOTONE_LORENTZ = ((3 / 2, 1.0), (6 / 5, 1.0), (2.0, 2.0), (6 / 5, 6 / 5))


@dataclass
class DiagnosticsRecord:
    t: float
    step_index: int
    # q = omega/r
    sup_q: float
    q_l65: float
    q_l32: float
    q_l2: float
    q_lorentz_32_1: float
    q_lorentz_65_1: float
    q_lorentz_2_2: float
    q_lorentz_65_65: float
    # omega
    omega_l65: float
    omega_l32: float
    omega_l2: float
    omega_linf: float
    omega_lorentz_32_1: float
    omega_lorentz_3_1: float
    # derivatives
    dz_omega_l2: float
    dz_omega_lorentz_32_1: float
    dz_q_lorentz_32_1: float
    dr_omega_lorentz_32_1: float
    # velocity quantities
    sup_u: float
    sup_ur: float
    sup_ur_over_r: float
    int_sup_ur_over_r: float       # trapezoid-in-t running integral
    dz_u_l2_sq: float
    twice_int_dz_u_l2_sq: float    # 2 * running integral of dz_u_l2_sq
    kinetic_energy: float          # ||u||_{L^2}^2
    # ratios
    energy_lhs: float
    growth_ratio_l65: float
    growth_ratio_l32: float
    growth_ratio_l2: float
    growth_ratio_lorentz_32_1: float
    sqrt_t_rho: float
    biot_u_ratio: float
    biot_ur_ratio: float
    biot_ur_over_r_ratio: float
    biot_mixed_ratio: float


CSV_COLUMNS = [f.name for f in fields(DiagnosticsRecord)]


def _ratio(num: float, den: float) -> float:
    if den == 0.0:
        return 0.0 if num == 0.0 else INF
    return num / den


def compute_record(state, first: DiagnosticsRecord | None,
                   prev: DiagnosticsRecord | None) -> DiagnosticsRecord:
    """All diagnostics at one instant; a pure function of the state."""
    q = state.q
    omega = state.omega
    u = state.u
    g = q.grid

    dz_omega = ddz(omega)
    dz_q = ddz(q)
    dr_omega = ddr(omega)
    uror = ur_over_r(omega, u)

    sup_q = float(np.max(np.abs(q.values)))
    sup_u = float(np.sqrt(np.max(u.u_r.values ** 2 + u.u_z.values ** 2)))
    sup_ur = float(np.max(np.abs(u.u_r.values)))
    sup_uror = float(np.max(np.abs(uror.values)))

    dz_ur = ddz(u.u_r).values
    dz_uz = ddz(u.u_z).values
    meas = g.cell_measure()
    dz_u_sq = float(np.sum(((dz_ur ** 2 + dz_uz ** 2) * meas).sum(axis=1)))
    kinetic = float(np.sum(((u.u_r.values ** 2 + u.u_z.values ** 2) * meas).sum(axis=1)))

    t = state.t
    if prev is None:
        int_uror = 0.0
        int_dzu2 = 0.0
    else:
        dt = t - prev.t
        int_uror = prev.int_sup_ur_over_r + 0.5 * dt * (prev.sup_ur_over_r + sup_uror)
        int_dzu2 = prev.twice_int_dz_u_l2_sq + dt * (prev.dz_u_l2_sq + dz_u_sq)

    omega_l65 = norms.lebesgue_norm(omega, 6 / 5)
    omega_l32 = norms.lebesgue_norm(omega, 3 / 2)
    omega_l2 = norms.lebesgue_norm(omega, 2.0)
    omega_lor_32_1 = norms.lorentz_norm(omega, (3 / 2, 1.0))
    omega_lor_3_1 = norms.lorentz_norm(omega, (3.0, 1.0))
    dz_omega_lor = norms.lorentz_norm(dz_omega, (3 / 2, 1.0))
    dz_q_lor = norms.lorentz_norm(dz_q, (3 / 2, 1.0))

    energy_lhs = kinetic + int_dzu2
    grow = math.exp(int_uror)
    if first is None:
        g65 = g32 = g2 = glor = 0.0
        rho = 0.0
    else:
        g65 = _ratio(omega_l65, first.omega_l65 * grow)
        g32 = _ratio(omega_l32, first.omega_l32 * grow)
        g2 = _ratio(omega_l2, first.omega_l2 * grow)
        glor = _ratio(omega_lor_32_1, first.omega_lorentz_32_1 * grow)
        rho = _ratio(int_uror, math.sqrt(t) * first.q_lorentz_32_1) if t > 0 else 0.0

    # p = 4/3 in the anisotropic bound: inner exponent p/(3-2p) = 4
    mixed = norms.mixed_norm(uror, INF, 4.0)
    dz_q_43 = norms.lorentz_norm(dz_q, (4 / 3, 1.0))

    return DiagnosticsRecord(
        t=t, step_index=state.step_index,
        sup_q=sup_q,
        q_l65=norms.lebesgue_norm(q, 6 / 5),
        q_l32=norms.lebesgue_norm(q, 3 / 2),
        q_l2=norms.lebesgue_norm(q, 2.0),
        q_lorentz_32_1=norms.lorentz_norm(q, (3 / 2, 1.0)),
        q_lorentz_65_1=norms.lorentz_norm(q, (6 / 5, 1.0)),
        q_lorentz_2_2=norms.lorentz_norm(q, (2.0, 2.0)),
        q_lorentz_65_65=norms.lorentz_norm(q, (6 / 5, 6 / 5)),
        omega_l65=omega_l65, omega_l32=omega_l32, omega_l2=omega_l2,
        omega_linf=norms.lebesgue_norm(omega, INF),
        omega_lorentz_32_1=omega_lor_32_1,
        omega_lorentz_3_1=omega_lor_3_1,
        dz_omega_l2=norms.lebesgue_norm(dz_omega, 2.0),
        dz_omega_lorentz_32_1=dz_omega_lor,
        dz_q_lorentz_32_1=dz_q_lor,
        dr_omega_lorentz_32_1=norms.lorentz_norm(dr_omega, (3 / 2, 1.0)),
        sup_u=sup_u, sup_ur=sup_ur, sup_ur_over_r=sup_uror,
        int_sup_ur_over_r=int_uror,
        dz_u_l2_sq=dz_u_sq,
        twice_int_dz_u_l2_sq=int_dzu2,
        kinetic_energy=kinetic,
        energy_lhs=energy_lhs,
        growth_ratio_l65=g65, growth_ratio_l32=g32, growth_ratio_l2=g2,
        growth_ratio_lorentz_32_1=glor,
        sqrt_t_rho=rho,
        biot_u_ratio=_ratio(sup_u, omega_lor_3_1),
        biot_ur_ratio=_ratio(sup_ur, dz_omega_lor),
        biot_ur_over_r_ratio=_ratio(sup_uror, dz_q_lor),
        biot_mixed_ratio=_ratio(mixed, dz_q_43),
    )


@dataclass
class CheckResult:
    name: str
    passed: bool | None     # None for report-only checks
    worst: float
    detail: str = ""

    def line(self) -> str:
        verdict = {True: "PASS", False: "FAIL", None: "REPORT"}[self.passed]
        msg = f"{self.name}: {verdict} (worst={self.worst:.6g})"
        if self.detail:
            msg += f" [{self.detail}]"
        return msg


def energy_check(records: list[DiagnosticsRecord]) -> CheckResult:
    """||u(t)||^2 + 2 int ||dz u||^2 <= ||u0||^2 within 2% at every output."""
    e0 = records[0].kinetic_energy
    if e0 == 0.0:
        worst = max(r.energy_lhs for r in records)
        return CheckResult("energy", worst <= 0.0, worst, "zero initial energy")
    worst = max((r.energy_lhs - e0) / e0 for r in records)
    return CheckResult("energy", worst <= ENERGY_SLACK, worst)


def max_principle_check(records: list[DiagnosticsRecord]) -> CheckResult:
    """sup|q| never grows (1e-12 slack); Lorentz norms of q never grow (1e-3)."""
    r0 = records[0]
    worst_sup = max(r.sup_q - r0.sup_q for r in records)
    ok = worst_sup <= SUP_MONOTONE_SLACK
    worst_rel = -INF
    for attr in ("q_lorentz_32_1", "q_lorentz_65_1", "q_lorentz_2_2",
                 "q_lorentz_65_65"):
        n0 = getattr(r0, attr)
        if n0 == 0.0:
            ok = ok and all(getattr(r, attr) == 0.0 for r in records)
            continue
        rel = max((getattr(r, attr) - n0) / n0 for r in records)
        worst_rel = max(worst_rel, rel)
        ok = ok and rel <= NORM_MONOTONE_SLACK
    return CheckResult("max_principle", ok, max(worst_sup, worst_rel),
                       f"sup slack {worst_sup:.3g}")


def growth_check(records: list[DiagnosticsRecord]) -> CheckResult:
    """Gronwall bound with constant 1 on Lebesgue norms of omega, 5% slack.

    The Lorentz (3/2,1) ratio is reported in the record series but carries an
    unspecified constant, so it is not part of the verdict.
    """
    worst = max(max(r.growth_ratio_l65, r.growth_ratio_l32, r.growth_ratio_l2)
                for r in records[1:]) if len(records) > 1 else 0.0
    lor = max((r.growth_ratio_lorentz_32_1 for r in records[1:]), default=0.0)
    return CheckResult("growth", worst <= 1.0 + GROWTH_SLACK, worst,
                       f"lorentz ratio {lor:.3g} (report only)")


def sqrt_t_check(records: list[DiagnosticsRecord],
                 t_min: float = 0.0) -> CheckResult:
    """rho(t) = int_0^t sup|u^r/r| / (sqrt(t) ||q0||_{3/2,1}) stays bounded.

    The constant is implicit, so boundedness is taken as 10x the value at the
    first output time past t_min.
    """
    if records[0].q_lorentz_32_1 == 0.0:
        return CheckResult("sqrt_t", None, 0.0, "degenerate: q0 = 0")
    rows = [r for r in records if r.t > max(t_min, 0.0)]
    if not rows:
        return CheckResult("sqrt_t", None, 0.0, "no rows past t_min")
    first = rows[0].sqrt_t_rho
    if first == 0.0:
        return CheckResult("sqrt_t", None, 0.0, "degenerate: rho(t1) = 0")
    worst = max(r.sqrt_t_rho for r in rows)
    return CheckResult("sqrt_t", worst <= SQRT_T_FACTOR * first, worst,
                       f"first {first:.3g}")


def hardy_check(omega: ScalarField) -> dict[float, CheckResult]:
    """||omega/r||_p / ||dr omega||_p for p in {6/5, 3/2}; report only."""
    g = omega.grid
    over_r = ScalarField(g, omega.values / g.r[:, None], "derived")
    dro = ddr(omega)
    out = {}
    for p in (6 / 5, 3 / 2):
        num = norms.lebesgue_norm(over_r, p)
        den = norms.lebesgue_norm(dro, p)
        if den == 0.0:
            flag = "degenerate" if num > 0 else "zero field"
            out[p] = CheckResult(f"hardy_p{p:g}", None, 0.0, flag)
        else:
            out[p] = CheckResult(f"hardy_p{p:g}", None, num / den)
    return out


def lemma_lp_check(f: ScalarField, p: float, direction: str) -> CheckResult:
    """||d_i f||_p <= (2/p) ||d_i |f|^{p/2}||_2 ||f||_p^{(2-p)/2}, 5% slack."""
    if not (1 < p <= 2):
        raise ValueError(f"need p in (1,2], got {p}")
    if direction not in ("r", "z"):
        raise ValueError(f"direction must be 'r' or 'z', got {direction!r}")
    deriv = ddr if direction == "r" else ddz
    g = f.grid
    lhs = norms.lebesgue_norm(deriv(f), p)
    fp2 = ScalarField(g, np.abs(f.values) ** (p / 2), f.role)
    rhs = ((2.0 / p) * norms.lebesgue_norm(deriv(fp2), 2.0)
           * norms.lebesgue_norm(f, p) ** ((2 - p) / 2))
    if rhs == 0.0:
        return CheckResult(f"lemma_lp_p{p:g}", lhs == 0.0, lhs)
    slack = lhs / rhs - 1.0
    return CheckResult(f"lemma_lp_p{p:g}", slack <= LEMMA_SLACK, slack)


def dr_omega_monitor(records: list[DiagnosticsRecord]) -> CheckResult:
    """Time series of ||dr omega||_{3/2,1}; asserts finiteness only."""
    series = [r.dr_omega_lorentz_32_1 for r in records]
    finite = all(math.isfinite(v) for v in series)
    return CheckResult("dr_omega", finite if not finite else None,
                       max(series, default=0.0))


def biot_ratio_check(state) -> dict[str, CheckResult]:
    """Ratios of reconstructed-velocity sups to their controlling norms."""
    rec = compute_record(state, first=None, prev=None)
    out = {}
    for name, val in (("u_over_omega31", rec.biot_u_ratio),
                      ("ur_over_dzomega", rec.biot_ur_ratio),
                      ("uror_over_dzq", rec.biot_ur_over_r_ratio),
                      ("mixed_over_dzq", rec.biot_mixed_ratio)):
        if val == 0.0:
            out[name] = CheckResult(f"biot_{name}", None, 0.0, "degenerate")
        else:
            out[name] = CheckResult(f"biot_{name}", None, val)
    return out


# ---------------------------------------------------------------------------
# CSV persistence: one row per output time, 17 significant digits

def format_csv(records: list[DiagnosticsRecord]) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for r in records:
        lines.append(",".join(_fmt(getattr(r, c)) for c in CSV_COLUMNS))
    return "\n".join(lines) + "\n"


def parse_csv(text: str) -> list[DiagnosticsRecord]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    header = lines[0].split(",")
    if header != CSV_COLUMNS:
        raise ValueError("CSV header does not match the diagnostics schema")
    out = []
    for ln in lines[1:]:
        vals = ln.split(",")
        kwargs = {c: (int(v) if c == "step_index" else float(v))
                  for c, v in zip(CSV_COLUMNS, vals)}
        out.append(DiagnosticsRecord(**kwargs))
    return out


def _fmt(v) -> str:
    if isinstance(v, int):
        return str(v)
    return f"{v:.17g}"
