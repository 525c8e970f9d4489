"""Runtime monitors and post-hoc analyzers for flow runs.

One MonitorRecord per observed time holds every scalar the run CSV needs:
the energy report, kinetic norms of both fields, stationarity residuals,
and the largest local F over all grid centers at each scan radius.  The
monitor asserts two run invariants as it goes: energy decrease up to the
gradient-flow residual tolerance, and the pointwise spinor bound
max|psi(t)|^2 <= max|psi(0)|^2 e^(t/eps) with 5% headroom.

Singularity bookkeeping: a ThresholdEvent fires when local F at the
smallest scan radius reaches delta1; a dt-floor stop is recorded with
trigger "dt_floor".  Events are deduplicated by merging centers closer
than 2R (periodically), keeping the hottest representative.  The event
count is compared against the a-priori budget floor(4 E0 / delta1) by the
test suite, never silently clipped here.

kinetic_psi uses the covariant time derivative, the tangential part of
(psi_cur - psi_prev)/dt at the current base point; for psi = 0 runs every
psi field in every record is exactly 0.0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from dhflow.energy import el_residuals, energy_regularized, f_density, local_F_field
from dhflow.grid import ball_mask, integrate, l2_norm

GUARD_SLACK = 0.02
POINTWISE_HEADROOM = 1.05


class MonotonicityError(RuntimeError):
    """Energy increased beyond the per-step tolerance."""


class ThresholdEvent(RuntimeError):
    """Raised by the monitor when local F crosses delta1; caught by run()."""

    def __init__(self, t, center, radius, value):
        super().__init__(
            f"local F {value:.4f} reached threshold at t={t:.6f}, "
            f"center {center}, radius {radius:.4f}"
        )
        self.t = t
        self.center = center
        self.radius = radius
        self.value = value


@dataclass(frozen=True)
class MonitorRecord:
    t: float
    energy: object
    kinetic_u: float
    kinetic_psi: float
    el_residual_u: float
    el_residual_psi: float
    max_local_F: tuple
    dt_used: float


@dataclass(frozen=True)
class SingularityEvent:
    # field names mirror the events.json schema exactly
    t_detected: float
    center: tuple
    radius: float
    local_F: float
    trigger: str

    def to_json_dict(self):
        return {
            "t_detected": self.t_detected,
            "center": [int(self.center[0]), int(self.center[1])],
            "radius": self.radius,
            "local_F": self.local_F,
            "trigger": self.trigger,
        }


@dataclass(frozen=True)
class RunResult:
    state: object
    records: list
    events: list
    status: str


def default_radii(spec):
    """Scan radii at 1/2, 1/4, 1/8 of the injectivity radius, descending."""
    im = spec.injectivity_radius
    return (im / 2.0, im / 4.0, im / 8.0)


def _kinetics(spec, target, prev, cur, dt):
    kin_u = l2_norm(spec, (cur.u - prev.u) / dt) ** 2
    if np.any(cur.psi) or np.any(prev.psi):
        dpsi = target.project_tangent(cur.u, (cur.psi - prev.psi) / dt)
        kin_psi = l2_norm(spec, dpsi) ** 2
    else:
        kin_psi = 0.0
    return kin_u, kin_psi


def scan_local_F(spec, target, u, psi, eps, radii):
    """Max local F over every grid center, per radius; also the argmax of the
    smallest radius, as ((ix, iy), value)."""
    dens = f_density(spec, target, u, psi, eps)
    maxima = []
    hot = None
    for radius in radii:
        field = local_F_field(spec, radius, dens)
        idx = np.unravel_index(int(np.argmax(field)), field.shape)
        maxima.append(float(field[idx]))
        hot = (idx, float(field[idx]))
    return tuple(maxima), hot


def monitor_step(prev, cur, dt, *, energy_prev=None, energy_cur=None, radii=None,
                 psi_bound_ref=None, scan=None):
    """Record one accepted step and assert the run invariants.

    psi_bound_ref, when given, is (t0, max|psi0|^2); the pointwise bound
    max|psi(t)|^2 <= max|psi0|^2 e^((t-t0)/eps) is then enforced with 5%
    headroom.  scan, when given, is a precomputed max_local_F tuple for
    these radii (saves the FFT pass when the caller already scanned).
    """
    spec, target, eps = cur.spec, cur.target, cur.eps
    if radii is None:
        radii = default_radii(spec)
    if energy_prev is None:
        energy_prev = energy_regularized(spec, target, prev.u, prev.psi, eps)
    if energy_cur is None:
        energy_cur = energy_regularized(spec, target, cur.u, cur.psi, eps)
    kin_u, kin_psi = _kinetics(spec, target, prev, cur, dt)
    tol = GUARD_SLACK * dt * (kin_u + kin_psi) + 1e-12 * (1.0 + abs(energy_prev.e_eps))
    if energy_cur.e_eps > energy_prev.e_eps + tol:
        raise MonotonicityError(
            f"E_eps rose by {energy_cur.e_eps - energy_prev.e_eps:.3e} at "
            f"t={cur.t:.6f}, beyond tolerance {tol:.3e}"
        )
    if psi_bound_ref is not None:
        t0, sup0 = psi_bound_ref
        if energy_cur.psi_sup > sup0 * math.exp((cur.t - t0) / eps) * POINTWISE_HEADROOM:
            raise MonotonicityError(
                f"pointwise spinor bound violated at t={cur.t:.6f}: "
                f"{energy_cur.psi_sup:.6e} > {sup0:.6e} * e^(t/eps) * {POINTWISE_HEADROOM}"
            )
    res_u, res_psi = el_residuals(spec, target, cur.u, cur.psi, eps)
    if scan is None:
        scan, _ = scan_local_F(spec, target, cur.u, cur.psi, eps, radii)
    maxima = scan
    return MonitorRecord(
        t=cur.t,
        energy=energy_cur,
        kinetic_u=kin_u,
        kinetic_psi=kin_psi,
        el_residual_u=res_u,
        el_residual_psi=res_psi,
        max_local_F=maxima,
        dt_used=dt,
    )


def detect_singularities(state, delta1, radii, *, t=None, dt_floor=False):
    """Scan one state for concentration events.

    Threshold events fire where local F at the smallest radius reaches
    delta1.  With dt_floor=True the hottest center is reported even below
    threshold, as the dt collapse itself is the symptom.  Centers within 2R
    of a hotter one (periodic distance) are merged away.
    """
    spec, target = state.spec, state.target
    radii = sorted(radii, reverse=True)
    if not radii or not all(0.0 < r < spec.injectivity_radius for r in radii):
        raise ValueError(f"radii must lie in (0, {spec.injectivity_radius}), got {radii}")
    r_min = radii[-1]
    dens = f_density(spec, target, state.u, state.psi, state.eps)
    field = local_F_field(spec, r_min, dens)
    when = state.t if t is None else t

    hot = np.argwhere(field >= delta1)
    candidates = [((int(i), int(j)), float(field[i, j])) for i, j in hot]
    if dt_floor and not candidates:
        idx = np.unravel_index(int(np.argmax(field)), field.shape)
        candidates = [((int(idx[0]), int(idx[1])), float(field[idx]))]
    trigger = "dt_floor" if dt_floor else "threshold"

    candidates.sort(key=lambda cv: -cv[1])
    kept = []
    for center, value in candidates:
        xy = (center[0] * spec.hx, center[1] * spec.hy)
        merged = False
        for other in kept:
            ox, oy = other.center[0] * spec.hx, other.center[1] * spec.hy
            dx = abs(xy[0] - ox)
            dx = min(dx, spec.lx - dx)
            dy = abs(xy[1] - oy)
            dy = min(dy, spec.ly - dy)
            if dx * dx + dy * dy <= (2.0 * r_min) ** 2:
                merged = True
                break
        if not merged:
            kept.append(
                SingularityEvent(
                    t_detected=when, center=center, radius=r_min,
                    local_F=value, trigger=trigger,
                )
            )
    return kept


def singularity_budget(e0, delta1):
    """A-priori bound on the number of singular points, floor(4 E0 / delta1)."""
    if delta1 <= 0:
        raise ValueError(f"delta1 must be positive, got {delta1}")
    if e0 < 0:
        raise ValueError(f"budget needs a nonnegative energy, got {e0}")
    return int(math.floor(4.0 * e0 / delta1))


@dataclass(frozen=True)
class BudgetRow:
    eps: float
    f_quantity: float
    delta5: float
    bound: float


def epsilon_budget_report(spec, target, u0, psi0, eps_list, delta1):
    """Tabulate (F(u0, psi0; eps) + delta5(eps)) / delta1 across an eps sweep,
    delta5 = (4/eps) int |psi0|^2.  The psi0 = 0 column collapses to F/delta1."""
    if delta1 <= 0:
        raise ValueError(f"delta1 must be positive, got {delta1}")
    psi_l2 = integrate(spec, np.sum(np.abs(psi0) ** 2, axis=(-2, -1)))
    rows = []
    for eps in eps_list:
        report = energy_regularized(spec, target, u0, psi0, eps)
        delta5 = 4.0 * psi_l2 / eps
        rows.append(
            BudgetRow(
                eps=eps,
                f_quantity=report.f_quantity,
                delta5=delta5,
                bound=(report.f_quantity + delta5) / delta1,
            )
        )
    return rows


@dataclass(frozen=True)
class StabilityReport:
    times: tuple
    gaps: tuple
    lam: float
    truncated: bool

    def envelope_ok(self):
        g0 = self.gaps[0]
        if g0 == 0.0:
            return all(g <= 1e-20 for g in self.gaps)
        return all(
            g <= g0 * math.exp(self.lam * (t - self.times[0])) * (1.0 + 1e-9)
            for t, g in zip(self.times, self.gaps)
        )


def _gap(spec, a, b):
    du = l2_norm(spec, a.u - b.u) ** 2
    dpsi = l2_norm(spec, a.psi - b.psi) ** 2
    return du + dpsi


def stability_gap(state_a, state_b, t_end, ctl, *, cadence=1):
    """Co-evolve two states with a shared step size and track the squared L^2
    distance g(t); reports the measured Gronwall rate Lambda = sup_t of
    log(g(t)/g(0))/t.  Identical inputs stay bitwise identical, g = 0."""
    from dhflow.flow import BlowUpSignal, _advance, cfl_dt

    if state_a.spec is not state_b.spec and state_a.spec != state_b.spec:
        raise ValueError("states live on different grids")
    if state_a.eps != state_b.eps:
        raise ValueError("states have different eps")
    spec = state_a.spec
    times = [state_a.t]
    gaps = [_gap(spec, state_a, state_b)]
    truncated = False
    steps = 0
    while state_a.t < t_end - 1e-14:
        try:
            dt = min(cfl_dt(state_a, ctl), cfl_dt(state_b, ctl))
            dt = min(dt, t_end - state_a.t)
            state_a = _advance(state_a, dt)
            state_b = _advance(state_b, dt)
        except (BlowUpSignal, FloatingPointError):
            truncated = True
            break
        steps += 1
        if steps % cadence == 0 or state_a.t >= t_end - 1e-14:
            times.append(state_a.t)
            gaps.append(_gap(spec, state_a, state_b))
    g0 = gaps[0]
    lam = 0.0
    if g0 > 0.0:
        rates = [
            math.log(g / g0) / (t - times[0])
            for t, g in zip(times[1:], gaps[1:])
            if g > 0.0 and t > times[0]
        ]
        lam = max(rates) if rates else 0.0
    return StabilityReport(times=tuple(times), gaps=tuple(gaps), lam=lam, truncated=truncated)


def dh_blowup_quantity(state, center, radius):
    """int over B_R(center) of |du|^2 + |psi|^4, the removable-singularity
    smallness quantity for Dirac-harmonic maps."""
    from dhflow.energy import dirichlet_density

    spec = state.spec
    dens = dirichlet_density(spec, state.target, state.u)
    psi2 = np.sum(np.abs(state.psi) ** 2, axis=(-2, -1))
    mask = ball_mask(spec, center, radius)
    return float(np.sum((dens + psi2**2)[mask])) * spec.cell_area


class MonitorSuite:
    """Per-run monitor: records at a cadence, scans for threshold crossings
    every step, accumulates the dissipation integral."""

    def __init__(self, delta1=1.0, radii=None, cadence=1):
        if delta1 <= 0:
            raise ValueError(f"delta1 must be positive, got {delta1}")
        self.delta1 = delta1
        self.radii = radii
        self.cadence = max(1, int(cadence))
        self.records = []
        self.dissipation = 0.0
        self._steps = 0
        self._bound_ref = None

    def start(self, state, energy):
        spec, target = state.spec, state.target
        if self.radii is None:
            self.radii = default_radii(spec)
        self._bound_ref = (state.t, energy.psi_sup)
        self._last_energy = energy
        res_u, res_psi = el_residuals(spec, target, state.u, state.psi, state.eps)
        maxima, hot = scan_local_F(spec, target, state.u, state.psi, state.eps, self.radii)
        self.records.append(
            MonitorRecord(
                t=state.t, energy=energy, kinetic_u=0.0, kinetic_psi=0.0,
                el_residual_u=res_u, el_residual_psi=res_psi,
                max_local_F=maxima, dt_used=0.0,
            )
        )
        if hot[1] >= self.delta1:
            raise ThresholdEvent(state.t, hot[0], min(self.radii), hot[1])

    def observe(self, prev, cur, result):
        spec, target = cur.spec, cur.target
        kin_u, kin_psi = _kinetics(spec, target, prev, cur, result.dt)
        self.dissipation += result.dt * (kin_u + kin_psi)
        self._steps += 1
        maxima, hot = scan_local_F(spec, target, cur.u, cur.psi, cur.eps, self.radii)
        if self._steps % self.cadence == 0:
            record = monitor_step(
                prev, cur, result.dt,
                energy_prev=self._last_energy, energy_cur=result.energy,
                radii=self.radii, psi_bound_ref=self._bound_ref, scan=maxima,
            )
            self.records.append(record)
        self._last_energy = result.energy
        if hot[1] >= self.delta1:
            raise ThresholdEvent(cur.t, hot[0], min(self.radii), hot[1])

    def finish_threshold(self, state, hit):
        return detect_singularities(state, self.delta1, self.radii, t=hit.t)

    def finish_dt_floor(self, state, sig):
        return detect_singularities(state, self.delta1, self.radii, t=sig.t, dt_floor=True)

    def finish_clean(self, state):
        return []
