"""Explicit time stepping of the coupled map/spinor gradient flow.

The right-hand side is the ambient (extrinsic) form of the evolution system:

  du/dt  = Lap u - II(du, du) - P(II(du(e_a), e_a . psi), psi) - eps B(du, psi, du, psi)
           + eps P(II(du(e_a), psi), d_a psi) - eps P(II(du(e_a), d_a psi), psi)

  dpsi/dt = eps Lap psi - D psi + II(du(e_a), e_a . psi) + II(du/dt, psi)
            - 2 eps II(du(e_a), grad~_a psi) - eps (grad_a II)(du(e_a), psi)
            - eps II(tau(u), psi)

with plain componentwise stencils for Lap and D (the spinor bundle is
trivialized; phases live in the stencils), grad~ the projected derivative,
and the II(du/dt, psi) coupling evaluated with the just-computed du/dt
(one-pass Gauss-Seidel; the lagged alternative differs by O(dt)).  Both
built-in targets have parallel II, so the (grad II) term vanishes
identically; it is kept in the assembly for shape.

Stepping is explicit two-stage midpoint (RK2), projecting the constraints
after each stage.  psi = 0 is preserved exactly: every psi-equation term is
linear in psi and every psi-term of the u-equation is quadratic, and the
assembly skips them when psi vanishes so a psi-free run reproduces the pure
harmonic map heat flow bit for bit.

Step size follows the heuristic CFL rule

  dt = cfl_safety * min(h^2, h^2 / (4 eps)) / (1 + max|du|^2 + max|psi|^2)

clamped to [min_dt, max_dt]; correctness is enforced by an energy
monotonicity guard that rejects an increasing step, halves dt and retries.
dt falling below min_dt raises the blow-up signal that diagnostics records
as a dt_floor singularity symptom.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from dhflow.clifford import apply_gamma, covariant_grad, dirac_flat, tangency_project
from dhflow.energy import energy_regularized, map_gradient, map_laplacian, tension
from dhflow.grid import l2_norm, laplacian, partial
from dhflow.targets import ProjectionError, _expand, ambient_dot

CONSTRAINT_TOL = 1e-8
MAX_RETRIES = 8
GUARD_SLACK = 0.02


class BlowUpSignal(RuntimeError):
    """Raised when the step size is driven below the configured floor."""

    def __init__(self, t, dt):
        super().__init__(f"time step {dt:.3e} fell below the floor at t={t:.6f}")
        self.t = t
        self.dt = dt


@dataclass(frozen=True)
class FlowState:
    """One snapshot of the flow: geometry, time, and the two fields."""

    spec: object
    target: object
    t: float
    eps: float
    u: np.ndarray
    psi: np.ndarray

    def validate(self):
        if self.eps <= 0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if self.u.shape != (*self.spec.shape, self.target.q):
            raise ValueError(f"map field shape {self.u.shape} does not match grid/target")
        if self.psi.shape != (*self.spec.shape, 2, self.target.q):
            raise ValueError(f"spinor field shape {self.psi.shape} does not match grid/target")
        cres = self.target.constraint_residual(self.u)
        if cres > CONSTRAINT_TOL:
            raise ValueError(f"map constraint residual {cres:.3e} exceeds {CONSTRAINT_TOL}")
        tres = self.target.tangency_residual(self.u, self.psi)
        if tres > CONSTRAINT_TOL:
            raise ValueError(f"spinor tangency residual {tres:.3e} exceeds {CONSTRAINT_TOL}")
        return self


@dataclass(frozen=True)
class StepControl:
    cfl_safety: float = 0.5
    min_dt: float = 1e-10
    max_dt: float = 1e-2
    fixed_dt: float | None = None

    def __post_init__(self):
        if not 0.0 < self.cfl_safety <= 1.0:
            raise ValueError(f"cfl_safety must lie in (0, 1], got {self.cfl_safety}")
        if not 0.0 < self.min_dt <= self.max_dt:
            raise ValueError(f"need 0 < min_dt <= max_dt, got {(self.min_dt, self.max_dt)}")


def _check_finite(t, **terms):
    for name, arr in terms.items():
        if not np.all(np.isfinite(arr)):
            raise FloatingPointError(f"non-finite values in term '{name}' at t={t:.6f}")


def harmonic_rhs(spec, target, u, du=None):
    """Pure harmonic-map-heat-flow right-hand side, Lap u - II(du, du)."""
    if du is None:
        du = map_gradient(spec, target, u)
    return map_laplacian(spec, target, u) - (
        target.second_fundamental_form(u, du[0], du[0])
        + target.second_fundamental_form(u, du[1], du[1])
    )


def _shape_pairing(target, u, xi, chi):
    """Real vector P(xi, chi) with the spinor slots contracted: the real part
    of sum_s P(xi_s, chi_s) for a normal-valued spinor xi."""
    coeff = -ambient_dot(_expand(u, xi), xi)  # (nx, ny, 2) complex
    return np.einsum("xys,xysd->xyd", np.conj(coeff), chi).real


def rhs(state, du=None, cg=None):
    """Evaluate the coupled right-hand side; see the module docstring.

    Terms are checked for finiteness in evaluation order, so the raised
    FloatingPointError names the first one to go bad, not a downstream sum.
    """
    spec, target, u, psi, eps = state.spec, state.target, state.u, state.psi, state.eps
    if du is None:
        du = map_gradient(spec, target, u)
    coupled = not target.is_flat and np.any(psi)

    du_dt = harmonic_rhs(spec, target, u, du)
    _check_finite(state.t, map_tension=du_dt)
    if coupled:
        if cg is None:
            cg = covariant_grad(spec, target, u, psi)
        dpsi_flat = np.stack([partial(spec, psi, a, spinor=True) for a in (0, 1)])
        r_term = np.zeros_like(u)
        p_plus = np.zeros_like(u)
        p_minus = np.zeros_like(u)
        for a in (0, 1):
            ii_gamma = target.second_fundamental_form(u, du[a], apply_gamma(a, psi))
            r_term += _shape_pairing(target, u, ii_gamma, psi)
            p_plus += _shape_pairing(
                target, u, target.second_fundamental_form(u, du[a], psi), dpsi_flat[a]
            )
            p_minus += _shape_pairing(
                target, u, target.second_fundamental_form(u, du[a], dpsi_flat[a]), psi
            )
        b = target.b_term(u, du, psi)
        _check_finite(state.t, chirality_coupling=r_term, quartic_term=b,
                      regularization_coupling=p_plus - p_minus)
        du_dt = du_dt - r_term - eps * b + eps * (p_plus - p_minus)

    if np.any(psi):
        if cg is None:
            cg = covariant_grad(spec, target, u, psi)
        dpsi_dt = eps * laplacian(spec, psi, spinor=True) - dirac_flat(spec, psi)
        _check_finite(state.t, spinor_diffusion=dpsi_dt)
        if not target.is_flat:
            coupling = np.zeros_like(psi)
            for a in (0, 1):
                coupling += target.second_fundamental_form(u, du[a], apply_gamma(a, psi))
                coupling -= 2.0 * eps * target.second_fundamental_form(u, du[a], cg[a])
            coupling += target.second_fundamental_form(u, du_dt, psi)
            coupling -= eps * target.cov_deriv_II(u, du, psi)
            coupling -= eps * target.second_fundamental_form(u, tension(spec, target, u, du), psi)
            _check_finite(state.t, spinor_coupling=coupling)
            dpsi_dt = dpsi_dt + coupling
    else:
        dpsi_dt = np.zeros_like(psi)

    return du_dt, dpsi_dt


def cfl_dt(state, ctl, du=None, dt_cap=None):
    """Heuristic advective/diffusive step bound; raises below the floor.

    dt_cap (e.g. the time remaining to t_end) is applied after the floor
    check, so finishing a run with a sliver step is not mistaken for
    collapse.
    """
    if ctl.fixed_dt is not None:
        dt = ctl.fixed_dt
    else:
        if du is None:
            du = map_gradient(state.spec, state.target, state.u)
        h2 = min(state.spec.hx, state.spec.hy) ** 2
        du_max = float(np.max(np.sum(du[0] ** 2 + du[1] ** 2, axis=-1)))
        psi_max = (
            float(np.max(np.sum(np.abs(state.psi) ** 2, axis=(-2, -1))))
            if np.any(state.psi) else 0.0
        )
        dt = ctl.cfl_safety * min(h2, h2 / (4.0 * state.eps)) / (1.0 + du_max + psi_max)
        if dt < ctl.min_dt:
            raise BlowUpSignal(state.t, dt)
        dt = min(dt, ctl.max_dt)
    if dt_cap is not None:
        dt = min(dt, dt_cap)
    return dt


def _advance(state, dt):
    """One projected midpoint step of size dt."""
    spec, target = state.spec, state.target
    du_dt, dpsi_dt = rhs(state)
    u_mid = target.project_point(state.u + 0.5 * dt * du_dt)
    psi_mid = tangency_project(target, u_mid, state.psi + 0.5 * dt * dpsi_dt)
    mid = replace(state, t=state.t + 0.5 * dt, u=u_mid, psi=psi_mid)
    du_dt, dpsi_dt = rhs(mid)
    u_new = target.project_point(state.u + dt * du_dt)
    psi_new = tangency_project(target, u_new, state.psi + dt * dpsi_dt)
    return replace(state, t=state.t + dt, u=u_new, psi=psi_new)


@dataclass(frozen=True)
class StepResult:
    state: FlowState
    dt: float
    energy: object
    retries: int


def step(state, ctl, energy_before=None, dt_cap=None):
    """One accepted step: CFL step size, midpoint update, monotonicity guard.

    The guard rejects steps that raise E_eps beyond the gradient-flow
    residual tolerance, halving dt up to MAX_RETRIES times; halving below
    min_dt raises the blow-up signal.
    """
    spec, target = state.spec, state.target
    if energy_before is None:
        energy_before = energy_regularized(spec, target, state.u, state.psi, state.eps)
    dt = cfl_dt(state, ctl, dt_cap=dt_cap)
    for attempt in range(MAX_RETRIES + 1):
        if attempt > 0 and dt < ctl.min_dt:
            raise BlowUpSignal(state.t, dt)
        try:
            candidate = _advance(state, dt)
            energy_after = energy_regularized(spec, target, candidate.u, candidate.psi, state.eps)
        except (ProjectionError, FloatingPointError):
            dt *= 0.5
            continue
        dissipation = _dissipation(spec, target, state, candidate, dt)
        slack = GUARD_SLACK * dt * dissipation + 1e-12 * (1.0 + abs(energy_before.e_eps))
        if energy_after.e_eps <= energy_before.e_eps + slack:
            return StepResult(candidate, dt, energy_after, attempt)
        dt *= 0.5
    raise BlowUpSignal(state.t, dt)


def _dissipation(spec, target, prev, cur, dt):
    kin_u = l2_norm(spec, (cur.u - prev.u) / dt) ** 2
    if not (np.any(cur.psi) or np.any(prev.psi)):
        return kin_u
    dpsi = target.project_tangent(cur.u, (cur.psi - prev.psi) / dt)
    kin_psi = l2_norm(spec, dpsi) ** 2
    return kin_u + kin_psi


def run(state, t_end, ctl, monitor=None):
    """Advance to t_end or the first singular signal.

    monitor, when given, is a diagnostics.MonitorSuite; it observes every
    accepted step, decides the record cadence, and raises the threshold
    event.  Returns a RunResult from diagnostics.
    """
    from dhflow.diagnostics import RunResult, ThresholdEvent

    state.validate()
    energy = energy_regularized(state.spec, state.target, state.u, state.psi, state.eps)
    status, events = "clean", []
    if monitor is not None:
        try:
            monitor.start(state, energy)
        except ThresholdEvent as hit:
            events = monitor.finish_threshold(state, hit)
            return RunResult(state=state, records=monitor.records, events=events,
                             status="singular")
    while state.t < t_end - 1e-14:
        try:
            result = step(state, ctl, energy_before=energy, dt_cap=t_end - state.t)
        except BlowUpSignal as sig:
            status = "singular"
            if monitor is not None:
                events = monitor.finish_dt_floor(state, sig)
            break
        prev, state, energy = state, result.state, result.energy
        if monitor is not None:
            try:
                monitor.observe(prev, state, result)
            except ThresholdEvent as hit:
                status = "singular"
                events = monitor.finish_threshold(state, hit)
                break
    else:
        if monitor is not None:
            events = monitor.finish_clean(state)
    records = monitor.records if monitor is not None else []
    return RunResult(state=state, records=records, events=events, status=status)
