"""Closed-form references and identity checkers, independent of the stepper.

Everything here is computed by a second route: Fourier diagonalization of
the decoupled spinor flow, finite-difference probes of the energy gradient,
integrated Bochner identities, Sobolev-quotient measurements, and an exact
heat-semigroup max bound.  The simulator is never consulted, so agreement
between the two is evidence rather than tautology.

Mode bookkeeping: a spinor with spin bits (d1, d2) carries frequencies
xi_alpha = 2 pi (k_alpha + d_alpha/2) / L_alpha.  Stored fields are
single-valued on the fundamental domain; multiplying by the unit twist
W(x) = exp(-i pi (d1 x / lx + d2 y / ly)) shifts every mode onto integer
frequencies, after which the plain FFT applies.  Two discrete symbols
matter besides the continuum one: sin(xi h)/h for the centered first
difference and 2 sin(xi h / 2)/h for the staggered one; the compact
laplacian symbol is the square of the latter.  decoupled_exact uses the
continuum symbols and is therefore an O(h^2)-accurate reference for smooth
band-limited data, not a bitwise twin of the stencils.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from dhflow.clifford import covariant_grad, tangency_project, twisted_conn_laplacian
from dhflow.energy import energy_regularized, map_gradient, tension
from dhflow.flow import rhs as flow_rhs
from dhflow.grid import gradient, integrate, l2_inner, l2_norm, partial


# ---------------------------------------------------------------------------
# mode enumeration


@dataclass(frozen=True, eq=False)
class ModeSet:
    """Spinor frequency lattice of one grid/spin combination.

    frequencies has shape (nx, ny, 2) in FFT index order; norms caches |xi|.
    """

    frequencies: np.ndarray
    norms: np.ndarray
    min_nonzero: float
    has_zero_mode: bool


def mode_set(spec):
    k1 = np.fft.fftfreq(spec.nx, d=1.0 / spec.nx)
    k2 = np.fft.fftfreq(spec.ny, d=1.0 / spec.ny)
    d1, d2 = spec.spin.deltas
    xi1 = 2.0 * np.pi * (k1 + 0.5 * d1) / spec.lx
    xi2 = 2.0 * np.pi * (k2 + 0.5 * d2) / spec.ly
    freq = np.stack(np.meshgrid(xi1, xi2, indexing="ij"), axis=-1)
    norms = np.sqrt(np.sum(freq**2, axis=-1))
    nonzero = norms[norms > 0.0]
    return ModeSet(
        frequencies=freq,
        norms=norms,
        min_nonzero=float(np.min(nonzero)),
        has_zero_mode=bool(np.any(norms == 0.0)),
    )


def epsilon_threshold(spec):
    """Spectral threshold eps* = 1 / min|xi|: above it every nonzero mode of
    the decoupled spinor equation decays, below it the soft branch of the
    slowest mode grows.  Mode rates are -eps |xi|^2 +- |xi|."""
    return 1.0 / mode_set(spec).min_nonzero


def mode_frequency(spec, k):
    """Continuum frequency vector of integer mode index k = (k1, k2)."""
    d1, d2 = spec.spin.deltas
    return np.array(
        [
            2.0 * np.pi * (k[0] + 0.5 * d1) / spec.lx,
            2.0 * np.pi * (k[1] + 0.5 * d2) / spec.ly,
        ]
    )


def centered_symbol(spec, xi):
    """Per-axis symbol of the centered first difference, sin(xi h)/h."""
    return np.array(
        [np.sin(xi[0] * spec.hx) / spec.hx, np.sin(xi[1] * spec.hy) / spec.hy]
    )


def staggered_symbol(spec, xi):
    """Per-axis symbol magnitude of the one-sided difference, 2 sin(xi h/2)/h."""
    return np.array(
        [
            2.0 * np.sin(0.5 * xi[0] * spec.hx) / spec.hx,
            2.0 * np.sin(0.5 * xi[1] * spec.hy) / spec.hy,
        ]
    )


def twist_field(spec):
    """Unit field W with psi * W integer-periodic; conj(W) undoes it."""
    x, y = spec.coords()
    d1, d2 = spec.spin.deltas
    return np.exp(-1j * np.pi * (d1 * x / spec.lx + d2 * y / spec.ly))


def mode_spinor(spec, k, chi, q=1, component=0):
    """Single-mode spinor field chi * exp(i xi . x) stored on the nodes."""
    xi = mode_frequency(spec, k)
    x, y = spec.coords()
    phase = np.exp(1j * (xi[0] * x + xi[1] * y))
    out = np.zeros((*spec.shape, 2, q), dtype=complex)
    for s in (0, 1):
        out[..., s, component] = chi[s] * phase
    return out


def dirac_eigenbranch(xi, branch):
    """Unit eigenvector of the continuum Dirac symbol -sigma . xi for the
    eigenvalue branch * |xi| (branch is +1 or -1); xi must be nonzero."""
    norm = float(np.hypot(xi[0], xi[1]))
    if norm == 0.0:
        raise ValueError("zero frequency has no eigenbranch split")
    m = -np.array([[0.0, xi[0] - 1j * xi[1]], [xi[0] + 1j * xi[1], 0.0]])
    vals, vecs = np.linalg.eigh(m)
    idx = int(np.argmin(np.abs(vals - branch * norm)))
    return vecs[:, idx].copy()


def decoupled_exact(spec, target, psi0, eps, t):
    """Flat-target spinor evolution by per-mode matrix exponential.

    psi_hat(t) = exp(t (-eps |xi|^2 I - Dhat)) psi_hat(0) with the continuum
    symbol Dhat = -sigma . xi, so exp = e^{-eps|xi|^2 t} (cosh(|xi| t) I +
    sinh(|xi| t) sigma . xi / |xi|).  Exact in time; compares to the stepper
    at its O(dt^2) + O(h^2) accuracy.
    """
    if not target.is_flat:
        raise ValueError("decoupled_exact needs the flat target; coupling to a curved target does not diagonalize")
    modes = mode_set(spec)
    w = twist_field(spec)
    phat = np.fft.fft2(psi0 * w[..., None, None], axes=(0, 1))

    xi1 = modes.frequencies[..., 0]
    xi2 = modes.frequencies[..., 1]
    norm = modes.norms
    damp = np.exp(-eps * norm**2 * t)
    cosh = damp * np.cosh(norm * t)
    # sinh(|xi| t)/|xi| -> t as |xi| -> 0
    sinhc = damp * np.where(norm > 0.0, np.sinh(norm * t) / np.where(norm > 0.0, norm, 1.0), t)

    upper = phat[..., 0, :]
    lower = phat[..., 1, :]
    off_up = (xi1 - 1j * xi2)[..., None]
    off_dn = (xi1 + 1j * xi2)[..., None]
    new = np.empty_like(phat)
    new[..., 0, :] = cosh[..., None] * upper + sinhc[..., None] * off_up * lower
    new[..., 1, :] = cosh[..., None] * lower + sinhc[..., None] * off_dn * upper

    out = np.fft.ifft2(new, axes=(0, 1)) * np.conj(w)[..., None, None]
    return out


# ---------------------------------------------------------------------------
# gradient consistency


@dataclass(frozen=True)
class GradientCheckReport:
    """Centered FD probe of dE/ds against the flow pairing -<rhs, var>."""

    s_values: tuple
    fd_values: tuple
    pairing: float
    gaps: tuple
    gap_extrapolated: float
    scale: float

    @property
    def relative_gap(self):
        return abs(self.gap_extrapolated) / self.scale if self.scale > 0.0 else 0.0


def _constrained_family(state, v, w, s):
    """(u_s, psi_s) moved along the variation and reprojected."""
    target = state.target
    u_s = target.project_point(state.u + s * v)
    psi_s = tangency_project(target, u_s, state.psi + s * w)
    return u_s, psi_s


def gradient_check(state, variation, s_values=(4e-3, 2e-3, 1e-3)):
    """Compare (E(s) - E(-s)) / 2s with -<rhs, variation> over a step list.

    The variation is projected onto the constraint tangent space first.  The
    extrapolated gap removes the O(s^2) FD error by a least-squares fit in
    s^2, leaving the stencil mismatch plus the deliberate non-gradient part
    of the coupled system; scale is the product of L2 norms the tolerance is
    quoted against.
    """
    spec, target = state.spec, state.target
    v = target.project_tangent(state.u, variation[0])
    w = tangency_project(target, state.u, variation[1])

    du_dt, dpsi_dt = flow_rhs(state)
    pairing = -(l2_inner(spec, du_dt, v) + l2_inner(spec, dpsi_dt, w))
    rhs_norm = np.hypot(l2_norm(spec, du_dt), l2_norm(spec, dpsi_dt))
    var_norm = np.hypot(l2_norm(spec, v), l2_norm(spec, w))

    fd = []
    for s in s_values:
        up = _constrained_family(state, v, w, +s)
        dn = _constrained_family(state, v, w, -s)
        e_up = energy_regularized(spec, target, *up, state.eps).e_eps
        e_dn = energy_regularized(spec, target, *dn, state.eps).e_eps
        fd.append((e_up - e_dn) / (2.0 * s))
    gaps = [f - pairing for f in fd]

    if len(s_values) >= 2:
        design = np.stack([np.ones(len(s_values)), np.asarray(s_values) ** 2], axis=1)
        coef, *_ = np.linalg.lstsq(design, np.asarray(gaps), rcond=None)
        extrapolated = float(coef[0])
    else:
        extrapolated = float(gaps[0])

    return GradientCheckReport(
        s_values=tuple(float(s) for s in s_values),
        fd_values=tuple(float(f) for f in fd),
        pairing=float(pairing),
        gaps=tuple(float(g) for g in gaps),
        gap_extrapolated=extrapolated,
        scale=float(rhs_norm * var_norm),
    )


# ---------------------------------------------------------------------------
# Bochner identities


@dataclass(frozen=True)
class BochnerReport:
    lhs: float
    rhs: float

    @property
    def gap(self):
        return self.lhs - self.rhs


def bochner_residual_phi(spec, target, u):
    """Integrated map Bochner identity on the flat torus.

    int |tau(u)|^2 = int |nabla du|^2 - int <R(du_a, du_b) du_b, du_a>,
    the curvature term being the sectional-positive contraction.  The
    Hessian is the tangential projection of the centered derivative of the
    chart-aware centered gradient, so the gap closes at O(h^2).
    """
    du = map_gradient(spec, target, u)
    tau = tension(spec, target, u, du)
    lhs = l2_norm(spec, tau) ** 2

    hess2 = np.zeros(spec.shape)
    for a in (0, 1):
        for b in (0, 1):
            h_ab = target.project_tangent(u, partial(spec, du[b], a))
            hess2 += np.sum(h_ab**2, axis=-1)
    curv = 0.0
    for a in (0, 1):
        for b in (0, 1):
            r = target.riemann(u, du[a], du[b], du[b])
            curv += l2_inner(spec, r, du[a])
    return BochnerReport(lhs=lhs, rhs=integrate(spec, hess2) - curv)


def bochner_residual_psi(spec, target, u, psi):
    """Integrated spinor Bochner identity for the twisted connection.

    int |Lap~ psi|^2 = int |nabla~^2 psi|^2
                       + sum_{a != b} [ <F_ba psi, nabla~_a nabla~_b psi>
                                        - <F_ba nabla~_a psi, nabla~_b psi> ]

    with F_ba = R^N(du_b, du_a) acting through the pullback; the spin factor
    is flat, so no domain curvature enters.  For flat targets the curvature
    sum is absent and the identity reduces to plain integration by parts.
    """
    du = map_gradient(spec, target, u)
    cg = covariant_grad(spec, target, u, psi)
    lap = twisted_conn_laplacian(spec, target, u, psi, validate=False)
    lhs = l2_norm(spec, lap) ** 2

    second = np.zeros(spec.shape)
    cross = 0.0
    for a in (0, 1):
        for b in (0, 1):
            t_ab = target.project_tangent(u, partial(spec, cg[b], a, spinor=True))
            second += np.sum(np.abs(t_ab) ** 2, axis=(-2, -1))
            if a != b:
                f_psi = target.riemann(u, du[b], du[a], psi)
                f_cga = target.riemann(u, du[b], du[a], cg[a])
                cross += l2_inner(spec, f_psi, t_ab) - l2_inner(spec, f_cga, cg[b])
    return BochnerReport(lhs=lhs, rhs=integrate(spec, second) + cross)


# ---------------------------------------------------------------------------
# Sobolev quotients


@dataclass(frozen=True)
class SobolevReport:
    global_ratios: tuple
    local_ratios: tuple

    @property
    def max_global(self):
        return max(self.global_ratios)

    @property
    def max_local(self):
        return max(self.local_ratios)


def synthesize_modes(spec, coeffs):
    """Real band-limited field from a (2K+1) x (2K+1) complex mode array.

    coeffs[i, j] weights exp(i (k1 x 2 pi / lx + k2 y 2 pi / ly)) for
    k = (i - K, j - K); the real part is returned, so the same coefficients
    reproduce the same function on any resolution.
    """
    kk = (coeffs.shape[0] - 1) // 2
    x, y = spec.coords()
    out = np.zeros(spec.shape)
    for i in range(coeffs.shape[0]):
        for j in range(coeffs.shape[1]):
            k1, k2 = i - kk, j - kk
            phase = np.exp(
                1j * (2.0 * np.pi * k1 * x / spec.lx + 2.0 * np.pi * k2 * y / spec.ly)
            )
            out += np.real(coeffs[i, j] * phase)
    return out


def sobolev_ratio(spec, samples, radius=None):
    """Measured constants of the quartic Sobolev bounds.

    Global quotient per sample: int v^4 / (int v^2 * int |grad v|^2) after
    subtracting the mean (the bound cannot hold for constants; the usage
    upstream is always on derivative-controlled quantities).  Local
    quotient: int |grad v|^4 over sup_x int_{B_R(x)} |grad v|^2 times
    (int |hess v|^2 + R^-2 int |grad v|^2).  Finiteness and stability over
    a family, not a sharp constant, is the claim being checked.
    """
    from dhflow.energy import local_F_field

    if radius is None:
        radius = 0.5 * spec.injectivity_radius
    glob, loc = [], []
    for v in samples:
        v = v - float(np.mean(v))
        g = gradient(spec, v)
        gdens = g[0] ** 2 + g[1] ** 2
        i2 = integrate(spec, v**2)
        i4 = integrate(spec, v**4)
        g2 = integrate(spec, gdens)
        glob.append(i4 / (i2 * g2) if i2 * g2 > 0.0 else 0.0)

        g4 = integrate(spec, gdens**2)
        sup_ball = float(np.max(local_F_field(spec, radius, gdens)))
        h2 = 0.0
        for a in (0, 1):
            for b in (0, 1):
                h2 += integrate(spec, partial(spec, g[b], a) ** 2)
        denom = sup_ball * (h2 + g2 / radius**2)
        loc.append(g4 / denom if denom > 0.0 else 0.0)
    return SobolevReport(global_ratios=tuple(glob), local_ratios=tuple(loc))


# ---------------------------------------------------------------------------
# heat-semigroup max bound


@dataclass(frozen=True)
class HarnackReport:
    sup_at_t: float
    bound: float
    kernel_sup: float
    mass: float


def _heat_exact(spec, f, t):
    """exp(t Lap) f with the exact compact-stencil symbol, scalar fields."""
    k1 = np.fft.fftfreq(spec.nx, d=1.0 / spec.nx)
    k2 = np.fft.fftfreq(spec.ny, d=1.0 / spec.ny)
    lam1 = (2.0 * np.sin(np.pi * k1 / spec.nx) / spec.hx) ** 2
    lam2 = (2.0 * np.sin(np.pi * k2 / spec.ny) / spec.hy) ** 2
    sym = lam1[:, None] + lam2[None, :]
    return np.real(np.fft.ifft2(np.fft.fft2(f) * np.exp(-sym * t)))


def harnack_demo(spec, u0, c, t_end):
    """Max bound for d_t u = Lap u + c u by semigroup factorization.

    The solution is exactly e^{c t} exp(t Lap) u0 on the grid.  With K the
    sup of the unit-mass discrete heat kernel at time 1 and U0 = int u0,
    positivity and mass conservation of exp(t Lap) give
    sup u(T) <= e^{c T} K U0 for every T >= 1; the inequality is asserted,
    K is measured, not derived.
    """
    u0 = np.asarray(u0, dtype=float)
    if np.min(u0) < 0.0:
        raise ValueError("max-bound demo needs nonnegative initial data")
    if t_end < 1.0:
        raise ValueError(f"bound uses the kernel at time 1, so t_end >= 1 is required, got {t_end}")

    u_t = np.exp(c * t_end) * _heat_exact(spec, u0, t_end)
    delta = np.zeros(spec.shape)
    delta[0, 0] = 1.0 / spec.cell_area
    kernel_sup = float(np.max(_heat_exact(spec, delta, 1.0)))
    mass = integrate(spec, u0)
    bound = np.exp(c * t_end) * kernel_sup * mass
    sup_at_t = float(np.max(u_t))
    if sup_at_t > bound * (1.0 + 1e-12) + 1e-300:
        raise ArithmeticError(
            f"semigroup max bound violated: sup {sup_at_t:.6e} > bound {bound:.6e}"
        )
    return HarnackReport(sup_at_t=sup_at_t, bound=float(bound), kernel_sup=kernel_sup, mass=mass)
