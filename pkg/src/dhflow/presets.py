"""Initial-data families used by the experiment presets.

Every builder returns (u, psi) already satisfying the constraints, so a
FlowState assembled from them validates.  The degree-one map is the
standard suspension bubble: polar angle driven by a smoothstep profile of
the distance to the center, azimuth winding once around it.  Mode data
feeds the decoupled flat-target experiments with a single Dirac
eigenbranch, the slowest one the spin structure admits unless asked
otherwise.
"""

from __future__ import annotations

import numpy as np

from dhflow.clifford import tangency_project
from dhflow.grid import periodic_delta
from dhflow.oracle import dirac_eigenbranch, mode_frequency, mode_set, mode_spinor

__all__ = [
    "degree_one_map",
    "geodesic_map",
    "mode_data",
    "slowest_mode",
    "smooth_map",
    "smooth_spinor",
    "smoothstep",
    "seeded_noise",
]


def smoothstep(s):
    """Cubic 3s^2 - 2s^3 ramp, clamped to [0, 1]."""
    s = np.clip(s, 0.0, 1.0)
    return s * s * (3.0 - 2.0 * s)


def geodesic_map(spec, q=3, windings=1):
    """Great-circle map (cos m x, sin m x, 0, ...), a curve of harmonic maps."""
    if q < 2:
        raise ValueError(f"geodesic map needs q >= 2, got {q}")
    X, _ = spec.coords()
    u = np.zeros((*spec.shape, q))
    u[..., 0] = np.cos(windings * X)
    u[..., 1] = np.sin(windings * X)
    return u


def smooth_map(spec, target, amp=0.3):
    """Low-mode map data with O(amp) derivatives, projected to the target."""
    X, Y = spec.coords()
    raw = np.zeros((*spec.shape, target.q))
    raw[..., 0] = 1.0 + amp * np.cos(X)
    if target.q > 1:
        raw[..., 1] = amp * np.sin(Y)
    if target.q > 2:
        raw[..., 2] = 0.5 + 0.5 * amp * np.sin(X + Y)
    return target.project_point(raw)


def smooth_spinor(spec, target, u, amp=0.2):
    """Low-mode spinor data along u, tangency-projected."""
    X, Y = spec.coords()
    envelope = (np.cos(X) + 1j * np.sin(2.0 * Y))[..., None, None]
    mix = np.array([[1.0, 0.3, 0.1], [0.2, 1.0, -0.4]])[:, : target.q]
    return tangency_project(target, u, amp * envelope * mix)


def degree_one_map(spec, r0=1.6, center=(np.pi, np.pi)):
    """Degree-one suspension bubble into S^2 concentrated at the center.

    theta runs from pi at the center to 0 outside radius r0; phi winds once.
    r0 must keep the bubble inside one injectivity radius so the profile is
    smooth across the periodic seam (theta is constant there).
    """
    if not 0.0 < r0 < spec.injectivity_radius:
        raise ValueError(
            f"bubble radius must lie in (0, {spec.injectivity_radius}), got {r0}"
        )
    dx = periodic_delta(spec.x, center[0], spec.lx)[:, None]
    dy = periodic_delta(spec.y, center[1], spec.ly)[None, :]
    r = np.hypot(dx, dy)
    theta = np.pi * (1.0 - smoothstep(r / r0))
    # winding clockwise pairs with the outward-decreasing polar angle to
    # give pullback-area degree +1
    phi = np.arctan2(-dy, dx)
    return np.stack(
        [np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)],
        axis=-1,
    )


def slowest_mode(spec):
    """Index of the smallest nonzero-frequency mode for this spin structure."""
    modes = mode_set(spec)
    norms = modes.norms.copy()
    if modes.has_zero_mode:
        norms[norms == 0.0] = np.inf
    idx = np.unravel_index(int(np.argmin(norms)), norms.shape)
    freqs = np.fft.fftfreq(spec.nx, d=1.0 / spec.nx).astype(int)
    gqs = np.fft.fftfreq(spec.ny, d=1.0 / spec.ny).astype(int)
    return (int(freqs[idx[0]]), int(gqs[idx[1]]))


def mode_data(spec, target, k=None, branch=-1, amp=0.5, q=None):
    """Single-mode spinor data on a flat target, zero map component.

    The zero mode (trivial spin, k = (0, 0)) has no eigenbranch split; it
    gets a constant upper-component spinor, which both stencils annihilate.
    """
    if q is None:
        q = target.q
    if k is None:
        k = slowest_mode(spec)
    xi = mode_frequency(spec, k)
    if np.hypot(*xi) == 0.0:
        chi = np.array([1.0, 0.0], dtype=complex)
    else:
        chi = dirac_eigenbranch(xi, branch)
    u = np.zeros((*spec.shape, q))
    psi = amp * mode_spinor(spec, k, chi, q=q)
    return u, psi


def seeded_noise(spec, shape_tail, seed, amp, kmax=3):
    """Band-limited random real field, reproducible from the seed.

    Built in physical space from a fixed trigonometric dictionary so the
    bytes do not depend on FFT implementation details.
    """
    rng = np.random.default_rng(seed)
    X, Y = spec.coords()
    out = np.zeros((*spec.shape, *shape_tail))
    flat = out.reshape(spec.nx, spec.ny, -1)
    for c in range(flat.shape[-1]):
        acc = np.zeros(spec.shape)
        for kx in range(-kmax, kmax + 1):
            for ky in range(0, kmax + 1):
                a, b = rng.standard_normal(2)
                acc += a * np.cos(kx * X + ky * Y) + b * np.sin(kx * X + ky * Y)
        flat[..., c] = acc / (2.0 * kmax + 1.0) ** 2
    return amp * out
