"""Periodic finite-difference grid on a flat rectangular 2-torus.

Conventions
-----------
* Nodes sit at x_i = i*hx, y_j = j*hy with hx = lx/nx, hy = ly/ny; each node
  owns a cell of area hx*hy (midpoint quadrature).
* Axis 0 is x, axis 1 is y.  Map fields have shape (nx, ny, q) and wrap
  periodically.  Spinor fields have shape (nx, ny, 2, q), are stored
  single-valued on the fundamental domain, and pick up the sign
  (-1)**delta_alpha whenever a stencil crosses the seam of axis alpha.
  The four (delta1, delta2) choices are the four spin structures.
* partial is the centered difference (f(x+h) - f(x-h)) / (2h); laplacian is
  the compact 5-point stencil with the analyst's sign (negative spectrum).
  Composing partial twice gives the wide stencil instead, which agrees with
  the 5-point one to O(h**2) but not bitwise; everything downstream uses the
  compact form for second derivatives along an axis.
* ball_mask snaps the requested center to the nearest node, so masks at
  centers that differ by arbitrary translations of the torus lattice have
  identical cell counts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SpinStructure:
    """Periodicity signs of the spinor bundle: delta=0 periodic, 1 antiperiodic."""

    delta1: int = 0
    delta2: int = 0

    def __post_init__(self):
        if self.delta1 not in (0, 1) or self.delta2 not in (0, 1):
            raise ValueError(f"spin structure bits must be 0 or 1, got {(self.delta1, self.delta2)}")

    @property
    def deltas(self):
        return (self.delta1, self.delta2)

    def phase(self, axis):
        return -1.0 if self.deltas[axis] else 1.0


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid on [0, lx) x [0, ly)."""

    nx: int
    ny: int
    lx: float = 2.0 * np.pi
    ly: float = 2.0 * np.pi
    spin: SpinStructure = SpinStructure(0, 0)

    def __post_init__(self):
        if self.nx < 4 or self.ny < 4:
            raise ValueError(f"need at least 4 cells per axis, got {(self.nx, self.ny)}")
        if self.lx <= 0 or self.ly <= 0:
            raise ValueError(f"torus lengths must be positive, got {(self.lx, self.ly)}")

    @property
    def shape(self):
        return (self.nx, self.ny)

    @property
    def hx(self):
        return self.lx / self.nx

    @property
    def hy(self):
        return self.ly / self.ny

    def h(self, axis):
        return self.hx if axis == 0 else self.hy

    @property
    def cell_area(self):
        return self.hx * self.hy

    @property
    def area(self):
        return self.lx * self.ly

    @property
    def injectivity_radius(self):
        return 0.5 * min(self.lx, self.ly)

    @property
    def x(self):
        return np.arange(self.nx) * self.hx

    @property
    def y(self):
        return np.arange(self.ny) * self.hy

    def coords(self):
        return np.meshgrid(self.x, self.y, indexing="ij")


def shift(spec, f, axis, step, spinor=False):
    """Sample f at (x + step*h) along axis, with the spin-structure sign on wrap.

    The stored values stay single-valued; only the stencil account for the
    seam, so shifting is exact for fields of the stated periodicity class.
    """
    if axis not in (0, 1):
        raise ValueError(f"axis must be 0 or 1, got {axis}")
    n = spec.shape[axis]
    if abs(step) >= n:
        raise ValueError(f"|step| must be < {n}, got {step}")
    out = np.roll(f, -step, axis=axis)
    if spinor and spec.spin.deltas[axis]:
        # entries that wrapped around the seam change sign
        sl = [slice(None)] * f.ndim
        if step > 0:
            sl[axis] = slice(n - step, n)
        else:
            sl[axis] = slice(0, -step)
        out[tuple(sl)] = -out[tuple(sl)]
    return out


def partial(spec, f, axis, spinor=False):
    """Centered first difference along axis, second order."""
    up = shift(spec, f, axis, +1, spinor=spinor)
    dn = shift(spec, f, axis, -1, spinor=spinor)
    return (up - dn) / (2.0 * spec.h(axis))


def second_diff(spec, f, axis, spinor=False):
    """Compact second difference along axis, second order."""
    up = shift(spec, f, axis, +1, spinor=spinor)
    dn = shift(spec, f, axis, -1, spinor=spinor)
    return (up + dn - 2.0 * f) / spec.h(axis) ** 2


def laplacian(spec, f, spinor=False):
    """5-point Laplacian, analyst's sign (nonpositive symbol)."""
    return second_diff(spec, f, 0, spinor=spinor) + second_diff(spec, f, 1, spinor=spinor)


def gradient(spec, f, spinor=False):
    """Both centered partials, stacked on a leading axis of length 2."""
    return np.stack([partial(spec, f, 0, spinor=spinor), partial(spec, f, 1, spinor=spinor)])


def integrate(spec, density):
    """Cell-area quadrature of a scalar density sampled at nodes."""
    density = np.asarray(density)
    if density.shape[:2] != spec.shape:
        raise ValueError(f"density shape {density.shape} does not match grid {spec.shape}")
    return float(np.sum(density)) * spec.cell_area


def field_inner(f, g):
    """Pointwise real inner product, summing every non-grid axis.

    Real arrays pair bilinearly; complex arrays pair with Re<conj(f), g>.
    Returns a real (nx, ny) density.
    """
    prod = np.conj(f) * g if np.iscomplexobj(f) or np.iscomplexobj(g) else f * g
    axes = tuple(range(2, prod.ndim))
    return np.real(np.sum(prod, axis=axes)) if axes else np.real(prod)


def l2_inner(spec, f, g):
    """Real L2 inner product with cell-area weights."""
    return integrate(spec, field_inner(f, g))


def l2_norm(spec, f):
    return np.sqrt(max(l2_inner(spec, f, f), 0.0))


def periodic_delta(values, center, length):
    """Signed periodic displacement values - center, reduced to [-L/2, L/2)."""
    return np.mod(values - center + 0.5 * length, length) - 0.5 * length


def snap_to_node(spec, center):
    """Nearest node to an arbitrary point, as an index pair."""
    ix = int(np.rint(center[0] / spec.hx)) % spec.nx
    iy = int(np.rint(center[1] / spec.hy)) % spec.ny
    return ix, iy


def ball_mask(spec, center, radius):
    """Cells whose node lies within periodic distance radius of the center.

    The center snaps to the nearest node first, so lattice translates of a
    center give masks with identical cell counts.  radius must stay below the
    injectivity radius of the torus so the ball is embedded.
    """
    if not 0.0 < radius < spec.injectivity_radius:
        raise ValueError(
            f"radius must lie in (0, {spec.injectivity_radius}), got {radius}"
        )
    ix, iy = snap_to_node(spec, center)
    dx = periodic_delta(spec.x, ix * spec.hx, spec.lx)
    dy = periodic_delta(spec.y, iy * spec.hy, spec.ly)
    return (dx[:, None] ** 2 + dy[None, :] ** 2) <= radius**2
