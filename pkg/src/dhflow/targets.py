"""Embedded target geometries for the coupled map/spinor flow.

Two targets are supported, both through their ambient R^q realization so no
Christoffel symbols ever appear:

* ``Sphere(q)``: the unit sphere S^(q-1) in R^q.  Closed forms:
  projector Pi_u = I - u u^T, second fundamental form II(X, Y) = -<X, Y> u,
  shape-operator pairing P(xi, X) = -<u, xi> X, curvature
  R(X, Y)Z = <Y, Z> X - <X, Z> Y.  II is parallel, so its covariant
  derivative vanishes identically.
* ``FlatTorus(q)``: R^q modulo (period Z)^q; every curvature object is zero,
  which decouples the spinor equation.  Map values are stored as lifts and
  stencil differences are read through the nearest-representative chart
  (``increment``), so winding maps are first-class: a linear degree-one map
  has exactly zero tension.  Fields must be resolved well enough that
  neighbor increments stay below half the identification period.

Vector slots broadcast: the ambient index is always the last axis, and a map
value u of shape (nx, ny, q) pairs against spinor-valued slots of shape
(nx, ny, 2, q) by inserting axes before the last one.  Complex slots are
allowed; contractions stay complex and callers take real parts where the
estimates demand it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class ProjectionError(ValueError):
    """Raised when a point cannot be projected back onto the target."""


def _expand(u, like):
    """Broadcast a map-shaped array against extra inner axes of `like`."""
    while u.ndim < like.ndim:
        u = u[..., None, :]
    return u


def ambient_dot(a, b):
    """Contraction over the ambient (last) axis with broadcasting."""
    if a.ndim < b.ndim:
        a = _expand(a, b)
    elif b.ndim < a.ndim:
        b = _expand(b, a)
    return np.sum(a * b, axis=-1)


@dataclass(frozen=True)
class Sphere:
    """Unit sphere S^(q-1) embedded in R^q."""

    q: int = 3
    kind = "sphere"
    kind_id = 1
    is_flat = False
    chart_period = None

    def __post_init__(self):
        if self.q < 2:
            raise ValueError(f"sphere target needs ambient dimension >= 2, got {self.q}")

    def increment(self, d):
        """Difference of map values; the embedding is global, nothing wraps."""
        return d

    def project_point(self, p):
        norm = np.linalg.norm(p, axis=-1, keepdims=True)
        if np.min(norm) < 1e-13:
            raise ProjectionError("point too close to the origin to project onto the sphere")
        return p / norm

    def constraint_residual(self, u):
        return float(np.max(np.abs(np.linalg.norm(u, axis=-1) - 1.0)))

    def project_tangent(self, u, w):
        ue = _expand(u, w)
        return w - ambient_dot(ue, w)[..., None] * ue

    def tangency_residual(self, u, w):
        scale = max(float(np.max(np.abs(w))), 1e-300)
        return float(np.max(np.abs(ambient_dot(_expand(u, w), w)))) / scale

    def second_fundamental_form(self, u, x, y):
        """II_u(X, Y) = -<X, Y> u, valid for real or spinor-valued slots."""
        inner = ambient_dot(x, y)
        ue = _expand(u, x if x.ndim >= y.ndim else y)
        return -inner[..., None] * ue

    def shape_operator(self, u, xi, x):
        """P(xi, X) = -<u, xi> X, the tangential pairing with a normal field."""
        return -ambient_dot(_expand(u, xi), xi)[..., None] * x

    def cov_deriv_II(self, u, du, w):
        """(nabla_alpha II)(du(e_alpha), .): zero, II is parallel on the sphere."""
        return np.zeros_like(w)

    def riemann(self, u, x, y, z):
        """R(X, Y)Z = <Y, Z> X - <X, Z> Y (unit sphere, curvature one).

        Slots broadcast, so X and Y may be map-shaped while Z carries spinor
        axes; the result has the shape of the widest slot.
        """
        widest = max((x, y, z), key=lambda a: a.ndim)
        x, y, z = (_expand(a, widest) for a in (x, y, z))
        return ambient_dot(y, z)[..., None] * x - ambient_dot(x, z)[..., None] * y

    def riemann_bilinear(self, u, k, z):
        """Contract sum_ab K^ab R(e_a, e_b)Z = (K - K^T) Z for a pointwise matrix K."""
        return np.einsum("...ab,...b->...a", k - np.swapaxes(k, -1, -2), z)

    def b_term(self, u, du, psi):
        """Quartic epsilon-term of the extrinsic map equation.

        On the sphere the mixed second-fundamental-form/connection quartic
        collapses to -sum_alpha |<du(e_alpha), psi>|^2 u, a purely normal
        vector.  The identification is validated against the intrinsic form
        of the equation by the cross-check tests.
        """
        out = np.zeros_like(u)
        for alpha in (0, 1):
            m = ambient_dot(du[alpha], psi)  # (nx, ny, 2) complex
            out -= np.sum(np.abs(m) ** 2, axis=-1)[..., None] * u
        return out


@dataclass(frozen=True)
class FlatTorus:
    """(R / period Z)^q stored as lifts; differences wrap to the nearest
    representative so linear winding maps differentiate exactly."""

    q: int = 1
    period: float = 2.0 * np.pi
    kind = "flat"
    kind_id = 0
    is_flat = True

    @property
    def chart_period(self):
        return self.period

    def __post_init__(self):
        if self.q < 1:
            raise ValueError(f"flat target needs dimension >= 1, got {self.q}")
        if self.period <= 0:
            raise ValueError(f"torus target period must be positive, got {self.period}")

    def increment(self, d):
        return d - self.period * np.round(d / self.period)

    def project_point(self, p):
        return p

    def constraint_residual(self, u):
        return 0.0

    def project_tangent(self, u, w):
        return w

    def tangency_residual(self, u, w):
        return 0.0

    def second_fundamental_form(self, u, x, y):
        shape = np.broadcast_shapes(x.shape, y.shape)
        dtype = np.result_type(x, y)
        return np.zeros(shape, dtype=dtype)

    def shape_operator(self, u, xi, x):
        return np.zeros_like(x)

    def cov_deriv_II(self, u, du, w):
        return np.zeros_like(w)

    def riemann(self, u, x, y, z):
        return np.zeros_like(z)

    def riemann_bilinear(self, u, k, z):
        return np.zeros_like(z)

    def b_term(self, u, du, psi):
        return np.zeros_like(u)


def make_target(kind, q):
    if kind == "sphere":
        return Sphere(q)
    if kind == "flat":
        return FlatTorus(q)
    raise ValueError(f"unknown target kind {kind!r}; expected 'sphere' or 'flat'")


def target_from_kind_id(kind_id, q):
    if kind_id == 1:
        return Sphere(q)
    if kind_id == 0:
        return FlatTorus(q)
    raise ValueError(f"unknown target kind id {kind_id}")
