"""Shared smooth-field builders for the test suite."""

import numpy as np

from dhflow.clifford import tangency_project
from dhflow.grid import GridSpec, SpinStructure
from dhflow.targets import Sphere


def smooth_sphere_map(spec, amp=0.4):
    """A smooth non-geodesic map into S^2 with O(1) derivatives."""
    X, Y = spec.coords()
    raw = np.stack(
        [
            1.0 + amp * np.cos(X),
            amp * np.sin(Y),
            0.5 + 0.5 * amp * np.sin(X + Y),
        ],
        axis=-1,
    )
    return Sphere(3).project_point(raw)


def smooth_tangent_spinor(spec, target, u, amp=1.0, mix=None):
    """A smooth spinor field along u, projected into the tangent bundle."""
    X, Y = spec.coords()
    envelope = (np.cos(X) + 1j * np.sin(2 * Y))[..., None, None]
    if mix is None:
        mix = np.array([[1.0, 0.3, 0.1], [0.2, 1.0, -0.4]])[:, : u.shape[-1]]
    return tangency_project(target, u, amp * envelope * mix)


def grid_with_spin(n, spin=(0, 0), lx=2 * np.pi, ly=2 * np.pi):
    return GridSpec(n, n, lx, ly, SpinStructure(*spin))
