"""Binary state checkpoints.

Layout: the magic "DHFLOW01", then a fixed header of little-endian 64-bit
values (nx, ny as integers; lx, ly as doubles; the two spin bits and q and
the target kind id as integers; eps and t as doubles), then the map field
and the spinor field as IEEE-754 binary64 little-endian arrays in row-major
order, the spinor as interleaved real/imaginary pairs.  Round trips are
bit-exact because nothing is ever formatted as text.
"""

from __future__ import annotations

import struct

import numpy as np

from dhflow.flow import FlowState
from dhflow.grid import GridSpec, SpinStructure
from dhflow.targets import target_from_kind_id

MAGIC = b"DHFLOW01"
_HEADER = struct.Struct("<qqddqqqqdd")


def write_checkpoint(state, path):
    spec, target = state.spec, state.target
    header = _HEADER.pack(
        spec.nx, spec.ny, spec.lx, spec.ly,
        spec.spin.delta1, spec.spin.delta2,
        target.q, target.kind_id, state.eps, state.t,
    )
    u = np.ascontiguousarray(state.u, dtype="<f8")
    psi = np.ascontiguousarray(state.psi, dtype="<c16")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(header)
        fh.write(u.tobytes())
        fh.write(psi.tobytes())


def read_checkpoint(path):
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < len(MAGIC) or blob[:6] != MAGIC[:6]:
        raise ValueError(f"{path}: not a dhflow checkpoint")
    if blob[: len(MAGIC)] != MAGIC:
        version = blob[6 : len(MAGIC)].decode("ascii", "replace")
        raise ValueError(f"{path}: unsupported version {version!r}")
    body = blob[len(MAGIC) :]
    if len(body) < _HEADER.size:
        raise ValueError(f"{path}: truncated checkpoint")
    nx, ny, lx, ly, d1, d2, q, kind_id, eps, t = _HEADER.unpack_from(body)
    spec = GridSpec(nx, ny, lx, ly, SpinStructure(d1, d2))
    target = target_from_kind_id(kind_id, q)
    u_count = nx * ny * q
    psi_count = nx * ny * 2 * q
    expected = _HEADER.size + 8 * u_count + 16 * psi_count
    if len(body) < expected:
        raise ValueError(f"{path}: truncated checkpoint")
    if len(body) > expected:
        raise ValueError(f"{path}: {len(body) - expected} trailing bytes")
    u = np.frombuffer(body, dtype="<f8", count=u_count, offset=_HEADER.size)
    psi = np.frombuffer(body, dtype="<c16", count=psi_count,
                        offset=_HEADER.size + 8 * u_count)
    return FlowState(
        spec=spec, target=target, t=t, eps=eps,
        u=u.reshape(nx, ny, q).copy(),
        psi=psi.reshape(nx, ny, 2, q).copy(),
    )
