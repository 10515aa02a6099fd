"""Binary checkpoints of Tucker tensors.

Layout (little endian): magic ``b"TUCK3"``, version ``u32``, ``N1 N2 N3`` and
``r1 r2 r3`` as ``u64``, then the core and the three factors as ``f64`` in
column-major order.
"""
from __future__ import annotations

import struct

import numpy as np

from .errors import ContractError
from .tucker import TuckerTensor3

MAGIC = b"TUCK3"
VERSION = 1
_HEADER = struct.Struct("<5sI6Q")


def dumps(t):
    head = _HEADER.pack(MAGIC, VERSION, *t.shape, *t.mlrank)
    parts = [t.core] + list(t.factors)
    body = b"".join(np.asarray(p, dtype="<f8").tobytes(order="F") for p in parts)
    return head + body


def loads(data):
    if len(data) < _HEADER.size:
        raise ContractError("snapshot is truncated")
    magic, version, n1, n2, n3, r1, r2, r3 = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ContractError(f"not a TUCK3 snapshot (magic {magic!r})")
    if version != VERSION:
        raise ContractError(f"unsupported snapshot version {version}")
    shapes = [(r1, r2, r3), (n1, r1), (n2, r2), (n3, r3)]
    need = _HEADER.size + 8 * sum(int(np.prod(s)) for s in shapes)
    if len(data) != need:
        raise ContractError(f"snapshot has {len(data)} bytes, expected {need}")
    off = _HEADER.size
    arrays = []
    for s in shapes:
        count = int(np.prod(s))
        a = np.frombuffer(data, dtype="<f8", count=count, offset=off).reshape(s, order="F")
        arrays.append(a.astype(float))
        off += 8 * count
    return TuckerTensor3(arrays[0], tuple(arrays[1:]))


def save(path, t):
    with open(path, "wb") as f:
        f.write(dumps(t))


def load(path):
    with open(path, "rb") as f:
        return loads(f.read())
