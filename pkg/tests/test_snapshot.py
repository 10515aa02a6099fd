import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rail3d.errors import ContractError
from rail3d.snapshot import MAGIC, dumps, load, loads, save
from rail3d.tucker import random_tucker

dims = st.integers(1, 4)


@given(st.tuples(dims, dims, dims), st.integers(0, 2 ** 31))
def test_roundtrip_bitwise(r, seed):
    t = random_tucker(np.random.default_rng(seed), (5, 6, 4), r)
    back = loads(dumps(t))
    assert np.array_equal(back.core, t.core)
    assert all(np.array_equal(a, b) for a, b in zip(back.factors, t.factors))


def test_header_layout(rng):
    t = random_tucker(rng, (5, 6, 4), (2, 3, 1))
    data = dumps(t)
    assert data[:5] == MAGIC
    assert len(data) == 5 + 4 + 48 + 8 * (6 + 10 + 18 + 4)


def test_rejects_corrupt(rng, tmp_path):
    t = random_tucker(rng, (5, 6, 4), (2, 3, 1))
    data = dumps(t)
    with pytest.raises(ContractError):
        loads(b"XXXXX" + data[5:])
    with pytest.raises(ContractError):
        loads(data[:-8])
    with pytest.raises(ContractError):
        loads(data[:10])
    with pytest.raises(ContractError):
        loads(data[:5] + (2).to_bytes(4, "little") + data[9:])
    save(tmp_path / "u.tuck3", t)
    assert np.allclose(load(tmp_path / "u.tuck3").full(), t.full())
