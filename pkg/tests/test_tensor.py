import numpy as np
import pytest

from ttradar import tensor as tz
from ttradar.errors import IngestError, InvalidArgumentError


def rand_tensor(rng, dims):
    return rng.standard_normal(dims) + 1j * rng.standard_normal(dims)


def test_reshape_is_column_major():
    # the flat index of element (i1, i2, i3) must be i1 + I1*i2 + I1*I2*i3
    t = np.arange(24).reshape((2, 3, 4), order="F")
    flat = tz.reshape(t, (24,))
    assert np.array_equal(flat, np.arange(24))
    back = tz.reshape(flat, (2, 3, 4))
    assert np.array_equal(back, t)


def test_reshape_rejects_wrong_size():
    with pytest.raises(InvalidArgumentError):
        tz.reshape(np.zeros((2, 3)), (4, 2))


def test_unfold_cpd_index_map():
    rng = np.random.Generator(np.random.Philox(0))
    t = rand_tensor(rng, (3, 4, 5))
    m = tz.unfold_cpd(t, 2)
    assert m.shape == (12, 5)
    for i1 in range(3):
        for i2 in range(4):
            for i3 in range(5):
                assert m[i1 + 3 * i2, i3] == t[i1, i2, i3]


def test_fold_unfold_round_trip():
    rng = np.random.Generator(np.random.Philox(1))
    t = rand_tensor(rng, (2, 3, 4, 5))
    for n in range(1, 4):
        m = tz.unfold_cpd(t, n)
        assert np.array_equal(tz.fold_cpd(m, n, t.shape), t)


def test_unfold_mode_rows_are_mode_fibers():
    rng = np.random.Generator(np.random.Philox(2))
    t = rand_tensor(rng, (3, 4, 5))
    m = tz.unfold_mode(t, 2)
    assert m.shape == (4, 15)
    # column j of the unfolding is a mode-2 fiber
    assert np.allclose(m[:, 0], t[0, :, 0])


def test_mode_product_against_einsum():
    rng = np.random.Generator(np.random.Philox(3))
    t = rand_tensor(rng, (3, 4, 5))
    M = rand_tensor(rng, (6, 4))
    out = tz.mode_product(t, M, 2)
    ref = np.einsum("ab,ibk->iak", M, t)
    assert out.shape == (3, 6, 5)
    assert np.allclose(out, ref)


def test_mode_product_unfolding_identity():
    # unfold_mode(t x_n M, n) == M @ unfold_mode(t, n)
    rng = np.random.Generator(np.random.Philox(4))
    t = rand_tensor(rng, (3, 4, 5, 2))
    for n in range(1, 5):
        M = rand_tensor(rng, (7, t.shape[n - 1]))
        lhs = tz.unfold_mode(tz.mode_product(t, M, n), n)
        rhs = M @ tz.unfold_mode(t, n)
        assert np.allclose(lhs, rhs)


def test_khatri_rao_matches_kron_per_column():
    rng = np.random.Generator(np.random.Philox(5))
    A = rand_tensor(rng, (3, 4))
    B = rand_tensor(rng, (5, 4))
    K = tz.khatri_rao(A, B)
    assert K.shape == (15, 4)
    for r in range(4):
        assert np.allclose(K[:, r], np.kron(A[:, r], B[:, r]))


def test_khatri_rao_list_first_factor_fastest():
    rng = np.random.Generator(np.random.Philox(6))
    mats = [rand_tensor(rng, (d, 2)) for d in (2, 3, 4)]
    K = tz.khatri_rao_list(mats)
    for r in range(2):
        ref = np.kron(mats[2][:, r], np.kron(mats[1][:, r], mats[0][:, r]))
        assert np.allclose(K[:, r], ref)


def test_cpd_unfolding_identity():
    # X_<n> = (U_n kr ... kr U_1) (U_N kr ... kr U_{n+1})^T for rank-1 weights
    rng = np.random.Generator(np.random.Philox(7))
    dims = (3, 4, 5)
    R = 2
    U = [rand_tensor(rng, (d, R)) for d in dims]
    X = np.zeros(dims, dtype=complex)
    for r in range(R):
        X += tz.outer([u[:, r] for u in U])
    for n in range(1, 3):
        left = tz.khatri_rao_list(U[:n])
        right = tz.khatri_rao_list(U[n:])
        assert np.allclose(tz.unfold_cpd(X, n), left @ right.T)


def test_outer_matches_loops():
    rng = np.random.Generator(np.random.Philox(8))
    vs = [rand_tensor(rng, (d,)) for d in (2, 3, 4)]
    t = tz.outer(vs)
    for i in range(2):
        for j in range(3):
            for k in range(4):
                assert np.isclose(t[i, j, k], vs[0][i] * vs[1][j] * vs[2][k])


def test_contract_matches_tensordot():
    rng = np.random.Generator(np.random.Philox(9))
    a = rand_tensor(rng, (2, 3, 4))
    b = rand_tensor(rng, (4, 3, 5))
    out = tz.contract(a, b, 3, 1)
    assert np.allclose(out, np.tensordot(a, b, axes=([2], [0])))


def test_concat_adds_trailing_mode():
    a = np.ones((2, 3))
    b = 2 * np.ones((2, 3))
    out = tz.concat([a, b], 3)
    assert out.shape == (2, 3, 2)
    assert np.all(out[:, :, 0] == 1) and np.all(out[:, :, 1] == 2)


def test_cten_round_trip(tmp_path):
    rng = np.random.Generator(np.random.Philox(10))
    t = rand_tensor(rng, (3, 4, 5))
    path = tmp_path / "t.cten"
    tz.write_cten(path, t)
    back = tz.read_cten(path)
    assert back.shape == t.shape
    assert np.array_equal(back, t)


def test_cten_write_is_deterministic(tmp_path):
    rng = np.random.Generator(np.random.Philox(11))
    t = rand_tensor(rng, (2, 2, 2))
    tz.write_cten(tmp_path / "a.cten", t)
    tz.write_cten(tmp_path / "b.cten", t)
    assert (tmp_path / "a.cten").read_bytes() == (tmp_path / "b.cten").read_bytes()


def test_cten_truncated_file_raises(tmp_path):
    rng = np.random.Generator(np.random.Philox(12))
    t = rand_tensor(rng, (3, 3))
    path = tmp_path / "t.cten"
    tz.write_cten(path, t)
    raw = path.read_bytes()
    path.write_bytes(raw[: len(raw) - 8])
    with pytest.raises(IngestError):
        tz.read_cten(path)


def test_cten_bad_magic_raises(tmp_path):
    path = tmp_path / "t.cten"
    path.write_bytes(b"NOPE" + b"\x00" * 32)
    with pytest.raises(IngestError):
        tz.read_cten(path)
