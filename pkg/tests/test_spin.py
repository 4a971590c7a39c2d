import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tfresource.errors import ContractError, DomainError
from tfresource.spin import (
    PauliString,
    StateVector,
    SymmetrySector,
    apply_hadamard,
    apply_pauli,
    apply_sigma_z,
    expect_pauli,
    global_parity_z,
    momentum_range,
    popcount,
    rotate_basis_x,
    translate,
)

SIGMA = {
    "I": np.eye(2),
    "X": np.array([[0, 1], [1, 0]]),
    "Y": np.array([[0, -1j], [1j, 0]]),
    "Z": np.diag([1, -1]),
}


def dense_pauli(label):
    # site 1 is the lowest bit, i.e. the rightmost kron factor
    out = np.eye(1)
    for ch in label:
        out = np.kron(SIGMA[ch], out)
    return out


class TestStateVector:
    def test_length_checked(self):
        with pytest.raises(ContractError):
            StateVector(3, np.zeros(7))

    def test_amps_frozen_copy(self):
        raw = np.zeros(4, dtype=complex)
        raw[0] = 1
        s = StateVector(2, raw)
        raw[0] = 5
        assert s.amps[0] == 1
        with pytest.raises(ValueError):
            s.amps[0] = 2

    def test_normalize(self, rng):
        s = StateVector(4, rng.standard_normal(16)).normalize()
        assert abs(s.norm() - 1) < 1e-12

    def test_zero_cannot_normalize(self):
        with pytest.raises(ContractError):
            StateVector(2, np.zeros(4)).normalize()

    @settings(max_examples=25, deadline=None)
    @given(st.integers(1, 6), st.integers(0, 2**32 - 1))
    def test_tfsv_roundtrip(self, n, seed):
        s = StateVector.random(n, np.random.default_rng(seed))
        blob = s.to_bytes()
        assert blob[:4] == b"TFSV"
        assert len(blob) == 12 + 16 * 2**n
        back = StateVector.from_bytes(blob)
        assert back.n_sites == n and np.array_equal(back.amps, s.amps)

    def test_json_roundtrip(self, rng):
        s = StateVector.random(3, rng)
        assert np.array_equal(StateVector.from_json(s.to_json()).amps, s.amps)

    @pytest.mark.parametrize("blob", [b"XXXX" + bytes(8), b"TF", b"TFSV" + (1).to_bytes(4, "little") + (2).to_bytes(4, "little")])
    def test_bad_bytes(self, blob):
        with pytest.raises(ContractError):
            StateVector.from_bytes(blob)


class TestPauli:
    @settings(max_examples=60, deadline=None)
    @given(st.text(alphabet="IXYZ", min_size=1, max_size=5))
    def test_label_roundtrip(self, label):
        assert PauliString.from_label(label).label(len(label)) == label

    @pytest.mark.parametrize("label", ["X", "Y", "Z", "XY", "YZI", "ZXYI", "YYY"])
    def test_matches_dense(self, label, rng):
        n = len(label)
        s = StateVector.random(n, rng)
        got = apply_pauli(s, PauliString.from_label(label)).amps
        assert np.allclose(got, dense_pauli(label) @ s.amps, atol=1e-13)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 15), st.integers(0, 15))
    def test_hermitian_involution(self, x, z):
        p = PauliString(x, z)
        s = StateVector.random(4, np.random.default_rng(x * 16 + z))
        twice = apply_pauli(apply_pauli(s, p), p)
        assert np.allclose(twice.amps, s.amps, atol=1e-13)
        assert abs(expect_pauli(s, p) - np.vdot(s.amps, apply_pauli(s, p).amps)) < 1e-12

    def test_count_of_strings(self):
        n = 3
        ops = {PauliString(x, z) for x in range(2**n) for z in range(2**n)}
        assert len(ops) == 4**n

    def test_bad_letter(self):
        with pytest.raises(DomainError):
            PauliString.from_label("XQ")

    def test_mask_too_wide(self):
        with pytest.raises(DomainError):
            apply_pauli(StateVector.basis(2, 0), PauliString(4, 0))


class TestSymmetries:
    def test_translate_moves_site(self):
        # up everywhere except site 1
        s = StateVector.basis(5, 0b00001)
        assert translate(s, 1).amps[0b00010] == 1
        assert translate(s, 4).amps[0b10000] == 1

    def test_translate_group(self, rng):
        s = StateVector.random(5, rng)
        out = s
        for _ in range(5):
            out = translate(out, 1)
        assert np.allclose(out.amps, s.amps)
        assert np.allclose(translate(translate(s, 2), 1).amps, translate(s, 3).amps)

    def test_translate_range(self):
        with pytest.raises(DomainError):
            translate(StateVector.basis(3, 0), 3)

    def test_parity(self):
        s = StateVector.basis(3, 0b011)
        assert global_parity_z(s).amps[0b011] == 1
        assert global_parity_z(StateVector.basis(3, 0b001)).amps[0b001] == -1

    def test_rotate_basis_x_involution(self, rng):
        s = StateVector.random(4, rng)
        assert np.allclose(rotate_basis_x(rotate_basis_x(s)).amps, s.amps)

    def test_hadamard_twice(self, rng):
        s = StateVector.random(3, rng)
        assert np.allclose(apply_hadamard(apply_hadamard(s, 2), 2).amps, s.amps, atol=1e-14)

    def test_sigma_z_site(self):
        s = StateVector.basis(3, 0b100)
        assert apply_sigma_z(s, 3).amps[0b100] == -1
        assert apply_sigma_z(s, 1).amps[0b100] == 1
        with pytest.raises(DomainError):
            apply_sigma_z(s, 4)

    @pytest.mark.parametrize("n,expected", [(1, [0]), (3, [-1, 0, 1]), (4, [-1, 0, 1, 2]), (5, [-2, -1, 0, 1, 2])])
    def test_momentum_range(self, n, expected):
        assert list(momentum_range(n)) == expected

    def test_sector_momentum(self):
        assert SymmetrySector(1).momentum(4) == pytest.approx(np.pi / 2)


def test_popcount():
    assert list(popcount(np.array([0, 1, 3, 7, 255]))) == [0, 1, 2, 3, 8]
