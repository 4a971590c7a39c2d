"""Worked examples from the module contracts not covered elsewhere."""

import collections
import math

import numpy as np
import pytest

from tfresource.eigensolver import detect_transition_h, resolve_ground, solve_lowest
from tfresource.entanglement import (
    DisconnectedGeometry,
    PartitionSpec,
    dee_oracle,
    entanglement_entropy,
    renyi_entropy,
    reduce,
    tf_entropy_oracle,
    tf_phase_entropy,
)
from tfresource.lab.fit import fit_power_law
from tfresource.lab.tasks import Quantity, TaskOptions, compute_row
from tfresource.magic import extra_magic, iter_pauli_expectations, pauli_spectrum, sre, w_sre_oracle
from tfresource.model import ModelSpec, build
from tfresource.spin import PauliString, StateVector, apply_pauli, apply_sigma_z, momentum_range, expect_pauli, global_parity_z, rotate_basis_x, translate
from tfresource.states import (
    CliffordCircuit,
    apply_circuit,
    clifford_map_circuit,
    ghz_state,
    kink_state,
    omega_state,
    w_state,
)


def test_single_qubit_paulis():
    up = StateVector.basis(1, 0)
    assert np.allclose(apply_pauli(up, PauliString(1, 0)).amps, [0, 1])
    assert np.allclose(apply_pauli(up, PauliString(0, 1)).amps, [1, 0])


def test_ghz2_stabilizers():
    g = ghz_state(2)
    assert np.allclose(apply_pauli(StateVector.basis(2, 0), PauliString(3, 3)).amps, [0, 0, 0, -1])
    # i^2 XZ (x) XZ = +YY, so <-YY> = +1 means <P> = -1
    assert expect_pauli(g, PauliString(3, 3)) == pytest.approx(-1.0)
    assert expect_pauli(g, PauliString(3, 0)) == pytest.approx(1.0)  # XX
    assert expect_pauli(g, PauliString(0, 3)) == pytest.approx(1.0)  # ZZ
    assert expect_pauli(g, PauliString(1, 0)) == pytest.approx(0.0)
    assert expect_pauli(StateVector.random(3), PauliString(0, 0)) == pytest.approx(1.0)


def test_translation_and_parity_examples():
    assert translate(StateVector.basis(3, 0b001), 1).amps[0b010] == 1
    s = StateVector.random(4)
    assert np.array_equal(translate(s, 0).amps, s.amps)
    assert global_parity_z(StateVector.basis(3, 0b111)).amps[0b111] == -1
    assert np.allclose(rotate_basis_x(StateVector.basis(3, 0)).amps, np.full(8, 2**-1.5))
    assert np.allclose(rotate_basis_x(StateVector.basis(1, 1)).amps, [2**-0.5, -(2**-0.5)])


def test_unfrustrated_n4_ground_pair():
    bundle = solve_lowest(build(ModelSpec(4, 1.0)), 3)
    assert bundle.energies[:2] == pytest.approx([-4, -4])
    assert bundle.ground_degeneracy == 2


def test_gapless_band_shrinks():
    gaps = []
    for n in (5, 7, 9, 11):
        e = solve_lowest(build(ModelSpec(n, 1.0, h=0.5)), 4).energies
        gaps.append(e[1] - e[0])
    assert all(b < a for a, b in zip(gaps, gaps[1:]))


def test_classical_manifold_labels_each_momentum_twice():
    bundle = resolve_ground(solve_lowest(build(ModelSpec(5, 1.0)), 12))
    labels = [bundle.sector_labels[i].momentum_index for i in bundle.degeneracy_groups[0]]
    assert collections.Counter(labels) == {ell: 2 for ell in range(-2, 3)}


def test_unique_ground_state_momentum():
    bundle = resolve_ground(solve_lowest(build(ModelSpec(7, 1.0, 0.1, 0.0, 0.6)), 2))
    assert bundle.ground_degeneracy == 1
    assert bundle.sector_labels[0].momentum_index == 0
    # a unique state is a 1-dim representation of translations, but for an
    # even antiferromagnetic ring that representation is momentum pi
    bundle = resolve_ground(solve_lowest(build(ModelSpec(6, 1.0, 0.2, 0.0, 0.7)), 2))
    s = bundle.states[0]
    assert abs(abs(s.inner(translate(s, 1))) - 1) < 1e-10
    assert bundle.sector_labels[0].momentum_index == 3


def test_ising_line_has_no_transition():
    assert detect_transition_h(ModelSpec(7, 1.0), resolution=1e-2) is None


def test_kink_families_and_energies():
    n = 5
    for k in range(1, n + 1):
        zz = kink_state(n, k, "minus")
        for j in range(1, n + 1):
            zz = apply_sigma_z(zz, j)
        # the plus family is the minus family under the global sigma^z flip
        assert abs(abs(zz.inner(kink_state(n, k, "plus"))) - 1) < 1e-12
    s = kink_state(3, 1)
    assert np.vdot(s.amps, build(ModelSpec(3, 1.0)).apply(s.amps)).real == pytest.approx(-1.0)


@pytest.mark.parametrize("n", [3, 5])
def test_omega_examples(n):
    spec = ModelSpec(n, 1.0)
    for ell in range(-(n // 2), n // 2 + 1):
        s = omega_state(n, ell)
        assert np.vdot(s.amps, build(spec).apply(s.amps)).real == pytest.approx(-n + 2)


def test_w_orthonormal_and_n3_standard():
    ws = [w_state(5, ell).amps for ell in range(-2, 3)]
    gram = np.array([[np.vdot(a, b) for b in ws] for a in ws])
    assert np.allclose(gram, np.eye(5), atol=1e-12)
    # in the rotated basis W_0 at N=3 is the uniform single-flip superposition
    back = rotate_basis_x(w_state(3, 0)).amps
    support = {i for i in range(8) if abs(back[i]) > 1e-12}
    # one up spin over the all-down image of |->^N
    assert support == {0b110, 0b101, 0b011}
    assert np.allclose(np.abs(back[sorted(support)]), 3**-0.5)
    for n in (2, 6, 12):
        for ell in momentum_range(n):
            assert abs(w_state(n, ell).norm() - 1) < 1e-12


def test_circuit_examples(rng):
    circ = clifford_map_circuit(5)
    counts = circ.counts()
    assert counts["cnot"] == 8 and counts["hadamard"] == 1
    s = StateVector.random(5, rng)
    assert abs(apply_circuit(circ, s).norm() - 1) < 1e-12
    assert np.array_equal(apply_circuit(CliffordCircuit(5), s).amps, s.amps)


def test_entropy_examples():
    w6 = w_state(6)
    assert entanglement_entropy(w6, PartitionSpec((1, 2))) == pytest.approx(0.9183, abs=1e-4)
    assert entanglement_entropy(w6, PartitionSpec((1, 2, 3)), alpha=2) == pytest.approx(1.0)
    g = ghz_state(6)
    ev = np.sort(reduce(g, PartitionSpec((2, 5))).eigenvalues())
    assert np.allclose(ev, [0, 0, 0.5, 0.5], atol=1e-14)
    mixed = reduce(ghz_state(2), PartitionSpec((1,)))
    assert renyi_entropy(mixed, 2) == pytest.approx(1.0)


def test_closed_form_examples():
    assert tf_entropy_oracle(0.25) == pytest.approx(1 + 0.5 + 0.75 * math.log2(4 / 3))
    assert tf_entropy_oracle(0.3) == pytest.approx(tf_entropy_oracle(0.7))
    assert tf_phase_entropy(1.0, 0.5) == 2.0
    assert tf_phase_entropy(0.0, 1e-9) < 1e-7
    assert tf_phase_entropy(0.4, 0.3) - 0.4 == pytest.approx(tf_entropy_oracle(0.3) - 1.0)
    assert dee_oracle(1e-6, 0.125) < 1e-5


def test_dee_oracle_ignores_r():
    # the thermodynamic value depends only on (m, l); geometries differing in r share it
    a = DisconnectedGeometry.from_fractions(24, 0.5, 0.125, 0.25)
    b = DisconnectedGeometry.from_fractions(24, 0.5, 0.125, 0.375)
    assert dee_oracle(a.m_frac, a.l_frac) == dee_oracle(b.m_frac, b.l_frac)


def test_pauli_spectrum_examples():
    g = ghz_state(3)
    unit = sum(1 for _, v in iter_pauli_expectations(g) if abs(abs(v) - 1) < 1e-12)
    zero = sum(1 for _, v in iter_pauli_expectations(g) if abs(v) < 1e-12)
    assert unit == 8 and zero == 56
    assert pauli_spectrum(g).zeta(2) == pytest.approx(1.0)
    nonzero = {p.label(1) for p, v in iter_pauli_expectations(StateVector.basis(1, 0)) if abs(v) > 1e-12}
    assert nonzero == {"I", "Z"}


def test_sre_examples():
    assert sre(w_state(3)).value == pytest.approx(math.log2(27 / 15), abs=1e-12)
    assert w_sre_oracle(5, 1) == pytest.approx(w_sre_oracle(5, 0) + math.log2(29 / 24))
    assert extra_magic(5) == pytest.approx(math.log2(29 / 24), abs=1e-14)
    vals = [extra_magic(n) for n in range(3, 102)]
    assert all(b < a for a, b in zip(vals, vals[1:]))


def test_r2_is_one_at_classical_point():
    row = compute_row(Quantity.R2, ModelSpec(5, 1.0), TaskOptions())
    assert row["m2_nf"] == pytest.approx(0.0, abs=1e-10)
    assert row["r2"] == pytest.approx(1.0, abs=1e-10)


def test_fit_noise_regression():
    rng = np.random.default_rng(11)
    ns = np.arange(9, 40, 2)
    vals = 2.0 * ns**-0.935 * (1 + 0.01 * rng.standard_normal(ns.size))
    fit = fit_power_law(list(zip(ns, vals)))
    assert -1.0 <= fit.exponent <= -0.87
    assert fit_power_law([(n, 3.0 / n) for n in (5, 10, 20)]).exponent == pytest.approx(-1.0)
