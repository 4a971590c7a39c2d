"""Closed-form reference states and the Clifford map between W and kink states.

Kink states live naturally in the sigma^x eigenbasis; all constructors return
amplitudes in the sigma^z computational basis used everywhere else.

Momentum orientation: with ``p = 2 pi l / N`` the states built here satisfy
``translate(psi, 1) == exp(MOMENTUM_SIGN * i p) psi``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from functools import reduce
from typing import Iterable, Sequence, Tuple

import numpy as np

from .errors import ContractError, DomainError
from .spin import (
    StateVector,
    apply_hadamard,
    apply_sigma_z,
    basis_indices,
    global_parity_z,
    momentum_range,
    popcount,
    translate,
)

__all__ = [
    "MOMENTUM_SIGN",
    "KinkFamily",
    "product_state",
    "kink_state",
    "omega_state",
    "w_state",
    "ghz_state",
    "neel_state",
    "GateKind",
    "Gate",
    "CliffordCircuit",
    "clifford_map_circuit",
    "apply_gate",
    "apply_circuit",
]

MOMENTUM_SIGN = -1

_PLUS = np.array([1.0, 1.0]) / np.sqrt(2.0)
_MINUS = np.array([1.0, -1.0]) / np.sqrt(2.0)
_UP = np.array([1.0, 0.0])
_DOWN = np.array([0.0, 1.0])


class KinkFamily(str, Enum):
    MINUS = "minus"
    PLUS = "plus"


def product_state(site_vectors: Sequence[np.ndarray]) -> StateVector:
    """Tensor product; ``site_vectors[j - 1]`` is the state of site j."""
    amps = reduce(np.kron, list(site_vectors)[::-1])
    return StateVector(len(site_vectors), amps)


def _check_odd(n: int) -> None:
    if n < 1 or n % 2 == 0:
        raise DomainError(f"kink states need an odd number of sites, got {n}")


def _check_momentum(n: int, ell: int) -> None:
    if ell not in momentum_range(n):
        r = momentum_range(n)
        raise DomainError(f"momentum index {ell} outside [{r.start}, {r.stop - 1}]")


def kink_state(n: int, k: int, family: KinkFamily | str = KinkFamily.MINUS) -> StateVector:
    """Classical kink: T^{k-1} prod_{j<=M} sigma^z_{2j} |-/+>^{N}.

    The result is an x-basis product state whose only pair of parallel
    neighbours sits on the bond (N, 1) for k = 1 and moves with k.
    """
    _check_odd(n)
    if not 1 <= k <= n:
        raise DomainError(f"kink position k={k} outside 1..{n}")
    family = KinkFamily(family)
    background = _MINUS if family is KinkFamily.MINUS else _PLUS
    flipped = _PLUS if family is KinkFamily.MINUS else _MINUS
    vectors = [flipped if j % 2 == 0 else background for j in range(1, n + 1)]
    return translate(product_state(vectors), k - 1)


def omega_state(n: int, ell: int) -> StateVector:
    """Momentum superposition of all 2N kinks, (2N)^{-1/2} sum_k e^{ipk}(|k>+|k'>)."""
    _check_odd(n)
    _check_momentum(n, ell)
    p = 2.0 * np.pi * ell / n
    base = kink_state(n, 1, KinkFamily.MINUS).amps + kink_state(n, 1, KinkFamily.PLUS).amps
    seed = StateVector(n, base)
    acc = np.zeros(1 << n, dtype=np.complex128)
    for k in range(1, n + 1):
        acc += np.exp(1j * p * k) * translate(seed, k - 1).amps
    return StateVector(n, acc / np.sqrt(2 * n))


def w_state(n: int, ell: int = 0) -> StateVector:
    """Generalized W state N^{-1/2} sum_j e^{ipj} sigma^z_j |->^{N}."""
    if n < 1:
        raise DomainError(f"need n >= 1, got {n}")
    _check_momentum(n, ell)
    p = 2.0 * np.pi * ell / n
    s = basis_indices(n)
    background = (1 - 2 * (popcount(s) & 1)) / 2.0 ** (n / 2.0)
    weights = np.zeros(1 << n, dtype=np.complex128)
    for j in range(1, n + 1):
        zj = 1 - 2 * ((s >> (j - 1)) & 1)
        weights += np.exp(1j * p * j) * zj
    return StateVector(n, background * weights / np.sqrt(n))


def ghz_state(n: int) -> StateVector:
    if n < 1:
        raise DomainError(f"need n >= 1, got {n}")
    amps = np.zeros(1 << n, dtype=np.complex128)
    amps[0] = amps[-1] = 1.0 / np.sqrt(2.0)
    return StateVector(n, amps)


def neel_state(n: int, basis: str = "z", first_up: bool = True) -> StateVector:
    """Alternating product state in the z basis (up/down) or x basis (+/-)."""
    if basis not in ("z", "x"):
        raise DomainError(f"basis must be 'z' or 'x', got {basis!r}")
    a, b = (_UP, _DOWN) if basis == "z" else (_PLUS, _MINUS)
    if not first_up:
        a, b = b, a
    return product_state([a if j % 2 == 1 else b for j in range(1, n + 1)])


# -- Clifford circuits --------------------------------------------------------


class GateKind(str, Enum):
    HADAMARD = "hadamard"
    PAULI_Z = "z"
    CNOT = "cnot"
    PARITY_Z = "parity_z"


_ARITY = {GateKind.HADAMARD: 1, GateKind.PAULI_Z: 1, GateKind.CNOT: 2, GateKind.PARITY_Z: 0}


@dataclass(frozen=True)
class Gate:
    kind: GateKind
    sites: Tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "kind", GateKind(self.kind))
        object.__setattr__(self, "sites", tuple(int(s) for s in self.sites))
        if len(self.sites) != _ARITY[self.kind]:
            raise DomainError(f"{self.kind.value} takes {_ARITY[self.kind]} sites")
        if self.kind is GateKind.CNOT and self.sites[0] == self.sites[1]:
            raise DomainError("CNOT control and target must differ")


@dataclass(frozen=True)
class CliffordCircuit:
    """Gate list in application order (``gates[0]`` acts first)."""

    n_sites: int
    gates: Tuple[Gate, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            for s in g.sites:
                if not 1 <= s <= self.n_sites:
                    raise DomainError(f"gate {g} touches site outside 1..{self.n_sites}")

    def counts(self) -> dict:
        out = {kind.value: 0 for kind in GateKind}
        for g in self.gates:
            out[g.kind.value] += 1
        return out

    def then(self, gates: Iterable[Gate]) -> "CliffordCircuit":
        return CliffordCircuit(self.n_sites, self.gates + tuple(gates))

    def to_json(self) -> str:
        return json.dumps(
            {
                "n_sites": self.n_sites,
                "gates": [{"kind": g.kind.value, "sites": list(g.sites)} for g in self.gates],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "CliffordCircuit":
        data = json.loads(text)
        gates = [Gate(GateKind(g["kind"]), tuple(g["sites"])) for g in data["gates"]]
        return cls(int(data["n_sites"]), tuple(gates))


def _apply_cnot(state: StateVector, control: int, target: int) -> StateVector:
    # exp[i pi/4 (1 - X_c)(1 - Z_t)] = 1 - 2 P(X_c = -1) P(Z_t = -1).
    # Conjugating the x-basis projector by a Hadamard shows this equals a
    # bit flip of `control` on every basis state whose `target` bit is set.
    s = basis_indices(state.n_sites)
    tbit = (s >> (target - 1)) & 1
    src = np.where(tbit == 1, s ^ (1 << (control - 1)), s)
    return StateVector(state.n_sites, state.amps[src])


def apply_gate(gate: Gate, state: StateVector) -> StateVector:
    if gate.kind is GateKind.HADAMARD:
        return apply_hadamard(state, gate.sites[0])
    if gate.kind is GateKind.PAULI_Z:
        return apply_sigma_z(state, gate.sites[0])
    if gate.kind is GateKind.CNOT:
        return _apply_cnot(state, *gate.sites)
    return global_parity_z(state)


def apply_circuit(circuit: CliffordCircuit, state: StateVector) -> StateVector:
    if circuit.n_sites != state.n_sites:
        raise ContractError(
            f"circuit acts on {circuit.n_sites} sites, state has {state.n_sites}"
        )
    for gate in circuit.gates:
        state = apply_gate(gate, state)
    return state


def clifford_map_circuit(n: int) -> CliffordCircuit:
    """Clifford circuit taking |W_p> to |omega_p> (up to a global phase).

    Application order: global parity, the CNOT ladder C(1,2) ... C(N-1,N),
    sigma^z_N, Hadamard on N, sigma^z on odd sites, then the fan C(N, N-j).
    """
    _check_odd(n)
    gates = [Gate(GateKind.PARITY_Z)]
    gates += [Gate(GateKind.CNOT, (j, j + 1)) for j in range(1, n)]
    gates.append(Gate(GateKind.PAULI_Z, (n,)))
    gates.append(Gate(GateKind.HADAMARD, (n,)))
    gates += [Gate(GateKind.PAULI_Z, (2 * j - 1,)) for j in range(1, n // 2 + 1)]
    gates += [Gate(GateKind.CNOT, (n, n - j)) for j in range(1, n)]
    return CliffordCircuit(n, tuple(gates))
