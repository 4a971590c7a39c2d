"""User-facing verification suites with a machine-readable report."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from typing import Callable, Dict, List

import numpy as np

from ..eigensolver import max_principal_angle, resolve_ground, solve_lowest
from ..entanglement import (
    PartitionSpec,
    dee_oracle,
    entanglement_entropy,
    renyi_entropy,
    reduce,
    tf_entropy_oracle,
)
from ..errors import UsageError
from ..magic import extra_magic, naive_pauli_spectrum, pauli_spectrum, sre, w_sre_oracle
from ..model import ModelSpec, build, classical_ground_energy
from ..spin import StateVector, momentum_range
from ..states import (
    CliffordCircuit,
    Gate,
    GateKind,
    apply_circuit,
    clifford_map_circuit,
    ghz_state,
    kink_state,
    omega_state,
    w_state,
)

__all__ = ["Check", "SUITES", "run_suite", "random_clifford_circuit"]


@dataclass(frozen=True)
class Check:
    name: str
    expected: float
    got: float
    tol: float
    passed: bool

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return d


def _close(name: str, expected: float, got: float, tol: float) -> Check:
    return Check(name, float(expected), float(got), float(tol), bool(abs(got - expected) <= tol))


def random_clifford_circuit(n: int, depth: int, rng: np.random.Generator) -> CliffordCircuit:
    """Random word in the Hadamard / Z / CNOT / global-parity gate set."""
    gates = []
    for _ in range(depth):
        kind = rng.choice(["hadamard", "z", "cnot", "parity_z"], p=[0.35, 0.2, 0.4, 0.05])
        if kind == "cnot" and n >= 2:
            c, t = rng.choice(np.arange(1, n + 1), size=2, replace=False)
            gates.append(Gate(GateKind.CNOT, (int(c), int(t))))
        elif kind == "parity_z":
            gates.append(Gate(GateKind.PARITY_Z))
        elif kind == "z":
            gates.append(Gate(GateKind.PAULI_Z, (int(rng.integers(1, n + 1)),)))
        else:
            gates.append(Gate(GateKind.HADAMARD, (int(rng.integers(1, n + 1)),)))
    return CliffordCircuit(n, tuple(gates))


def _oracles(rng: np.random.Generator) -> List[Check]:
    checks = [
        _close("tf_entropy m=1/2", 2.0, tf_entropy_oracle(0.5), 1e-12),
        _close("tf_entropy m=1/4", 1.5 + 0.75 * math.log2(4 / 3), tf_entropy_oracle(0.25), 1e-12),
        _close("dee_oracle m=1/2 l=1/8", 0.611435, dee_oracle(0.5, 0.125), 1e-6),
        _close("extra_magic N=5", math.log2(29 / 24), extra_magic(5), 1e-12),
    ]
    # rank-2 single-magnon spectrum: binary entropy of the block fraction
    w6 = w_state(6, 0)
    checks.append(
        _close("W N=6 M=2 entropy", -(1 / 3) * math.log2(1 / 3) - (2 / 3) * math.log2(2 / 3),
               entanglement_entropy(w6, PartitionSpec.block(1, 2)), 1e-10)
    )
    checks.append(_close("W N=6 M=3 renyi-2", 1.0, renyi_entropy(reduce(w6, PartitionSpec.block(1, 3)), 2.0), 1e-10))
    checks.append(_close("GHZ N=8 half-chain entropy", 1.0, entanglement_entropy(ghz_state(8), PartitionSpec.block(1, 4)), 1e-10))
    for n in (3, 5, 7, 9):
        for ell in momentum_range(n):
            if ell < 0:
                continue
            checks.append(_close(f"W SRE N={n} l={ell}", w_sre_oracle(n, ell), sre(w_state(n, ell)).value, 1e-9))
    checks.append(_close("W SRE N=5 l=0 closed form", math.log2(125 / 29), w_sre_oracle(5, 0), 1e-12))
    checks.append(_close("W SRE N=5 l=1 closed form", math.log2(125 / 24), w_sre_oracle(5, 1), 1e-12))
    for i in range(3):
        n = 4 + i
        psi = StateVector.random(n, rng)
        fast = pauli_spectrum(psi, (2,)).zeta(2)
        slow = naive_pauli_spectrum(psi, (2,)).zeta(2)
        checks.append(_close(f"fast vs naive zeta_2 random N={n} #{i}", slow, fast, 1e-10))
    return checks


def _clifford(rng: np.random.Generator) -> List[Check]:
    checks = []
    for n in (3, 5, 7):
        circ = clifford_map_circuit(n)
        for ell in momentum_range(n):
            w = w_state(n, ell)
            omega = omega_state(n, ell)
            fid = abs(omega.inner(apply_circuit(circ, w)))
            checks.append(_close(f"|<omega|S|W>| N={n} l={ell}", 1.0, fid, 1e-10))
            checks.append(_close(f"M2 omega vs W N={n} l={ell}", sre(w).value, sre(omega).value, 1e-9))
    for i in range(4):
        n = 4 + i % 3
        psi = StateVector.random(n, rng)
        circ = random_clifford_circuit(n, 30, rng)
        checks.append(_close(f"M2 invariance random circuit N={n} #{i}", sre(psi).value, sre(apply_circuit(circ, psi)).value, 1e-9))
    return checks


def _degeneracy(rng: np.random.Generator) -> List[Check]:
    checks = []
    for n in (3, 5, 7, 9):
        spec = ModelSpec(n, 1.0, 0.0, 0.0, 0.0)
        bundle = solve_lowest(build(spec), 2 * n + 1)
        e0 = classical_ground_energy(spec)
        checks.append(_close(f"ground degeneracy N={n}", 2 * n, bundle.ground_degeneracy, 0))
        checks.append(_close(f"ground energy N={n}", e0, bundle.energies[0], 1e-9))
        ground = np.column_stack([bundle.states[i].amps for i in bundle.degeneracy_groups[0]])
        kinks = np.column_stack(
            [kink_state(n, k, fam).amps for fam in ("minus", "plus") for k in range(1, n + 1)]
        )
        angle = max_principal_angle(ground, kinks)
        checks.append(_close(f"kink span max principal angle N={n}", 0.0, angle, 1e-8))
    bundle = resolve_ground(solve_lowest(build(ModelSpec(5, 1.0)), 12))
    labels = sorted(bundle.sector_labels[i].momentum_index for i in bundle.degeneracy_groups[0])
    expected = sorted(list(momentum_range(5)) * 2)
    checks.append(Check("momentum labels N=5 cover each l twice", 0.0, float(labels != expected), 0.0, labels == expected))
    return checks


SUITES: Dict[str, Callable[[np.random.Generator], List[Check]]] = {
    "oracles": _oracles,
    "clifford": _clifford,
    "degeneracy": _degeneracy,
}


def run_suite(suite: str, seed: int = 7, timestamp: bool = True) -> dict:
    """Run ``suite`` (a key of ``SUITES`` or ``"all"``) and return the report."""
    names = list(SUITES) if suite == "all" else [suite]
    for name in names:
        if name not in SUITES:
            raise UsageError(f"unknown suite {suite!r}; choose from {sorted(SUITES) + ['all']}")
    checks: List[Check] = []
    for name in names:
        rng = np.random.default_rng([seed, names.index(name)])
        checks.extend(SUITES[name](rng))
    report = {
        "suite": suite,
        "seed": seed,
        "checks": [c.to_dict() for c in checks],
        "pass": all(c.passed for c in checks),
    }
    if timestamp:
        report["generated"] = datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
    return report
