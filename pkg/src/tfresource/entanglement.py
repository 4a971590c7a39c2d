"""Reduced density matrices, entanglement entropies and their closed forms.

All entropies are in bits. Subsystems are given as 1-based site indices and
may be non-contiguous.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

from .errors import ContractError, DomainError
from .spin import StateVector

__all__ = [
    "EIGEN_FLOOR",
    "PartitionSpec",
    "DisconnectedGeometry",
    "ReducedDensityMatrix",
    "reduce",
    "subsystem_spectrum",
    "von_neumann_entropy",
    "renyi_entropy",
    "entanglement_entropy",
    "disconnected_entropy",
    "binary_entropy",
    "tf_entropy_oracle",
    "tf_phase_entropy",
    "dee_oracle",
    "round_half_up",
]

EIGEN_FLOOR = 1e-14


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class PartitionSpec:
    """Sorted, distinct 1-based sites forming subsystem A."""

    subsystem: Tuple[int, ...]

    def __post_init__(self):
        sites = tuple(sorted(int(s) for s in self.subsystem))
        if not sites:
            raise DomainError("subsystem must be non-empty")
        if len(set(sites)) != len(sites):
            raise DomainError(f"repeated sites in {sites}")
        if sites[0] < 1:
            raise DomainError(f"site indices are 1-based, got {sites[0]}")
        object.__setattr__(self, "subsystem", sites)

    @classmethod
    def block(cls, start: int, length: int) -> "PartitionSpec":
        return cls(tuple(range(start, start + length)))

    def __len__(self) -> int:
        return len(self.subsystem)

    def complement(self, n_sites: int) -> Tuple[int, ...]:
        self.check(n_sites)
        inside = set(self.subsystem)
        return tuple(j for j in range(1, n_sites + 1) if j not in inside)

    def check(self, n_sites: int, proper: bool = False) -> None:
        if self.subsystem[-1] > n_sites:
            raise DomainError(f"site {self.subsystem[-1]} outside 1..{n_sites}")
        if proper and len(self.subsystem) == n_sites:
            raise DomainError("subsystem is the whole chain; a pure state has zero entropy")


class ReducedDensityMatrix:
    """Hermitian, unit-trace matrix on the qubits of ``sites``.

    Row index bit ``i`` belongs to ``sites[i]``. Eigenvalues are computed
    once and cached.
    """

    def __init__(self, sites: Sequence[int], matrix: np.ndarray):
        matrix = np.asarray(matrix, dtype=np.complex128)
        self.sites = tuple(sites)
        if matrix.shape != (1 << len(self.sites),) * 2:
            raise ContractError(f"matrix shape {matrix.shape} does not match {len(self.sites)} sites")
        self.matrix = matrix
        self.matrix.flags.writeable = False
        self._eigenvalues: Optional[np.ndarray] = None

    @property
    def dims(self) -> int:
        return self.matrix.shape[0]

    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def eigenvalues(self) -> np.ndarray:
        if self._eigenvalues is None:
            ev = np.linalg.eigvalsh(self.matrix)
            ev.flags.writeable = False
            self._eigenvalues = ev
        return self._eigenvalues


def _amplitude_matrix(state: StateVector, sites: Sequence[int]) -> np.ndarray:
    """Amplitudes reshaped to (2^|A|, 2^|A^c|); row bit i is ``sites[i]``."""
    n = state.n_sites
    inside = set(sites)
    rest = [j for j in range(1, n + 1) if j not in inside]
    # tensor axis n - j holds site j; the last axis is the lowest bit
    axes = [n - j for j in reversed(sites)] + [n - j for j in reversed(rest)]
    return np.transpose(state.tensor(), axes).reshape(1 << len(sites), -1)


def reduce(state: StateVector, part: PartitionSpec) -> ReducedDensityMatrix:
    """rho_A = Tr_{A^c} |psi><psi| for a normalized pure state."""
    state.require_normalized()
    part.check(state.n_sites, proper=True)
    m = _amplitude_matrix(state, part.subsystem)
    return ReducedDensityMatrix(part.subsystem, m @ m.conj().T)


def subsystem_spectrum(state: StateVector, sites: Iterable[int]) -> np.ndarray:
    """Nonzero part of the spectrum of rho_A, from whichever side is smaller.

    For a pure state rho_A and rho_{A^c} share their nonzero eigenvalues, so
    the Gram matrix is built over the smaller of the two index sets.
    """
    sites = tuple(sorted(sites))
    n = state.n_sites
    if not sites or len(sites) == n:
        return np.ones(1)
    m = _amplitude_matrix(state, sites)
    gram = m @ m.conj().T if m.shape[0] <= m.shape[1] else m.T @ m.conj()
    return np.linalg.eigvalsh(gram)


def _clean(eigenvalues: np.ndarray) -> np.ndarray:
    ev = np.asarray(eigenvalues, dtype=float)
    return ev[ev > EIGEN_FLOOR]


def _entropy_from_spectrum(ev: np.ndarray, alpha: float) -> float:
    ev = _clean(ev)
    if alpha == 1.0:
        return float(max(0.0, -np.sum(ev * np.log2(ev))))
    return float(max(0.0, math.log2(np.sum(ev**alpha)) / (1.0 - alpha)))


def von_neumann_entropy(rdm: ReducedDensityMatrix) -> float:
    """-Tr rho log2 rho, dropping eigenvalues below ``EIGEN_FLOOR``."""
    return _entropy_from_spectrum(rdm.eigenvalues(), 1.0)


def renyi_entropy(rdm: ReducedDensityMatrix, alpha: float) -> float:
    """(1 / (1 - alpha)) log2 Tr rho^alpha."""
    if not alpha > 0:
        raise DomainError(f"Renyi index must be positive, got {alpha}")
    if alpha == 1:
        raise DomainError("alpha = 1 is the von Neumann entropy")
    return _entropy_from_spectrum(rdm.eigenvalues(), float(alpha))


def entanglement_entropy(state: StateVector, part: PartitionSpec, alpha: float = 1.0) -> float:
    """S_alpha(A) of a pure state; ``alpha = 1`` gives von Neumann."""
    if not alpha > 0:
        raise DomainError(f"Renyi index must be positive, got {alpha}")
    state.require_normalized()
    part.check(state.n_sites, proper=True)
    return _entropy_from_spectrum(subsystem_spectrum(state, part.subsystem), float(alpha))


# -- disconnected entanglement entropy --------------------------------------


@dataclass(frozen=True)
class DisconnectedGeometry:
    """Four-set layout for the disconnected entropy on a ring of ``n`` sites.

    Lengths are integer site counts:

    * A = sites 1..m_len.
    * B1 = the tail of A starting after r_len sites, width w = m_len - r_len.
    * B2 = a block of width w separated from A by a gap of l_len sites.

    B = B1 u B2, so A n B = B1 and A u B = A plus the gap-separated B2.
    """

    n: int
    m_len: int
    l_len: int
    r_len: int

    def __post_init__(self):
        for name in ("n", "m_len", "l_len", "r_len"):
            object.__setattr__(self, name, int(getattr(self, name)))
        if not 0 <= self.r_len < self.m_len:
            raise DomainError(f"need 0 <= r < m, got r={self.r_len}, m={self.m_len}")
        if self.l_len < 1:
            raise DomainError("B2 must be separated from A by at least one site")
        if self.m_len + self.l_len + self.width > self.n:
            raise DomainError(
                f"geometry (m={self.m_len}, l={self.l_len}, w={self.width}) does not fit in {self.n} sites"
            )

    @classmethod
    def from_fractions(cls, n: int, m_frac: float, l_frac: float, r_frac: float) -> "DisconnectedGeometry":
        """Lengths round_half_up(frac * n)."""
        return cls(n, round_half_up(m_frac * n), round_half_up(l_frac * n), round_half_up(r_frac * n))

    @classmethod
    def fig4(cls, n: int, allow_rounding: bool = False) -> "DisconnectedGeometry":
        """Lengths ((n-1)/2, (n-1)/8, (n-1)/4), exact for n = 1 mod 8."""
        if (n - 1) % 8 != 0 and not allow_rounding:
            raise DomainError(f"n={n} is not 1 mod 8; pass allow_rounding to round half up")
        return cls(n, round_half_up((n - 1) / 2), round_half_up((n - 1) / 8), round_half_up((n - 1) / 4))

    @property
    def width(self) -> int:
        return self.m_len - self.r_len

    @property
    def m_frac(self) -> float:
        return self.m_len / self.n

    @property
    def l_frac(self) -> float:
        return self.l_len / self.n

    @property
    def r_frac(self) -> float:
        return self.r_len / self.n

    @property
    def a(self) -> Tuple[int, ...]:
        return tuple(range(1, self.m_len + 1))

    @property
    def b(self) -> Tuple[int, ...]:
        start2 = self.m_len + self.l_len + 1
        return self.intersection + tuple(range(start2, start2 + self.width))

    @property
    def union(self) -> Tuple[int, ...]:
        return tuple(sorted(set(self.a) | set(self.b)))

    @property
    def intersection(self) -> Tuple[int, ...]:
        return tuple(range(self.r_len + 1, self.m_len + 1))

    def subsets(self) -> dict:
        return {"A": self.a, "B": self.b, "AuB": self.union, "AnB": self.intersection}


def disconnected_entropy(state: StateVector, geom: DisconnectedGeometry, alpha: float = 2.0) -> float:
    """S_a(A) + S_a(B) - S_a(A u B) - S_a(A n B)."""
    if geom.n != state.n_sites:
        raise DomainError(f"geometry built for {geom.n} sites, state has {state.n_sites}")
    if not alpha > 0:
        raise DomainError(f"Renyi index must be positive, got {alpha}")
    state.require_normalized()
    s = {
        key: _entropy_from_spectrum(subsystem_spectrum(state, sites), float(alpha))
        for key, sites in geom.subsets().items()
    }
    return s["A"] + s["B"] - s["AuB"] - s["AnB"]


# -- closed forms ------------------------------------------------------------


def binary_entropy(m: float, alpha: float = 1.0) -> float:
    """Entropy of the two-point distribution (m, 1 - m), 0 log 0 = 0.

    ``alpha = 1`` is the Shannon form -m log2 m - (1-m) log2(1-m); other
    values give the Renyi entropy of that distribution.
    """
    if not 0.0 <= m <= 1.0:
        raise DomainError(f"fraction must lie in [0, 1], got {m}")
    if not alpha > 0:
        raise DomainError(f"Renyi index must be positive, got {alpha}")
    return _entropy_from_spectrum(np.array([m, 1.0 - m]), float(alpha))


def tf_entropy_oracle(m_frac: float, alpha: float = 1.0) -> float:
    """Frustrated classical-point entropy 1 + H(m) of a block of fraction m.

    The reduced spectrum is {m/2, m/2, (1-m)/2, (1-m)/2}, so every Renyi
    index adds one bit to the binary entropy of the same order.
    """
    if not 0.0 < m_frac < 1.0:
        raise DomainError(f"m must lie in (0, 1), got {m_frac}")
    return 1.0 + binary_entropy(m_frac, alpha)


def tf_phase_entropy(s_nf: float, m_frac: float, alpha: float = 1.0) -> float:
    """Area-law part ``s_nf`` plus the delocalized-kink term H(m)."""
    if s_nf < 0:
        raise DomainError(f"s_nf must be non-negative, got {s_nf}")
    return float(s_nf) + binary_entropy(m_frac, alpha)


def dee_oracle(m_frac: float, l_frac: float) -> float:
    """Thermodynamic Renyi-2 disconnected entropy of the kink superposition."""
    m, l = float(m_frac), float(l_frac)
    if not (0.0 < m < 1.0 and 0.0 < l < 1.0 and l + 1.5 * m < 1.0):
        raise DomainError(f"need 0 < m, l < 1 and l + 3m/2 < 1, got m={m}, l={l}")
    return -(
        math.log2(m * m + (1 - m) ** 2)
        - math.log2((1 - m / 2) ** 2 + (m / 2) ** 2)
        + math.log2(l * l + (1 - l - m) ** 2 + m * m / 2)
        - math.log2(l * l + (1 - l - 1.5 * m) ** 2 + 1.25 * m * m)
    )
