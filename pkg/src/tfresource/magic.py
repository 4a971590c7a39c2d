"""Stabilizer Renyi entropies from the full Pauli spectrum.

For each x-mask the products f(s) = conj(psi(s ^ x)) psi(s) give every
z-mask expectation at once through a Walsh-Hadamard transform over s:

    <P(x, z)> = i^{|x & z|} sum_s (-1)^{z.s} f(s)

so the 4^N expectations cost O(N 4^N) time and O(2^N) memory per x-mask.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterator, Optional, Sequence, Tuple

import numpy as np

from .eigensolver import resolve_ground, solve_lowest
from .errors import ContractError, DomainError, ResourceError
from .model import ModelSpec, build
from .spin import PauliString, StateVector, apply_pauli, basis_indices, momentum_range, popcount

__all__ = [
    "SPECTRUM_MAX_SITES",
    "SreMethod",
    "PauliSpectrum",
    "SreResult",
    "walsh_hadamard",
    "pauli_spectrum",
    "naive_pauli_spectrum",
    "iter_pauli_expectations",
    "sre",
    "w_sre_oracle",
    "extra_magic",
    "relative_sre_correction",
    "ground_state_sre",
    "GroundSre",
    "sre_jump_at_transition",
]

SPECTRUM_MAX_SITES = 14
NAIVE_MAX_SITES = 8
_CHUNK_ELEMENTS = 1 << 15


class SreMethod(str, Enum):
    FAST_TRANSFORM = "fast_transform"
    NAIVE_ENUMERATION = "naive_enumeration"
    ANALYTIC_ORACLE = "analytic_oracle"


@dataclass(frozen=True)
class PauliSpectrum:
    """Moments zeta_q = 2^-N sum_P <P>^(2q) of a pure state."""

    n_sites: int
    moments: Dict[int, float] = field(default_factory=dict)

    def zeta(self, q: int) -> float:
        return self.moments[q]


@dataclass(frozen=True)
class SreResult:
    q: int
    value: float
    method: SreMethod


def walsh_hadamard(a: np.ndarray) -> np.ndarray:
    """Unnormalized Walsh-Hadamard transform along the last axis (length 2^N).

    Real input stays real.
    """
    a = np.array(a, dtype=np.result_type(a, np.float64), copy=True)
    lead = a.shape[:-1]
    dim = a.shape[-1]
    if dim & (dim - 1):
        raise ContractError(f"transform length {dim} is not a power of two")
    batch = int(np.prod(lead, dtype=np.int64))
    h = 1
    while h < dim:
        v = a.reshape(batch, -1, 2, h)
        lo = v[:, :, 0, :].copy()
        v[:, :, 0, :] += v[:, :, 1, :]
        v[:, :, 1, :] = lo - v[:, :, 1, :]
        h *= 2
    return a.reshape(*lead, dim)


def _check_input(state: StateVector, max_sites: int) -> None:
    if state.n_sites > max_sites:
        raise ResourceError(f"Pauli spectrum capped at {max_sites} sites, got {state.n_sites}")
    state.require_normalized()


def _x_chunks(n: int) -> Sequence[np.ndarray]:
    dim = 1 << n
    step = max(1, _CHUNK_ELEMENTS // dim)
    return [np.arange(x0, min(dim, x0 + step)) for x0 in range(0, dim, step)]


def _chunk_transform(psi: np.ndarray, xs: np.ndarray) -> np.ndarray:
    s = np.arange(psi.size)
    if not np.iscomplexobj(psi):
        return walsh_hadamard(psi[s[None, :] ^ xs[:, None]] * psi[None, :])
    f = np.conj(psi[s[None, :] ^ xs[:, None]]) * psi[None, :]
    return walsh_hadamard(f)


def pauli_spectrum(
    state: StateVector,
    q_list: Sequence[int] = (2,),
    threads: int = 1,
    max_sites: int = SPECTRUM_MAX_SITES,
) -> PauliSpectrum:
    """Pauli-spectrum moments zeta_q via the batched fast transform.

    Parameters
    ----------
    state : StateVector
        Normalized pure state.
    q_list : sequence of int
        Moments to accumulate; q = 1 is the purity sum rule.
    threads : int
        Worker threads; each handles a chunk of x-masks.
    max_sites : int
        Size cap, raising :class:`ResourceError` above it.
    """
    _check_input(state, max_sites)
    qs = sorted({int(q) for q in q_list})
    if not qs or qs[0] < 1:
        raise DomainError(f"moment orders must be >= 1, got {list(q_list)}")
    psi = state.amps
    if not np.any(psi.imag):
        psi = np.ascontiguousarray(psi.real)

    def work(xs):
        t = _chunk_transform(psi, xs)
        mags = t * t if t.dtype.kind == "f" else np.abs(t) ** 2
        return [float(np.sum(mags**q)) for q in qs]

    chunks = _x_chunks(state.n_sites)
    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            partials = list(pool.map(work, chunks))
    else:
        partials = [work(xs) for xs in chunks]
    norm = float(state.dim)
    moments = {q: math.fsum(p[i] for p in partials) / norm for i, q in enumerate(qs)}
    return PauliSpectrum(state.n_sites, moments)


def iter_pauli_expectations(state: StateVector) -> Iterator[Tuple[PauliString, float]]:
    """Yield every (Pauli string, <P>) pair, one x-mask at a time."""
    _check_input(state, SPECTRUM_MAX_SITES)
    n = state.n_sites
    z = basis_indices(n)
    for x in range(1 << n):
        vals = _chunk_transform(state.amps, np.array([x]))[0]
        phases = 1j ** (popcount(z & x) % 4)
        real = (phases * vals).real
        for zm in range(1 << n):
            yield PauliString(x, int(zm)), float(real[zm])


def naive_pauli_spectrum(state: StateVector, q_list: Sequence[int] = (2,)) -> PauliSpectrum:
    """Reference moments from one explicit expectation per Pauli string."""
    _check_input(state, NAIVE_MAX_SITES)
    qs = sorted({int(q) for q in q_list})
    sums = {q: [] for q in qs}
    dim = state.dim
    for x in range(dim):
        for z in range(dim):
            v = np.vdot(state.amps, apply_pauli(state, PauliString(x, z)).amps).real
            for q in qs:
                sums[q].append(v ** (2 * q))
    return PauliSpectrum(state.n_sites, {q: math.fsum(sums[q]) / dim for q in qs})


def _sre_from_zeta(zeta: float, q: int) -> float:
    value = math.log2(zeta) / (1 - q)
    # log of a sum that equals 1 to rounding can come out at -1e-16
    return 0.0 if -1e-12 < value < 0.0 else value


def sre(state: StateVector, q: int = 2, method: SreMethod | str = SreMethod.FAST_TRANSFORM, threads: int = 1) -> SreResult:
    """Stabilizer Renyi entropy M_q = log2(zeta_q) / (1 - q) in bits."""
    if int(q) != q or q < 2:
        raise DomainError(f"stabilizer Renyi entropy needs integer q >= 2, got {q}")
    q = int(q)
    method = SreMethod(method)
    if method is SreMethod.FAST_TRANSFORM:
        spec = pauli_spectrum(state, (q,), threads=threads)
    elif method is SreMethod.NAIVE_ENUMERATION:
        spec = naive_pauli_spectrum(state, (q,))
    else:
        raise DomainError("analytic values come from w_sre_oracle, not from a state")
    return SreResult(q, _sre_from_zeta(spec.zeta(q), q), method)


# -- closed forms ------------------------------------------------------------


def w_sre_oracle(n: int, ell: int = 0) -> float:
    """M_2 of the generalized W state with momentum p = 2 pi ell / n."""
    if n < 1:
        raise DomainError(f"need n >= 1, got {n}")
    if ell not in momentum_range(n):
        r = momentum_range(n)
        raise DomainError(f"momentum index {ell} outside [{r.start}, {r.stop - 1}]")
    if ell == 0:
        return 3 * math.log2(n) - math.log2(7 * n - 6)
    p = 2 * math.pi * ell / n
    s2p = math.sin(2 * p)
    if abs(s2p) < 1e-12:
        raise DomainError(f"closed form is singular at p = {p:.6f} (sin 2p = 0)")
    inner = -(11 - 12 * n + math.sin((2 - 4 * n) * p) / s2p) / (2 * n**3)
    return -math.log2(inner)


def extra_magic(n: int) -> float:
    """Finite-momentum SRE offset log2((7N - 6) / (6N - 6))."""
    if n < 2:
        raise DomainError(f"need n >= 2, got {n}")
    return math.log2((7 * n - 6) / (6 * n - 6))


def relative_sre_correction(m_tf: float, m_nf: float, n: int, ell: int = 0) -> float:
    """R_2 = (M2_TF - M2_NF) / M2(W_p)."""
    denom = w_sre_oracle(n, ell)
    if denom == 0.0:
        raise DomainError(f"W-state SRE vanishes for n={n}, ell={ell}")
    return (m_tf - m_nf) / denom


# -- ground states -----------------------------------------------------------


@dataclass(frozen=True)
class GroundSre:
    """SRE of a (possibly degenerate) ground level.

    ``values`` holds M_q of each symmetry-resolved member; ``value`` is
    their mean.
    """

    spec: ModelSpec
    q: int
    values: Tuple[float, ...]
    momenta: Tuple[int, ...]
    energy: float

    @property
    def value(self) -> float:
        return float(np.mean(self.values))

    @property
    def degeneracy(self) -> int:
        return len(self.values)

    def is_momentum_pair(self) -> bool:
        return self.degeneracy == 2 and all(ell != 0 for ell in self.momenta)

    def is_unique_zero(self) -> bool:
        return self.degeneracy == 1 and self.momenta[0] == 0


def ground_state_sre(
    spec: ModelSpec,
    q: int = 2,
    k: int = 4,
    agree_tol: float = 1e-6,
    threads: int = 1,
    **solve_kwargs,
) -> GroundSre:
    """M_q of each momentum-resolved state of the ground level.

    The two members of a +-p pair are mapped onto each other by reflection
    and must share one SRE value; a spread above ``agree_tol`` raises
    :class:`ContractError`. Members of other degenerate levels (the 2N-fold
    classical point) carry different momenta and are not constrained.
    ``k`` grows until the ground level is complete.
    """
    handle = build(spec)
    k = min(k, handle.dim)
    while True:
        bundle = solve_lowest(handle, k, **solve_kwargs)
        if len(bundle.degeneracy_groups[0]) < k or k == handle.dim:
            break
        k = min(2 * k, handle.dim)
    bundle = resolve_ground(bundle)
    members = bundle.degeneracy_groups[0]
    values = tuple(sre(bundle.states[i], q, threads=threads).value for i in members)
    momenta = tuple(bundle.sector_labels[i].momentum_index for i in members)
    result = GroundSre(spec, q, values, momenta, float(bundle.energies[0]))
    if result.is_momentum_pair() and max(values) - min(values) > agree_tol:
        raise ContractError(f"+-p ground pair disagrees on M_{q}: {values}")
    return result


def sre_jump_at_transition(
    spec_family: ModelSpec,
    h_star: float,
    n: Optional[int] = None,
    delta: float = 1e-2,
    q: int = 2,
    **kwargs,
) -> Optional[float]:
    """M_q just below h* minus M_q just above it.

    Returns ``None`` unless the level below is a +-p pair and the level
    above is a unique zero-momentum state.
    """
    spec = spec_family if n is None else ModelSpec(
        n, spec_family.j_x, spec_family.j_y, spec_family.j_z, spec_family.h, spec_family.boundary
    )
    if h_star is None or not h_star - delta > 0:
        return None
    below = ground_state_sre(spec.with_field(h_star - delta), q, **kwargs)
    above = ground_state_sre(spec.with_field(h_star + delta), q, **kwargs)
    if not (below.is_momentum_pair() and above.is_unique_zero()):
        return None
    return below.value - above.value
