"""Bit-level Hilbert space of an N-qubit chain.

Conventions
-----------
Site ``j`` (1-based) is stored in bit ``j - 1`` of the basis index. Bit value
0 is the sigma^z = +1 state (up), bit value 1 is sigma^z = -1 (down).

Pauli strings are pairs of bit masks ``(x_mask, z_mask)`` representing the
Hermitian operator ``i^{|x & z|} X^x Z^z`` (Z applied first), so a site with
both bits set carries sigma^y.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ContractError, DomainError

__all__ = [
    "StateVector",
    "PauliString",
    "SymmetrySector",
    "popcount",
    "apply_pauli",
    "expect_pauli",
    "translate",
    "global_parity_z",
    "rotate_basis_x",
    "apply_hadamard",
    "apply_sigma_z",
    "basis_indices",
    "momentum_range",
]

TFSV_MAGIC = b"TFSV"
TFSV_VERSION = 1
_HEADER = struct.Struct("<4sII")

NORM_TOL = 1e-9


def popcount(values: np.ndarray) -> np.ndarray:
    """Number of set bits per element of an integer array."""
    values = np.asarray(values, dtype=np.int64)
    if hasattr(np, "bitwise_count"):
        return np.bitwise_count(values).astype(np.int64)
    out = np.zeros_like(values)
    v = values.copy()
    while np.any(v):
        out += v & 1
        v >>= 1
    return out


def basis_indices(n_sites: int) -> np.ndarray:
    return np.arange(1 << n_sites, dtype=np.int64)


@dataclass(frozen=True, eq=False)
class StateVector:
    """Complex amplitudes over the 2^N computational basis.

    The amplitude array is copied on construction and frozen, so instances
    can be shared freely between threads.
    """

    n_sites: int
    amps: np.ndarray

    def __post_init__(self):
        if int(self.n_sites) < 1:
            raise DomainError(f"n_sites must be >= 1, got {self.n_sites}")
        amps = np.array(self.amps, dtype=np.complex128).reshape(-1)
        if amps.size != 1 << int(self.n_sites):
            raise ContractError(
                f"amplitude length {amps.size} != 2^{self.n_sites}"
            )
        amps.flags.writeable = False
        object.__setattr__(self, "n_sites", int(self.n_sites))
        object.__setattr__(self, "amps", amps)

    @property
    def dim(self) -> int:
        return 1 << self.n_sites

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def normalize(self) -> "StateVector":
        nrm = self.norm()
        if nrm == 0.0:
            raise ContractError("cannot normalize the zero vector")
        return StateVector(self.n_sites, self.amps / nrm)

    def inner(self, other: "StateVector") -> complex:
        """Return <self|other>."""
        _check_same_size(self, other)
        return complex(np.vdot(self.amps, other.amps))

    def tensor(self) -> np.ndarray:
        """Read-only view with shape (2,)*N; axis k holds site N - k."""
        return self.amps.reshape((2,) * self.n_sites)

    def require_normalized(self, tol: float = NORM_TOL) -> None:
        if abs(self.norm() - 1.0) > tol:
            raise ContractError(f"state is not normalized (norm={self.norm():.12g})")

    # -- constructors -----------------------------------------------------

    @classmethod
    def basis(cls, n_sites: int, index: int) -> "StateVector":
        amps = np.zeros(1 << n_sites, dtype=np.complex128)
        amps[index] = 1.0
        return cls(n_sites, amps)

    @classmethod
    def random(cls, n_sites: int, rng: Optional[np.random.Generator] = None) -> "StateVector":
        """Haar-like random normalized state (complex Gaussian amplitudes)."""
        rng = np.random.default_rng() if rng is None else rng
        dim = 1 << n_sites
        amps = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        return cls(n_sites, amps / np.linalg.norm(amps))

    # -- serialization ----------------------------------------------------

    def to_bytes(self) -> bytes:
        header = _HEADER.pack(TFSV_MAGIC, TFSV_VERSION, self.n_sites)
        return header + self.amps.astype("<c16").tobytes()

    @classmethod
    def from_bytes(cls, blob: bytes) -> "StateVector":
        if len(blob) < _HEADER.size:
            raise ContractError("truncated TFSV header")
        magic, version, n_sites = _HEADER.unpack_from(blob)
        if magic != TFSV_MAGIC:
            raise ContractError(f"bad magic {magic!r}")
        if version != TFSV_VERSION:
            raise ContractError(f"unsupported TFSV version {version}")
        payload = blob[_HEADER.size:_HEADER.size + 16 * (1 << n_sites)]
        if len(payload) != 16 * (1 << n_sites):
            raise ContractError("truncated TFSV payload")
        return cls(n_sites, np.frombuffer(payload, dtype="<c16"))

    def to_json(self) -> str:
        pairs = [[float(a.real), float(a.imag)] for a in self.amps]
        return json.dumps({"n_sites": self.n_sites, "amps": pairs})

    @classmethod
    def from_json(cls, text: str) -> "StateVector":
        data = json.loads(text)
        pairs = np.asarray(data["amps"], dtype=float).reshape(-1, 2)
        return cls(int(data["n_sites"]), pairs[:, 0] + 1j * pairs[:, 1])


@dataclass(frozen=True)
class PauliString:
    """Hermitian N-site Pauli operator encoded as (x_mask, z_mask)."""

    x_mask: int
    z_mask: int

    @property
    def phase_power(self) -> int:
        """Exponent k of the i^k prefactor (number of sigma^y factors)."""
        return bin(self.x_mask & self.z_mask).count("1")

    def fits(self, n_sites: int) -> bool:
        limit = 1 << n_sites
        return 0 <= self.x_mask < limit and 0 <= self.z_mask < limit

    @classmethod
    def from_label(cls, label: str) -> "PauliString":
        """Parse e.g. ``"XIYZ"``; the first character acts on site 1."""
        x = z = 0
        for j, ch in enumerate(label.upper()):
            if ch == "X":
                x |= 1 << j
            elif ch == "Z":
                z |= 1 << j
            elif ch == "Y":
                x |= 1 << j
                z |= 1 << j
            elif ch != "I":
                raise DomainError(f"unknown Pauli letter {ch!r}")
        return cls(x, z)

    def label(self, n_sites: int) -> str:
        letters = []
        for j in range(n_sites):
            xb = (self.x_mask >> j) & 1
            zb = (self.z_mask >> j) & 1
            letters.append("IZXY"[xb * 2 + zb])
        return "".join(letters)


@dataclass(frozen=True)
class SymmetrySector:
    """Translation momentum index and sigma^z-parity of an eigenvector.

    ``parity_z`` is ``None`` when the parity was not resolved.
    """

    momentum_index: int
    parity_z: Optional[int] = None

    def momentum(self, n_sites: int) -> float:
        return 2.0 * np.pi * self.momentum_index / n_sites


def momentum_range(n_sites: int) -> range:
    """Quantized momentum indices: symmetric around 0 for odd N."""
    lo = -((n_sites - 1) // 2)
    return range(lo, lo + n_sites)


def _check_same_size(a: StateVector, b: StateVector) -> None:
    if a.n_sites != b.n_sites:
        raise ContractError(f"size mismatch: {a.n_sites} vs {b.n_sites} sites")


def _check_site(state: StateVector, site: int) -> None:
    if not 1 <= site <= state.n_sites:
        raise DomainError(f"site {site} outside 1..{state.n_sites}")


def apply_pauli(state: StateVector, p: PauliString) -> StateVector:
    """Return P|psi> with the Hermitian phase convention."""
    if not p.fits(state.n_sites):
        raise DomainError(f"Pauli masks do not fit in {state.n_sites} bits")
    s = basis_indices(state.n_sites)
    signs = 1 - 2 * (popcount(s & p.z_mask) & 1)
    phase = 1j ** p.phase_power
    out = np.empty(state.dim, dtype=np.complex128)
    out[s ^ p.x_mask] = phase * signs * state.amps
    return StateVector(state.n_sites, out)


def expect_pauli(state: StateVector, p: PauliString) -> float:
    """Real expectation value <psi|P|psi> of a normalized state."""
    state.require_normalized()
    value = np.vdot(state.amps, apply_pauli(state, p).amps)
    if abs(value.imag) > 1e-12:
        raise ContractError(f"Pauli expectation has imaginary part {value.imag:.3e}")
    return float(value.real)


def translate(state: StateVector, shift: int) -> StateVector:
    """Lattice translation: content of site j moves to site j + shift (mod N)."""
    n = state.n_sites
    if not 0 <= shift < n:
        raise DomainError(f"shift must lie in [0, {n}), got {shift}")
    if shift == 0:
        return state
    # axis k of the tensor holds bit n-1-k; new bit b takes old bit b-shift
    perm = [n - 1 - ((n - 1 - k - shift) % n) for k in range(n)]
    out = np.transpose(state.tensor(), perm).reshape(-1)
    return StateVector(n, out)


def global_parity_z(state: StateVector) -> StateVector:
    """Apply the product of sigma^z over all sites."""
    signs = 1 - 2 * (popcount(basis_indices(state.n_sites)) & 1)
    return StateVector(state.n_sites, signs * state.amps)


_HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2.0)


def _apply_one_site(tensor: np.ndarray, n_sites: int, site: int, u: np.ndarray) -> np.ndarray:
    axis = n_sites - site
    moved = np.moveaxis(tensor, axis, 0)
    out = np.tensordot(u, moved, axes=(1, 0))
    return np.moveaxis(out, 0, axis)


def apply_hadamard(state: StateVector, site: int) -> StateVector:
    _check_site(state, site)
    out = _apply_one_site(state.tensor(), state.n_sites, site, _HADAMARD)
    return StateVector(state.n_sites, out.reshape(-1))


def apply_sigma_z(state: StateVector, site: int) -> StateVector:
    _check_site(state, site)
    bit = (basis_indices(state.n_sites) >> (site - 1)) & 1
    return StateVector(state.n_sites, (1 - 2 * bit) * state.amps)


def rotate_basis_x(state: StateVector) -> StateVector:
    """Hadamard on every site; maps |up>,|down> to |+>,|->. Involutive."""
    t = np.array(state.tensor())
    for axis in range(state.n_sites):
        a = np.take(t, 0, axis=axis)
        b = np.take(t, 1, axis=axis)
        t = np.stack([a + b, a - b], axis=axis) / np.sqrt(2.0)
    return StateVector(state.n_sites, t.reshape(-1))
