"""XYZ chain in a transverse field, with periodic or open boundaries.

    H = sum_n sum_a J_a s^a_n s^a_{n+1} + h sum_n s^z_n

The Hamiltonian is real in the sigma^z basis, so every routine here accepts
real or complex vectors.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, replace
from enum import Enum
from typing import Mapping, Union

import numpy as np

from .errors import ContractError, DomainError
from .spin import StateVector, basis_indices

__all__ = [
    "Boundary",
    "ModelSpec",
    "HamiltonianHandle",
    "build",
    "matvec",
    "classical_ground_energy",
    "parse_config",
]


class Boundary(str, Enum):
    PERIODIC = "periodic"
    OPEN = "open"


@dataclass(frozen=True)
class ModelSpec:
    n_sites: int
    j_x: float = 1.0
    j_y: float = 0.0
    j_z: float = 0.0
    h: float = 0.0
    boundary: Boundary = Boundary.PERIODIC

    def __post_init__(self):
        object.__setattr__(self, "n_sites", int(self.n_sites))
        object.__setattr__(self, "boundary", Boundary(self.boundary))
        for name in ("j_x", "j_y", "j_z", "h"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @property
    def couplings(self) -> tuple:
        return (self.j_x, self.j_y, self.j_z)

    def is_classical(self) -> bool:
        return self.j_y == 0.0 and self.j_z == 0.0 and self.h == 0.0

    def dominant_is_afm(self) -> bool:
        """True when the largest |J_a| belongs to an antiferromagnetic axis.

        A tie between axes counts as AFM if any tied coupling is positive,
        and raises a ``UserWarning``.
        """
        mags = [abs(j) for j in self.couplings]
        top = max(mags)
        if top == 0.0:
            return False
        tied = [j for j in self.couplings if abs(j) == top]
        if len(tied) > 1:
            warnings.warn(
                f"coupling tie at |J|={top}: no unique dominant axis", UserWarning
            )
        return any(j > 0 for j in tied)

    def is_topologically_frustrated(self) -> bool:
        return (
            self.boundary is Boundary.PERIODIC
            and self.n_sites % 2 == 1
            and self.dominant_is_afm()
        )

    def with_field(self, h: float) -> "ModelSpec":
        return replace(self, h=float(h))

    def unfrustrated_counterpart(self) -> "ModelSpec":
        """Same N, field and boundary with the sign of J_x reversed."""
        return replace(self, j_x=-self.j_x)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["boundary"] = self.boundary.value
        return d


def parse_config(text: str) -> ModelSpec:
    """Parse a flat ``key = value`` file with keys n, jx, jy, jz, h, boundary."""
    values = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        sep = "=" if "=" in line else ":"
        if sep not in line:
            raise DomainError(f"malformed config line: {raw!r}")
        key, val = (part.strip() for part in line.split(sep, 1))
        values[key.lower()] = val
    return spec_from_mapping(values)


def spec_from_mapping(values: Mapping[str, object]) -> ModelSpec:
    known = {"n", "jx", "jy", "jz", "h", "boundary"}
    unknown = set(values) - known
    if unknown:
        raise DomainError(f"unknown model keys: {sorted(unknown)}")
    if "n" not in values:
        raise DomainError("model config needs key 'n'")
    try:
        return ModelSpec(
            n_sites=int(values["n"]),
            j_x=float(values.get("jx", 1.0)),
            j_y=float(values.get("jy", 0.0)),
            j_z=float(values.get("jz", 0.0)),
            h=float(values.get("h", 0.0)),
            boundary=Boundary(str(values.get("boundary", "periodic")).lower()),
        )
    except ValueError as exc:
        raise DomainError(str(exc)) from exc


class HamiltonianHandle:
    """Matrix-free representation of the XYZ Hamiltonian.

    Immutable after construction; ``matvec`` only reads cached arrays and is
    safe to call from several threads.
    """

    def __init__(self, spec: ModelSpec):
        n = spec.n_sites
        self.spec = spec
        if spec.boundary is Boundary.PERIODIC:
            pairs = [(i, (i + 1) % n) for i in range(n)]
        else:
            pairs = [(i, i + 1) for i in range(n - 1)]
        # bond = (site_a, site_b) with 0-based bit positions
        self.bonds = tuple(pairs)
        s = basis_indices(n)
        zsign = [(1 - 2 * ((s >> b) & 1)).astype(np.int8) for b in range(n)]
        diag = np.zeros(1 << n)
        if spec.h != 0.0:
            diag += spec.h * np.sum(zsign, axis=0, dtype=np.float64)
        self._zz = []
        for a, b in self.bonds:
            zz = zsign[a] * zsign[b]
            if spec.j_z != 0.0:
                diag += spec.j_z * zz
            if spec.j_y != 0.0:
                self._zz.append(zz)
        self._diag = diag
        self._diag.flags.writeable = False

    @property
    def n_sites(self) -> int:
        return self.spec.n_sites

    @property
    def dim(self) -> int:
        return 1 << self.spec.n_sites

    @property
    def diagonal(self) -> np.ndarray:
        return self._diag

    def _flip_coeff(self, k: int):
        # <s^m|H|s> for the bond-k flip: J_x - J_y * z_a z_b (zz is flip invariant)
        if self.spec.j_y == 0.0:
            return self.spec.j_x
        return self.spec.j_x - self.spec.j_y * self._zz[k]

    def apply(self, vec: np.ndarray) -> np.ndarray:
        """H @ vec for a raw amplitude array of length 2^N."""
        vec = np.asarray(vec)
        if vec.shape != (self.dim,):
            raise ContractError(f"vector shape {vec.shape} != ({self.dim},)")
        n = self.n_sites
        out = self._diag * vec
        if self.spec.j_x == 0.0 and self.spec.j_y == 0.0:
            return out
        t = vec.reshape((2,) * n)
        for k, (a, b) in enumerate(self.bonds):
            flipped = np.flip(t, axis=(n - 1 - a, n - 1 - b)).reshape(-1)
            out += self._flip_coeff(k) * flipped
        return out

    def to_dense(self) -> np.ndarray:
        """Dense real matrix; intended for N <= 12."""
        if self.n_sites > 14:
            raise ContractError("dense matrix refused above 14 sites")
        s = basis_indices(self.n_sites)
        mat = np.zeros((self.dim, self.dim))
        mat[s, s] = self._diag
        for k, (a, b) in enumerate(self.bonds):
            mat[s ^ ((1 << a) | (1 << b)), s] += self._flip_coeff(k)
        return mat


def build(spec: ModelSpec) -> HamiltonianHandle:
    """Validate a model specification and return its Hamiltonian handle."""
    if spec.n_sites < 2:
        raise DomainError(f"need at least 2 sites, got {spec.n_sites}")
    for name, val in zip(("j_x", "j_y", "j_z", "h"), (*spec.couplings, spec.h)):
        if not math.isfinite(val):
            raise DomainError(f"{name} must be finite, got {val}")
    return HamiltonianHandle(spec)


def matvec(handle: HamiltonianHandle, state: Union[StateVector, np.ndarray]) -> StateVector:
    if isinstance(state, StateVector):
        if state.n_sites != handle.n_sites:
            raise ContractError(
                f"state has {state.n_sites} sites, model has {handle.n_sites}"
            )
        return StateVector(state.n_sites, handle.apply(state.amps))
    return StateVector(handle.n_sites, handle.apply(np.asarray(state)))


def classical_ground_energy(spec: ModelSpec) -> float:
    """Ground energy on the Ising line J_y = J_z = h = 0 by counting bonds.

    A ring of odd length with J_x > 0 cannot satisfy every bond and pays one
    broken bond: E = J_x (2 - N).
    """
    if not spec.is_classical():
        raise DomainError("classical_ground_energy requires J_y = J_z = h = 0")
    n, jx = spec.n_sites, spec.j_x
    n_bonds = n if spec.boundary is Boundary.PERIODIC else n - 1
    if jx > 0 and spec.boundary is Boundary.PERIODIC and n % 2 == 1:
        return jx * (2 - n)
    return -abs(jx) * n_bonds
