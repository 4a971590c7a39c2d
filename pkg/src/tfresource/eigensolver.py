"""Lowest eigenpairs of the XYZ chain and their symmetry resolution.

Small systems go through a dense symmetric eigensolver. Larger ones use a
thick-restart Lanczos iteration with full reorthogonalization and locking
of converged vectors. A single Krylov sequence sees the partners of a
degenerate level only through rounding, so once ``k`` vectors are locked
a pass from a fresh random start checks that no lower level was skipped.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, replace
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from .errors import ContractError, ConvergenceError, DomainError
from .model import Boundary, HamiltonianHandle, ModelSpec, build
from .spin import StateVector, SymmetrySector, global_parity_z, momentum_range, translate
from .states import MOMENTUM_SIGN

__all__ = [
    "GroundStateBundle",
    "DENSE_MAX_SITES",
    "DEGENERACY_RTOL",
    "group_degenerate",
    "lanczos_lowest",
    "ritz_history",
    "solve_lowest",
    "resolve_momentum",
    "resolve_ground",
    "momentum_label",
    "detect_transition_h",
    "classify_ground",
    "max_principal_angle",
]

log = logging.getLogger(__name__)

DENSE_MAX_SITES = 10
DEGENERACY_RTOL = 1e-8
RESIDUAL_RTOL = 1e-9
DEFAULT_SEED = 20240917
_KRYLOV_MEMORY = 256 * 2**20


@dataclass(frozen=True)
class GroundStateBundle:
    """Lowest eigenpairs of one model.

    ``degeneracy_groups`` partitions ``range(len(energies))``; the last group
    may be incomplete when ``k`` cuts through a degenerate level.
    """

    spec: ModelSpec
    energies: np.ndarray
    states: Tuple[StateVector, ...]
    degeneracy_groups: Tuple[Tuple[int, ...], ...]
    sector_labels: Tuple[Optional[SymmetrySector], ...]
    residuals: np.ndarray
    method: str
    seed: Optional[int] = None

    def group_of(self, index: int) -> int:
        for g, members in enumerate(self.degeneracy_groups):
            if index in members:
                return g
        raise IndexError(index)

    @property
    def ground_degeneracy(self) -> int:
        return len(self.degeneracy_groups[0])

    def to_json(self, include_states: bool = False) -> str:
        labels = [
            None if lab is None else {"momentum_index": lab.momentum_index, "parity_z": lab.parity_z}
            for lab in self.sector_labels
        ]
        doc = {
            "spec": self.spec.to_dict(),
            "energies": [float(e) for e in self.energies],
            "degeneracy_groups": [list(g) for g in self.degeneracy_groups],
            "sector_labels": labels,
            "residuals": [float(r) for r in self.residuals],
            "method": self.method,
            "seed": self.seed,
        }
        if include_states:
            doc["states"] = [json.loads(s.to_json()) for s in self.states]
        return json.dumps(doc, sort_keys=True)


def group_degenerate(energies: Sequence[float], rtol: float = DEGENERACY_RTOL) -> Tuple[Tuple[int, ...], ...]:
    """Group ascending energies whose spacing is within rtol * max(1, |E_0|)."""
    energies = np.asarray(energies, dtype=float)
    if energies.size == 0:
        return ()
    tol = rtol * max(1.0, abs(energies[0]))
    groups = [[0]]
    for i in range(1, energies.size):
        if abs(energies[i] - energies[groups[-1][0]]) <= tol:
            groups[-1].append(i)
        else:
            groups.append([i])
    return tuple(tuple(g) for g in groups)


def max_principal_angle(a: np.ndarray, b: np.ndarray) -> float:
    """Largest principal angle between the column spans of ``a`` and ``b``.

    Uses the sines (residual of projecting ``b`` onto span ``a``), which stay
    accurate for tiny angles where ``arccos`` of the cosines does not.
    """
    qa, _ = np.linalg.qr(a)
    qb, _ = np.linalg.qr(b)
    if qa.shape[1] != qb.shape[1]:
        return float(np.pi / 2)
    resid = qb - qa @ (qa.conj().T @ qb)
    top = np.linalg.norm(resid, 2)
    return float(np.arcsin(min(1.0, top)))


# -- Lanczos ------------------------------------------------------------------


def _orthogonalize(w: np.ndarray, basis: np.ndarray) -> np.ndarray:
    if basis.shape[0] == 0:
        return w
    for _ in range(2):
        w = w - basis.T @ (basis @ w)
    return w


def _krylov_dim(dim: int, k: int) -> int:
    by_memory = max(20, _KRYLOV_MEMORY // (8 * dim))
    return int(min(dim, max(2 * k + 30, min(48, by_memory))))


def lanczos_lowest(
    apply: Callable[[np.ndarray], np.ndarray],
    dim: int,
    k: int,
    *,
    seed: int = DEFAULT_SEED,
    krylov_dim: Optional[int] = None,
    tol: float = 1e-10,
    max_restarts: Optional[int] = None,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Lowest ``k`` eigenpairs of a real symmetric operator.

    Thick-restart Lanczos: each cycle grows the basis to ``krylov_dim``
    vectors with full reorthogonalization, then keeps the lowest Ritz
    vectors plus the current residual direction. The lowest Ritz pair is
    locked once its residual meets ``tol``; later cycles work in the
    orthogonal complement of the locked set.

    Parameters
    ----------
    apply : callable
        Real symmetric matvec on arrays of length ``dim``.
    k : int
        Number of eigenpairs.
    seed : int
        Seed for the start vector and the verification pass.
    krylov_dim : int, optional
        Maximum basis size per cycle. Defaults to a memory-bounded size.
    tol : float
        Relative residual target, ``|H y - t y| <= tol * max(1, |t|)``.
    max_restarts : int, optional
        Cycle cap, default ``10 * k + 20``.

    Returns
    -------
    energies, vectors, residuals
        ``vectors`` has shape (dim, k) with orthonormal columns.
    """
    if not 1 <= k <= dim:
        raise DomainError(f"k={k} outside 1..{dim}")
    rng = np.random.default_rng(seed)
    m = min(krylov_dim or _krylov_dim(dim, k), dim)
    max_restarts = 10 * k + 20 if max_restarts is None else max_restarts

    locked = np.zeros((0, dim))
    locked_theta: List[float] = []
    basis = np.zeros((m, dim))
    proj = np.zeros((m, m))
    size = 0
    nxt = rng.standard_normal(dim)
    best = np.inf
    cycles = 0
    target = k
    checking = False
    while True:
        room = min(m, dim - locked.shape[0])
        while size < room:
            v = _orthogonalize(_orthogonalize(nxt, basis[:size]), locked)
            nrm = np.linalg.norm(v)
            if nrm < 1e-10:
                # invariant subspace reached; continue from a random direction
                v = _orthogonalize(_orthogonalize(rng.standard_normal(dim), basis[:size]), locked)
                nrm = np.linalg.norm(v)
            basis[size] = v / nrm
            w = apply(basis[size])
            col = basis[: size + 1] @ w
            proj[: size + 1, size] = col
            proj[size, : size + 1] = col
            nxt = w - basis[: size + 1].T @ col
            size += 1
        theta, s = np.linalg.eigh(proj[:size, :size])
        if checking:
            checking = False
            top = max(locked_theta)
            if size == 0 or theta[0] >= top - DEGENERACY_RTOL * max(1.0, abs(top)):
                break
            # a fresh start exposed a level the first sweep skipped
            target += 1
        cycles += 1
        y = s[:, 0] @ basis[:size]
        # leakage into the locked span is removed by the final Rayleigh-Ritz
        res = np.linalg.norm(_orthogonalize(apply(y) - theta[0] * y, locked))
        best = min(best, res)
        remaining = target - locked.shape[0]
        if res <= tol * max(1.0, abs(theta[0])):
            locked = np.vstack([locked, y[None, :] / np.linalg.norm(y)])
            locked_theta.append(float(theta[0]))
            best = np.inf
            remaining -= 1
            keep = list(range(1, size))
        else:
            if cycles >= max_restarts:
                raise ConvergenceError(
                    f"Lanczos locked {locked.shape[0]}/{target} vectors after {cycles} cycles", best
                )
            keep = list(range(size))
        if remaining == 0:
            if locked.shape[0] >= dim or target - k >= k:
                break
            # Krylov sequences see degenerate partners only through rounding,
            # so confirm from a fresh random start that nothing lower is left
            checking = True
            size = 0
            nxt = rng.standard_normal(dim)
            continue
        n_keep = min(len(keep), max(remaining + 10, 2 * remaining), m // 2)
        keep = keep[:n_keep]
        kept = s[:, keep].T @ basis[:size]
        basis[:n_keep] = kept
        proj[:] = 0.0
        proj[np.arange(n_keep), np.arange(n_keep)] = theta[keep]
        size = n_keep

    # Rayleigh-Ritz over the locked set cleans up near-degenerate mixing
    hl = np.array([apply(x) for x in locked])
    small = locked @ hl.T
    vals, rot = np.linalg.eigh(0.5 * (small + small.T))
    vecs = locked.T @ rot
    hv = hl.T @ rot
    residuals = np.linalg.norm(hv - vecs * vals[None, :], axis=0)
    vals, vecs, residuals = vals[:k], vecs[:, :k], residuals[:k]
    log.debug("lanczos: %d cycles, basis size %d", cycles, m)
    return vals, vecs, residuals


def ritz_history(handle: HamiltonianHandle, steps: int, seed: int = DEFAULT_SEED) -> np.ndarray:
    """Lowest Ritz value after each of ``steps`` Lanczos iterations (no restart)."""
    dim = handle.dim
    steps = min(steps, dim)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(dim)
    v /= np.linalg.norm(v)
    basis = np.zeros((steps, dim))
    alpha = np.zeros(steps)
    beta = np.zeros(steps)
    history = []
    for j in range(steps):
        basis[j] = v
        w = handle.apply(v)
        alpha[j] = v @ w
        w = _orthogonalize(w - alpha[j] * v, basis[: j + 1])
        beta[j] = np.linalg.norm(w)
        history.append(
            scipy.linalg.eigh_tridiagonal(
                alpha[: j + 1], beta[:j], eigvals_only=True, select="i", select_range=(0, 0)
            )[0]
        )
        if beta[j] < 1e-12:
            break
        v = w / beta[j]
    return np.array(history)


# -- solver front end ---------------------------------------------------------


def solve_lowest(
    handle: HamiltonianHandle,
    k: int,
    *,
    method: str = "auto",
    seed: int = DEFAULT_SEED,
    dense_max_sites: int = DENSE_MAX_SITES,
    tol: float = 1e-10,
) -> GroundStateBundle:
    """Return the ``k`` lowest eigenpairs of ``handle`` as a bundle.

    ``method`` is ``"dense"``, ``"lanczos"`` or ``"auto"`` (dense up to
    ``dense_max_sites`` sites).
    """
    dim = handle.dim
    if not 1 <= k <= dim:
        raise DomainError(f"k={k} outside 1..{dim}")
    if method == "auto":
        method = "dense" if handle.n_sites <= dense_max_sites else "lanczos"
    if method == "dense":
        vals, vecs = scipy.linalg.eigh(handle.to_dense(), subset_by_index=[0, k - 1])
        used_seed = None
    elif method == "lanczos":
        vals, vecs, _ = lanczos_lowest(handle.apply, dim, k, seed=seed, tol=tol)
        used_seed = seed
    else:
        raise DomainError(f"unknown method {method!r}")

    states = tuple(StateVector(handle.n_sites, vecs[:, i]) for i in range(k))
    residuals = np.array(
        [np.linalg.norm(handle.apply(vecs[:, i]) - vals[i] * vecs[:, i]) for i in range(k)]
    )
    worst = np.max(residuals / np.maximum(1.0, np.abs(vals)))
    if worst > RESIDUAL_RTOL:
        raise ConvergenceError(f"{method} eigenpairs miss the residual target", float(worst))
    return GroundStateBundle(
        spec=handle.spec,
        energies=np.asarray(vals, dtype=float),
        states=states,
        degeneracy_groups=group_degenerate(vals),
        sector_labels=(None,) * k,
        residuals=residuals,
        method=method,
        seed=used_seed,
    )


# -- symmetry resolution ------------------------------------------------------


def momentum_label(state: StateVector, tol: float = 1e-8) -> int:
    """Momentum index l of a translation eigenstate, T psi = e^{MOMENTUM_SIGN i 2 pi l / N} psi."""
    n = state.n_sites
    ev = state.inner(translate(state, 1))
    if abs(abs(ev) - 1.0) > tol:
        raise ContractError(f"state is not a translation eigenstate (|<T>|={abs(ev):.6f})")
    ell = int(round(MOMENTUM_SIGN * np.angle(ev) * n / (2 * np.pi)))
    r = momentum_range(n)
    return (ell - r.start) % n + r.start


def _projected(op: Callable[[StateVector], StateVector], vectors: np.ndarray, n: int) -> np.ndarray:
    images = np.column_stack([op(StateVector(n, vectors[:, i])).amps for i in range(vectors.shape[1])])
    return vectors.conj().T @ images


def resolve_momentum(bundle: GroundStateBundle, group: int) -> GroundStateBundle:
    """Rotate one degeneracy group into simultaneous T and Pi^z eigenvectors.

    The spanned subspace is unchanged; the group's states receive
    :class:`SymmetrySector` labels ordered by (momentum, parity).
    """
    spec = bundle.spec
    if spec.boundary is not Boundary.PERIODIC:
        raise DomainError("momentum resolution needs periodic boundaries")
    n = spec.n_sites
    members = bundle.degeneracy_groups[group]
    basis = np.column_stack([bundle.states[i].amps for i in members])
    t_small = _projected(lambda s: translate(s, 1), basis, n)
    pz_small = _projected(global_parity_z, basis, n)
    powers = [np.eye(len(members), dtype=complex)]
    for _ in range(n - 1):
        powers.append(powers[-1] @ t_small)

    new_cols, labels = [], []
    for ell in momentum_range(n):
        phase = np.exp(-MOMENTUM_SIGN * 2j * np.pi * ell / n)
        proj = sum(phase**r * powers[r] for r in range(n)) / n
        proj = 0.5 * (proj + proj.conj().T)
        w, u = np.linalg.eigh(proj)
        sector = u[:, w > 0.5]
        if sector.shape[1] == 0:
            continue
        pz = sector.conj().T @ pz_small @ sector
        pw, pu = np.linalg.eigh(0.5 * (pz + pz.conj().T))
        for val, vec in zip(pw, pu.T):
            parity = int(np.sign(val)) if abs(abs(val) - 1.0) < 1e-6 else None
            new_cols.append(basis @ (sector @ vec))
            labels.append(SymmetrySector(ell, parity))
    if len(new_cols) != len(members):
        raise ContractError(
            f"group {group} is not translation invariant ({len(new_cols)} of {len(members)} resolved)"
        )

    handle = build(spec)
    states = list(bundle.states)
    energies = np.array(bundle.energies, dtype=float)
    sector_labels = list(bundle.sector_labels)
    order = sorted(range(len(labels)), key=lambda i: (labels[i].momentum_index, labels[i].parity_z or 0))
    for slot, i in zip(members, order):
        vec = new_cols[i] / np.linalg.norm(new_cols[i])
        states[slot] = StateVector(n, vec)
        energies[slot] = float(np.real(np.vdot(vec, handle.apply(vec))))
        sector_labels[slot] = labels[i]
    return replace(
        bundle,
        states=tuple(states),
        energies=energies,
        sector_labels=tuple(sector_labels),
    )


def resolve_ground(bundle: GroundStateBundle) -> GroundStateBundle:
    return resolve_momentum(bundle, 0)


# -- transition scan ----------------------------------------------------------


def classify_ground(spec: ModelSpec, k: int = 4, **solve_kwargs) -> Tuple[str, Tuple[int, ...]]:
    """Classify the ground level as ``"zero"`` (unique, l = 0), ``"pair"``
    (two-fold, l != 0) or ``"other"``; also return the momentum labels."""
    k = min(k, 1 << spec.n_sites)
    bundle = resolve_ground(solve_lowest(build(spec), k, **solve_kwargs))
    members = bundle.degeneracy_groups[0]
    labels = tuple(bundle.sector_labels[i].momentum_index for i in members)
    if len(members) == 1 and labels[0] == 0:
        return "zero", labels
    if len(members) == 2 and all(ell != 0 for ell in labels):
        return "pair", labels
    return "other", labels


def detect_transition_h(
    spec_family: ModelSpec,
    h_range: Tuple[float, float] = (0.0, 1.0),
    resolution: float = 1e-3,
    coarse_step: float = 0.05,
    **solve_kwargs,
) -> Optional[float]:
    """Locate the field h* below which the ground level is a +-p pair.

    Scans a coarse grid inside ``h_range`` (the end points are excluded),
    takes the largest grid field in the pair phase that is followed by a
    unique zero-momentum ground state, then bisects the bracket down to
    ``resolution``. Returns the bracket midpoint, or ``None`` when no such
    change happens in range.
    """
    if not spec_family.is_topologically_frustrated():
        raise DomainError("transition scan needs a frustrated geometry")
    lo, hi = h_range
    if not hi > lo or resolution <= 0:
        raise DomainError(f"bad scan range {h_range} / resolution {resolution}")
    grid = np.arange(lo + coarse_step, hi - 0.5 * coarse_step, coarse_step)
    kinds = [classify_ground(spec_family.with_field(h), **solve_kwargs)[0] for h in grid]
    bracket = None
    for i in range(len(grid) - 1):
        if kinds[i] == "pair" and kinds[i + 1] == "zero":
            bracket = [float(grid[i]), float(grid[i + 1])]
    if bracket is None:
        return None
    a, b = bracket
    while b - a > 2 * resolution:
        mid = 0.5 * (a + b)
        kind = classify_ground(spec_family.with_field(mid), **solve_kwargs)[0]
        if kind == "pair":
            a = mid
        elif kind == "zero":
            b = mid
        else:
            # level crossing with a third state right at mid; shrink from above
            b = mid
    return 0.5 * (a + b)
