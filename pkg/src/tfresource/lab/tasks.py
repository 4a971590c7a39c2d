"""One grid point of one quantity -> one result row.

The CLI subcommands and the sweep driver both go through ``compute_row`` so
that a single-point command and a one-point plan produce identical rows.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, fields
from enum import Enum
from typing import Dict, List, Mapping, Tuple

import numpy as np

from ..eigensolver import (
    DEFAULT_SEED,
    detect_transition_h,
    resolve_ground,
    resolve_momentum,
    solve_lowest,
)
from ..entanglement import (
    DisconnectedGeometry,
    PartitionSpec,
    binary_entropy,
    dee_oracle,
    disconnected_entropy,
    entanglement_entropy,
    tf_entropy_oracle,
    tf_phase_entropy,
)
from ..errors import ContractError, DomainError, UsageError
from ..magic import ground_state_sre, relative_sre_correction, sre, sre_jump_at_transition, w_sre_oracle
from ..model import ModelSpec, build
from ..spin import StateVector
from ..states import ghz_state, omega_state, w_state

__all__ = [
    "Quantity",
    "StateKind",
    "TaskOptions",
    "Caps",
    "COLUMNS",
    "compute_row",
    "spectrum_rows",
    "ground_representative",
    "job_memory_bytes",
    "validate_point",
]


class Quantity(str, Enum):
    ENERGY_SPECTRUM = "energy_spectrum"
    EE = "ee"
    DEE = "dee"
    SRE = "sre"
    R2 = "r2"
    TRANSITION = "transition"


class StateKind(str, Enum):
    GROUND = "ground"
    OMEGA = "omega"
    W = "w"
    GHZ = "ghz"


@dataclass(frozen=True)
class Caps:
    """Desk-scale size limits; ``dense`` picks the solver, the rest refuse."""

    dense: int = 10
    solve: int = 20
    sre: int = 13


@dataclass(frozen=True)
class TaskOptions:
    k: int = 4
    state: StateKind = StateKind.GROUND
    ell: int = 0
    m: float = 0.5
    l: float = 0.125
    r: float = 0.25
    preset: str = "fig4"
    allow_rounding: bool = False
    alpha: float = 1.0
    q: int = 2
    h_lo: float = 0.0
    h_hi: float = 1.0
    resolution: float = 1e-3
    coarse_step: float = 0.05
    delta: float = 1e-2
    jump: bool = True
    seed: int = DEFAULT_SEED
    timing: bool = True

    def __post_init__(self):
        object.__setattr__(self, "state", StateKind(self.state))
        if self.preset not in ("fig4", "fractions"):
            raise UsageError(f"unknown geometry preset {self.preset!r}")

    @classmethod
    def from_mapping(cls, values: Mapping[str, str], **overrides) -> "TaskOptions":
        """Typed construction from string values (plan files)."""
        known = {f.name for f in fields(cls)}
        out = {}
        for key, raw in values.items():
            if key not in known:
                raise UsageError(f"unknown option {key!r}")
            default = getattr(cls, key)
            if isinstance(default, bool):
                low = str(raw).strip().lower()
                if low not in ("1", "0", "true", "false", "yes", "no"):
                    raise UsageError(f"option {key} expects a boolean, got {raw!r}")
                out[key] = low in ("1", "true", "yes")
            elif isinstance(default, Enum):
                out[key] = type(default)(str(raw).strip())
            elif isinstance(default, int):
                out[key] = int(raw)
            elif isinstance(default, float):
                out[key] = float(raw)
            else:
                out[key] = str(raw).strip()
        out.update(overrides)
        try:
            return cls(**out)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc


COLUMNS: Dict[Quantity, Tuple[str, ...]] = {
    Quantity.ENERGY_SPECTRUM: (
        "N", "jx", "jy", "jz", "h", "boundary", "k", "e0", "gap", "ground_degeneracy", "ground_momenta",
    ),
    Quantity.EE: ("N", "h", "jx", "jy", "jz", "m", "l", "r", "alpha", "value", "oracle", "delta", "state"),
    Quantity.DEE: (
        "N", "h", "jx", "jy", "jz", "m", "l", "r", "alpha", "value", "oracle", "delta", "normalized", "state",
    ),
    Quantity.SRE: (
        "N", "jx", "jy", "jz", "h", "boundary", "momentum_index", "q", "sre_bits", "method", "wall_time_s", "state",
    ),
    Quantity.R2: (
        "N", "jx", "jy", "jz", "h", "boundary", "momentum_index", "m2_tf", "m2_nf", "m2_w", "r2",
    ),
    Quantity.TRANSITION: (
        "N", "jx", "jy", "jz", "boundary", "h_lo", "h_hi", "resolution", "h_star", "found", "jump", "jump_limit",
    ),
}

SPECTRUM_COLUMNS = (
    "N", "jx", "jy", "jz", "h", "boundary", "index", "energy", "group", "momentum_index", "parity_z", "residual",
)


def _model_cols(spec: ModelSpec) -> dict:
    return {
        "N": spec.n_sites,
        "jx": spec.j_x,
        "jy": spec.j_y,
        "jz": spec.j_z,
        "h": spec.h,
        "boundary": spec.boundary.value,
    }


# -- sizing -----------------------------------------------------------------


def job_memory_bytes(quantity: Quantity, n: int, caps: Caps = Caps()) -> int:
    """Rough high-water mark of one job, used by the sweep memory gate."""
    dim = 1 << n
    if n <= caps.dense:
        solve = 2 * 8 * dim * dim
    else:
        solve = 8 * dim * 64
    state_only = 16 * dim * 8
    if quantity is Quantity.EE or quantity is Quantity.DEE:
        return solve + state_only
    if quantity is Quantity.SRE or quantity is Quantity.R2:
        return solve + state_only + 16 * (1 << 16)
    return solve + state_only


def validate_point(quantity: Quantity, spec: ModelSpec, opts: TaskOptions, caps: Caps = Caps()) -> None:
    """Raise :class:`DomainError` when a grid point violates preconditions."""
    n = spec.n_sites
    if n < 2:
        raise DomainError(f"need N >= 2, got {n}")
    needs_solve = quantity in (Quantity.ENERGY_SPECTRUM, Quantity.R2, Quantity.TRANSITION) or (
        opts.state is StateKind.GROUND
    )
    if needs_solve and n > caps.solve:
        raise DomainError(f"N={n} exceeds the eigensolver cap {caps.solve}")
    if quantity in (Quantity.SRE, Quantity.R2, Quantity.TRANSITION) and n > caps.sre:
        raise DomainError(f"N={n} exceeds the SRE cap {caps.sre}")
    if opts.state is StateKind.OMEGA and n % 2 == 0:
        raise DomainError(f"omega states need odd N, got {n}")
    if quantity is Quantity.DEE:
        _geometry(n, opts)
        dee_oracle(opts.m, opts.l)
    if quantity is Quantity.EE:
        _ee_block(n, opts.m)
    if quantity is Quantity.R2 and not spec.is_topologically_frustrated():
        raise DomainError("r2 needs a frustrated model")
    if quantity is Quantity.TRANSITION:
        if not spec.is_topologically_frustrated():
            raise DomainError("transition scan needs a frustrated model")
        if spec.j_z < -spec.j_y:
            raise DomainError(
                f"transition scan expects J_z >= -J_y (got J_y={spec.j_y}, J_z={spec.j_z}); "
                "map the couplings to that convention first"
            )


# -- states -----------------------------------------------------------------


def _solver_kwargs(opts: TaskOptions, caps: Caps) -> dict:
    return {"seed": opts.seed, "dense_max_sites": caps.dense}


def _complete_ground(spec: ModelSpec, k: int, opts: TaskOptions, caps: Caps):
    handle = build(spec)
    k = min(max(k, 2), handle.dim)
    while True:
        bundle = solve_lowest(handle, k, **_solver_kwargs(opts, caps))
        if len(bundle.degeneracy_groups[0]) < k or k == handle.dim:
            return bundle
        k = min(2 * k, handle.dim)


def ground_representative(spec: ModelSpec, opts: TaskOptions, caps: Caps = Caps()) -> Tuple[StateVector, int]:
    """One momentum-resolved ground state and its momentum index.

    Within a degenerate level the pick is the smallest |l|, then l > 0,
    then parity +1.
    """
    bundle = _complete_ground(spec, opts.k, opts, caps)
    if spec.boundary.value != "periodic" or len(bundle.degeneracy_groups[0]) == 1:
        return bundle.states[0], 0
    bundle = resolve_ground(bundle)
    members = bundle.degeneracy_groups[0]

    def rank(i):
        lab = bundle.sector_labels[i]
        return (abs(lab.momentum_index), lab.momentum_index < 0, lab.parity_z != 1)

    best = min(members, key=rank)
    return bundle.states[best], bundle.sector_labels[best].momentum_index


def _make_state(spec: ModelSpec, opts: TaskOptions, caps: Caps) -> Tuple[StateVector, int]:
    n = spec.n_sites
    if opts.state is StateKind.GROUND:
        return ground_representative(spec, opts, caps)
    if opts.state is StateKind.OMEGA:
        return omega_state(n, opts.ell), opts.ell
    if opts.state is StateKind.W:
        return w_state(n, opts.ell), opts.ell
    return ghz_state(n), 0


# -- quantities -------------------------------------------------------------


def _ee_block(n: int, m: float) -> PartitionSpec:
    size = int(np.floor(m * n))
    if not 1 <= size < n:
        raise DomainError(f"block of floor({m} * {n}) = {size} sites is not a proper subsystem")
    return PartitionSpec.block(1, size)


def _geometry(n: int, opts: TaskOptions) -> DisconnectedGeometry:
    if opts.preset == "fig4":
        if (opts.m, opts.l, opts.r) != (0.5, 0.125, 0.25):
            raise DomainError("preset fig4 fixes (m, l, r) = (1/2, 1/8, 1/4); use preset fractions")
        return DisconnectedGeometry.fig4(n, allow_rounding=opts.allow_rounding)
    return DisconnectedGeometry.from_fractions(n, opts.m, opts.l, opts.r)


def _is_classical_frustrated(spec: ModelSpec) -> bool:
    return spec.is_classical() and spec.is_topologically_frustrated()


def _ee_row(spec: ModelSpec, opts: TaskOptions, caps: Caps) -> dict:
    part = _ee_block(spec.n_sites, opts.m)
    state, _ = _make_state(spec, opts, caps)
    value = entanglement_entropy(state, part, opts.alpha)
    oracle = None
    if opts.state is StateKind.OMEGA or (opts.state is StateKind.GROUND and _is_classical_frustrated(spec)):
        oracle = tf_entropy_oracle(opts.m, opts.alpha)
    elif opts.state is StateKind.GROUND and spec.is_topologically_frustrated():
        nf_state, _ = ground_representative(spec.unfrustrated_counterpart(), opts, caps)
        s_nf = entanglement_entropy(nf_state, part, opts.alpha)
        oracle = tf_phase_entropy(s_nf, opts.m, opts.alpha)
    elif opts.state is StateKind.W:
        oracle = binary_entropy(len(part) / spec.n_sites, opts.alpha)
    elif opts.state is StateKind.GHZ:
        oracle = 1.0
    return {
        "N": spec.n_sites, "h": spec.h, "jx": spec.j_x, "jy": spec.j_y, "jz": spec.j_z,
        "m": opts.m, "l": None, "r": None, "alpha": opts.alpha,
        "value": value, "oracle": oracle, "delta": None if oracle is None else oracle - value,
        "state": opts.state.value,
    }


def _dee_row(spec: ModelSpec, opts: TaskOptions, caps: Caps) -> dict:
    geom = _geometry(spec.n_sites, opts)
    state, _ = _make_state(spec, opts, caps)
    alpha = 2.0 if opts.alpha == 1.0 else opts.alpha
    value = disconnected_entropy(state, geom, alpha)
    oracle = dee_oracle(opts.m, opts.l)
    return {
        "N": spec.n_sites, "h": spec.h, "jx": spec.j_x, "jy": spec.j_y, "jz": spec.j_z,
        "m": opts.m, "l": opts.l, "r": opts.r, "alpha": alpha,
        "value": value, "oracle": oracle, "delta": oracle - value, "normalized": value / oracle,
        "state": opts.state.value,
    }


def _sre_row(spec: ModelSpec, opts: TaskOptions, caps: Caps) -> dict:
    start = time.perf_counter()
    if opts.state is StateKind.GROUND:
        res = ground_state_sre(spec, opts.q, k=opts.k, **_solver_kwargs(opts, caps))
        value = res.value
        momentum = ";".join(str(m) for m in res.momenta)
    else:
        state, ell = _make_state(spec, opts, caps)
        value = sre(state, opts.q).value
        momentum = str(ell)
    elapsed = time.perf_counter() - start
    row = _model_cols(spec)
    row.update(
        momentum_index=momentum, q=opts.q, sre_bits=value, method="fast_transform",
        wall_time_s=round(elapsed, 3) if opts.timing else None, state=opts.state.value,
    )
    return row


def _r2_row(spec: ModelSpec, opts: TaskOptions, caps: Caps) -> dict:
    kw = _solver_kwargs(opts, caps)
    tf = ground_state_sre(spec, opts.q, k=opts.k, **kw)
    nf = ground_state_sre(spec.unfrustrated_counterpart(), opts.q, k=opts.k, **kw)
    # compare like with like: the frustrated members at the smallest |l|
    # against the W state of that momentum (the whole level at the
    # classical point spans every l)
    ell = min(abs(m) for m in tf.momenta)
    m2_tf = float(np.mean([v for v, m in zip(tf.values, tf.momenta) if abs(m) == ell]))
    m2_w = w_sre_oracle(spec.n_sites, ell)
    row = _model_cols(spec)
    row.update(
        momentum_index=ell, m2_tf=m2_tf, m2_nf=nf.value, m2_w=m2_w,
        r2=relative_sre_correction(m2_tf, nf.value, spec.n_sites, ell),
    )
    return row


def _transition_row(spec: ModelSpec, opts: TaskOptions, caps: Caps) -> dict:
    kw = _solver_kwargs(opts, caps)
    h_star = detect_transition_h(
        spec, (opts.h_lo, opts.h_hi), opts.resolution, coarse_step=opts.coarse_step, **kw
    )
    jump = None
    if h_star is not None and opts.jump:
        jump = sre_jump_at_transition(spec, h_star, delta=opts.delta, q=opts.q, **kw)
    return {
        "N": spec.n_sites, "jx": spec.j_x, "jy": spec.j_y, "jz": spec.j_z,
        "boundary": spec.boundary.value, "h_lo": opts.h_lo, "h_hi": opts.h_hi,
        "resolution": opts.resolution, "h_star": h_star, "found": h_star is not None,
        "jump": jump, "jump_limit": float(np.log2(7 / 6)),
    }


def _spectrum_summary_row(spec: ModelSpec, opts: TaskOptions, caps: Caps) -> dict:
    bundle = solve_lowest(build(spec), min(opts.k, 1 << spec.n_sites), **_solver_kwargs(opts, caps))
    groups = bundle.degeneracy_groups
    momenta = None
    if spec.boundary.value == "periodic" and len(groups) > 1:
        resolved = resolve_ground(bundle)
        momenta = ";".join(str(resolved.sector_labels[i].momentum_index) for i in groups[0])
    gap = float(bundle.energies[groups[1][0]] - bundle.energies[0]) if len(groups) > 1 else None
    row = _model_cols(spec)
    row.update(
        k=len(bundle.energies), e0=float(bundle.energies[0]), gap=gap,
        ground_degeneracy=len(groups[0]) if len(groups) > 1 else None, ground_momenta=momenta,
    )
    return row


_DISPATCH = {
    Quantity.ENERGY_SPECTRUM: _spectrum_summary_row,
    Quantity.EE: _ee_row,
    Quantity.DEE: _dee_row,
    Quantity.SRE: _sre_row,
    Quantity.R2: _r2_row,
    Quantity.TRANSITION: _transition_row,
}


def compute_row(quantity: Quantity, spec: ModelSpec, opts: TaskOptions, caps: Caps = Caps()) -> dict:
    """Evaluate one grid point; the row carries the columns of ``COLUMNS[quantity]``."""
    quantity = Quantity(quantity)
    validate_point(quantity, spec, opts, caps)
    row = _DISPATCH[quantity](spec, opts, caps)
    return {col: row.get(col) for col in COLUMNS[quantity]}


def spectrum_rows(spec: ModelSpec, opts: TaskOptions, caps: Caps = Caps()) -> List[dict]:
    """One row per eigenvalue, with symmetry labels for complete periodic groups."""
    validate_point(Quantity.ENERGY_SPECTRUM, spec, opts, caps)
    k = min(opts.k, 1 << spec.n_sites)
    bundle = solve_lowest(build(spec), k, **_solver_kwargs(opts, caps))
    if spec.boundary.value == "periodic":
        complete = bundle.degeneracy_groups if k == 1 << spec.n_sites else bundle.degeneracy_groups[:-1]
        for g in range(len(complete)):
            try:
                bundle = resolve_momentum(bundle, g)
            except ContractError:
                warnings.warn(f"group {g} could not be symmetry-resolved", RuntimeWarning)
    rows = []
    for i, energy in enumerate(bundle.energies):
        lab = bundle.sector_labels[i]
        row = _model_cols(spec)
        row.update(
            index=i, energy=float(energy), group=bundle.group_of(i),
            momentum_index=None if lab is None else lab.momentum_index,
            parity_z=None if lab is None else lab.parity_z,
            residual=float(bundle.residuals[i]),
        )
        rows.append(row)
    return rows
