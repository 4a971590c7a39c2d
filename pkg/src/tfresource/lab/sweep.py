"""Parameter sweeps: plan files, a memory-bounded worker pool, CSV/JSON tables."""

from __future__ import annotations

import csv
import io
import itertools
import json
import logging
import sys
import threading
import traceback
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from typing import IO, Dict, List, Mapping, Optional, Sequence, Tuple

from ..errors import DomainError, ResourceError, TFResourceError, UsageError
from ..model import Boundary, ModelSpec
from .tasks import COLUMNS, Caps, Quantity, TaskOptions, compute_row, job_memory_bytes, validate_point

__all__ = [
    "SweepPlan",
    "MemoryGate",
    "parse_plan",
    "run_sweep",
    "format_table",
    "write_table",
    "parse_int_list",
    "parse_float_list",
]

log = logging.getLogger(__name__)

DEFAULT_MEM_BUDGET = 4 * 2**30

_PLAN_KEYS = {"quantity", "out", "seed", "threads", "mem_budget", "boundary", "format", "no_timestamp"}


def parse_int_list(text: str) -> List[int]:
    """``"5, 7, 9"`` or an inclusive range ``"9:19:2"``."""
    out: List[int] = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if ":" in part:
            bits = [int(b) for b in part.split(":")]
            if len(bits) not in (2, 3):
                raise UsageError(f"bad range {part!r}")
            lo, hi = bits[0], bits[1]
            step = bits[2] if len(bits) == 3 else 1
            if step <= 0:
                raise UsageError(f"range step must be positive in {part!r}")
            out.extend(range(lo, hi + 1, step))
        else:
            out.append(int(part))
    return out


def parse_float_list(text: str) -> List[float]:
    return [float(p) for p in str(text).split(",") if p.strip()]


@dataclass(frozen=True)
class SweepPlan:
    """Cartesian grid N x (J_x, J_y, J_z) x h of one quantity."""

    quantity: Quantity
    grid_n: Tuple[int, ...]
    grid_j: Tuple[Tuple[float, float, float], ...] = ((1.0, 0.0, 0.0),)
    grid_h: Tuple[float, ...] = (0.0,)
    boundary: Boundary = Boundary.PERIODIC
    options: TaskOptions = field(default_factory=TaskOptions)
    out: Optional[str] = None
    seed: int = 7
    threads: int = 1
    mem_budget: int = DEFAULT_MEM_BUDGET
    caps: Caps = field(default_factory=Caps)
    fmt: str = "csv"
    timestamp: bool = True

    def points(self) -> List[ModelSpec]:
        if self.quantity is Quantity.TRANSITION:
            hs: Sequence[float] = (0.0,)
        else:
            hs = self.grid_h
        return [
            ModelSpec(n, jx, jy, jz, abs(h), self.boundary)
            for n, (jx, jy, jz), h in itertools.product(self.grid_n, self.grid_j, hs)
        ]

    def validate(self) -> None:
        pts = self.points()
        if not pts:
            raise UsageError("sweep grid is empty")
        if self.threads < 1:
            raise UsageError("threads must be >= 1")
        if self.fmt not in ("csv", "json"):
            raise UsageError(f"unknown format {self.fmt!r}")
        bad = []
        for spec in pts:
            try:
                validate_point(self.quantity, spec, self.options, self.caps)
            except DomainError as exc:
                bad.append(f"N={spec.n_sites} J={spec.couplings} h={spec.h}: {exc}")
        if bad:
            raise UsageError("invalid grid points:\n  " + "\n  ".join(bad))


def parse_plan(text: str, **overrides) -> SweepPlan:
    """Parse a flat ``key = value`` plan with repeated ``grid.*`` keys.

    ``grid.n`` and ``grid.h`` take comma lists (``grid.n`` also ranges such
    as ``9:19:2``) and accumulate over repeated lines; each ``grid.j`` line is
    one ``jx, jy, jz`` triple. Any other key is a quantity option.
    """
    top: Dict[str, str] = {}
    opts: Dict[str, str] = {}
    grid_n: List[int] = []
    grid_h: List[float] = []
    grid_j: List[Tuple[float, float, float]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"plan line {lineno}: expected key = value, got {raw!r}")
        key, val = (p.strip() for p in line.split("=", 1))
        key = key.lower()
        try:
            if key == "grid.n":
                grid_n.extend(parse_int_list(val))
            elif key == "grid.h":
                grid_h.extend(parse_float_list(val))
            elif key == "grid.j":
                triple = parse_float_list(val)
                if len(triple) != 3:
                    raise UsageError(f"grid.j needs three couplings, got {val!r}")
                grid_j.append((triple[0], triple[1], triple[2]))
            elif key.startswith("grid."):
                raise UsageError(f"unknown grid key {key!r}")
            elif key in _PLAN_KEYS:
                top[key] = val
            else:
                opts[key] = val
        except ValueError as exc:
            raise UsageError(f"plan line {lineno}: {exc}") from exc
    if "quantity" not in top:
        raise UsageError("plan needs a 'quantity' key")
    if not grid_n:
        raise UsageError("plan needs at least one grid.n value")
    try:
        quantity = Quantity(top["quantity"])
        seed = int(top.get("seed", 7))
        timestamp = top.get("no_timestamp", "false").lower() not in ("1", "true", "yes")
        plan = SweepPlan(
            quantity=quantity,
            grid_n=tuple(grid_n),
            grid_j=tuple(grid_j) or ((1.0, 0.0, 0.0),),
            grid_h=tuple(grid_h) or (0.0,),
            boundary=Boundary(top.get("boundary", "periodic")),
            options=TaskOptions.from_mapping(opts, seed=seed, timing=timestamp),
            out=top.get("out"),
            seed=seed,
            threads=int(top.get("threads", 1)),
            mem_budget=int(float(top.get("mem_budget", DEFAULT_MEM_BUDGET))),
            fmt=top.get("format", "csv"),
            timestamp=timestamp,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if overrides:
        plan = _replace_plan(plan, **overrides)
    return plan


def _replace_plan(plan: SweepPlan, **kw) -> SweepPlan:
    return replace(plan, **{k: v for k, v in kw.items() if v is not None})


class MemoryGate:
    """Counting gate over a byte budget: jobs wait until their share fits."""

    def __init__(self, budget: int):
        self.budget = int(budget)
        self.in_use = 0
        self.peak = 0
        self._cond = threading.Condition()

    def acquire(self, nbytes: int) -> None:
        if nbytes > self.budget:
            raise ResourceError(f"job needs ~{nbytes} bytes, budget is {self.budget}")
        with self._cond:
            while self.in_use + nbytes > self.budget:
                self._cond.wait()
            self.in_use += nbytes
            self.peak = max(self.peak, self.in_use)

    def release(self, nbytes: int) -> None:
        with self._cond:
            self.in_use -= nbytes
            self._cond.notify_all()


def _run_point(plan: SweepPlan, gate: MemoryGate, spec: ModelSpec) -> dict:
    need = job_memory_bytes(plan.quantity, spec.n_sites, plan.caps)
    try:
        gate.acquire(need)
    except ResourceError as exc:
        return _failed_row(plan, spec, "resource", str(exc))
    try:
        row = compute_row(plan.quantity, spec, plan.options, plan.caps)
        row["status"] = "ok"
        row["message"] = None
        return row
    except TFResourceError as exc:
        return _failed_row(plan, spec, type(exc).__name__, str(exc))
    except Exception as exc:  # a sweep records failures instead of aborting
        log.debug("grid point failed:\n%s", traceback.format_exc())
        return _failed_row(plan, spec, type(exc).__name__, str(exc))
    finally:
        gate.release(need)


def _failed_row(plan: SweepPlan, spec: ModelSpec, status: str, message: str) -> dict:
    row = {col: None for col in COLUMNS[plan.quantity]}
    for col, val in (("N", spec.n_sites), ("jx", spec.j_x), ("jy", spec.j_y), ("jz", spec.j_z), ("h", spec.h)):
        if col in row:
            row[col] = val
    if "boundary" in row:
        row["boundary"] = spec.boundary.value
    row["status"] = status
    row["message"] = message
    return row


def run_sweep(plan: SweepPlan, stream: Optional[IO[str]] = None) -> List[dict]:
    """Evaluate every grid point and write the table.

    The output file is opened before any computation so that an unwritable
    path fails fast. Rows come back in grid order whatever the thread count.
    """
    plan.validate()
    handle = None
    if stream is None and plan.out:
        handle = open(plan.out, "w", encoding="utf-8", newline="")
        stream = handle
    try:
        gate = MemoryGate(plan.mem_budget)
        points = plan.points()
        if plan.threads > 1:
            with ThreadPoolExecutor(max_workers=plan.threads) as pool:
                rows = list(pool.map(lambda s: _run_point(plan, gate, s), points))
        else:
            rows = [_run_point(plan, gate, s) for s in points]
        if stream is not None:
            meta = {"quantity": plan.quantity.value, "seed": plan.seed}
            stream.write(format_table(rows, plan.fmt, plan.timestamp, meta))
        return rows
    finally:
        if handle is not None:
            handle.close()


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _timestamp() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def format_table(
    rows: Sequence[Mapping],
    fmt: str = "csv",
    timestamp: bool = True,
    meta: Optional[Mapping] = None,
    columns: Optional[Sequence[str]] = None,
) -> str:
    """Serialize rows; with ``timestamp`` the first line (CSV) or a
    ``generated`` field (JSON) carries the UTC time."""
    if columns is None:
        columns = list(rows[0].keys()) if rows else []
    if fmt == "json":
        doc = {"meta": dict(meta or {}), "columns": list(columns), "rows": [dict(r) for r in rows]}
        if timestamp:
            doc["meta"]["generated"] = _timestamp()
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"
    if fmt != "csv":
        raise UsageError(f"unknown format {fmt!r}")
    buf = io.StringIO()
    if timestamp:
        buf.write(f"# generated {_timestamp()}\n")
    for key, val in sorted((meta or {}).items()):
        if key == "note":
            buf.write(f"# {val}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row.get(c)) for c in columns])
    return buf.getvalue()


def write_table(rows, path: Optional[str], fmt: str = "csv", timestamp: bool = True, meta=None, columns=None, stream=None) -> None:
    text = format_table(rows, fmt, timestamp, meta, columns)
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        (stream or sys.stdout).write(text)
