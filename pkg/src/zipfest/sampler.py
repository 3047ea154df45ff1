"""Samplers for occupancy configurations.

Draws are inverse-CDF: a uniform is scaled to the retained support mass
(renormalizing the truncated law; the discarded mass is recorded in the
sample metadata) and mapped through the law's cumulative table, falling back
to the analytic tail inversion beyond the materialized head.  An optional
alias mode trades table setup for O(1) cell lookups in repeated-sampling
studies.

Streams: any (master seed, stream index) pair yields an independent Philox
counter-based generator (period 2^256), so replications can run in parallel
and still reproduce bit-for-bit.
"""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InputFormatError, UsageError
from .law import PowerLaw
from .occupancy import DEFAULT_K_MAX, StatisticsSnapshot, summarize_count_values

__all__ = ["SeedSpec", "OccupancyCounts", "sample_fixed", "sample_trajectory",
           "sample_poissonized", "write_counts_csv", "read_counts_csv"]


@dataclass(frozen=True)
class SeedSpec:
    """(master seed, stream index); distinct streams are independent."""

    master: int
    stream: int = 0

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(entropy=self.master, spawn_key=(self.stream,))
        return np.random.Generator(np.random.Philox(seq))


def _as_seed(seed) -> SeedSpec:
    if isinstance(seed, SeedSpec):
        return seed
    if isinstance(seed, (int, np.integer)):
        return SeedSpec(master=int(seed))
    raise UsageError(f"seed must be an int or SeedSpec, got {seed!r}")


@dataclass(frozen=True)
class OccupancyCounts:
    """Realized urn -> ball-count map for one sample."""

    counts: dict
    total: float            # n for fixed mode, horizon t for poissonized
    mode: str               # "fixed" | "poisson"
    meta: dict = field(default_factory=dict)

    def snapshot(self, k_max: int = DEFAULT_K_MAX) -> StatisticsSnapshot:
        values = np.fromiter(self.counts.values(), dtype=np.int64, count=len(self.counts))
        return summarize_count_values(values, self.total, k_max=k_max)


# ----------------------------------------------------------------------
# position draws
# ----------------------------------------------------------------------

def _draw_positions(law: PowerLaw, n: int, rng: np.random.Generator):
    """n support positions; returns (int64 array with -1 at far slots,
    {slot: exact position} for the far slots)."""
    if law._alias_prob is not None:
        return _draw_positions_alias(law, n, rng)
    u = rng.random(n) * law.total_mass
    return law._positions_from_uniforms(u)


def _draw_positions_alias(law: PowerLaw, n: int, rng: np.random.Generator):
    prob, alias = law._alias_prob, law._alias_idx
    n_cells = prob.size
    cells = rng.integers(0, n_cells, size=n)
    v = rng.random(n)
    chosen = np.where(v < prob[cells], cells, alias[cells])
    pos = chosen.astype(np.int64) + 1
    far: dict[int, int] = {}
    head_len = law._cum_head.size
    escape = np.flatnonzero(chosen == n_cells - 1)
    if escape.size and head_len < law.cutoff:
        lo = law._cum_head[-1]
        u = lo + rng.random(escape.size) * (law.total_mass - lo)
        resolved, far_local = law._invert_tail(u)
        pos[escape] = resolved
        far = {int(escape[slot]): value for slot, value in far_local.items()}
    elif escape.size:
        pos[escape] = head_len
    return pos, far


_BINCOUNT_SPLIT = 1 << 22


def _count_values(pos: np.ndarray, far: dict) -> np.ndarray:
    """Multiset of per-urn ball counts from a position draw.

    Positions below a fixed boundary are tallied with bincount (linear);
    the sparse remainder falls back to sort-based unique counting.
    """
    valid = pos[pos >= 0] if far else pos
    parts = []
    if valid.size:
        small_mask = valid < _BINCOUNT_SPLIT
        small = valid[small_mask]
        if small.size:
            tally = np.bincount(small)
            parts.append(tally[tally > 0])
        big = valid[~small_mask]
        if big.size:
            parts.append(np.unique(big, return_counts=True)[1])
    if far:
        extra = Counter(far.values())
        parts.append(np.fromiter(extra.values(), dtype=np.int64))
    if not parts:
        return np.zeros(0, dtype=np.int64)
    return np.concatenate(parts) if len(parts) > 1 else parts[0]


def _counts_dict(law: PowerLaw, pos: np.ndarray, far: dict) -> dict:
    valid = pos[pos >= 0] if far else pos
    out: dict = {}
    if valid.size:
        upos, ucnt = np.unique(valid, return_counts=True)
        urns = law.positions_to_urns(upos)
        out = {int(i): int(c) for i, c in zip(urns, ucnt)}
    for position in far.values():
        urn = law.i0 + position
        out[urn] = out.get(urn, 0) + 1
    return out


# ----------------------------------------------------------------------
# public samplers
# ----------------------------------------------------------------------

def sample_fixed(law: PowerLaw, n: int, seed) -> OccupancyCounts:
    """n independent balls thrown into the urns of ``law``."""
    if not (isinstance(n, (int, np.integer)) and n >= 1):
        raise DomainError(f"n must be a positive integer, got {n!r}")
    spec = _as_seed(seed)
    pos, far = _draw_positions(law, int(n), spec.generator())
    return OccupancyCounts(
        counts=_counts_dict(law, pos, far), total=int(n), mode="fixed",
        meta={"seed": spec.master, "stream": spec.stream,
              "discarded_mass": law.discarded_mass, **law.describe()},
    )


def sample_trajectory(law: PowerLaw, n: int, grid, seed,
                      k_max: int = DEFAULT_K_MAX) -> list[StatisticsSnapshot]:
    """Snapshots of one nested sample along ``grid``.

    The first floor(n*t) balls of the single underlying insertion stream
    form the sample at time t, so earlier snapshots are prefixes of later
    ones by construction; with the same seed, the snapshot at t = 1 matches
    ``sample_fixed`` exactly.
    """
    if not (isinstance(n, (int, np.integer)) and n >= 1):
        raise DomainError(f"n must be a positive integer, got {n!r}")
    grid = [float(t) for t in grid]
    if not grid:
        raise UsageError("grid must be non-empty")
    if any(not 0.0 < t <= 1.0 for t in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
        raise UsageError(f"grid must be strictly increasing within (0, 1], got {grid!r}")
    spec = _as_seed(seed)
    pos, far = _draw_positions(law, int(n), spec.generator())
    snapshots = []
    for t in grid:
        m = int(np.floor(n * t))
        prefix = pos[:m]
        far_prefix = {slot: v for slot, v in far.items() if slot < m} if far else {}
        values = _count_values(prefix, far_prefix)
        snapshots.append(summarize_count_values(values, m, k_max=k_max))
    return snapshots


def sample_poissonized(law: PowerLaw, t: float, seed) -> OccupancyCounts:
    """Independent Poisson(t * p_i) counts per urn over the retained support
    (realized by splitting a Poisson(t * retained mass) total)."""
    if not t > 0.0:
        raise DomainError(f"t must be positive, got {t!r}")
    spec = _as_seed(seed)
    rng = spec.generator()
    total = int(rng.poisson(t * law.total_mass))
    if total:
        pos, far = _draw_positions(law, total, rng)
        counts = _counts_dict(law, pos, far)
    else:
        counts = {}
    return OccupancyCounts(
        counts=counts, total=float(t), mode="poisson",
        meta={"seed": spec.master, "stream": spec.stream,
              "discarded_mass": law.discarded_mass, **law.describe()},
    )


# ----------------------------------------------------------------------
# counts serialization
# ----------------------------------------------------------------------

def write_counts_csv(counts: OccupancyCounts, path) -> None:
    """CSV (urn_index, count) sorted by index."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["urn_index", "count"])
        for urn in sorted(counts.counts):
            writer.writerow([urn, counts.counts[urn]])


def read_counts_csv(path) -> OccupancyCounts:
    """Inverse of :func:`write_counts_csv` (fixed mode, total = sum)."""
    counts: dict = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header[:2]] != ["urn_index", "count"]:
            raise InputFormatError("expected header 'urn_index,count'", location=1)
        for line_no, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) < 2:
                raise InputFormatError(f"malformed row {row!r}", location=line_no)
            try:
                urn = int(row[0])
                cnt = int(row[1])
            except ValueError as exc:
                raise InputFormatError(f"malformed row {row!r}: {exc}", location=line_no)
            if cnt < 1:
                raise InputFormatError(f"count must be >= 1, got {cnt}", location=line_no)
            if urn in counts:
                raise InputFormatError(f"duplicate urn index {urn}", location=line_no)
            counts[urn] = cnt
    total = sum(counts.values())
    return OccupancyCounts(counts=counts, total=total, mode="fixed",
                           meta={"source": str(path)})
