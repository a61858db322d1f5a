"""Run accounting.

Every data item is identified by ``(origin, seq)``. The :class:`DataLedger`
tracks how many live copies of each item exist anywhere in the run (buffers,
queues, in-flight deliveries). An item that loses its last copy without ever
reaching a collector is dropped, and the reason of that last loss is charged.
At summary time the ledger's view of in-flight items is cross-checked against
a scan of the actual containers, and bytes must balance exactly::

    generated == unique_collected + in_flight + dropped
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Any, Iterable

import numpy as np

DROP_CATEGORIES = ("stale", "overflow", "lost", "failure")

CSV_COLUMNS = (
    "scenario", "kind", "strategy", "seed", "delta_ms", "density",
    "generated_bytes", "unique_collected_bytes", "duplicate_collected_bytes",
    "in_flight_bytes", "collected_ratio", "delay_median_ms", "delay_p95_ms",
    "delay_samples", "drop_stale_bytes", "drop_overflow_bytes", "drop_lost_bytes",
    "drop_failure_bytes", "relay_tx_total", "planning_ops_per_replan",
    "lpn_duty_fraction", "events", "final_clock_ms", "trace_hash", "valid", "error",
)


class ConservationError(AssertionError):
    pass


def drop_category(reason: str) -> str:
    if reason in DROP_CATEGORIES:
        return reason
    return "lost"


class DataLedger:
    def __init__(self, sim=None):
        self.sim = sim
        self.items: dict[tuple, tuple[int, int]] = {}
        self.copies: dict[tuple, int] = {}
        self.delivered: dict[tuple, int] = {}
        self.dropped: dict[tuple, str] = {}
        self.generated_bytes = 0
        self.unique_bytes = 0
        self.duplicate_bytes = 0
        self.delay_samples: list[int] = []
        self.drop_bytes = {c: 0 for c in DROP_CATEGORIES}
        self.drop_counts = {c: 0 for c in DROP_CATEGORIES}
        self.deliveries_by_collector: dict[Any, int] = {}

    def _rec(self, type_, actor, **fields):
        if self.sim is not None:
            self.sim.record(type_, actor, **fields)

    def generate(self, key: tuple, nbytes: int, created_at: int, actor: Any = None) -> None:
        if key in self.items:
            raise ValueError(f"item {key} generated twice")
        self.items[key] = (nbytes, created_at)
        self.copies[key] = 1
        self.generated_bytes += nbytes
        self._rec("generate", actor, origin=key[0], seq=key[1], bytes=nbytes)

    def hold(self, key: tuple, n: int = 1) -> None:
        self.copies[key] += n

    def release(self, key: tuple, reason: str = "consumed", actor: Any = None, n: int = 1) -> None:
        left = self.copies[key] - n
        if left < 0:
            raise ConservationError(f"item {key} released more copies than it had")
        self.copies[key] = left
        if left == 0 and key not in self.delivered:
            cat = drop_category(reason)
            self.dropped[key] = cat
            nbytes = self.items[key][0]
            self.drop_bytes[cat] += nbytes
            self.drop_counts[cat] += 1
            self._rec("drop", actor, origin=key[0], seq=key[1], bytes=nbytes, reason=cat)

    def record_delivery(self, key: tuple, at: int, collector: Any = None) -> str:
        """Classify a copy reaching a collector; uniqueness is global across collectors."""
        nbytes, created = self.items[key]
        self.deliveries_by_collector[collector] = self.deliveries_by_collector.get(collector, 0) + 1
        if key in self.delivered:
            self.duplicate_bytes += nbytes
            self._rec("deliver", collector, origin=key[0], seq=key[1], bytes=nbytes, unique=False)
            return "duplicate"
        if key in self.dropped:
            raise ConservationError(f"item {key} delivered after it was dropped")
        self.delivered[key] = at
        self.unique_bytes += nbytes
        self.delay_samples.append(at - created)
        self._rec("deliver", collector, origin=key[0], seq=key[1], bytes=nbytes, unique=True,
                  delay=at - created)
        return "unique"

    def in_flight_keys(self) -> set:
        return {k for k, c in self.copies.items() if c > 0 and k not in self.delivered}

    def bytes_of(self, keys: Iterable[tuple]) -> int:
        return sum(self.items[k][0] for k in keys)


@dataclass
class RunMetrics:
    scenario: str = ""
    kind: str = ""
    strategy: str = ""
    seed: int = 0
    delta_ms: int | None = None
    density: str = ""
    generated_bytes: int = 0
    unique_collected_bytes: int = 0
    duplicate_collected_bytes: int = 0
    in_flight_bytes: int = 0
    collected_ratio: float = 0.0
    delay_samples: list[int] = field(default_factory=list)
    delay_median_ms: float | None = None
    delay_p95_ms: float | None = None
    drops: dict[str, int] = field(default_factory=dict)
    drop_counts: dict[str, int] = field(default_factory=dict)
    relay_tx: dict[Any, int] = field(default_factory=dict)
    planning_ops: dict[Any, int] = field(default_factory=dict)
    planning_ops_per_replan: float | None = None
    lpn_duty_fraction: float | None = None
    events: int = 0
    final_clock_ms: int = 0
    trace_hash: str = ""
    valid: bool = True
    error: str = ""
    extra: dict[str, Any] = field(default_factory=dict)

    def csv_row(self) -> dict[str, Any]:
        def opt(v, fmt="{:.3f}"):
            return "" if v is None else fmt.format(v)
        return {
            "scenario": self.scenario, "kind": self.kind, "strategy": self.strategy,
            "seed": self.seed, "delta_ms": "" if self.delta_ms is None else self.delta_ms,
            "density": self.density, "generated_bytes": self.generated_bytes,
            "unique_collected_bytes": self.unique_collected_bytes,
            "duplicate_collected_bytes": self.duplicate_collected_bytes,
            "in_flight_bytes": self.in_flight_bytes,
            "collected_ratio": f"{self.collected_ratio:.6f}",
            "delay_median_ms": opt(self.delay_median_ms, "{:.1f}"),
            "delay_p95_ms": opt(self.delay_p95_ms, "{:.1f}"),
            "delay_samples": len(self.delay_samples),
            **{f"drop_{c}_bytes": self.drops.get(c, 0) for c in DROP_CATEGORIES},
            "relay_tx_total": sum(self.relay_tx.values()),
            "planning_ops_per_replan": opt(self.planning_ops_per_replan, "{:.1f}"),
            "lpn_duty_fraction": opt(self.lpn_duty_fraction, "{:.4f}"),
            "events": self.events, "final_clock_ms": self.final_clock_ms,
            "trace_hash": self.trace_hash, "valid": int(self.valid), "error": self.error,
        }


def delay_stats(samples: list[int]) -> tuple[float | None, float | None]:
    if not samples:
        return None, None
    arr = np.asarray(samples, dtype=float)
    return float(np.median(arr)), float(np.percentile(arr, 95))


def summarize(ledger: DataLedger, scanned_in_flight: set, strict: bool = True,
              **meta) -> RunMetrics:
    """Fold a finished run into :class:`RunMetrics` and enforce conservation.

    ``scanned_in_flight`` is the set of undelivered item keys found by walking
    every buffer, queue and pending delivery of the run.
    """
    m = RunMetrics(**meta)
    m.generated_bytes = ledger.generated_bytes
    m.unique_collected_bytes = ledger.unique_bytes
    m.duplicate_collected_bytes = ledger.duplicate_bytes
    scanned = {k for k in scanned_in_flight if k not in ledger.delivered}
    m.in_flight_bytes = ledger.bytes_of(scanned)
    m.collected_ratio = (ledger.unique_bytes / ledger.generated_bytes
                         if ledger.generated_bytes else 0.0)
    m.delay_samples = list(ledger.delay_samples)
    m.delay_median_ms, m.delay_p95_ms = delay_stats(m.delay_samples)
    m.drops = dict(ledger.drop_bytes)
    m.drop_counts = dict(ledger.drop_counts)
    problems = []
    dropped = sum(ledger.drop_bytes.values())
    if m.generated_bytes != m.unique_collected_bytes + m.in_flight_bytes + dropped:
        problems.append(
            f"bytes do not balance: generated={m.generated_bytes} unique={m.unique_collected_bytes} "
            f"in_flight={m.in_flight_bytes} dropped={dropped}")
    tracked = ledger.in_flight_keys()
    if tracked != scanned:
        problems.append(f"copy tracking disagrees with container scan on {len(tracked ^ scanned)} items")
    if not 0.0 <= m.collected_ratio <= 1.0:
        problems.append(f"collected ratio {m.collected_ratio} outside [0, 1]")
    if problems:
        m.valid = False
        m.error = "; ".join(problems)
        if strict:
            raise ConservationError(m.error)
    return m


def fold_trace(records: Iterable[dict]) -> dict[str, Any]:
    """Recompute the byte totals and delays from trace records alone."""
    generated = unique = duplicate = 0
    drops = {c: 0 for c in DROP_CATEGORIES}
    delays = []
    for rec in records:
        t = rec["type"]
        if t == "generate":
            generated += rec["bytes"]
        elif t == "deliver":
            if rec["unique"]:
                unique += rec["bytes"]
                delays.append(rec["delay"])
            else:
                duplicate += rec["bytes"]
        elif t == "drop":
            drops[rec["reason"]] += rec["bytes"]
    return {
        "generated_bytes": generated,
        "unique_collected_bytes": unique,
        "duplicate_collected_bytes": duplicate,
        "drops": drops,
        "in_flight_bytes": generated - unique - sum(drops.values()),
        "delay_samples": delays,
    }


def write_csv(rows: Iterable[RunMetrics], fh, header_comment: str | None = None) -> None:
    if header_comment:
        fh.write(f"# {header_comment}\n")
    w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r.csv_row() if isinstance(r, RunMetrics) else r)


def csv_text(rows: Iterable[RunMetrics]) -> str:
    buf = io.StringIO()
    write_csv(rows, buf)
    return buf.getvalue()


def median(values: Iterable[float]) -> float:
    vals = sorted(v for v in values if v is not None and not math.isnan(v))
    if not vals:
        return math.nan
    return float(np.median(vals))
