"""Command line: single runs, sweeps and the two reference reproductions.

Exit codes: 0 ok, 1 scenario/validation error, 2 invariant failure
(conservation or another internal check).
"""

from __future__ import annotations

import argparse
import datetime as _dt
import itertools
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Sequence

from .metrics import ConservationError, RunMetrics, median, write_csv
from .mobility import DENSITY_COUNTS, PlacementError
from .routing import PolicyKind
from .scenario import Scenario, ScenarioError, build, bundled, load
from .uav import STRATEGIES

log = logging.getLogger("meshmule")

EXIT_OK, EXIT_INVALID, EXIT_INVARIANT = 0, 1, 2

REPRO_DELTAS = (100, 500, 1000, 5000)


def resolve_scenario(name: str) -> Scenario:
    """Load a scenario by path, falling back to the bundled files."""
    path = Path(name)
    if not path.exists():
        for cand in (bundled(name), bundled(name + ".scn")):
            if cand.exists():
                path = cand
                break
    return load(path)


def _seeds(text: str) -> list[int]:
    """``7`` or an inclusive range ``1-10``."""
    if "-" in text:
        lo, hi = (int(x) for x in text.split("-", 1))
        if hi < lo:
            raise argparse.ArgumentTypeError(f"empty seed range {text!r}")
        return list(range(lo, hi + 1))
    return [int(text)]


def _flatten(groups) -> list | None:
    if not groups:
        return None
    return [v for g in groups for v in (g if isinstance(g, list) else [g])]


def run_cell(scn: Scenario, seed: int | None, overrides: dict, trace_dir: str | None) -> RunMetrics:
    """Run one configuration; never raises for run-time failures."""
    meta_seed = seed if seed is not None else scn.get("seed", 0)
    try:
        cell = scn.with_overrides(**overrides)
        sim = build(cell, seed=meta_seed, keep_records=trace_dir is not None)
        m = sim.run(scenario=cell.name, density=cell.get("density", ""))
    except (ScenarioError, PlacementError, ValueError) as e:
        return RunMetrics(scenario=scn.name, kind=scn.kind, seed=meta_seed, valid=False,
                          error=f"invalid: {e}")
    except (ConservationError, AssertionError) as e:
        return RunMetrics(scenario=scn.name, kind=scn.kind, seed=meta_seed, valid=False,
                          error=f"invariant: {e}")
    if trace_dir is not None:
        write_trace(sim.sim.records, Path(trace_dir) / trace_name(m))
    return m


def trace_name(m: RunMetrics) -> str:
    parts = [m.scenario, m.strategy, f"s{m.seed}"]
    if m.delta_ms is not None:
        parts.append(f"d{m.delta_ms}")
    if m.density:
        parts.append(m.density)
    return "trace_" + "_".join(p for p in parts if p) + ".jsonl"


def write_trace(records: Sequence[dict], path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True, separators=(",", ":")) + "\n")


def write_summary(rows: Sequence[RunMetrics], out_dir: Path, name: str, timestamp: bool) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / name
    stamp = f"generated {_dt.datetime.now().isoformat(timespec='seconds')}" if timestamp else None
    with path.open("w") as fh:
        write_csv(rows, fh, header_comment=stamp)
    return path


def _exit_code(rows: Sequence[RunMetrics]) -> int:
    if all(r.valid for r in rows):
        return EXIT_OK
    if all(r.error.startswith("invalid") for r in rows if not r.valid):
        return EXIT_INVALID
    return EXIT_INVARIANT


def sweep_cells(scn: Scenario, seeds: list[int], policies=None, deltas=None,
                strategies=None, densities=None) -> list[tuple[int, dict]]:
    """Cartesian product of the given axes.

    ``delta_ms`` only applies to MAM1, so for the other policies the delta axis
    collapses to a single cell.
    """
    cells = []
    for density in densities or [None]:
        if scn.kind == "ground":
            pairs = []
            for policy in policies or [None]:
                eff = policy or scn.get("policy", "mam1")
                ds = (deltas or [None]) if eff == PolicyKind.MAM1.value else [None]
                pairs.extend((policy, d) for d in ds)
            for (policy, delta), seed in itertools.product(pairs, seeds):
                cells.append((seed, {"policy": policy, "delta_ms": delta, "density": density}))
        else:
            if policies or deltas:
                raise ScenarioError("policy and delta axes only apply to ground scenarios")
            for strategy, seed in itertools.product(strategies or [None], seeds):
                cells.append((seed, {"strategy": strategy, "density": density}))
    return cells


def _run_one(args):
    return run_cell(*args)


def run_sweep(scn: Scenario, cells, trace_dir: str | None, jobs: int = 1) -> list[RunMetrics]:
    work = [(scn, seed, ov, trace_dir) for seed, ov in cells]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_run_one, work))
    else:
        rows = []
        for i, w in enumerate(work, 1):
            rows.append(_run_one(w))
            log.info("cell %d/%d done", i, len(work))
    return rows


def median_table(rows: Sequence[RunMetrics], key) -> list[tuple]:
    """Per-group medians of unique bytes, duplicate bytes, ratio and delay."""
    groups: dict[Any, list[RunMetrics]] = {}
    for r in rows:
        groups.setdefault(key(r), []).append(r)
    out = []
    for k, rs in groups.items():
        ok = [r for r in rs if r.valid]
        out.append((k, len(ok), len(rs),
                    median(r.unique_collected_bytes for r in ok),
                    median(r.duplicate_collected_bytes for r in ok),
                    median(r.collected_ratio for r in ok),
                    median(r.delay_median_ms for r in ok)))
    return out


def print_table(table, label: str, out=None) -> None:
    out = out or sys.stdout
    out.write(f"{label:<22} {'runs':>7} {'unique_B':>10} {'dup_B':>10} {'ratio':>7} {'delay_ms':>10}\n")
    for k, ok, n, uniq, dup, ratio, delay in table:
        out.write(f"{str(k):<22} {ok:>3}/{n:<3} {uniq:>10.0f} {dup:>10.0f} {ratio:>7.3f} {delay:>10.0f}\n")


# -- commands ---------------------------------------------------------------

def cmd_run(a) -> int:
    scn = resolve_scenario(a.scenario)
    overrides = {"policy": a.policy, "delta_ms": a.delta_ms, "strategy": a.strategy,
                 "density": a.density}
    scn.with_overrides(**overrides)  # surface validation errors before running
    out = Path(a.out_dir)
    m = run_cell(scn, a.seed, overrides, str(out) if a.trace else None)
    path = write_summary([m], out, "summary.csv", not a.no_timestamp)
    if m.valid:
        print(f"{m.scenario} seed={m.seed} {m.strategy}: unique={m.unique_collected_bytes}B "
              f"dup={m.duplicate_collected_bytes}B ratio={m.collected_ratio:.3f} "
              f"trace_hash={m.trace_hash}")
    else:
        print(f"run failed: {m.error}", file=sys.stderr)
    print(f"wrote {path}")
    return _exit_code([m])


def cmd_sweep(a) -> int:
    scn = resolve_scenario(a.scenario)
    seeds = _flatten(a.seed) or [scn.get("seed", 0)]
    cells = sweep_cells(scn, seeds, a.policy, _flatten(a.delta_ms), a.strategy, a.density)
    out = Path(a.out_dir)
    rows = run_sweep(scn, cells, str(out) if a.trace else None, a.jobs)
    path = write_summary(rows, out, "sweep.csv", not a.no_timestamp)
    bad = [r for r in rows if not r.valid]
    print(f"{len(rows)} cells, {len(bad)} failed; wrote {path}")
    for r in bad:
        print(f"  seed={r.seed}: {r.error}", file=sys.stderr)
    return _exit_code(rows)


def cmd_reproduce(a) -> int:
    seeds = list(range(1, a.seeds + 1))
    out = Path(a.out_dir)
    if a.target == "ground":
        scn = resolve_scenario("ground_circular_50.scn")
        cells = sweep_cells(scn, seeds, ["flooding", "mam0", "mam1"], list(REPRO_DELTAS))
        label = "policy"

        def key(r):
            return r.strategy if r.delta_ms is None else f"{r.strategy} d={r.delta_ms}"
    else:
        scn = resolve_scenario("air_dadca_30.scn")
        cells = sweep_cells(scn, seeds, strategies=list(STRATEGIES))
        label = "strategy"

        def key(r):
            return r.strategy
    rows = run_sweep(scn, cells, str(out) if a.trace else None, a.jobs)
    path = write_summary(rows, out, f"reproduce_{a.target}.csv", not a.no_timestamp)
    print_table(median_table(rows, key), label)
    print(f"wrote {path}")
    return _exit_code(rows)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="meshmule", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def outputs(sp):
        sp.add_argument("--out-dir", default="out", help="directory for CSV and traces (default: out)")
        sp.add_argument("--trace", action="store_true", help="write a JSON-lines trace per run")
        sp.add_argument("--no-timestamp", action="store_true",
                        help="omit the timestamp comment line from CSV output")

    r = sub.add_parser("run", help="run one scenario")
    r.add_argument("--scenario", required=True, help="scenario path or bundled name")
    r.add_argument("--seed", type=int)
    r.add_argument("--policy", choices=[k.value for k in PolicyKind])
    r.add_argument("--delta-ms", type=int)
    r.add_argument("--strategy", choices=STRATEGIES)
    r.add_argument("--density", choices=tuple(DENSITY_COUNTS))
    outputs(r)
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="run the Cartesian product of the given axes")
    s.add_argument("--scenario", required=True)
    s.add_argument("--seed", type=_seeds, nargs="+", help="seeds or ranges, e.g. 1-10")
    s.add_argument("--policy", nargs="+", choices=[k.value for k in PolicyKind])
    s.add_argument("--delta-ms", type=int, nargs="+")
    s.add_argument("--strategy", nargs="+", choices=STRATEGIES)
    s.add_argument("--density", nargs="+", choices=tuple(DENSITY_COUNTS))
    s.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    outputs(s)
    s.set_defaults(func=cmd_sweep)

    q = sub.add_parser("reproduce", help="the ground policy table or the air strategy table")
    q.add_argument("target", choices=("ground", "air"))
    q.add_argument("--seeds", type=int, default=10, help="number of seeds, starting at 1")
    q.add_argument("--jobs", type=int, default=1)
    outputs(q)
    q.set_defaults(func=cmd_reproduce)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    a = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return a.func(a)
    except ScenarioError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except (ConservationError, AssertionError) as e:
        print(f"invariant failure: {e}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
