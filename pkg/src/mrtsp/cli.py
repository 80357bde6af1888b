"""Command-line front end: solve one instance, run benchmark suites, or
query the exact solvers.

`solve` runs the sequential or the island GA once and appends a JSON-lines
report. `bench` runs an (instance x algorithm x seed) grid from a suite
config, writing results.csv, summary.csv and a plot script that mirrors the
accuracy and time comparisons the benchmarks exist for. `exact` prints an
optimal tour and can pin it into the optima registry.
"""

from __future__ import annotations

import argparse
import csv
import json
import statistics
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

from .codec import CodecError
from .engine import EngineError, StoreError
from .ga import GaParams, TerminationPolicy, run_sga
from .island import IslandParams, run_pga
from .oracle import BRUTE_FORCE_MAX, HELD_KARP_MAX, brute_force, held_karp
from .reports import RunReport
from .tsplib import Instance, ParseError, load_instance, load_registry, save_registry

SGA_DEFAULT_GENERATIONS = 10_000
PGA_DEFAULT_GENERATIONS = 50_000


def _add_shared_flags(sub: argparse.ArgumentParser):
    sub.add_argument("--pop-size", type=int, help="population size (per island for pga)")
    sub.add_argument("--crossover-prob", type=float, help="crossover probability")
    sub.add_argument("--mutation-prob", type=float, help="per-individual swap mutation probability")
    sub.add_argument("--similarity-threshold", type=float,
                     help="parent pairs more similar than this are redrawn")
    sub.add_argument("--islands", type=int, help="number of islands (pga)")
    sub.add_argument("--migration-interval", type=int,
                     help="generations each island evolves between migrations (pga)")
    sub.add_argument("--max-generations", type=int,
                     help=f"generation budget (default {SGA_DEFAULT_GENERATIONS} sga, "
                          f"{PGA_DEFAULT_GENERATIONS} per-island pga)")
    sub.add_argument("--patience", type=int,
                     help="stop after this many stagnant generations (sga) or rounds (pga); 0 disables")
    sub.add_argument("--target-length", type=float, help="stop once best length <= target")
    sub.add_argument("--seed", type=int, default=0, help="run seed (default 0)")
    sub.add_argument("--workers", type=int, help="engine worker threads (pga)")
    sub.add_argument("--out-dir", default=".", help="directory for report files (default .)")


def _ga_params(args) -> GaParams:
    overrides = {}
    if args.pop_size is not None:
        overrides["population_size"] = args.pop_size
    if args.crossover_prob is not None:
        overrides["crossover_prob"] = args.crossover_prob
    if args.mutation_prob is not None:
        overrides["mutation_prob"] = args.mutation_prob
    if args.similarity_threshold is not None:
        overrides["similarity_threshold"] = args.similarity_threshold
    return replace(GaParams(), **overrides)


def _append_report(out_dir: Path, report: RunReport):
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "reports.jsonl", "a", encoding="utf-8") as fh:
        fh.write(report.to_json_line() + "\n")


def cmd_solve(args) -> int:
    instance = load_instance(args.instance)
    ga = _ga_params(args)
    out_dir = Path(args.out_dir)
    if args.algo == "sga":
        termination = TerminationPolicy(target_length=args.target_length,
                                        patience=args.patience)
        report = run_sga(instance, ga,
                         args.max_generations or SGA_DEFAULT_GENERATIONS,
                         termination, seed=args.seed)
    else:
        params = IslandParams(
            num_islands=args.islands if args.islands is not None else 10,
            migration_interval=args.migration_interval or 50,
            ga=ga,
            max_total_generations=args.max_generations or PGA_DEFAULT_GENERATIONS,
            convergence_patience=args.patience if args.patience is not None else 20,
            target_length=args.target_length,
        )
        dump = None
        if args.dump_tours:
            out_dir.mkdir(parents=True, exist_ok=True)
            dump = out_dir / "final-population.txt"
        report = run_pga(instance, params, master_seed=args.seed,
                         workers=args.workers, dump_path=dump)
    _append_report(out_dir, report)
    print(report.summary_line())
    return 0


# -- benchmark suites --------------------------------------------------------

SUITE_DEFAULTS = {
    "algos": ["sga", "pga"],
    "repeats": 10,
    "seed": 0,
    "pop_size": 100,
    "islands": 10,
    "migration_interval": 50,
    "sga_generations": SGA_DEFAULT_GENERATIONS,
    "pga_generations": None,       # None = sga_generations // islands (equal evaluations)
    "crossover_prob": None,
    "mutation_prob": None,
    "similarity_threshold": None,
    "patience": 20,                # pga rounds
    "sga_patience": None,          # sga generations
    "stop_at_known_optimum": True,
    "out_dir": None,
}

_INT_KEYS = {"repeats", "seed", "pop_size", "islands", "migration_interval",
             "sga_generations", "pga_generations", "patience", "sga_patience"}
_FLOAT_KEYS = {"crossover_prob", "mutation_prob", "similarity_threshold"}
_BOOL_KEYS = {"stop_at_known_optimum"}


def parse_suite_config(text: str, base_dir: Path) -> dict:
    """Plain key-value lines plus repeated `instance <path>` lines.

    Keys use hyphens in the file (`pop-size 50`); `#` starts a comment.
    Instance paths are resolved relative to the config file.
    """
    cfg = dict(SUITE_DEFAULTS)
    cfg["instances"] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        name, _, rest = line.partition(" ")
        rest = rest.strip()
        key = name.replace("-", "_")
        if not rest:
            raise ValueError(f"suite config line {lineno}: {name!r} has no value")
        if key == "instance":
            cfg["instances"].append(base_dir / rest)
        elif key == "algos":
            algos = rest.split()
            bad = [a for a in algos if a not in ("sga", "pga")]
            if bad:
                raise ValueError(f"suite config line {lineno}: unknown algo {bad[0]!r}")
            cfg["algos"] = algos
        elif key == "out_dir":
            cfg["out_dir"] = base_dir / rest
        elif key in _INT_KEYS:
            cfg[key] = int(rest)
        elif key in _FLOAT_KEYS:
            cfg[key] = float(rest)
        elif key in _BOOL_KEYS:
            if rest not in ("on", "off"):
                raise ValueError(f"suite config line {lineno}: {name} must be on or off")
            cfg[key] = rest == "on"
        else:
            raise ValueError(f"suite config line {lineno}: unknown key {name!r}")
    if not cfg["instances"]:
        raise ValueError("suite config names no instances")
    return cfg


def _suite_ga(cfg: dict) -> GaParams:
    overrides = {"population_size": cfg["pop_size"]}
    for key, field_name in (("crossover_prob", "crossover_prob"),
                            ("mutation_prob", "mutation_prob"),
                            ("similarity_threshold", "similarity_threshold")):
        if cfg[key] is not None:
            overrides[field_name] = cfg[key]
    return replace(GaParams(), **overrides)


def _run_cell(instance: Instance, algo: str, seed: int, cfg: dict) -> RunReport:
    ga = _suite_ga(cfg)
    target = instance.known_optimum if cfg["stop_at_known_optimum"] else None
    if algo == "sga":
        termination = TerminationPolicy(target_length=target, patience=cfg["sga_patience"])
        return run_sga(instance, ga, cfg["sga_generations"], termination, seed=seed)
    pga_budget = cfg["pga_generations"]
    if pga_budget is None:
        # same number of offspring evaluations as the sga budget, split across islands
        pga_budget = max(cfg["migration_interval"], cfg["sga_generations"] // cfg["islands"])
    params = IslandParams(
        num_islands=cfg["islands"],
        migration_interval=cfg["migration_interval"],
        ga=ga,
        max_total_generations=pga_budget,
        convergence_patience=cfg["patience"],
        target_length=target,
    )
    return run_pga(instance, params, master_seed=seed)


RESULT_COLUMNS = ["instance", "N", "algo", "seed", "best", "accuracy",
                  "seconds", "generations", "error"]
SUMMARY_COLUMNS = ["instance", "N", "algo", "runs", "mean_best", "min_best",
                   "mean_accuracy", "mean_seconds"]


def _fmt(value, spec: str = "") -> str:
    if value is None:
        return ""
    return format(value, spec) if spec else str(value)


def _write_results(path: Path, rows: list[dict]):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=RESULT_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)


def _write_summary(path: Path, rows: list[dict]) -> list[dict]:
    cells: dict[tuple[str, str], list[dict]] = {}
    order = []
    for row in rows:
        cell = (row["instance"], row["algo"])
        if cell not in cells:
            cells[cell] = []
            order.append(cell)
        if not row["error"]:
            cells[cell].append(row)
    out = []
    for instance_name, algo in order:
        good = cells[(instance_name, algo)]
        entry = {"instance": instance_name, "algo": algo, "runs": len(good)}
        if good:
            entry["N"] = good[0]["N"]
            entry["mean_best"] = _fmt(statistics.fmean(float(r["best"]) for r in good), ".4f")
            entry["min_best"] = _fmt(min(float(r["best"]) for r in good), "g")
            accuracies = [float(r["accuracy"]) for r in good if r["accuracy"] != ""]
            entry["mean_accuracy"] = _fmt(statistics.fmean(accuracies), ".4f") if accuracies else ""
            entry["mean_seconds"] = _fmt(statistics.fmean(float(r["seconds"]) for r in good), ".4f")
        else:
            entry.update({"N": "", "mean_best": "", "min_best": "",
                          "mean_accuracy": "", "mean_seconds": ""})
        out.append(entry)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=SUMMARY_COLUMNS)
        writer.writeheader()
        writer.writerows(out)
    return out


PLOT_SCRIPT = '''#!/usr/bin/env python3
"""Bar charts from summary.csv: mean accuracy and mean seconds per
instance and algorithm. Writes accuracy.png and time.png next to the CSVs."""

import csv
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = Path(__file__).resolve().parent
rows = [r for r in csv.DictReader(open(here / "summary.csv")) if r["runs"] != "0"]
instances = list(dict.fromkeys(r["instance"] for r in rows))
algos = list(dict.fromkeys(r["algo"] for r in rows))


def chart(column, ylabel, out_name):
    fig, ax = plt.subplots(figsize=(1.5 + 1.2 * len(instances), 4))
    width = 0.8 / len(algos)
    for i, algo in enumerate(algos):
        values = []
        for name in instances:
            cell = [r for r in rows if r["instance"] == name and r["algo"] == algo]
            values.append(float(cell[0][column]) if cell and cell[0][column] else 0.0)
        xs = [j + i * width for j in range(len(instances))]
        ax.bar(xs, values, width=width, label=algo)
    ax.set_xticks([j + width * (len(algos) - 1) / 2 for j in range(len(instances))])
    ax.set_xticklabels(instances)
    ax.set_ylabel(ylabel)
    ax.legend()
    fig.tight_layout()
    fig.savefig(here / out_name, dpi=120)


chart("mean_accuracy", "mean accuracy (%)", "accuracy.png")
chart("mean_seconds", "mean seconds", "time.png")
print("wrote accuracy.png and time.png")
'''


def cmd_bench(args) -> int:
    config_path = Path(args.config)
    cfg = parse_suite_config(config_path.read_text(encoding="utf-8"), config_path.parent)
    if args.seed is not None:
        cfg["seed"] = args.seed
    out_dir = Path(args.out_dir) if args.out_dir else Path(cfg["out_dir"] or "bench-out")
    out_dir.mkdir(parents=True, exist_ok=True)

    instances = [load_instance(path) for path in cfg["instances"]]
    cells = [(inst, algo, cfg["seed"] + repeat)
             for inst in instances
             for algo in cfg["algos"]
             for repeat in range(cfg["repeats"])]

    def run(cell):
        inst, algo, seed = cell
        try:
            return _run_cell(inst, algo, seed, cfg)
        except Exception as exc:  # per-row failure, suite continues
            return exc

    if args.parallel_cells:
        with ThreadPoolExecutor() as pool:
            outcomes = list(pool.map(run, cells))
    else:
        outcomes = [run(cell) for cell in cells]

    rows = []
    failures = 0
    for (inst, algo, seed), outcome in zip(cells, outcomes):
        row = {"instance": inst.name, "N": inst.dimension, "algo": algo, "seed": seed,
               "best": "", "accuracy": "", "seconds": "", "generations": "", "error": ""}
        if isinstance(outcome, Exception):
            failures += 1
            row["error"] = f"{type(outcome).__name__}: {outcome}"
        else:
            _append_report(out_dir, outcome)
            row.update(best=_fmt(outcome.best_length, "g"),
                       accuracy=_fmt(outcome.accuracy, ".4f") if outcome.accuracy is not None else "",
                       seconds=_fmt(outcome.wall_seconds, ".4f"),
                       generations=outcome.generations)
        rows.append(row)

    _write_results(out_dir / "results.csv", rows)
    _write_summary(out_dir / "summary.csv", rows)
    (out_dir / "plot_results.py").write_text(PLOT_SCRIPT, encoding="utf-8")
    print(f"{len(rows)} runs ({failures} failed) -> {out_dir / 'results.csv'}")
    return 1 if failures else 0


def cmd_exact(args) -> int:
    instance = load_instance(args.instance)
    n = instance.dimension
    if args.solver == "brute-force":
        result = brute_force(instance)
    elif args.solver == "held-karp":
        result = held_karp(instance)
    elif n <= BRUTE_FORCE_MAX:
        result = brute_force(instance)
    else:
        result = held_karp(instance)
    print(f"{instance.name}: optimum {result.optimum_length}")
    print("tour: " + " ".join(str(c) for c in result.optimum_tour))
    if args.write_registry:
        registry_path = (Path(args.registry) if args.registry
                         else Path(args.instance).with_name("optima.txt"))
        registry = load_registry(registry_path) if registry_path.exists() else {}
        registry[instance.name] = result.optimum_length
        save_registry(registry, registry_path)
        print(f"registry updated: {registry_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mrtsp",
                                     description="GA solvers and exact oracles for (A)TSP instances")
    commands = parser.add_subparsers(dest="command", required=True)

    solve = commands.add_parser("solve", help="run one GA on one instance")
    solve.add_argument("--algo", choices=("sga", "pga"), required=True)
    solve.add_argument("--instance", required=True, help="TSPLIB instance file")
    solve.add_argument("--dump-tours", action="store_true",
                       help="write the final populations in readable form (pga)")
    _add_shared_flags(solve)
    solve.set_defaults(func=cmd_solve)

    bench = commands.add_parser("bench", help="run a benchmark suite from a config file")
    bench.add_argument("--config", required=True, help="suite config file")
    bench.add_argument("--out-dir", help="output directory (default from config, else bench-out)")
    bench.add_argument("--seed", type=int, help="override the suite's base seed")
    bench.add_argument("--parallel-cells", action="store_true",
                       help="run cells concurrently (timings become unreliable)")
    bench.set_defaults(func=cmd_bench)

    exact = commands.add_parser("exact", help="solve an instance exactly")
    exact.add_argument("--instance", required=True)
    exact.add_argument("--solver", choices=("auto", "brute-force", "held-karp"), default="auto")
    exact.add_argument("--write-registry", action="store_true",
                       help="record the optimum in the instance's optima registry")
    exact.add_argument("--registry", help="registry path (default optima.txt beside the instance)")
    exact.set_defaults(func=cmd_exact)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, CodecError, EngineError, StoreError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
