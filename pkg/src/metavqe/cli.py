"""Command-line orchestration of the energy-profile experiments.

Subcommands: `run` (full experiment to CSV/JSON artifacts), `exact` (oracle
sweep to stdout), `plotdata` (merge profile CSVs into plot-ready columns),
`validate-config`. Exit codes: 0 success, 1 runtime failure (partial
artifacts preserved), 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import dataclass, fields
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

from .exact import DENSE_MAX_QUBITS
from .optimizer import OptimizerConfig
from .pauli import (
    FileFamily,
    HamiltonianFamily,
    HamiltonianParseError,
    XxzFamily,
    parse_family_file,
)
from .workflows import (
    EnergyProfile,
    RandomStart,
    TrainingGrid,
    TrainResult,
    WarmStart,
    equispaced,
    evaluate_profile,
    exact_energies,
    exact_profile,
    run_vqe_per_point,
    train_ga_vqe,
    train_meta_vqe,
)

OUTPUT_DIR_ENV = "METAVQE_OUTPUT_DIR"
ALGORITHMS = ("exact", "meta", "ga", "vqe", "opt-meta", "opt-ga")
ENCODINGS = ("linear", "gaussian", "gaussian-squared")
MODELS = ("xxz", "file")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    model: str = "xxz"
    hamiltonian_file: str = ""
    n: int = 8
    l1: int = 2
    l2: int = 2
    field: float = 0.75
    meta_start: float = -1.1
    meta_stop: float = 1.1
    train_points: int = 20
    test_points: int = 100
    algorithms: tuple[str, ...] = ("meta", "ga", "vqe", "opt-meta")
    encoding: str = "linear"
    seed: int = 1
    restarts: int = 1
    train_restarts: int = 3
    max_iterations: int = 500
    grad_tol: float = 1e-6
    f_tol: float = 1e-10
    history: int = 10
    output_dir: str = ""

    def validate(self) -> None:
        if self.model not in MODELS:
            raise ConfigError(f"model must be one of {MODELS}, got {self.model!r}")
        if self.model == "file" and not self.hamiltonian_file:
            raise ConfigError("model=file requires hamiltonian-file")
        if self.n < 2:
            raise ConfigError(f"n must be >= 2, got {self.n}")
        if self.l1 < 0 or self.l2 < 0:
            raise ConfigError("layer counts must be >= 0")
        needs_meta = {"meta", "opt-meta"} & set(self.algorithms)
        if needs_meta and self.l1 < 1:
            raise ConfigError(f"algorithms {sorted(needs_meta)} require l1 >= 1")
        if self.train_points < 1 or self.test_points < 1:
            raise ConfigError("train-points and test-points must be >= 1")
        if not self.meta_start <= self.meta_stop:
            raise ConfigError("meta-start must be <= meta-stop")
        if not self.algorithms:
            raise ConfigError("at least one algorithm is required")
        for algorithm in self.algorithms:
            if algorithm not in ALGORITHMS:
                raise ConfigError(
                    f"unknown algorithm {algorithm!r} (expected subset of {ALGORITHMS})"
                )
        if self.encoding not in ENCODINGS:
            raise ConfigError(f"encoding must be one of {ENCODINGS}, got {self.encoding!r}")
        if self.restarts < 1:
            raise ConfigError("restarts must be >= 1")
        if self.train_restarts < 1:
            raise ConfigError("train-restarts must be >= 1")
        if self.max_iterations < 1:
            raise ConfigError("max-iterations must be >= 1")
        if self.grad_tol <= 0 or self.f_tol <= 0:
            raise ConfigError("grad-tol and f-tol must be positive")
        if self.history < 1:
            raise ConfigError("history must be >= 1")

    def optimizer_config(self) -> OptimizerConfig:
        return OptimizerConfig(
            max_iterations=self.max_iterations,
            grad_tol=self.grad_tol,
            f_tol=self.f_tol,
            history=self.history,
            rng_seed=self.seed,
        )

    def snapshot(self) -> dict[str, object]:
        return {_attr_to_key(f.name): getattr(self, f.name) for f in fields(self)}


def _attr_to_key(attr: str) -> str:
    return attr.replace("_", "-")


_FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def _coerce(attr: str, raw: str, where: str) -> object:
    kind = _FIELD_TYPES[attr]
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if attr == "algorithms":
            return tuple(part.strip() for part in raw.split(",") if part.strip())
        return raw
    except ValueError:
        raise ConfigError(f"{where}: bad value {raw!r} for key {_attr_to_key(attr)!r}") from None


def parse_config(text: str, base: ExperimentConfig = ExperimentConfig()) -> ExperimentConfig:
    """Parse the flat `key = value` config format over `base` defaults."""
    updates: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        attr = key.replace("-", "_")
        if attr not in _FIELD_TYPES:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if attr in updates:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        updates[attr] = _coerce(attr, value.strip(), f"line {lineno}")
    return ExperimentConfig(**{**base.__dict__, **updates})


def format_config(config: ExperimentConfig) -> str:
    """Canonical text form; `parse_config` round-trips it exactly."""
    lines = []
    for f in fields(config):
        value = getattr(config, f.name)
        if f.name == "algorithms":
            value = ",".join(value)
        elif isinstance(value, float):
            value = repr(value)
        lines.append(f"{_attr_to_key(f.name)} = {value}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------


def _build_family(config: ExperimentConfig) -> tuple[HamiltonianFamily, str, dict[str, float]]:
    """Family plus (sweep symbol, fixed constants) for the configured model."""
    if config.model == "xxz":
        return XxzFamily(config.n), "delta", {"field": config.field}
    family = parse_family_file(Path(config.hamiltonian_file).read_text())
    if len(family.parameter_names) != 1:
        raise ConfigError(
            "model=file needs exactly one '@name' parameter group to sweep, "
            f"found {list(family.parameter_names)}"
        )
    if family.nqubits != config.n:
        raise ConfigError(
            f"config says n={config.n} but {config.hamiltonian_file} declares "
            f"qubits {family.nqubits}"
        )
    return family, family.parameter_names[0], {}


def _write(path: Path, text: str) -> None:
    path.write_text(text)
    print(f"wrote {path}")


def _point_trace_csv(profile: EnergyProfile) -> str:
    lines = ["point,meta_value,iterations,final_objective,final_grad_norm,termination"]
    for i, (p, s) in enumerate(zip(profile.points, profile.minimizer_stats)):
        lines.append(
            f"{i},{p.meta_value:.12g},{s.iterations},{s.energy:.12g},"
            f"{s.grad_norm:.12g},{s.termination}"
        )
    return "\n".join(lines) + "\n"


def cmd_run(config: ExperimentConfig, out_dir: Path, workers: int) -> int:
    config.validate()
    out_dir.mkdir(parents=True, exist_ok=True)
    family, symbol, constants = _build_family(config)
    test_grid = TrainingGrid(
        symbol, equispaced(config.meta_start, config.meta_stop, config.test_points), constants
    )
    train_grid = TrainingGrid(
        symbol, equispaced(config.meta_start, config.meta_stop, config.train_points), constants
    )
    opt = config.optimizer_config()

    if config.n > DENSE_MAX_QUBITS:
        print(f"n={config.n}: oracle uses Lanczos (dense limit is {DENSE_MAX_QUBITS})")
    reference = exact_energies(family, test_grid, seed=config.seed)
    profiles: dict[str, EnergyProfile] = {}
    profiles["exact"] = exact_profile(
        family, test_grid, config.n, config.l1, config.l2, config.seed
    )
    _write(out_dir / "profile_exact.csv", profiles["exact"].to_csv())

    def train(kind: str) -> TrainResult:
        if kind == "meta":
            result = train_meta_vqe(
                family, train_grid, config.n, config.l1, config.l2, opt, config.encoding,
                restarts=config.train_restarts, workers=workers,
            )
        else:
            result = train_ga_vqe(
                family, train_grid, config.n, config.l1, config.l2, opt,
                restarts=config.train_restarts, workers=workers,
            )
        print(
            f"trained {kind}: loss {result.final_loss:.12g} "
            f"({result.trace.termination} after {result.trace.iterations} iterations)"
        )
        _write(out_dir / f"train_{kind}.json", result.to_json(config.snapshot()))
        _write(out_dir / f"trace_{kind}.csv", result.trace.to_csv())
        return result

    requested = set(config.algorithms)
    trained: dict[str, TrainResult] = {}
    if requested & {"meta", "opt-meta"}:
        trained["meta"] = train("meta")
    if requested & {"ga", "opt-ga"}:
        trained["ga"] = train("ga")

    for kind in ("meta", "ga"):
        if kind in requested:
            profiles[kind] = evaluate_profile(
                trained[kind], family, test_grid.points, exact=reference
            )
    if "vqe" in requested:
        profiles["vqe"] = run_vqe_per_point(
            family,
            test_grid,
            config.n,
            config.l1,
            config.l2,
            RandomStart(config.seed),
            opt,
            restarts=config.restarts,
            workers=workers,
            exact=reference,
        )
    for kind in ("opt-meta", "opt-ga"):
        if kind in requested:
            profiles[kind] = run_vqe_per_point(
                family,
                test_grid,
                config.n,
                config.l1,
                config.l2,
                WarmStart.from_result(trained[kind.removeprefix("opt-")]),
                opt,
                workers=workers,
                exact=reference,
                algorithm=kind,
            )

    summary: dict[str, object] = {
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "config": config.snapshot(),
        "algorithms": {},
    }
    for kind in config.algorithms:
        profile = profiles[kind]
        if kind != "exact":
            _write(out_dir / f"profile_{kind}.csv", profile.to_csv())
        if profile.minimizer_stats is not None:
            _write(out_dir / f"trace_{kind}.csv", _point_trace_csv(profile))
        summary["algorithms"][kind] = profile.summary()
    _write(out_dir / "summary.json", json.dumps(summary, indent=2) + "\n")
    return 0


# ---------------------------------------------------------------------------
# plotdata
# ---------------------------------------------------------------------------


def _read_profile_csv(path: Path) -> tuple[str, list[dict[str, str]]]:
    with path.open(newline="") as handle:
        reader = csv.DictReader(handle)
        header = reader.fieldnames or []
        expected = EnergyProfile.CSV_HEADER.split(",")
        if header != expected:
            raise ConfigError(f"{path}: expected profile header {expected}, got {header}")
        rows = list(reader)
    if not rows:
        raise ConfigError(f"{path}: no data rows")
    algorithms = {row["algorithm"] for row in rows}
    if len(algorithms) != 1:
        raise ConfigError(f"{path}: mixed algorithm column {sorted(algorithms)}")
    return algorithms.pop(), rows


def cmd_plotdata(paths: Sequence[Path], out_dir: Path) -> int:
    series: list[tuple[str, list[dict[str, str]]]] = []
    for path in paths:
        series.append(_read_profile_csv(path))
    grid = [float(row["meta_value"]) for row in series[0][1]]
    for path, (_, rows) in zip(paths, series):
        this_grid = [float(row["meta_value"]) for row in rows]
        if this_grid != grid:
            raise ConfigError(f"{path}: meta_value grid differs from {paths[0]}")

    # exact first (if present), then the rest in input order
    ordered = sorted(series, key=lambda s: 0 if s[0] == "exact" else 1)
    out_dir.mkdir(parents=True, exist_ok=True)

    def table(column: str, include_exact: bool) -> str:
        names = [name for name, _ in ordered if include_exact or name != "exact"]
        lines = ["# meta_value " + " ".join(names)]
        for i, x in enumerate(grid):
            values = [
                f"{float(rows[i][column]):.12g}"
                for name, rows in ordered
                if include_exact or name != "exact"
            ]
            lines.append(f"{x:.12g} " + " ".join(values))
        return "\n".join(lines) + "\n"

    _write(out_dir / "plot_energy.dat", table("energy", include_exact=True))
    _write(out_dir / "plot_abs_error.dat", table("abs_err", include_exact=False))
    _write(out_dir / "plot_rel_error.dat", table("rel_err", include_exact=False))
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="key = value config file")
    for f in fields(ExperimentConfig):
        key = _attr_to_key(f.name)
        if f.name == "algorithms":
            parser.add_argument("--algorithms", help="comma-separated subset of " + ",".join(ALGORITHMS))
        elif f.type == "int":
            parser.add_argument(f"--{key}", type=int, dest=f.name)
        elif f.type == "float":
            parser.add_argument(f"--{key}", type=float, dest=f.name)
        else:
            parser.add_argument(f"--{key}", dest=f.name)
    parser.add_argument("--full", action="store_true", help="full-scale defaults (n=14)")
    parser.add_argument(
        "--gaussian-squared",
        action="store_true",
        help="shorthand for --encoding gaussian-squared",
    )
    parser.add_argument("--threads", type=int, default=os.cpu_count() or 1)


def _config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    config = ExperimentConfig()
    if args.config is not None:
        config = parse_config(Path(args.config).read_text(), config)
    updates: dict[str, object] = {}
    for f in fields(ExperimentConfig):
        value = getattr(args, f.name, None)
        if value is None:
            continue
        if f.name == "algorithms":
            value = _coerce("algorithms", value, "--algorithms")
        updates[f.name] = value
    if args.full and "n" not in updates:
        updates["n"] = 14
    if args.gaussian_squared:
        updates["encoding"] = "gaussian-squared"
    return ExperimentConfig(**{**config.__dict__, **updates})


def _resolve_out_dir(config: ExperimentConfig) -> Path:
    if config.output_dir:
        return Path(config.output_dir)
    return Path(os.environ.get(OUTPUT_DIR_ENV, "metavqe-out"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="metavqe",
        description="Learn ground-state energy profiles of parametrized Hamiltonians.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment and write artifacts")
    _add_config_flags(run)

    ex = sub.add_parser("exact", help="print the oracle (sweep value, energy) pairs")
    ex.add_argument("--n", type=int, default=8)
    ex.add_argument("--field", type=float, default=0.75)
    ex.add_argument("--start", type=float, default=-1.1)
    ex.add_argument("--stop", type=float, default=1.1)
    ex.add_argument("--points", type=int, default=21)
    ex.add_argument("--seed", type=int, default=0)

    plot = sub.add_parser("plotdata", help="merge profile CSVs into plot-ready tables")
    plot.add_argument("profiles", nargs="+", type=Path)
    plot.add_argument("--output-dir", type=Path, default=Path("."))

    check = sub.add_parser("validate-config", help="check a config file")
    check.add_argument("config", type=Path)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            config = _config_from_args(args)
            config.validate()
            return cmd_run(config, _resolve_out_dir(config), max(1, args.threads))
        if args.command == "exact":
            family = XxzFamily(args.n)
            grid = TrainingGrid(
                "delta", equispaced(args.start, args.stop, args.points), {"field": args.field}
            )
            for point, energy in zip(grid.points, exact_energies(family, grid, seed=args.seed)):
                print(f"{point:.12g} {energy:.12g}")
            return 0
        if args.command == "plotdata":
            return cmd_plotdata(args.profiles, args.output_dir)
        if args.command == "validate-config":
            config = parse_config(Path(args.config).read_text())
            config.validate()
            print("ok")
            return 0
        raise AssertionError(f"unhandled command {args.command}")
    except (ConfigError, HamiltonianParseError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
