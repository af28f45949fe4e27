"""Command-line workflow driver.

Subcommands cover the full pipeline: design generation, batch simulation,
emulator fitting and validation, sensitivity screening, scenario propagation,
robustness grids, and the HTTP service. Every artifact lands in a workspace
with a manifest of sha256 hashes and seeds so runs can be reproduced and
verified.

Exit codes: 0 success, 2 validation failure, 3 input error, 4 internal
numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from dataclasses import dataclass
from multiprocessing import Pool
from pathlib import Path

import numpy as np

from . import __version__, emulator, scenarios, sensitivity, simulator, space as space_mod
from .emulator import (EmulatorError, ModelCorruptionError, ModelVersionError,
                       TrainingSet, fit, load_model_file, loo_validate,
                       save_model_file, split, validate_on_test)
from .scenarios import ScenarioError
from .sensitivity import SensitivityError
from .simulator import SimulationError
from .space import SpaceError

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_INPUT = 3
EXIT_NUMERICAL = 4

MANIFEST_NAME = "manifest.json"


class UsageError(Exception):
    """Bad arguments or unusable input files."""


class ValidationFailure(Exception):
    """A quality gate (e.g. coverage threshold) was not met."""


# ---------------------------------------------------------------------------
# Manifest
# ---------------------------------------------------------------------------

def _hash_file(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


@dataclass
class RunManifest:
    workspace: Path
    entries: dict[str, dict]  # artifact relpath -> {sha256, command, seeds}

    @classmethod
    def load(cls, workspace: Path) -> "RunManifest":
        path = workspace / MANIFEST_NAME
        if path.exists():
            data = json.loads(path.read_text(encoding="utf-8"))
            return cls(workspace=workspace, entries=data.get("artifacts", {}))
        return cls(workspace=workspace, entries={})

    def record(self, artifact: Path, command: str, seeds: dict | None = None) -> None:
        rel = str(artifact.resolve().relative_to(self.workspace.resolve()))
        self.entries[rel] = {
            "sha256": _hash_file(artifact),
            "command": command,
            "seeds": seeds or {},
        }

    def verify(self, artifact: Path) -> None:
        """Input error when a manifest-listed artifact changed on disk."""
        try:
            rel = str(artifact.resolve().relative_to(self.workspace.resolve()))
        except ValueError:
            return  # outside the workspace, not tracked
        entry = self.entries.get(rel)
        if entry and entry["sha256"] != _hash_file(artifact):
            raise UsageError(
                f"{rel} does not match its manifest hash; regenerate it or "
                "remove the stale entry")

    def save(self) -> None:
        payload = {"tool_version": __version__,
                   "artifacts": dict(sorted(self.entries.items()))}
        (self.workspace / MANIFEST_NAME).write_text(
            json.dumps(payload, indent=2, sort_keys=True), encoding="utf-8")


def _workspace_for(out: Path) -> Path:
    return out.resolve().parent


def _load_space(path: str | None):
    if path is None:
        return space_mod.default_space()
    return space_mod.load_space(path)


def _load_config(path: str | None):
    if path is None:
        return simulator.default_config()
    return simulator.load_config(path)


# ---------------------------------------------------------------------------
# design
# ---------------------------------------------------------------------------

def cmd_design(args: argparse.Namespace) -> int:
    space = _load_space(args.space)
    if args.n < 1:
        raise UsageError("--n must be at least 1")
    design = space_mod.lhs_sample(args.n, space, seed=args.seed)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    space_mod.save_design(design, space, out)
    manifest = RunManifest.load(_workspace_for(out))
    manifest.record(out, "design", {"seed": args.seed, "n": args.n})
    manifest.save()
    print(f"wrote {args.n}x{space.dimension} design to {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

_WORKER_STATE: dict = {}


def _init_worker(space_path: str | None, config_path: str | None) -> None:
    _WORKER_STATE["space"] = _load_space(space_path)
    _WORKER_STATE["config"] = _load_config(config_path)


def _run_one(task: tuple[int, list[float]]):
    index, row = task
    space = _WORKER_STATE["space"]
    config = _WORKER_STATE["config"]
    try:
        phys = space_mod.denormalize(space, np.asarray(row))
        output = simulator.simulate(config, phys)
    except (SpaceError, SimulationError) as exc:
        return index, None, str(exc)
    rows = []
    for year in config.report_years:
        for region in output.regions:
            named = simulator.extract_outputs(output, region, year)
            for name, value in named.items():
                rows.append((region, name, year, value))
    return index, rows, None


def _expected_row_keys(config) -> int:
    n_regions = len(config.regions) + 1  # plus the global aggregate
    return n_regions * len(config.report_years) * len(simulator.OUTPUT_NAMES)


def _read_existing_outputs(path: Path) -> tuple[dict[int, list], set[int]]:
    done: dict[int, list] = {}
    if not path.exists():
        return done, set()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["design_index", "region", "output", "year", "value"]:
            return {}, set()
        for rec in reader:
            idx = int(rec[0])
            done.setdefault(idx, []).append(
                (rec[1], rec[2], int(rec[3]), float(rec[4])))
    return done, set(done)


def cmd_simulate(args: argparse.Namespace) -> int:
    space = _load_space(args.space)
    config = _load_config(args.config)
    design = space_mod.load_design(args.design, space)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest.load(_workspace_for(out))
    manifest.verify(Path(args.design))

    points = design.points
    expected = _expected_row_keys(config)
    existing, _ = _read_existing_outputs(out)
    complete = {i for i, rows in existing.items() if len(rows) == expected}
    todo = [(i, points[i].tolist()) for i in range(len(points)) if i not in complete]

    results: dict[int, list] = {i: existing[i] for i in complete}
    errors: dict[int, str] = {}
    if todo:
        if args.jobs > 1:
            with Pool(args.jobs, initializer=_init_worker,
                      initargs=(args.space, args.config)) as pool:
                outcomes = pool.map(_run_one, todo, chunksize=8)
        else:
            _init_worker(args.space, args.config)
            outcomes = [_run_one(t) for t in todo]
        for index, rows, err in outcomes:
            if err is not None:
                errors[index] = err
            else:
                results[index] = rows

    with open(out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["design_index", "region", "output", "year", "value"])
        for index in sorted(results):
            for region, name, year, value in results[index]:
                writer.writerow([index, region, name, year, f"{value:.17g}"])
    if errors:
        err_path = out.with_suffix(out.suffix + ".errors.csv")
        with open(err_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["design_index", "error"])
            for index in sorted(errors):
                writer.writerow([index, errors[index]])
        print(f"{len(errors)} design points rejected; see {err_path}",
              file=sys.stderr)

    manifest.record(out, "simulate", {"jobs": args.jobs})
    manifest.save()
    print(f"simulated {len(results)} of {len(points)} design points -> {out}")
    return EXIT_OK


def _load_sim_outputs(path: Path) -> dict[tuple[str, str, int], dict[int, float]]:
    """(region, output, year) -> {design index -> value}."""
    table: dict[tuple[str, str, int], dict[int, float]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for rec in reader:
            key = (rec["region"], rec["output"], int(rec["year"]))
            table.setdefault(key, {})[int(rec["design_index"])] = float(rec["value"])
    return table


# ---------------------------------------------------------------------------
# fit / validate
# ---------------------------------------------------------------------------

def model_key_name(region: str, output: str, year: int) -> str:
    return f"{region}:{output}"


def model_file_name(region: str, output: str, year: int) -> str:
    return f"{region}_{output}_{year}.json"


def parse_model_key(model: emulator.GpModel) -> scenarios.ModelKey:
    """CLI-fitted models carry 'region:output' in output_name."""
    if ":" in model.output_name:
        region, output = model.output_name.split(":", 1)
    else:
        region, output = "global", model.output_name
    return region, output, model.year


def load_model_store(models_dir: str | Path) -> dict[scenarios.ModelKey, emulator.GpModel]:
    models_dir = Path(models_dir)
    if not models_dir.is_dir():
        raise UsageError(f"models directory {models_dir} does not exist")
    store: dict[scenarios.ModelKey, emulator.GpModel] = {}
    for path in sorted(models_dir.glob("*.json")):
        if path.name == MANIFEST_NAME:
            continue
        model = load_model_file(path)
        store[parse_model_key(model)] = model
    if not store:
        raise UsageError(f"no model files found in {models_dir}")
    return store


def require_models(store: dict, keys: list[scenarios.ModelKey]) -> None:
    missing = [k for k in keys if k not in store]
    if missing:
        names = ", ".join(f"(region={r}, output={o}, year={y})" for r, o, y in missing)
        raise UsageError(f"missing fitted models for: {names}")


def cmd_fit(args: argparse.Namespace) -> int:
    space = _load_space(args.space)
    design = space_mod.load_design(args.design, space)
    table = _load_sim_outputs(Path(args.sim))
    models_dir = Path(args.models_dir)
    models_dir.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest.load(models_dir.resolve().parent)
    manifest.verify(Path(args.design))
    manifest.verify(Path(args.sim))

    years = [int(y) for y in args.years]
    reports = []
    for region in args.regions:
        for output in args.outputs:
            for year in years:
                key = (region, output, year)
                if key not in table:
                    raise UsageError(
                        f"simulation outputs lack (region={region}, "
                        f"output={output}, year={year})")
                per_index = table[key]
                idx = sorted(per_index)
                x = design.points[idx]
                y = np.array([per_index[i] for i in idx])
                train, test = split(x, y, model_key_name(region, output, year),
                                    year, args.train_fraction, seed=args.seed)
                model = fit(train, n_restarts=args.restarts, seed=args.seed,
                            mean=args.mean)
                report = validate_on_test(model, test)
                path = models_dir / model_file_name(region, output, year)
                save_model_file(model, path)
                manifest.record(path, "fit", {"seed": args.seed,
                                              "restarts": args.restarts,
                                              "mean": args.mean})
                reports.append((key, report))
                print(f"{region}:{output}@{year}  test rmse={report.rmse:.6g} "
                      f"coverage={report.coverage95:.3f} -> {path.name}")
    manifest.save()
    if args.report:
        payload = [
            {"region": r, "output": o, "year": y, "kind": rep.kind,
             "rmse": rep.rmse, "coverage95": rep.coverage95}
            for (r, o, y), rep in reports
        ]
        Path(args.report).write_text(json.dumps(payload, indent=2),
                                     encoding="utf-8")
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    model = load_model_file(args.model)
    report = loo_validate(model)
    region, output, year = parse_model_key(model)
    print(f"{region}:{output}@{year}  loo rmse={report.rmse:.6g} "
          f"coverage={report.coverage95:.3f}")
    if report.coverage95 < 0.80:
        raise ValidationFailure(
            f"LOO coverage {report.coverage95:.3f} is below the 0.80 floor")
    return EXIT_OK


# ---------------------------------------------------------------------------
# sa / propagate / robustness
# ---------------------------------------------------------------------------

def cmd_sa(args: argparse.Namespace) -> int:
    space = _load_space(args.space)
    store = load_model_store(args.models_dir)
    wanted = set(args.outputs)
    if args.years is None:
        years = sorted({y for r, o, y in store
                        if r == args.region and o in wanted})
        if not years:
            raise UsageError(
                f"no fitted models for region {args.region!r} and outputs "
                f"{sorted(wanted)}; available: "
                f"{sorted(f'{r}:{o}@{y}' for r, o, y in store)}")
    else:
        years = [int(y) for y in args.years]
    keys = [(args.region, o, y) for o in args.outputs for y in years]
    require_models(store, keys)
    baseline = sensitivity.default_baseline(space)
    tables = [sensitivity.sweep_all(store[k], space, baseline=baseline,
                                    m=args.m, metric=args.metric)
              for k in keys]
    ranking = sensitivity.rank_inputs(tables)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    sensitivity.sensitivity_to_csv(tables, out, space=space,
                                   threshold=args.threshold)
    ranking_path = out.with_suffix(".ranking.json")
    sensitivity.save_ranking(ranking, tables, ranking_path, space=space,
                             threshold=args.threshold)
    manifest = RunManifest.load(_workspace_for(out))
    manifest.record(out, "sa", {})
    manifest.record(ranking_path, "sa", {})
    manifest.save()
    print(f"wrote sensitivity table to {out} and ranking to {ranking_path}")
    return EXIT_OK


def cmd_propagate(args: argparse.Namespace) -> int:
    space = _load_space(args.space)
    store = load_model_store(args.models_dir)
    if args.scenario:
        spec = scenarios.load_scenario(args.scenario)
    else:
        spec = scenarios.make_scenario(
            space, package=args.package, ambition=args.ambition,
            lead_band=args.lead_band, lead_bands=args.lead_bands,
            discount_band=args.discount_band, demand_band=args.demand_band,
            n=args.n if args.n is not None else 20000, seed=args.seed)
    if args.n is not None:
        spec = scenarios.ScenarioSpec(distributions=spec.distributions,
                                      package=spec.package, bands=spec.bands,
                                      n=args.n, seed=spec.seed)
    samples = scenarios.sample_scenario(spec, space)
    draws = scenarios.propagate(store, samples, seed=spec.seed)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    scenarios.draws_to_csv(draws, out)
    summary = {
        f"{r}:{o}@{y}": scenarios.distribution_summary(v)
        for (r, o, y), v in sorted(draws.items())
    }
    summary_path = out.with_suffix(".summary.json")
    summary_path.write_text(json.dumps(
        {"package": spec.package, "bands": spec.bands, "n": spec.n,
         "seed": spec.seed, "outputs": summary}, indent=2), encoding="utf-8")
    manifest = RunManifest.load(_workspace_for(out))
    manifest.record(out, "propagate", {"seed": spec.seed, "n": spec.n})
    manifest.record(summary_path, "propagate", {"seed": spec.seed, "n": spec.n})
    manifest.save()
    print(f"wrote {spec.n} draws for {len(draws)} outputs to {out}")
    return EXIT_OK


def cmd_robustness(args: argparse.Namespace) -> int:
    space = _load_space(args.space)
    store = load_model_store(args.models_dir)
    targets = (scenarios.load_targets(args.targets) if args.targets
               else scenarios.default_targets())
    require_models(store, targets.model_keys())
    cells = scenarios.figure_grid(space, packages=tuple(args.packages),
                                  lead_bands=args.bands, n=args.n,
                                  seed=args.seed, ambition=args.ambition)
    reports = scenarios.compare_scenarios(cells, store, targets, space)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    scenarios.reports_to_csv(reports, out)
    json_path = out.with_suffix(".json")
    scenarios.save_reports(reports, json_path)
    manifest = RunManifest.load(_workspace_for(out))
    manifest.record(out, "robustness", {"seed": args.seed, "n": args.n})
    manifest.record(json_path, "robustness", {"seed": args.seed, "n": args.n})
    manifest.save()
    print(f"wrote {len(reports)}-cell robustness grid to {out}")
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(space_path=args.space, models_dir=args.models_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser / entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="transuq",
        description="Emulator-driven uncertainty and robustness workflow")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("design", help="generate a Latin hypercube design CSV")
    p.add_argument("--space", default=None, help="space JSON (default built-in)")
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("simulate", help="run the simulator over a design")
    p.add_argument("--space", default=None)
    p.add_argument("--config", default=None, help="simulator config JSON")
    p.add_argument("--design", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit emulators to simulated outputs")
    p.add_argument("--space", default=None)
    p.add_argument("--design", required=True)
    p.add_argument("--sim", required=True, help="outputs CSV from simulate")
    p.add_argument("--models-dir", required=True)
    p.add_argument("--regions", nargs="+", default=["global"])
    p.add_argument("--outputs", nargs="+", default=["emissions_Mt"])
    p.add_argument("--years", nargs="+", default=["2030", "2040", "2050"])
    p.add_argument("--train-fraction", type=float, default=0.8)
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mean", choices=["zero", "linear", "quadratic"],
                   default="linear")
    p.add_argument("--report", default=None, help="write test metrics JSON here")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("validate", help="leave-one-out validation of a model")
    p.add_argument("--model", required=True)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("sa", help="one-at-a-time sensitivity over emulators")
    p.add_argument("--space", default=None)
    p.add_argument("--models-dir", required=True)
    p.add_argument("--region", default="global")
    p.add_argument("--outputs", nargs="+", default=["emissions_Mt"])
    p.add_argument("--years", nargs="+", default=None,
                   help="defaults to every fitted year for the region/outputs")
    p.add_argument("--m", type=int, default=21)
    p.add_argument("--metric", choices=["range", "variance"], default="range")
    p.add_argument("--threshold", type=float, default=0.001)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sa)

    p = sub.add_parser("propagate", help="Monte Carlo propagation of a scenario")
    p.add_argument("--space", default=None)
    p.add_argument("--models-dir", required=True)
    p.add_argument("--scenario", default=None,
                   help="scenario spec JSON; overrides the package flags")
    p.add_argument("--package", default="baseline",
                   help="policy package name, e.g. sub-cp-phase")
    p.add_argument("--ambition", type=float, default=1.0)
    p.add_argument("--lead-band", default=None,
                   choices=list(scenarios.BAND_NAMES_3))
    p.add_argument("--lead-bands", type=int, choices=[2, 3], default=3,
                   help="lead-time band granularity")
    p.add_argument("--discount-band", default=None,
                   choices=list(scenarios.LOW_HIGH))
    p.add_argument("--demand-band", default=None,
                   choices=list(scenarios.LOW_HIGH))
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_propagate)

    p = sub.add_parser("robustness", help="policy-package robustness grid")
    p.add_argument("--space", default=None)
    p.add_argument("--models-dir", required=True)
    p.add_argument("--targets", default=None, help="target set JSON")
    p.add_argument("--packages", nargs="+",
                   default=list(scenarios.FIGURE_PACKAGES))
    p.add_argument("--bands", type=int, choices=[2, 3], default=3,
                   help="lead-time band granularity")
    p.add_argument("--ambition", type=float, default=1.0)
    p.add_argument("--n", type=int, default=20000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_robustness)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--space", default=None)
    p.add_argument("--models-dir", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationFailure as exc:
        print(f"validation failure: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (UsageError, SpaceError, ScenarioError, SensitivityError,
            ModelVersionError, ModelCorruptionError, FileNotFoundError,
            json.JSONDecodeError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (EmulatorError, SimulationError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
