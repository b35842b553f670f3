"""Command-line entry point: one subcommand per pipeline stage.

Every run writes its outputs plus a JSON run manifest (subcommand, input
digests, resolved parameters, seed, version, duration). Exit codes: 0 ok,
1 runtime failure, 2 usage error, 3 invalid input.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import time
from pathlib import Path
from typing import Callable, Sequence

import yaml

from . import __version__, dataset, econ, evalkit, knn, multilat, simulator, stream
from .geometry import FloorPlan, Point, PlanError, load_floorplan

EXIT_RUNTIME = 1
EXIT_USAGE = 2
EXIT_INVALID = 3

_BUNDLED = Path(__file__).parent / "data"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse's default also exits 2; keep the message on stderr
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


# --- helpers ----------------------------------------------------------------

def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def _plan_path(ref: str) -> Path:
    """A plan file path, or the name of a bundled plan (``office``, ``apartment.plan``)."""
    p = Path(ref)
    if p.exists():
        return p
    bundled = _BUNDLED / (ref if ref.endswith(".plan") else ref + ".plan")
    if "/" not in ref and bundled.exists():
        return bundled
    raise FileNotFoundError(f"floor plan {ref!r} not found")


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in str(text).replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of integers, got {text!r}") from None


class Run:
    """Bookkeeping shared by all subcommands."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.inputs: dict[str, str] = {}
        self.outputs: list[str] = []
        self.extra: dict = {}

    def input(self, path: str | Path) -> Path:
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"input file {str(path)!r} not found")
        self.inputs[str(path)] = _sha256(path)
        return path

    def plan(self, ref: str) -> FloorPlan:
        return load_floorplan(self.input(_plan_path(ref)))

    def output(self, path: str | Path) -> Path:
        path = Path(path)
        if path.parent and not path.parent.exists():
            path.parent.mkdir(parents=True, exist_ok=True)
        self.outputs.append(str(path))
        return path


def _path_loss(a) -> multilat.PathLossParams:
    return multilat.PathLossParams(a.rssi_at_1m, a.exponent, a.proximity_rssi)


def _radio(a) -> simulator.RadioModel:
    return simulator.RadioModel(_path_loss(a), a.sigma, a.floor, a.seed, a.wall_loss)


def _write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _emit(run: Run, text: str) -> None:
    """Write ``text`` to ``--out`` or stdout when ``--out`` is ``-``."""
    if run.args.out == "-":
        sys.stdout.write(text)
    else:
        run.output(run.args.out).write_text(text, encoding="utf-8")


# --- subcommands --------------------------------------------------------------

def cmd_simulate_survey(run: Run) -> None:
    a = run.args
    plan = run.plan(a.plan)
    m = _radio(a)
    raw = simulator.collect_survey(plan, a.samples, m)
    out = run.output(a.out)
    dataset.write_dataset(raw, out)
    simulator.write_radio_sidecar(m, run.output(out.with_suffix(".radio.json")), plan=plan.name,
                                  samples_per_room=a.samples)
    run.extra["rows"] = len(raw)


def _asset_file(run: Run, path: str, plan: FloorPlan) -> simulator.AssetPlacement:
    doc = yaml.safe_load(run.input(path).read_text(encoding="utf-8")) or {}
    if not isinstance(doc, dict):
        raise ValueError(f"{path}: expected label -> {{x, y, room}} entries")
    assets = {}
    for label, entry in doc.items():
        try:
            assets[str(label)] = (Point(float(entry["x"]), float(entry["y"])), str(entry["room"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"{path}: asset {label}: {exc}") from None
    return simulator.AssetPlacement(assets, plan)


def cmd_simulate_walk(run: Run) -> None:
    a = run.args
    plan = run.plan(a.plan)
    m = _radio(a)
    traj = simulator.generate_walk(plan, a.duration, a.step, a.seed, a.gateway_id)
    if a.asset_file:
        placement = _asset_file(run, a.asset_file, plan)
    elif a.assets:
        placement = simulator.place_assets_on_walk(plan, traj, a.assets, a.scan_interval, a.asset_clearance)
    else:
        placement = simulator.AssetPlacement({}, plan)
    inv = simulator.build_inventory(plan, list(placement.assets), {a.gateway_id: a.gateway_id})
    events = simulator.emit_scan_events(traj, plan, placement, inv, m, a.scan_interval)
    out = run.output(a.out)
    simulator.write_events(events, out)
    stream.write_inventory(inv, run.output(a.inventory_out or out.with_suffix(".inventory.csv")))
    simulator.write_trajectory(traj, run.output(a.trajectory_out or out.with_suffix(".trajectory.csv")))
    with open(run.output(out.with_suffix(".assets.csv")), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["asset", "x", "y", "room"])
        for label, (p, room) in sorted(placement.assets.items()):
            w.writerow([label, repr(p.x), repr(p.y), room])
    simulator.write_radio_sidecar(m, run.output(out.with_suffix(".radio.json")), plan=plan.name,
                                  duration_s=a.duration, scan_interval_s=a.scan_interval)
    run.extra["events"] = len(events)


def cmd_impute(run: Run) -> None:
    a = run.args
    raw = dataset.parse_dataset(run.input(a.input))
    dense = dataset.impute(raw)
    dataset.write_dataset(dense, run.output(a.out))
    run.outputs.append(str(dataset.provenance_path(a.out)))
    counts = {name: int((dense.provenance == code).sum()) for name, code in
              (("observed", dataset.OBSERVED), ("sentinel", dataset.IMPUTED_SENTINEL), ("mean", dataset.IMPUTED_MEAN))}
    run.extra["cells"] = counts


def cmd_split(run: Run) -> None:
    a = run.args
    dense = dataset.load_dense(run.input(a.input))
    train, test = dataset.split(dense, dataset.SplitConfig(a.test_fraction, a.seed))
    dataset.write_dataset(train, run.output(a.train_out))
    dataset.write_dataset(test, run.output(a.test_out))
    run.extra.update(train_rows=len(train), test_rows=len(test))


def _confusion_rows(confusion: dict[tuple[str, str], int]) -> list[dict]:
    return [{"true": t, "predicted": p, "count": c} for (t, p), c in sorted(confusion.items())]


def cmd_eval_knn(run: Run) -> None:
    a = run.args
    train = dataset.load_dense(run.input(a.train))
    test = dataset.load_dense(run.input(a.test))
    model = knn.fit(train, a.k)
    rep = knn.accuracy(model, test)
    doc = {"accuracy": rep.accuracy, "correct": rep.correct, "total": rep.total, "k": a.k,
           "metric": model.metric, "confusion": _confusion_rows(rep.confusion)}
    _write_json(run.output(a.out), doc)
    if a.model_out:
        knn.export_model(model, a.model_out)
        run.outputs += [str(Path(a.model_out).with_suffix(s)) for s in (".json", ".csv")]
    run.extra["accuracy"] = rep.accuracy


def cmd_eval_multilat(run: Run) -> None:
    a = run.args
    plan = run.plan(a.plan)
    test = dataset.load_dense(run.input(a.test))
    rep = multilat.accuracy(test, plan, _path_loss(a), a.resolution)
    doc = {"accuracy": rep.accuracy, "correct": rep.correct, "total": rep.total, "case_counts": rep.case_counts,
           "flagged_rows": list(rep.flagged_rows), "path_loss": rep.params, "resolution": a.resolution}
    _write_json(run.output(a.out), doc)
    if a.predictions_out:
        with open(run.output(a.predictions_out), "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["row", "true", "predicted"])
            for i, (t, p) in enumerate(zip(test.rooms, rep.predictions)):
                w.writerow([i, t, "" if p is None else p])
    run.extra["accuracy"] = rep.accuracy


def _method(run: Run, a):
    if a.method == "knn":
        return evalkit.KnnMethod(a.k)
    if not a.plan:
        raise ValueError("--plan is required for --method multilat")
    return evalkit.MultilatMethod(run.plan(a.plan), _path_loss(a), a.resolution)


def _cv(a) -> evalkit.CvConfig:
    return evalkit.CvConfig(a.folds, a.repeats, a.seed, a.test_fraction)


def cmd_sweep_subsets(run: Run) -> None:
    a = run.args
    dense = dataset.load_dense(run.input(a.data))
    limits = evalkit.SweepLimits(a.max_size, None if a.exhaustive else a.per_size, a.min_size)
    results = evalkit.sweep_subsets(dense, _method(run, a), _cv(a), limits, jobs=a.jobs)
    evalkit.write_subset_results(results, run.output(a.out))
    if a.stats_out:
        evalkit.write_group_stats(evalkit.group_stats(results), run.output(a.stats_out))
    run.extra.update(subsets=len(results), combinations=evalkit.count_combinations(len(dense.beacon_columns)))


def cmd_beacon_frequency(run: Run) -> None:
    a = run.args
    results = evalkit.read_subset_results(run.input(a.results))
    plan = run.plan(a.plan) if a.plan else None
    evalkit.write_frequency(evalkit.beacon_frequency(results, plan), run.output(a.out))


def cmd_sweep_training(run: Run) -> None:
    a = run.args
    dense = dataset.load_dense(run.input(a.data))
    sweep = evalkit.training_size_sweep(dense, a.sizes, a.beacons, _method(run, a), _cv(a))
    evalkit.write_training_sweep(sweep, run.output(a.out))


def cmd_replay_stream(run: Run) -> None:
    a = run.args
    inv_path = run.input(a.inventory)
    gw = run.input(a.gateways) if a.gateways else None
    if a.method == "knn":
        if not a.model:
            raise ValueError("--model is required for --method knn (see eval-knn --model-out)")
        base = Path(a.model)
        run.input(base.with_suffix(".json"))
        run.input(base.with_suffix(".csv"))
        localizer = knn.load_model(base)
        rooms = None
    else:
        if not a.plan:
            raise ValueError("--plan is required for --method multilat")
        plan = run.plan(a.plan)
        localizer = multilat.MultilatLocalizer(plan, _path_loss(a), a.resolution)
        rooms = plan.room_labels
    inv = stream.load_inventory(inv_path, gw, rooms)
    res = stream.replay(stream.iter_lines(run.input(a.events)), inv, localizer, a.window, a.threshold)
    res.store.export_csv(run.output(a.out))
    if a.fixes_out:
        with open(run.output(a.fixes_out), "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["client_id", "window_end", "room"])
            for f in res.fixes:
                w.writerow([f.client_id, f.window_end, f.room])
    run.extra["counters"] = res.counters.as_dict()
    print(json.dumps(res.counters.as_dict(), sort_keys=True), file=sys.stderr)


def cmd_query(run: Run) -> None:
    a = run.args
    assets = ()
    if a.inventory:
        assets = stream.load_inventory(run.input(a.inventory)).assets
    store = stream.LocationStore.from_csv(run.input(a.store), assets)
    q = stream.query_location(store, a.asset, a.now)
    doc = {"asset": q.asset, "status": q.status, "staleness_s": q.staleness_s}
    if q.location is not None:
        doc.update(room=q.location.room, last_seen=q.location.last_seen, observed_by=q.location.observed_by,
                   rssi=q.location.rssi_at_observation)
    _emit(run, json.dumps(doc, sort_keys=True) + "\n")


def cmd_econ(run: Run) -> None:
    a = run.args
    path = run.input(a.params) if a.params else run.input(_BUNDLED / "reference.econ")
    sc = econ.load_scenario(path)
    cmp = econ.compare(econ.cost_model(sc.fingerprinting, "fingerprinting"),
                       econ.cost_model(sc.multilateration, "multilateration"), a.years, sc.reference_saving)
    _emit(run, econ.report_text(cmp))
    if a.csv_out:
        run.output(a.csv_out).write_text(econ.report_csv(cmp), encoding="utf-8")
    run.extra.update(breakeven_year=cmp.breakeven_year, reference_matched=cmp.reference_matched)


# --- parser -----------------------------------------------------------------

def _add_path_loss(p):
    g = p.add_argument_group("path-loss model")
    g.add_argument("--rssi-at-1m", type=float, default=-61.0, help="RSSI at 1 m in dBm (default -61)")
    g.add_argument("--exponent", type=float, default=3.0, help="path-loss exponent n (default 3)")
    g.add_argument("--proximity-rssi", type=float, default=-70.0, help="proximity threshold in dBm (default -70)")


def _add_radio(p):
    _add_path_loss(p)
    g = p.add_argument_group("radio model")
    g.add_argument("--sigma", type=float, default=4.0, help="shadowing std in dB (default 4)")
    g.add_argument("--floor", type=float, default=-95.0, help="sensitivity floor in dBm (default -95)")
    g.add_argument("--wall-loss", type=float, default=0.0, help="attenuation per crossed wall in dB (default 0)")


def _add_cv(p):
    g = p.add_argument_group("cross-validation")
    g.add_argument("--folds", type=int, default=1, help="1 = repeated holdout, >=2 = k-fold (default 1)")
    g.add_argument("--repeats", type=int, default=5, help="number of repetitions (default 5)")
    g.add_argument("--test-fraction", type=float, default=0.2, help="holdout fraction c (default 0.2)")
    g.add_argument("--seed", type=int, default=0)


def _add_method(p):
    p.add_argument("--method", choices=("knn", "multilat"), default="knn")
    p.add_argument("--k", type=int, default=knn.DEFAULT_K)
    p.add_argument("--plan", help="floor plan (multilat only)")
    p.add_argument("--resolution", type=float, default=evalkit.EVAL_RESOLUTION,
                   help="raster cell size in meters for multilat (default 0.25)")
    _add_path_loss(p)


COMMANDS: dict[str, tuple[Callable[[Run], None], str]] = {}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="roomtrack", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"roomtrack {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    def add(name, fn, help):
        p = sub.add_parser(name, help=help, description=help)
        p.add_argument("--config", help="YAML/JSON file supplying any flag; explicit flags win")
        p.add_argument("--manifest", help="run manifest path (default: <first output>.manifest.json)")
        COMMANDS[name] = (fn, help)
        return p

    p = add("simulate-survey", cmd_simulate_survey, "simulate a balanced fingerprint survey")
    p.add_argument("--plan", required=True, help="plan file or bundled name (office, apartment)")
    p.add_argument("--samples", type=int, default=1000, help="samples per room (default 1000)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    _add_radio(p)

    p = add("simulate-walk", cmd_simulate_walk, "simulate a gateway walk and its scan events")
    p.add_argument("--plan", required=True)
    p.add_argument("--duration", type=float, default=600.0, help="seconds (default 600)")
    p.add_argument("--step", type=float, default=1.0, help="meters per second (default 1)")
    p.add_argument("--scan-interval", type=float, default=60.0, help="seconds between scans (default 60)")
    p.add_argument("--gateway-id", default="gw-1")
    p.add_argument("--assets", type=int, default=0, help="number of assets placed along the walk")
    p.add_argument("--asset-clearance", type=float, default=2.1,
                   help="minimum asset distance from its room's walls in meters (default 2.1)")
    p.add_argument("--asset-file", help="YAML mapping label -> {x, y, room}; overrides --assets")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="event file (JSON lines)")
    p.add_argument("--inventory-out")
    p.add_argument("--trajectory-out")
    _add_radio(p)

    p = add("impute", cmd_impute, "fill missing cells (-200 sentinel or room-conditioned mean)")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)

    p = add("split", cmd_split, "stratified train/test split")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--test-fraction", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--train-out", required=True)
    p.add_argument("--test-out", required=True)

    p = add("eval-knn", cmd_eval_knn, "fit kNN on a training set and score a test set")
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--k", type=int, default=knn.DEFAULT_K)
    p.add_argument("--model-out", help="export the fitted model as <path>.json + <path>.csv")
    p.add_argument("--out", required=True, help="JSON report")

    p = add("eval-multilat", cmd_eval_multilat, "score room-level multilateration on a test set")
    p.add_argument("--plan", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--resolution", type=float, default=0.05, help="raster cell size in meters (default 0.05)")
    p.add_argument("--predictions-out")
    p.add_argument("--out", required=True, help="JSON report")
    _add_path_loss(p)

    p = add("sweep-subsets", cmd_sweep_subsets, "accuracy of every beacon subset")
    p.add_argument("--data", required=True, help="imputed dataset")
    _add_method(p)
    _add_cv(p)
    p.add_argument("--min-size", type=int, default=1)
    p.add_argument("--max-size", type=int)
    p.add_argument("--per-size", type=int, default=200,
                   help="sample at most this many subsets per size (default 200)")
    p.add_argument("--exhaustive", action="store_true", help="score every subset, ignoring --per-size")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1, help="worker processes (default: all cores)")
    p.add_argument("--stats-out", help="per-size box-plot statistics CSV")
    p.add_argument("--out", required=True)

    p = add("beacon-frequency", cmd_beacon_frequency, "beacon counts over the best subset of each size")
    p.add_argument("--results", required=True, help="sweep-subsets output")
    p.add_argument("--plan", help="adds beacon coordinates")
    p.add_argument("--out", required=True)

    p = add("sweep-training", cmd_sweep_training, "accuracy against training rows per room")
    p.add_argument("--data", required=True)
    p.add_argument("--sizes", type=_int_list, default=list(range(20, 201, 20)),
                   help="training rows per room (default 20,40,...,200)")
    p.add_argument("--beacons", type=_int_list, default=[3, 16], help="beacon counts (default 3,16)")
    _add_method(p)
    _add_cv(p)
    p.add_argument("--out", required=True)

    p = add("replay-stream", cmd_replay_stream, "run an event file through the streaming pipeline")
    p.add_argument("--events", required=True)
    p.add_argument("--inventory", required=True)
    p.add_argument("--gateways", help="CSV client_id,name")
    p.add_argument("--method", choices=("knn", "multilat"), default="knn")
    p.add_argument("--model", help="exported kNN model path (without suffix)")
    p.add_argument("--plan", help="floor plan (multilat only)")
    p.add_argument("--resolution", type=float, default=0.05)
    p.add_argument("--window", type=float, default=60.0, help="tumbling window in seconds (default 60)")
    p.add_argument("--threshold", type=float, default=stream.DEFAULT_ASSET_THRESHOLD,
                   help="minimum asset RSSI in dBm (default -80)")
    p.add_argument("--fixes-out", help="CSV of per-window gateway rooms")
    p.add_argument("--out", required=True, help="location store CSV")
    _add_path_loss(p)

    p = add("query", cmd_query, "current room and staleness of one asset")
    p.add_argument("--store", required=True)
    p.add_argument("--asset", required=True)
    p.add_argument("--now", type=int, required=True, help="epoch milliseconds")
    p.add_argument("--inventory", help="known assets; unknown ones are rejected")
    p.add_argument("--out", default="-")

    p = add("econ", cmd_econ, "cost-of-ownership comparison")
    p.add_argument("--params", help="parameter file (default: bundled reference table)")
    p.add_argument("--years", type=int, default=5)
    p.add_argument("--csv-out")
    p.add_argument("--out", default="-")
    return parser


def _load_config(path: str) -> dict:
    text = Path(path).read_text(encoding="utf-8")
    doc = json.loads(text) if path.endswith(".json") else yaml.safe_load(text)
    if doc is None:
        return {}
    if not isinstance(doc, dict):
        raise ValueError(f"{path}: config must be a mapping of flag names to values")
    return {str(k).lstrip("-").replace("-", "_"): v for k, v in doc.items()}


def _config_arg(argv: list[str]) -> str | None:
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if tok.startswith("--config="):
            return tok.split("=", 1)[1]
    return None


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    """Parse ``argv`` with values from ``--config`` as defaults."""
    path = _config_arg(argv)
    command = next((t for t in argv if t in COMMANDS), None)
    if path is None or command is None:
        return parser.parse_args(argv)
    cfg = _load_config(path)
    sub = parser._subparsers._group_actions[0].choices[command]  # noqa: SLF001
    actions = {a.dest: a for a in sub._actions if a.dest not in ("help", "config")}  # noqa: SLF001
    if "in" in cfg:
        cfg["input"] = cfg.pop("in")
    unknown = sorted(set(cfg) - set(actions))
    if unknown:
        raise ValueError(f"{path}: unknown option(s) for {command}: {unknown}")
    converted = {}
    for k, v in cfg.items():
        act = actions[k]
        if act.type is not None and isinstance(v, str):
            v = act.type(v)
        if act.choices is not None and v not in act.choices:
            raise ValueError(f"{path}: {k} must be one of {list(act.choices)}")
        converted[k] = v
        act.required = False
    sub.set_defaults(**converted)
    return parser.parse_args(argv)


def _manifest_path(args, outputs: list[str]) -> Path:
    if args.manifest:
        return Path(args.manifest)
    if outputs:
        return Path(outputs[0] + ".manifest.json")
    return Path(f"{args.command}.manifest.json")


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except (ValueError, OSError, yaml.YAMLError, argparse.ArgumentTypeError) as exc:
        print(f"roomtrack: invalid config: {exc}", file=sys.stderr)
        return EXIT_INVALID

    run = Run(args)
    fn, _ = COMMANDS[args.command]
    start = time.perf_counter()
    try:
        fn(run)
    except (PlanError, ValueError, KeyError, FileNotFoundError, yaml.YAMLError) as exc:
        # every domain error in the package derives from ValueError (or KeyError for unknown assets)
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"roomtrack {args.command}: invalid input: {msg}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001
        print(f"roomtrack {args.command}: failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    params = {k: v for k, v in sorted(vars(args).items()) if k not in ("command", "config", "manifest")}
    manifest = {
        "subcommand": args.command,
        "tool": "roomtrack",
        "version": __version__,
        "seed": getattr(args, "seed", None),
        "params": params,
        "inputs": dict(sorted(run.inputs.items())),
        "outputs": run.outputs,
        "results": run.extra,
        "duration_s": round(time.perf_counter() - start, 6),
    }
    mpath = _manifest_path(args, run.outputs)
    mpath.parent.mkdir(parents=True, exist_ok=True)
    _write_json(mpath, manifest)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
