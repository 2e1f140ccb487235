"""Command-line interface: fit, predict, policy-eval, simulate, validate."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import Config, dump, model_to_json, sim_to_json
from .errors import ModelError, TriggerNeverFires
from .evolution import (
    EvolutionModel,
    RelationModel,
    alteration_state,
    expected_cardinality,
    expected_histogram,
    first_alteration,
    survival_prob,
)
from .fitting import (
    VARIANTS,
    EventLog,
    SegmentationSpec,
    batch_events,
    best_variant,
    goodness_of_fit,
    ks_test,
    preset,
    rescale_interarrivals,
    runs_test,
)
from .intensity import Recurrent
from .policy import evaluate_schedule, generate_schedule, make_policy, reference_rate, refreshes_by_level
from .simulator import SimConfig, run, summarize, write_summary, write_traces
from .stochastic import UNIT_BATCH
from .timeutil import DAY_SECONDS, DEFAULT_EPOCH

OUTPUT_ENV = "CONTENTEVO_OUTPUT_DIR"
log = logging.getLogger("contentevo")

FIT_HEADER = ["variant", "n", "D_n", "threshold_0.05", "reject_0.1", "reject_0.05", "reject_0.01", "reject_0.005",
              "rejection_level", "selected"]
PREDICT_HEADER = ["relation", "what", "key", "t_from", "t_at", "analytic", "mc_mean", "mc_std_error"]
POLICY_HEADER = ["policy", "M", "parameter", "refresh_count", "transcription", "obsolescence", "total", "normalized_total"]
SEGMENT_HEADER = ["policy", "M", "rate", "refreshes", "days", "refreshes_per_day"]
PLOT_HEADER = ["M", "normalized_total"]
VALIDATE_HEADER = ["test", "n", "D_n", "threshold_0.1", "threshold_0.05", "threshold_0.01", "threshold_0.005",
                   "rejection_level"]


class CliError(Exception):
    pass


def _out_dir(args) -> Path:
    path = Path(args.output_dir or os.environ.get(OUTPUT_ENV) or ".")
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as handle:
        out = csv.writer(handle, lineterminator="\n")
        out.writerow(header)
        for row in rows:
            out.writerow([_fmt(x) for x in row])
    log.info("wrote %s", path)


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return x


def _load_log(path, epoch) -> EventLog:
    try:
        events = EventLog.read_csv(path, epoch)
    except (OSError, KeyError, ValueError) as exc:
        raise CliError(f"cannot read event log {path}: {exc}") from exc
    if len(events) == 0:
        raise CliError(f"event log {path} has no events")
    return events


def _segmentation(value) -> SegmentationSpec:
    if value in ("workweek", "flat"):
        return preset(value)
    with open(value) as handle:
        return SegmentationSpec.from_json(json.load(handle))


def _relation(model: EvolutionModel, name: str | None) -> str:
    if name:
        model.relation(name)
        return name
    if len(model.relations) != 1:
        raise CliError("the model has several relations; pass --relation")
    return next(iter(model.relations))


# subcommands

def cmd_fit(args) -> None:
    epoch = DEFAULT_EPOCH if args.epoch is None else Config({"epoch": args.epoch}).epoch
    events = _load_log(args.log, epoch)
    window = args.window / DAY_SECONDS
    test = _load_log(args.test_log, epoch) if args.test_log else None
    seg = _segmentation(args.segments)
    lo, hi = events.horizon
    variants = [v for v in VARIANTS if hi - lo >= 7.0 or not v.endswith("rpc")]
    rows = goodness_of_fit(events, seg, window, test, variants)
    if args.variant:
        wanted = ("compound-" if args.compound else "") + args.variant
        chosen = next((r for r in rows if r.variant == wanted), None)
        if chosen is None:
            raise CliError(f"variant {wanted} could not be fitted (the rpc variants need a full week of data)")
    else:
        chosen = best_variant(rows)
    out = _out_dir(args)
    table = []
    for r in rows:
        ks = r.ks
        table.append([r.variant, ks.n, ks.D_n, ks.thresholds[0.05], ks.reject_at[0.1], ks.reject_at[0.05],
                      ks.reject_at[0.01], ks.reject_at[0.005], ks.rejection_level, r is chosen])
    _write_csv(out / "fit_report.csv", FIT_HEADER, table)
    rel = RelationModel(args.relation or "R", insertion=chosen.intensity, batch=chosen.batch)
    dump({"epoch": epoch.isoformat().replace("+00:00", "Z"), **model_to_json(EvolutionModel({rel.name: rel}))},
         out / "fitted_model.json")
    for row in table:
        print(",".join(str(_fmt(x)) for x in row))


def cmd_predict(args) -> None:
    cfg = Config.load(args.model)
    model = cfg.model
    name = _relation(model, args.relation)
    rel = model.relation(name)
    s = cfg.time(args.start if args.start is not None else cfg.data.get("t0", 0.0))
    f = cfg.time(args.at)
    what = args.what
    rows = []
    if what == "cardinality":
        rows.append(["", expected_cardinality(model, name, s, f)])
    elif what == "histogram":
        attrs = [args.attribute] if args.attribute else sorted(rel.histograms)
        if not attrs:
            raise CliError(f"relation {name} has no histograms to forecast")
        for attr in attrs:
            rows.extend([f"{attr}={k}", v] for k, v in expected_histogram(model, name, attr, s, f).items())
    elif what == "first-alteration":
        rows.append(["", first_alteration(model, name, alteration_state(model, name), s, f)])
    elif what == "survival":
        rows.append(["", survival_prob(model, name, s, f)])
    mc = [None] * len(rows)
    if args.mc:
        res = run(SimConfig(model, s, f, args.mc, args.seed, args.block_size))
        if what == "cardinality":
            mc = [summarize(res, "cardinality", name=name, f=f)]
        elif what == "survival":
            mc = [summarize(res, "survival", name=name, s=s, f=f)]
        elif what == "first-alteration":
            mc = [summarize(res, "first_alteration", name=name, s=s, f=f)]
        else:
            mc = []
            for attr in attrs:
                mc.extend(summarize(res, "histogram", name=name, attr=attr, f=f))
    table = []
    for (key, value), est in zip(rows, mc):
        table.append([name, what, key, s, f, value, None if est is None else est.mean, None if est is None else est.std_error])
    _write_csv(_out_dir(args) / "predictions.csv", PREDICT_HEADER, table)


def cmd_policy_eval(args) -> None:
    cfg = Config.load(args.model)
    model = cfg.model
    name = _relation(model, args.relation)
    spec = cfg.cost
    if args.alpha is not None:
        spec = replace(spec, alpha=args.alpha)
    t0 = cfg.time(args.start if args.start is not None else cfg.data.get("t0", 0.0))
    t_end = cfg.time(args.end if args.end is not None else cfg.data.get("t_end", t0 + 7.0))
    rate = args.rate if args.rate is not None else reference_rate(model.relation(name).insertion)
    if args.mode == "trace" and args.log is None:
        raise CliError("--mode trace needs --log")
    events = _load_log(args.log, cfg.epoch) if args.mode == "trace" else None
    policies = [p.strip() for p in args.policies.split(",") if p.strip()]
    grid = [float(x) for x in args.M_grid.split(",")]
    insertion = model.relation(name).insertion
    segments = isinstance(insertion, Recurrent) and insertion.base.degree == 0
    rows, seg_rows = [], []
    for kind in policies:
        for M in grid:
            policy = make_policy(kind, M, rate)
            try:
                sched = generate_schedule(policy, model, name, spec, t0, t_end)
            except TriggerNeverFires as exc:
                sched = exc.schedule
            res = evaluate_schedule(sched, spec, model, name, args.mode, events)
            rows.append([kind, M, policy.parameter, res["refresh_count"], res["transcription"], res["obsolescence"],
                         res["total"]])
            if segments:
                for level in refreshes_by_level(sched, insertion):
                    seg_rows.append([kind, M, level["rate"], level["refreshes"], level["days"], level["per_day"]])
    peak = max((r[-1] for r in rows), default=0.0)
    for r in rows:
        r.append(r[-1] / peak if peak > 0 else 0.0)
    out = _out_dir(args)
    _write_csv(out / "policy_eval.csv", POLICY_HEADER, rows)
    if seg_rows:
        _write_csv(out / "policy_segments.csv", SEGMENT_HEADER, seg_rows)
    for kind in policies:
        _write_csv(out / f"plot_{kind}.csv", PLOT_HEADER, [[r[1], r[-1]] for r in rows if r[0] == kind])


def cmd_simulate(args) -> None:
    cfg = Config.load(args.config)
    model = cfg.model
    sim = cfg.sim(model)
    if args.replications is not None:
        sim = replace(sim, replications=args.replications)
    if args.seed is not None:
        sim = replace(sim, seed=args.seed)
    result = run(sim)
    out = _out_dir(args)
    shown = range(min(args.traces, sim.replications))
    write_traces(result, out / "traces.csv", shown, cfg.epoch)
    log.info("wrote %s", out / "traces.csv")
    summary = {"simulation": sim_to_json(sim), "relations": {}}
    for name in sorted(model.relations):
        rel = model.relation(name)
        entry = {
            "cardinality": {"simulated": summarize(result, "cardinality", name=name, f=sim.t_end)},
            "first_alteration": {"simulated": summarize(result, "first_alteration", name=name, s=sim.t0, f=sim.t_end)},
            "rejected_insertions": int(result.rejected_insertions(name).sum()),
        }
        try:
            entry["cardinality"]["analytic"] = expected_cardinality(model, name, sim.t0, sim.t_end)
        except ModelError as exc:
            entry["cardinality"]["analytic"] = None
            log.warning("no analytic cardinality for %s: %s", name, exc)
        if rel.cardinality > 0:
            entry["survival"] = {"simulated": summarize(result, "survival", name=name, s=sim.t0, f=sim.t_end)}
            try:
                entry["survival"]["analytic"] = survival_prob(model, name, sim.t0, sim.t_end)
            except ModelError:
                entry["survival"]["analytic"] = None
        try:
            counts = {k: float(v.mean()) for k, v in result.ancestor_counts(name, sim.t0).items()}
            state = alteration_state(model, name)
            state.ancestor_counts.update(counts)
            entry["first_alteration"]["analytic"] = first_alteration(model, name, state, sim.t0, sim.t_end)
        except ModelError:
            entry["first_alteration"]["analytic"] = None
        summary["relations"][name] = entry
    write_summary(summary, out / "summary.json")
    log.info("wrote %s", out / "summary.json")


def cmd_validate(args) -> None:
    cfg = Config.load(args.model)
    model = cfg.model
    name = _relation(model, args.relation)
    rel = model.relation(name)
    events = _load_log(args.log, cfg.epoch).select("insert")
    compound = rel.batch != UNIT_BATCH
    checked = batch_events(events, args.window / DAY_SECONDS) if compound else events.unbatched()
    rows = []
    ks = ks_test(rescale_interarrivals(checked, rel.insertion))
    rows.append(["rescaled_interarrivals", ks])
    if compound:
        try:
            rows.append(["batch_runs", runs_test(checked)])
        except ModelError as exc:
            log.warning("runs test skipped: %s", exc)
    table = [[label, r.n, r.D_n, r.thresholds[0.1], r.thresholds[0.05], r.thresholds[0.01], r.thresholds[0.005],
              r.rejection_level] for label, r in rows]
    _write_csv(_out_dir(args) / "validate.csv", VALIDATE_HEADER, table)
    for row in table:
        print(",".join(str(_fmt(x)) for x in row))


# argument parsing

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="master seed for stochastic output")
    common.add_argument("--output-dir", default=None, help=f"output directory (default ${OUTPUT_ENV} or .)")
    common.add_argument("-v", "--verbose", action="count", default=0)

    parser = argparse.ArgumentParser(prog="contentevo", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", parents=[common], help="fit insertion models to an event log")
    p.add_argument("log")
    p.add_argument("--window", type=float, default=60.0, help="batching window in seconds")
    p.add_argument("--segments", default="workweek", help="workweek, flat, or a JSON segmentation file")
    p.add_argument("--variant", choices=["homogeneous", "rpc"], default=None)
    p.add_argument("--compound", action="store_true", help="with --variant, pick the batched variant")
    p.add_argument("--test-log", default=None, help="held-out log for the goodness-of-fit checks")
    p.add_argument("--relation", default=None, help="relation name in the written model")
    p.add_argument("--epoch", default=None, help="Monday 00:00 UTC used as time zero")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", parents=[common], help="forecast cardinality, histograms or first alteration")
    p.add_argument("model")
    p.add_argument("--at", required=True, help="forecast time (ISO-8601 or days)")
    p.add_argument("--from", dest="start", default=None, help="time the stored state refers to")
    p.add_argument("--what", choices=["cardinality", "histogram", "first-alteration", "survival"], default="cardinality")
    p.add_argument("--relation", default=None)
    p.add_argument("--attribute", default=None)
    p.add_argument("--mc", type=int, default=0, help="also simulate this many replications")
    p.add_argument("--block-size", type=int, default=1000)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("policy-eval", parents=[common], help="cost of refresh policies over a grid of M")
    p.add_argument("model", help="model configuration with a 'cost' section")
    p.add_argument("--policies", default="usp,threshold,fa")
    p.add_argument("--M-grid", dest="M_grid", default="0.5,1,2,4")
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--rate", type=float, default=None, help="reference insertion rate per day")
    p.add_argument("--relation", default=None)
    p.add_argument("--from", dest="start", default=None)
    p.add_argument("--to", dest="end", default=None)
    p.add_argument("--mode", choices=["analytic", "trace"], default="analytic")
    p.add_argument("--log", default=None, help="event log replayed in trace mode")
    p.set_defaults(func=cmd_policy_eval)

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo histories from a configuration")
    p.add_argument("config", help="model configuration with a 'simulation' section")
    p.add_argument("--replications", type=int, default=None)
    p.add_argument("--traces", type=int, default=1, help="replications written to traces.csv")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("validate", parents=[common], help="KS checks of a model against an event log")
    p.add_argument("model")
    p.add_argument("log")
    p.add_argument("--relation", default=None)
    p.add_argument("--window", type=float, default=60.0, help="batching window in seconds")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s: %(message)s")
    if args.command == "predict" and args.seed is None:
        args.seed = 0
    try:
        args.func(args)
    except (CliError, ValueError, OSError, KeyError) as exc:
        print(f"contentevo {args.command}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
