"""Command-line experiment runner.

Subcommands: ``generate``, ``simulate``, ``compare`` and ``metrics``. Every
command is a pure function of its configuration and seed, so replays give
byte-identical files whatever ``--jobs`` is.

Exit codes: 0 success, 2 configuration or input error, 3 generation budget
exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from functools import partial
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from . import __version__, metrics
from .config import METRIC_NAMES, ExperimentConfig, load_config
from .core import GenerationBudgetExceeded, InputDomain, rng_stream
from .simlab.measures import Campaign, RunRecord, parallel_map, run_campaign, write_runs_csv
from .simlab.regions import InfeasiblePlacement
from .simlab.stats import a12_effect_size, improvement_percent, mann_whitney_u, required_runs, summarize

EXIT_OK, EXIT_CONFIG, EXIT_BUDGET = 0, 2, 3
SEED_ENV = "ARTKIT_SEED"

# True: lower is better, False: higher is better, None: no preferred direction
METRIC_DIRECTION = {
    "discrepancy": True,
    "dispersion": True,
    "diversity": False,
    "divergence": False,
    "edge_center_ratio": None,
    "center_distance": None,
}


class ConfigError(ValueError):
    pass


def _read_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from exc


def _resolve_seed(flag: int | None, configured: int) -> int:
    if flag is not None:
        return flag
    env = os.environ.get(SEED_ENV)
    if env is not None and env.strip():
        try:
            seed = int(env)
        except ValueError as exc:
            raise ConfigError(f"{SEED_ENV}={env!r} is not an integer") from exc
        if seed < 0:
            raise ConfigError(f"{SEED_ENV} must be >= 0")
        return seed
    return configured


def build_config(args: argparse.Namespace) -> ExperimentConfig:
    """Config file, then command-line overrides, then the seed rules."""
    raw = _read_config(getattr(args, "config", None))
    strategies = getattr(args, "strategy", None)
    if strategies:
        raw["generators"] = [{"strategy": s} for s in strategies]
    if getattr(args, "d", None) is not None:
        raw["domain"] = {**raw.get("domain", {}), "d": args.d}
    if getattr(args, "n", None) is not None:
        raw["n"] = args.n
    profile = dict(raw.get("profile", {}))
    for key in ("theta", "pattern", "count", "q_percent"):
        if getattr(args, key, None) is not None:
            profile[key] = getattr(args, key)
    if profile:
        raw["profile"] = profile
    campaign = dict(raw.get("campaign", {}))
    for key in ("runs", "cap", "m"):
        if getattr(args, key, None) is not None:
            campaign[key] = getattr(args, key)
    if getattr(args, "timed", False):
        campaign["timed"] = True
    if campaign:
        raw["campaign"] = campaign
    if getattr(args, "metrics", None):
        raw["metrics"] = args.metrics
    cfg = ExperimentConfig.model_validate(raw)
    seed = _resolve_seed(getattr(args, "seed", None), cfg.campaign.seed)
    return cfg.model_copy(update={"campaign": cfg.campaign.model_copy(update={"seed": seed})})


def _fmt(x: float) -> str:
    return repr(float(x))


def cmd_generate(args) -> int:
    cfg = build_config(args)
    domain = cfg.domain.build()
    gen = cfg.generators[0].build(domain, cfg.n)
    pts = gen.generate(cfg.n, rng_stream(cfg.campaign.seed, 0))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"x{j}" for j in range(domain.dims)])
    for p in pts:
        w.writerow([_fmt(v) for v in p])
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def _emit(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _f_values(records: list[RunRecord]):
    f = np.array([r.f_count for r in records], dtype=float)
    cens = np.array([r.censored for r in records], dtype=bool)
    return f, cens


def _auto_runs(cfg: ExperimentConfig, campaigns: list[Campaign], jobs: int):
    """Pilot runs per generator and the run count they imply."""
    c = cfg.campaign
    pilots, needed = [], 1
    for camp in campaigns:
        pilot = Campaign(camp.generator, camp.profile, c.pilot, c.seed, c.cap, c.m, c.timed)
        recs = run_campaign(pilot, jobs)
        f, cens = _f_values(recs)
        kept = f[~cens]
        if len(kept) >= 2 and kept.mean() > 0:
            needed = max(needed, required_runs(c.z, float(kept.std(ddof=1)), float(kept.mean()), c.r))
        pilots.append(recs)
    return needed, pilots


def _metric_value(name: str, pts: np.ndarray, domain: InputDomain, seed: int) -> float:
    if name == "discrepancy":
        return metrics.discrepancy(pts, domain, seed=seed)
    if name == "edge_center_ratio":
        return metrics.edge_center_ratio(pts, domain)
    if name == "center_distance":
        return float(np.mean([metrics.center_distance(p, domain) for p in pts]))
    return float(getattr(metrics, name)(pts))


def _metric_run(gen, names, n, seed, domain, i) -> list[float]:
    gen.reset()
    pts = gen.generate(n, rng_stream(seed, i))
    return [_metric_value(name, pts, domain, seed) for name in names]


def _json_float(x: float):
    return x if math.isfinite(x) else str(x)


def _comparison(metric: str, baseline: str, candidate: str, base, cand, lower_is_better: bool) -> dict:
    mw = mann_whitney_u(cand, base)
    return {
        "metric": metric,
        "baseline": baseline,
        "candidate": candidate,
        "improvement_percent": improvement_percent(float(np.mean(base)), float(np.mean(cand)), lower_is_better),
        "u": mw.u,
        "p_value": mw.p_value,
        "test": mw.method,
        "a12": a12_effect_size(cand, base),
    }


def run_experiment(cfg: ExperimentConfig, jobs: int = 1, with_metrics: bool = False):
    """Campaigns for every generator on identical profiles and seeds.

    Returns the report dict and the per-run CSV text.
    """
    domain = cfg.domain.build()
    spec = cfg.profile.build()
    c = cfg.campaign
    gens = [(g.name, g.build(domain, cfg.n)) for g in cfg.generators]
    campaigns = [Campaign(gen, spec, 1, c.seed, c.cap, c.m, c.timed) for _, gen in gens]
    warnings = []
    if c.runs == "auto":
        runs, pilots = _auto_runs(cfg, campaigns, jobs)
    else:
        runs, pilots = c.runs, [[] for _ in campaigns]
    records = []
    for camp, pilot in zip(campaigns, pilots):
        camp = Campaign(camp.generator, camp.profile, runs, c.seed, c.cap, c.m, c.timed)
        done = pilot[:runs]
        records.append(done + (run_campaign(camp, jobs, start=len(done)) if len(done) < runs else []))

    csv_buf = io.StringIO()
    summaries, f_by_name = [], {}
    for (name, _), recs in zip(gens, records):
        part = io.StringIO()
        write_runs_csv(part, recs, name, spec.pattern.name, spec.theta, domain.dims)
        text = part.getvalue()
        csv_buf.write(text if csv_buf.tell() == 0 else text.split("\n", 1)[1])
        f, cens = _f_values(recs)
        f_by_name[name] = f[~cens]
        entry = {"name": name, "f_measure": None}
        if cens.all():
            warnings.append(f"{name}: every run hit the cap of {c.cap} tests")
        else:
            entry["f_measure"] = summarize(f, cens, c.z).as_dict()
        if cens.mean() > 0.5:
            warnings.append(f"{name}: {int(cens.sum())} of {len(cens)} runs censored at {c.cap} tests")
        summaries.append(entry)

    comparisons = []
    base_name = gens[0][0]
    for name, _ in gens[1:]:
        if len(f_by_name[base_name]) and len(f_by_name[name]):
            comparisons.append(_comparison("f_measure", base_name, name, f_by_name[base_name], f_by_name[name], True))

    metric_tables = []
    if with_metrics and cfg.metrics:
        values = {}
        for name, gen in gens:
            rows = parallel_map(partial(_metric_run, gen, list(cfg.metrics), cfg.n, c.seed, domain), range(cfg.metric_runs), jobs)
            values[name] = np.array(rows, dtype=float).reshape(cfg.metric_runs, len(cfg.metrics))
            for j, metric in enumerate(cfg.metrics):
                col = values[name][:, j]
                metric_tables.append(
                    {"generator": name, "metric": metric, "median": _json_float(float(np.median(col))), "mean": _json_float(float(np.mean(col)))}
                )
        for j, metric in enumerate(cfg.metrics):
            direction = METRIC_DIRECTION[metric]
            if direction is None:
                continue
            for name, _ in gens[1:]:
                base, cand = values[base_name][:, j], values[name][:, j]
                if np.all(np.isfinite(base)) and np.all(np.isfinite(cand)):
                    comparisons.append(_comparison(metric, base_name, name, base, cand, direction))

    report = {
        "toolkit": "artkit",
        "version": __version__,
        "seed": c.seed,
        "runs": runs,
        "runs_mode": "auto" if c.runs == "auto" else "fixed",
        "config": json.loads(cfg.to_json()),
        "generators": summaries,
        "comparisons": comparisons,
        "metrics": metric_tables,
        "warnings": warnings,
    }
    return report, csv_buf.getvalue()


def _write_outputs(cfg: ExperimentConfig, args, report: dict, runs_csv: str) -> None:
    csv_path = args.runs_csv or cfg.runs_csv
    if csv_path:
        Path(csv_path).write_text(runs_csv)
    _emit(json.dumps(report, indent=2) + "\n", args.report or cfg.report)
    for w in report["warnings"]:
        print(f"warning: {w}", file=sys.stderr)


def cmd_simulate(args) -> int:
    cfg = build_config(args)
    report, runs_csv = run_experiment(cfg, args.jobs, with_metrics=False)
    _write_outputs(cfg, args, report, runs_csv)
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = build_config(args)
    if len(cfg.generators) < 2:
        raise ConfigError("compare needs at least two generators (the first one is the baseline)")
    report, runs_csv = run_experiment(cfg, args.jobs, with_metrics=True)
    _write_outputs(cfg, args, report, runs_csv)
    return EXIT_OK


def read_points(path: str) -> np.ndarray:
    """Parse a CSV point file; one optional header row of non-numeric names."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from exc
    rows, width = [], None
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), 1):
        if not row or all(not cell.strip() for cell in row):
            continue
        try:
            values = [float(cell) for cell in row]
        except ValueError:
            if lineno == 1 and not rows and all(_not_number(cell) for cell in row):
                continue
            raise ConfigError(f"{path}:{lineno}: malformed row {','.join(row)!r}") from None
        if width is None:
            width = len(values)
        elif len(values) != width:
            raise ConfigError(f"{path}:{lineno}: expected {width} columns, found {len(values)}")
        if not all(math.isfinite(v) for v in values):
            raise ConfigError(f"{path}:{lineno}: non-finite coordinate")
        rows.append(values)
    if not rows:
        raise ConfigError(f"{path}: no points")
    return np.array(rows)


def _not_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return True
    return False


def cmd_metrics(args) -> int:
    pts = read_points(args.points)
    d = pts.shape[1]
    if args.bounds:
        domain = InputDomain.from_bounds(_parse_bounds(args.bounds, d))
    else:
        domain = InputDomain.unit(d)
    names = args.metrics or list(METRIC_NAMES)
    seed = _resolve_seed(args.seed, 0)
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["metric", "value"])
    for name in names:
        if name in ("dispersion", "diversity") and len(pts) < 2:
            raise ConfigError(f"{name} needs at least two points; the file holds {len(pts)}")
        w.writerow([name, _fmt(_metric_value(name, pts, domain, seed))])
    _emit(out.getvalue(), args.out)
    return EXIT_OK


def _parse_bounds(text: str, d: int) -> list[tuple[float, float]]:
    try:
        vals = [float(v) for v in text.replace(":", ",").split(",")]
    except ValueError as exc:
        raise ConfigError(f"bounds {text!r}: expected lo:hi pairs separated by commas") from exc
    if len(vals) != 2 * d:
        raise ConfigError(f"bounds {text!r}: need {d} lo:hi pairs")
    return [(vals[2 * i], vals[2 * i + 1]) for i in range(d)]


def _metric_list(text: str) -> list[str]:
    names = [t.strip() for t in text.split(",") if t.strip()]
    bad = [t for t in names if t not in METRIC_NAMES]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown metric(s) {', '.join(bad)}; choose from {', '.join(METRIC_NAMES)}")
    return names


def _runs(text: str):
    return text if text == "auto" else int(text)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="artkit", description="Adaptive random testing experiments.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="experiment config (JSON)")
        sp.add_argument("--strategy", action="append", help="generator strategy; repeat to add more")
        sp.add_argument("--d", type=int, help="number of input dimensions")
        sp.add_argument("--seed", type=int, help=f"master seed (overrides {SEED_ENV} and the config)")

    g = sub.add_parser("generate", help="emit test cases as CSV")
    common(g)
    g.add_argument("--n", type=int, help="number of test cases")
    g.add_argument("--out", help="write here instead of standard output")
    g.set_defaults(func=cmd_generate)

    for name, func, text in (
        ("simulate", cmd_simulate, "F-measure campaigns on simulated failure regions"),
        ("compare", cmd_compare, "paired campaigns against the first generator"),
    ):
        s = sub.add_parser(name, help=text)
        common(s)
        s.add_argument("--n", type=int, help="test-set size for metric comparisons")
        s.add_argument("--theta", type=float, help="failure rate")
        s.add_argument("--pattern", help="failure pattern kind")
        s.add_argument("--count", type=int, help="number of failure regions")
        s.add_argument("--q-percent", dest="q_percent", type=float, help="predominant region share")
        s.add_argument("--runs", type=_runs, help="replications, or 'auto'")
        s.add_argument("--cap", type=int, help="censoring cap on tests per run")
        s.add_argument("--m", type=int, help="count tests until the m-th failure")
        s.add_argument("--timed", action="store_true", help="record F-time (makes output non-reproducible)")
        s.add_argument("--metrics", type=_metric_list, help="comma-separated distribution metrics")
        s.add_argument("--jobs", type=int, default=os.cpu_count() or 1, help="worker processes")
        s.add_argument("--runs-csv", dest="runs_csv", help="per-run CSV path")
        s.add_argument("--report", help="report path (default: standard output)")
        s.set_defaults(func=func)

    m = sub.add_parser("metrics", help="distribution metrics of a point file")
    m.add_argument("points", help="CSV file, one point per row")
    m.add_argument("--metrics", type=_metric_list, help="comma-separated metric names (default: all)")
    m.add_argument("--bounds", help="domain bounds as lo:hi pairs, e.g. 0:1,0:2 (default: unit cube)")
    m.add_argument("--seed", type=int, help="seed for the discrepancy subdomain sample")
    m.add_argument("--out", help="write here instead of standard output")
    m.set_defaults(func=cmd_metrics)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except GenerationBudgetExceeded as exc:
        print(f"artkit: generation budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except ValidationError as exc:
        print(f"artkit: invalid configuration:\n{exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConfigError, InfeasiblePlacement, ValueError) as exc:
        print(f"artkit: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
