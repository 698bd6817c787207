"""Command-line entry point.

    telehaptic run --preset table3 --out results/
    telehaptic run --scenario my.ini --set r_cbr=350 --seed 7
    telehaptic sweep --preset table3 --param r_cbr --values 0,100,200,300,400
    telehaptic --print-schema

Exit status: 0 when every declared assertion holds, 1 when one fails,
2 on configuration errors (bad scenario, unknown key, unwritable output).
"""
from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from .analysis import metrics, report, summary_csv
from .netsim import run as simulate
from .netsim.scenario import BWD, FWD, Scenario, ScenarioError
from .presets import PRESETS, Check, max_haptic_delay
from .scenario_file import SCHEMA, apply_overrides, load_scenario, parse_override, scenario_to_ini

log = logging.getLogger("telehaptic")

OUT_ENV = "TELEHAPTIC_OUT"
EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


class ConfigError(Exception):
    pass


def _output_dir(arg: Optional[str], name: str) -> Path:
    root = Path(arg) if arg else Path(os.environ.get(OUT_ENV, "telehaptic-out"))
    out = root / name
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write-test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise ConfigError(f"output directory {out} is not writable: {exc}") from None
    return out


def _overrides(pairs: Sequence[str]) -> List[Tuple[str, str]]:
    return [parse_override(p) for p in pairs]


def _base_scenarios(args) -> Tuple[str, Dict[str, Scenario], List[str], Optional[object]]:
    """(name, labelled scenarios, QoS channels to assert, preset or None)."""
    overrides = _overrides(args.set or [])
    if args.seed is not None:
        overrides.append(("scenario.seed", str(args.seed)))
    if args.preset:
        preset = PRESETS.get(args.preset)
        if preset is None:
            raise ConfigError(f"unknown preset {args.preset!r}; choose from {', '.join(PRESETS)}")
        seed = args.seed if args.seed is not None else 1
        scenarios = {label: apply_overrides(sc, overrides)
                     for label, sc in preset.build(seed).items()}
        return preset.name, scenarios, [], preset
    sc, qos = load_scenario(args.scenario)
    return Path(args.scenario).stem, {"run": apply_overrides(sc, overrides)}, qos, None


def _write_run(out: Path, label: str, trace) -> None:
    trace.to_csv(out / f"trace_{label}.csv")
    trace.k_timeline_csv(out / f"k_{label}.csv")
    s = metrics(trace)
    summary_csv(s, out / f"summary_{label}.csv")
    (out / f"report_{label}.txt").write_text(report(s))
    (out / f"scenario_{label}.ini").write_text(scenario_to_ini(trace.scenario))


def _qos_checks(trace, channels: Sequence[str]) -> List[Check]:
    s = metrics(trace)
    return [(f"{ch} {media} QoS", ok, f"max delay {s.media[ch][media].max_delay_ms:.2f} ms")
            for ch in channels for media, ok in s.qos[ch].items()]


def _run_all(scenarios: Dict[str, Scenario], jobs: int):
    labels = list(scenarios)
    if jobs > 1 and len(labels) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            traces = list(pool.map(simulate, [scenarios[k] for k in labels]))
    else:
        traces = [simulate(scenarios[k]) for k in labels]
    return dict(zip(labels, traces))


def cmd_run(args) -> int:
    name, scenarios, qos, preset = _base_scenarios(args)
    out = _output_dir(args.out, name)
    seeds = range(args.repeat)
    all_checks: List[Check] = []
    for rep in seeds:
        runs = scenarios
        if rep:
            runs = {label: sc.with_(seed=sc.seed + rep) for label, sc in scenarios.items()}
        target = out / f"seed_{next(iter(runs.values())).seed}" if args.repeat > 1 else out
        target.mkdir(parents=True, exist_ok=True)
        traces = _run_all(runs, args.jobs)
        for label, tr in traces.items():
            _write_run(target, label, tr)
        checks = preset.check(traces) if preset else _qos_checks(traces["run"], qos)
        if preset and preset.table:
            fname, writer = preset.table
            (target / fname).write_text(writer(traces))
        with open(target / "checks.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["assertion", "ok", "detail"])
            w.writerows((a, int(ok), d) for a, ok, d in checks)
        for a, ok, d in checks:
            print(f"{'PASS' if ok else 'FAIL'}  {a}: {d}")
        all_checks.extend(checks)
    print(f"outputs in {out}")
    return EXIT_OK if all(ok for _, ok, _ in all_checks) else EXIT_FAIL


SWEEP_COLUMNS = ["value", "label", "channel", "stream", "throughput_kbps", "loss_fraction",
                 "max_delay_ms"]


def _sweep_rows(value: str, label: str, trace) -> List[list]:
    s = metrics(trace)
    rows = []
    for ch in (FWD, BWD):
        for flow, st in s.streams[ch].items():
            d = max_haptic_delay(trace, ch) if flow == "telehaptic" else float("nan")
            rows.append([value, label, ch, flow, f"{st.throughput_kbps:.3f}",
                         f"{st.loss_fraction:.6f}", f"{d:.4f}"])
        for media, m in s.media[ch].items():
            rows.append([value, label, ch, media, "", "", f"{m.max_delay_ms:.4f}"])
    return rows


def _numeric_key(v: str):
    try:
        return (0, float(v), v)
    except ValueError:
        return (1, 0.0, v)


def cmd_sweep(args) -> int:
    name, scenarios, _, _ = _base_scenarios(args)
    values = [v.strip() for v in args.values.split(",") if v.strip()] if args.values else []
    out = _output_dir(args.out, f"{name}-sweep-{args.param}")
    # validate every point before simulating any
    points = {}
    for v in values:
        for label, sc in scenarios.items():
            points[(v, label)] = apply_overrides(sc, [(args.param, v)])
    traces = _run_all({f"{v}|{label}": sc for (v, label), sc in points.items()}, args.jobs)
    rows = []
    for key in sorted(traces, key=lambda k: (_numeric_key(k.split("|")[0]), k)):
        v, label = key.split("|", 1)
        rows.extend(_sweep_rows(v, label, traces[key]))
    path = out / "sweep.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        w.writerows(rows)
    print(f"{len(values)} values, {len(traces)} runs -> {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="telehaptic", description=__doc__.split("\n\n")[0])
    p.add_argument("--print-schema", action="store_true", help="print the scenario file schema")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command")

    def common(sp):
        src = sp.add_mutually_exclusive_group(required=True)
        src.add_argument("--preset", choices=sorted(PRESETS), help="named experiment")
        src.add_argument("--scenario", help="scenario INI file")
        sp.add_argument("--out", help=f"output root (default ${OUT_ENV} or ./telehaptic-out)")
        sp.add_argument("--seed", type=int, help="base seed")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override a scenario key, e.g. feedback.alpha=0.3 (repeatable)")
        sp.add_argument("--jobs", type=int, default=1, help="parallel worker processes")

    r = sub.add_parser("run", help="run a preset or scenario file")
    common(r)
    r.add_argument("--repeat", type=int, default=1, help="repetitions with seeds seed, seed+1, ...")
    s = sub.add_parser("sweep", help="vary one scenario key")
    common(s)
    s.add_argument("--param", required=True, help="key to vary, e.g. r_cbr or scenario.mu_kbps")
    s.add_argument("--values", default="", help="comma-separated values")
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.print_schema:
        print(SCHEMA, end="")
        return EXIT_OK
    if args.command is None:
        parser.print_help(sys.stderr)
        return EXIT_CONFIG
    if getattr(args, "repeat", 1) < 1 or args.jobs < 1:
        print("error: --repeat and --jobs must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return cmd_run(args) if args.command == "run" else cmd_sweep(args)
    except (ConfigError, ScenarioError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
