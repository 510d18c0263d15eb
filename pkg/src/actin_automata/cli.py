"""Command-line entry point: ``actin <subcommand> ...``.

Options may also come from a JSON file passed with ``--config``; top-level
keys apply to every subcommand, keys under a subcommand's name only to it.
Command-line flags win over the file.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    FitError,
    UndefinedClassError,
    class_frequency_vectors,
    dominating_positions,
    entropy_classes,
    fit,
    group_frequency_vectors,
    group_statistics,
    localization_groups,
    threshold_simplify,
)
from .core import DomainError, Rule, SpaceTimeRecord, decode_rule, run
from .localization import Thresholds, count_localizations, enumerate_seeds, write_verdicts
from .metrics import DEFAULT_FOOTPRINT, FOOTPRINTS, MEASURES, compute_all
from .render import render_record
from .sweep import (
    ConfigMismatchError,
    InitSpec,
    SweepConfig,
    load_localization,
    load_metrics,
    parse_rule_range,
    rule_rng,
    run_localization_sweep,
    run_metrics_sweep,
)

OUT_ENV = "ACTIN_OUT"
EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def parse_rule(text: str) -> Rule:
    """``"7,20"`` or ``"F0=00111,F1=10100"``."""
    text = text.strip()
    try:
        if text.upper().startswith("F0="):
            a, b = (part.split("=", 1)[1] for part in text.split(","))
            return Rule.from_rows(a.strip(), b.strip())
        a, b = text.split(",")
        return decode_rule(int(a), int(b))
    except (ValueError, IndexError) as e:
        raise argparse.ArgumentTypeError(f"bad rule {text!r}: {e}") from None


def _init_spec(text: str) -> InitSpec:
    try:
        return InitSpec.parse(text)
    except DomainError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def _rule_range(text: str) -> tuple[int, int]:
    try:
        return parse_rule_range(text)
    except DomainError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def read_rule_list(path) -> list[Rule]:
    """One rule per line, in either syntax of :func:`parse_rule`, or two
    binary rows separated by whitespace. ``#`` starts a comment."""
    rules = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) == 2 and all(set(p) <= {"0", "1"} and len(p) == 5 for p in parts):
            rules.append(Rule.from_rows(*parts))
        else:
            rules.append(parse_rule(line))
    return rules


def _add_run_args(p):
    p.add_argument("--rule", type=parse_rule, required=True,
                   help="code0,code1 or F0=xxxxx,F1=xxxxx")
    p.add_argument("--n", type=int, default=300, help="cells per chain")
    p.add_argument("--tau", type=int, default=1000, help="time steps")
    p.add_argument("--init", type=_init_spec, default=InitSpec(),
                   help="randomW:p (centred window), random:p (full chain) or seed:xxxxx,yyyyy")
    p.add_argument("--seed", type=int, default=1, help="RNG seed")


def _add_threshold_args(p):
    d = Thresholds()
    p.add_argument("--act-lo", type=int, default=d.act_lo, help="minimum total activity")
    p.add_argument("--act-hi", type=int, default=d.act_hi_per_step,
                   help="maximum total activity per time step (ceiling = value * tau)")
    p.add_argument("--ws", type=int, default=d.w_s, help="stationary span bound")
    p.add_argument("--wt", type=int, default=d.w_t, help="travelling span bound")
    p.add_argument("--cmax", type=int, default=d.c_max, help="max excited cells per step of a glider")
    p.add_argument("--pmax", type=int, default=d.p_max, help="longest period searched")
    p.add_argument("--window", type=int, default=d.window, help="steps checked for periodicity")
    p.add_argument("--no-persist", action="store_true",
                   help="do not require excitation at every step")
    p.add_argument("--absorbed", action="store_true",
                   help="count gliders absorbed at a chain end as travelling")


def _thresholds(a) -> Thresholds:
    return Thresholds(act_lo=a.act_lo, act_hi_per_step=a.act_hi, w_s=a.ws, w_t=a.wt,
                      c_max=a.cmax, p_max=a.pmax, window=a.window,
                      require_persist=not a.no_persist, allow_absorbed=a.absorbed)


def _add_metric_args(p):
    p.add_argument("--chain", choices=("x", "y", "xy"), default="x", help="chain measured")
    p.add_argument("--footprint", choices=sorted(FOOTPRINTS), default=DEFAULT_FOOTPRINT,
                   help="cells of the 3x3 window used as pattern key")


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(prog="actin", formatter_class=fmt,
                                     description="Actin automata simulator and rule-space survey.")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--config", help="JSON file with option defaults")
    sub = parser.add_subparsers(dest="command", required=True)
    out_default = os.environ.get(OUT_ENV, "runs")
    subs = {}

    p = subs["simulate"] = sub.add_parser("simulate", formatter_class=fmt,
                                          help="run one rule, dump the record and images")
    _add_run_args(p)
    p.add_argument("--out", default=out_default, help=f"output directory (env {OUT_ENV})")
    p.add_argument("--no-images", action="store_true", help="skip PGM output")
    p.add_argument("--no-dump", action="store_true", help="skip the text record")

    p = subs["metrics"] = sub.add_parser("metrics", formatter_class=fmt,
                                         help="print the measures of one run")
    _add_run_args(p)
    _add_metric_args(p)

    p = subs["localize"] = sub.add_parser("localize", formatter_class=fmt,
                                          help="count travelling and stationary seeds of one rule")
    p.add_argument("--rule", type=parse_rule, required=True,
                   help="code0,code1 or F0=xxxxx,F1=xxxxx")
    p.add_argument("--n", type=int, default=300, help="cells per chain")
    p.add_argument("--tau", type=int, default=1000, help="time steps per seed")
    p.add_argument("--verdicts", help="write per-seed verdicts to this CSV")
    _add_threshold_args(p)

    p = subs["sweep"] = sub.add_parser("sweep", formatter_class=fmt,
                                       help="evaluate a range of rules, resumably")
    p.add_argument("--out", default=out_default, help=f"output directory (env {OUT_ENV})")
    p.add_argument("--rules", type=_rule_range, default="0..1023", help="inclusive index range a..b")
    p.add_argument("--n", type=int, default=300, help="cells per chain")
    p.add_argument("--tau", type=int, default=1000, help="time steps of metrics runs")
    p.add_argument("--loc-tau", type=int, default=None, help="localization run length; tau when omitted")
    p.add_argument("--init", type=_init_spec, default=InitSpec(), help="initial condition of metrics runs")
    p.add_argument("--seed", type=int, default=1, help="RNG seed")
    p.add_argument("--workers", type=int, default=1, help="worker processes")
    p.add_argument("--what", choices=("metrics", "localization", "both"), default="both",
                   help="tables to compute")
    _add_metric_args(p)
    _add_threshold_args(p)

    p = subs["analyze"] = sub.add_parser("analyze", formatter_class=fmt,
                                         help="rule-space statistics over sweep output")
    p.add_argument("--in", dest="inp", default=out_default, help="sweep directory")
    p.add_argument("--out", default=None, help="report directory (default: the sweep directory)")
    p.add_argument("--rule-list", help="file of rules for explicit V vectors")
    p.add_argument("--cutoff", type=float, default=0.5, help="cut-off for simplified vectors")

    p = subs["render"] = sub.add_parser("render", formatter_class=fmt,
                                        help="write PGM diagrams of one run or a text record")
    _add_run_args(p)
    p.add_argument("--record", help="render this text record instead of simulating")
    p.add_argument("--out", default=out_default, help=f"output directory (env {OUT_ENV})")
    return parser, subs


def _apply_config(argv, parser, subs):
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, rest = pre.parse_known_args(argv)
    if not known.config:
        return
    try:
        data = json.loads(Path(known.config).read_text())
    except (OSError, ValueError) as e:
        parser.error(f"cannot read config {known.config}: {e}")
    command = next((a for a in rest if a in subs), None)
    if command is None:
        return
    sp = subs[command]
    values = {k: v for k, v in data.items() if not isinstance(v, dict)}
    values.update(data.get(command, {}))
    dests = {a.dest: a for a in sp._actions}
    defaults = {}
    for key, v in values.items():
        dest = key.replace("-", "_")
        if dest not in dests:
            parser.error(f"config key {key!r} is not an option of {command}")
        act = dests[dest]
        if act.type is not None and isinstance(v, str):
            try:
                v = act.type(v)
            except argparse.ArgumentTypeError as e:
                parser.error(f"config key {key!r}: {e}")
        defaults[dest] = v
    sp.set_defaults(**defaults)
    for act in sp._actions:
        if act.dest in defaults and act.required:
            act.required = False


def _record(a) -> SpaceTimeRecord:
    if a.n < 3 or a.tau < 1:
        raise UsageError("need n >= 3 and tau >= 1")
    state = a.init.build(a.n, rule_rng(a.seed, a.rule.index))
    return run(a.rule, state, a.tau)


def cmd_simulate(a) -> int:
    rec = _record(a)
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    c0, c1 = a.rule.codes
    if not a.no_dump:
        (out / f"rule_{c0}_{c1}.txt").write_text(rec.to_text())
    if not a.no_images:
        for path in render_record(rec, out):
            print(path)
    return EXIT_OK


def cmd_metrics(a) -> int:
    m = compute_all(_record(a), a.chain, a.footprint).as_dict()
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(("code0", "code1") + MEASURES)
    w.writerow([*a.rule.codes] + [f"{m[k]:.6g}" for k in MEASURES])
    return EXIT_OK


def cmd_localize(a) -> int:
    keep = a.verdicts is not None
    c = count_localizations(a.rule, a.tau, a.n, _thresholds(a), keep_verdicts=keep)
    if keep:
        write_verdicts(a.verdicts, enumerate_seeds(a.n), c.verdicts)
    print(f"code0,code1,T,S\n{c.code0},{c.code1},{c.T},{c.S}")
    return EXIT_OK


def cmd_sweep(a) -> int:
    cfg = SweepConfig(n=a.n, tau=a.tau, loc_tau=a.loc_tau, init=a.init, rng_seed=a.seed,
                      rules=tuple(a.rules), chain=a.chain, footprint=a.footprint,
                      thresholds=_thresholds(a), workers=a.workers, out_dir=a.out)
    written = 0
    if a.what in ("metrics", "both"):
        written += run_metrics_sweep(cfg)
    if a.what in ("localization", "both"):
        written += run_localization_sweep(cfg)
    print(f"{written} rows written to {a.out} (config {cfg.config_hash()})")
    return EXIT_OK


def _vec(v) -> list[str]:
    return [str(x) for x in v.values]


def cmd_analyze(a) -> int:
    inp = Path(a.inp)
    if not (inp / "metrics.csv").exists():
        raise UsageError(f"{inp / 'metrics.csv'} not found; run a sweep first")
    metrics = load_metrics(inp)
    out = Path(a.out) if a.out else inp
    out.mkdir(parents=True, exist_ok=True)
    report: dict = {"cutoff": a.cutoff}

    classes = entropy_classes({r: m["H"] for r, m in metrics.items()})
    filled = [c for c in classes if c.members]
    vecs = [class_frequency_vectors(c) for c in filled]
    with open(out / "classes.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["z", "lo", "hi", "size"] + [f"G0_{j}" for j in range(5)] + [f"G1_{j}" for j in range(5)])
        for c, (g0, g1) in zip(filled, vecs):
            w.writerow([c.z, c.lo, c.hi, len(c.members)] + _vec(g0) + _vec(g1))
    dom0, ties0 = dominating_positions([g0 for g0, _ in vecs])
    dom1, ties1 = dominating_positions([g1 for _, g1 in vecs])
    report["dominating"] = {"excitation": dom0, "excitation_ties": sum(ties0),
                            "persistence": dom1, "persistence_ties": sum(ties1)}

    groups = {"all": sorted(metrics, key=lambda r: r.index)}
    if (inp / "localization.csv").exists():
        counts = load_localization(inp)
        groups = localization_groups({r: counts[r] for r in metrics if r in counts})
    report["groups"] = {}
    for label, rules in groups.items():
        entry: dict = {"size": len(rules)}
        if rules:
            v0, v1 = group_frequency_vectors(rules)
            st = group_statistics({label: rules}, metrics)[0]
            entry.update(V0=_vec(v0), V1=_vec(v1),
                         V0_simplified=threshold_simplify(v0, a.cutoff),
                         V1_simplified=threshold_simplify(v1, a.cutoff),
                         mean=st.mean, std=st.std)
        report["groups"][label] = entry

    if a.rule_list:
        rules = read_rule_list(a.rule_list)
        if not rules:
            raise UsageError(f"{a.rule_list} lists no rules")
        v0, v1 = group_frequency_vectors(rules)
        report["rule_list"] = {"size": len(rules), "V0": _vec(v0), "V1": _vec(v1),
                               "V0_simplified": threshold_simplify(v0, a.cutoff),
                               "V1_simplified": threshold_simplify(v1, a.cutoff)}

    hs = np.array([m["H"] for m in metrics.values()])
    ds = np.array([m["D"] for m in metrics.values()])
    keep = hs > 0
    report["fits"] = {}
    for model in ("log", "poly1", "poly2", "poly3"):
        try:
            f = fit(hs[keep], ds[keep], model)
        except FitError as e:
            report["fits"][model] = {"error": str(e)}
            continue
        report["fits"][model] = {"coefficients": list(f.coefficients), "r_squared": f.r_squared}

    (out / "analysis.json").write_text(json.dumps(report, indent=2, default=list) + "\n")
    for label, entry in report["groups"].items():
        if "mean" in entry:
            print(f"{label:<11} n={entry['size']:<5} H={entry['mean']['H']:.3f}"
                  f" ({entry['std']['H']:.3f})")
    if "log" in report["fits"] and "r_squared" in report["fits"]["log"]:
        c = report["fits"]["log"]["coefficients"]
        print(f"D = {c[1]:.3f} ln H + {c[0]:.3f}, R^2 = {report['fits']['log']['r_squared']:.3f}")
    print(f"report: {out / 'analysis.json'}")
    return EXIT_OK


def cmd_render(a) -> int:
    if a.record:
        rec = SpaceTimeRecord.from_text(Path(a.record).read_text(), a.rule)
    else:
        rec = _record(a)
    for path in render_record(rec, a.out):
        print(path)
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "metrics": cmd_metrics,
    "localize": cmd_localize,
    "sweep": cmd_sweep,
    "analyze": cmd_analyze,
    "render": cmd_render,
}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser, subs = build_parser()
    _apply_config(argv, parser, subs)
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, DomainError, UndefinedClassError) as e:
        print(f"actin {args.command}: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigMismatchError, OSError, FitError) as e:
        print(f"actin {args.command}: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
