"""Command-line entry point ``holoflow``.

Exit status: 0 when every check passes, 1 on a failed check or a numerical
failure, 2 on a configuration error (including an unknown scenario).
"""
import argparse
import json
import sys
from pathlib import Path

from .checkpoint import write_checkpoint
from .errors import ConfigError, HoloflowError
from .holonomy import holonomy_report
from .verify.experiments import (
    base_point,
    csv_lines,
    holonomy_at,
    holonomy_preservation_experiment,
    identity_suite,
    list_scenarios,
    load_scenario,
    shi_constants,
)


def _dump(obj):
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=True) + "\n"


def _write(out, name, text):
    path = Path(out) / name
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path


def _scenario(args):
    if args.config is None and args.scenario is None:
        raise ConfigError("give --scenario NAME or --config PATH")
    overrides = {k: getattr(args, k) for k in ("dt", "tEnd", "resolution", "seed", "kmax")}
    return load_scenario(name=args.scenario, path=args.config, overrides=overrides)


def cmd_list(args):
    for name, desc in list_scenarios():
        print(f"{name:18s} {desc}")
    return 0


def cmd_identities(args):
    sc = _scenario(args)
    rep = identity_suite(sc)
    for e in rep["entries"]:
        flag = "PASS" if e["pass"] else "FAIL"
        print(f"{flag} {e['group']:10s} {e['name']:16s} {e['residual']:.3e} (tol {e['tolerance']:.0e})")
    if args.out:
        _write(args.out, "identities.json", _dump(rep))
    return 0 if rep["pass"] else 1


def cmd_run(args):
    sc = _scenario(args)
    cfg = dict(sc.flow)

    def checkpoint(k, state):
        write_checkpoint(Path(args.out) / "checkpoints" / f"state_{k:05d}", state, sc.model, cfg)

    hook = checkpoint if args.out and args.checkpoints else None
    rep = holonomy_preservation_experiment(sc, on_output=hook)
    summary = rep.to_dict()
    summary["scenarioConfig"] = sc.to_dict()
    summary["shi"] = shi_constants(rep)
    text = "\n".join(csv_lines(rep)) + "\n"
    if args.out:
        _write(args.out, "summary.json", _dump(summary))
        _write(args.out, "timeseries.csv", text)
    else:
        sys.stdout.write(text)
    for name, c in sorted(rep.checks.items()):
        print(f"{'PASS' if c['pass'] else 'FAIL'} {name}", file=sys.stderr)
    if rep.failure_time is not None:
        print(f"flow stopped at t={rep.failure_time:g}", file=sys.stderr)
    return 0 if rep.passed else 1


def cmd_holonomy(args):
    sc = _scenario(args)
    geom = sc.geometry()
    p = base_point(geom, sc.point)
    H, _ = holonomy_at(geom, p, sc.kmax)
    rep = holonomy_report(H).to_dict()
    rep.update({"scenario": sc.name, "kmax": sc.kmax, "basePoint": list(p)})
    text = _dump(rep)
    if args.out:
        _write(args.out, "holonomy.json", text)
    sys.stdout.write(text)
    return 0


def build_parser():
    ap = argparse.ArgumentParser(prog="holoflow", description="Holonomy along Ricci flow: runs and checks.")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("list-scenarios", help="list bundled scenarios").set_defaults(fn=cmd_list)
    for name, fn, help_ in (
        ("verify-identities", cmd_identities, "evolution equations, commutators and reaction identities"),
        ("run-flow", cmd_run, "run a scenario and record holonomy data"),
        ("holonomy-report", cmd_holonomy, "holonomy algebra at the initial slice"),
    ):
        sp = sub.add_parser(name, help=help_)
        src = sp.add_mutually_exclusive_group()
        src.add_argument("--scenario", help="bundled scenario name")
        src.add_argument("--config", help="path to a scenario YAML file")
        sp.add_argument("--dt", type=float)
        sp.add_argument("--tEnd", type=float)
        sp.add_argument("--resolution", type=int)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--kmax", type=int)
        sp.add_argument("--out", help="output directory")
        if name == "run-flow":
            sp.add_argument("--checkpoints", action="store_true", help="also dump fields at output times")
        sp.set_defaults(fn=fn)
    return ap


def main(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except HoloflowError as exc:
        print(_dump({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr, end="")
        return 1


if __name__ == "__main__":
    sys.exit(main())
