"""esc-lab command line: run scenarios, reproduce figure data, sweep and report.

Exit codes: 0 success, 1 a report check failed, 2 bad config or failed
validation, 3 the integration blew up.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from . import analysis
from .errors import BlowUp, ConfigError, EscLabError, ReportFailure, ValidationFailure
from .plants import source_objective
from .scenario import (FIGURES, PRESETS, SYSTEM_ALIASES, from_config, load_config, preset,
                       resolve, simulate)
from .solver import atomic_write

log = logging.getLogger("esc_lab")

DEFAULT_ROOT = "esc-lab-out"


def output_root(outdir=None):
    return outdir or os.environ.get("ESC_LAB_OUTDIR") or DEFAULT_ROOT


def _dump(obj):
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def write_run(scenario, outdir, system=None):
    """Integrate ``scenario`` and write ``trajectory.csv`` and ``scenario.json`` into ``outdir``."""
    system = SYSTEM_ALIASES[system] if system else scenario.system
    if system != scenario.system:
        scenario = scenario.replace(system=system, dt=None)
    traj = simulate(scenario)
    os.makedirs(outdir, exist_ok=True)
    traj.to_csv(os.path.join(outdir, "trajectory.csv"))
    atomic_write(os.path.join(outdir, "scenario.json"), _dump(scenario.to_dict()))
    return traj


def run_scenario(config, outdir=None, system=None):
    """Run a config (path, dict or preset name); returns the output directory.

    Without ``outdir`` the config's ``outdir`` key is used, else
    ``<ESC_LAB_OUTDIR or ./esc-lab-out>/<name>``.
    """
    cfg = config
    if isinstance(config, str) and config in PRESETS:
        cfg = preset(config)
    elif isinstance(config, (str, os.PathLike)):
        cfg = load_config(config)
    scenario = from_config(cfg)
    outdir = outdir or cfg.get("outdir") or os.path.join(output_root(), scenario.name)
    write_run(scenario, outdir, system)
    return outdir


def _worker(job):
    cfg, outdir, system = job
    write_run(from_config(cfg), outdir, system)
    return outdir


def run_pool(jobs, workers=None):
    """Run ``(config, outdir, system)`` jobs, in a process pool when ``workers > 1``."""
    workers = workers or 1
    if workers == 1 or len(jobs) == 1:
        return [_worker(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_worker, jobs))


PLOT_TEMPLATE = '''"""Plot {figure} from the CSV files next to this script (requires matplotlib)."""
import csv
import os

import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))


def load(sub):
    with open(os.path.join(HERE, sub, "trajectory.csv")) as fh:
        rows = list(csv.reader(fh))
    cols = list(zip(*[[float(x) for x in r] for r in rows[1:]]))
    return dict(zip(rows[0], cols))


cl = load("closed-loop")
av = load("averaged")
fig, ax = plt.subplots(figsize=(6, 4))
{body}
ax.set_title("{figure}")
ax.legend()
fig.tight_layout()
fig.savefig(os.path.join(HERE, "{figure}.png"), dpi=150)
'''

_BODY_INTEGRATOR = '''ax.plot(cl["t"], cl["x"], lw=0.6, label="closed loop")
ax.plot(av["t"], av["x"], lw=1.5, label="averaged")
ax.set_xlabel("t")
ax.set_ylabel("x")'''

_BODY_UNICYCLE = '''ax.plot(cl["p1"], cl["p2"], lw=0.6, label="closed loop")
ax.plot(av["p1"], av["p2"], lw=1.5, label="averaged")
ax.plot([0], [0], "k*", label="source")
ax.set_xlabel("p1")
ax.set_ylabel("p2")
ax.set_aspect("equal")'''


def reproduce(figure, outdir=None, workers=None):
    """Write closed-loop and averaged runs of a figure preset plus a plotting script."""
    if figure not in FIGURES:
        raise ConfigError(f"unknown figure {figure!r}; choose from {', '.join(FIGURES)}")
    base = os.path.join(output_root(outdir), figure)
    cfg = preset(figure)
    jobs = [(cfg, os.path.join(base, "closed-loop"), "closed_loop"),
            (cfg, os.path.join(base, "averaged"), "averaged")]
    run_pool(jobs, workers)
    body = _BODY_INTEGRATOR if cfg["plant"]["kind"] == "integrator" else _BODY_UNICYCLE
    atomic_write(os.path.join(base, f"plot_{figure}.py"),
                 PLOT_TEMPLATE.format(figure=figure, body=body))
    return base


def _omegas(text):
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad omega list {text!r}") from exc
    if not vals:
        raise argparse.ArgumentTypeError("empty omega list")
    return vals


def cmd_run(args):
    outdir = run_scenario(args.config, args.outdir, args.system)
    print(f"wrote {outdir}")


def cmd_reproduce(args):
    print(f"wrote {reproduce(args.figure, args.outdir, args.jobs)}")


def cmd_sweep(args):
    scenario = resolve(args.scenario)
    rows = analysis.omega_sweep(scenario, args.omegas)
    devs = [r["deviation"] for r in rows]
    table = {"kind": "omega_sweep", "scenario": scenario.name, "rows": rows,
             "decreasing": analysis.strictly_decreasing(devs) if len(devs) > 1 else None}
    path = os.path.join(output_root(args.outdir), scenario.name, "sweep.json")
    atomic_write(path, _dump(table))
    sys.stdout.write(analysis.format_report(table))
    print(f"wrote {path}")


def cmd_report(args):
    if args.kind == "lyapunov":
        spec = analysis.LyapunovSpec(args.epsilon, source_objective(), args.Omega)
        rep = analysis.lyapunov_report(spec, args.a, args.samples, args.seed)
        name = "lyapunov.json"
    else:
        scenario = resolve(args.scenario)
        omegas = args.omegas or [scenario.params.omega]
        rep = analysis.sgpuas_envelope(scenario, args.rho, omegas=omegas)
        name = f"sgpuas-{scenario.name}.json"
    path = os.path.join(output_root(args.outdir), "reports", name)
    atomic_write(path, analysis.to_json(rep))
    sys.stdout.write(analysis.format_report(rep))
    print(f"wrote {path}")
    if rep.get("passed") is False:
        bad = next(c for c in rep["checks"] if not c["passed"])
        raise ReportFailure(bad["inequality"], bad["witness"])


def build_parser():
    p = argparse.ArgumentParser(prog="esc-lab", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="integrate one scenario config")
    r.add_argument("config", help="path to a JSON config or a preset name")
    r.add_argument("--outdir")
    r.add_argument("--system", choices=["closed-loop", "pullback", "averaged"])
    r.set_defaults(func=cmd_run)

    f = sub.add_parser("reproduce", help="write data and a plot script for a figure preset")
    f.add_argument("figure", choices=FIGURES)
    f.add_argument("--outdir")
    f.add_argument("--jobs", type=int, default=1, help="worker processes")
    f.set_defaults(func=cmd_reproduce)

    s = sub.add_parser("sweep", help="averaging error against dither frequency")
    s.add_argument("scenario", help="preset name or config path")
    s.add_argument("--omegas", type=_omegas, required=True, help="comma separated, increasing")
    s.add_argument("--outdir")
    s.set_defaults(func=cmd_sweep)

    rep = sub.add_parser("report", help="verification reports")
    rep.add_argument("kind", choices=["lyapunov", "sgpuas"])
    rep.add_argument("scenario", nargs="?", default="fig3-nodisturbance",
                     help="preset or config (sgpuas only)")
    rep.add_argument("--epsilon", type=float, default=0.01)
    rep.add_argument("--a", type=float, default=0.1)
    rep.add_argument("--Omega", type=float, default=1.0)
    rep.add_argument("--samples", type=int, default=10_000)
    rep.add_argument("--seed", type=int, default=0)
    rep.add_argument("--rho", type=float, default=2.0)
    rep.add_argument("--omegas", type=_omegas)
    rep.add_argument("--outdir")
    rep.set_defaults(func=cmd_report)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except ReportFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ConfigError, ValidationFailure) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BlowUp as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (EscLabError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
