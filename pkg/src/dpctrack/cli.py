"""
Command-line driver.

    dpctrack run     one trajectory: run.csv + summary.txt
    dpctrack sweep   asymptotic error over h: sweep.csv + sweep_summary.txt
    dpctrack budget  communication-budget comparison: budget.csv
    dpctrack verify  self-check suites
    dpctrack bounds  closed-form bounds: bounds.txt

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 verification failure. Every failure prints one line
``dpctrack: error code=<CODE> exit=<N> message="..."`` on stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import algorithms as alg
from . import bench as bn
from .bounds import compute_constants
from .config import ConfigFileError, load
from .splitting import SplitError

OUT_ENV = "DPCTRACK_OUT"
DEFAULT_OUT = "dpctrack-out"

EXIT_CONFIG, EXIT_NUMERIC, EXIT_VERIFY = 2, 3, 4


class CliError(Exception):
    def __init__(self, code: str, status: int, message: str):
        super().__init__(message)
        self.code, self.status, self.message = code, status, message


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError("USAGE", EXIT_CONFIG, message)


def _emit_error(err: CliError):
    msg = json.dumps(err.message)
    print(f"dpctrack: error code={err.code} exit={err.status} message={msg}", file=sys.stderr)


def write_atomic(path: Path, text: str):
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


# ---------------------------------------------------------------------------
# building blocks
# ---------------------------------------------------------------------------

def build_benchmark(cfg) -> bn.Benchmark:
    pr = cfg["problem"]
    return bn.paper_benchmark(seed=pr["seed"], scale=pr["scale"], n=pr["n"] or None, p=pr["p"] or None,
                              omega=float(pr["omega"]), beta=float(pr["beta"]), amplitude=float(pr["amplitude"]),
                              q_range=(float(pr["q_low"]), float(pr["q_high"])), b_max=float(pr["b_max"]))


def resolve_gamma(value, variant, constants) -> float:
    if value == "auto":
        return 1.0 if variant in alg.NEWTON else 1.0 / (constants.L + constants.M)
    return float(value)


def method_config(spec: dict, h: float, constants) -> alg.MethodConfig:
    sched = spec.get("gamma_schedule", "constant")
    variant = spec["variant"]
    return alg.MethodConfig(variant=variant, h=float(h), K=spec.get("K", 0), K_prime=spec.get("K_prime", 0),
                            gamma=resolve_gamma(spec.get("gamma", "auto"), variant, constants),
                            n_C=spec.get("n_C", 1), n_EC=spec.get("n_EC", 0),
                            gamma_schedule=None if sched == "constant" else sched)


def _kv(d: dict, prefix: str = "") -> str:
    lines = []
    for k, v in d.items():
        if isinstance(v, float):
            v = repr(v)
        elif isinstance(v, (tuple, list)):
            v = ",".join(repr(x) if isinstance(x, float) else str(x) for x in v)
        lines.append(f"{prefix}{k} = {v}")
    return "\n".join(lines) + "\n"


def _report_block(c, mc: alg.MethodConfig, tau):
    rep = compute_constants(c, mc.h, mc.K, mc.K_prime, mc.gamma, None if tau < 0 else tau)
    return rep.to_text()


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_run(cfg, out: Path, jobs: int) -> int:
    b = build_benchmark(cfg)
    mc = method_config(cfg["method"], cfg["method"]["h"], b.constants)
    steps = cfg["run"]["steps"]
    rec = bn.run_method(b.oracle, b.graph, mc, steps, t0=float(cfg["run"]["t0"]), seed=b.seed)
    k_bar = cfg["run"]["k_bar"] if cfg["run"]["k_bar"] >= 0 else bn.default_k_bar(steps, mc.h)
    write_atomic(out / "run.csv", rec.to_csv())
    summary = "[problem]\n" + _kv(b.params) + f"seed = {b.seed}\n"
    summary += "\n[method]\n" + _kv(mc.echo())
    summary += "\n[result]\n" + _kv({"steps": steps, "k_bar": k_bar,
                                      "asymptotic_error": bn.asymptotic_error(rec, k_bar),
                                      "final_error": float(rec.err[-1])})
    summary += "\n[constants]\n" + _kv(vars(b.constants))
    summary += "\n[bounds]\n" + _report_block(b.constants, mc, cfg["bounds"]["tau"])
    write_atomic(out / "summary.txt", summary)
    print(f"run: {mc.variant} h={mc.h:g} asymptotic_error={bn.asymptotic_error(rec, k_bar):.6e} -> {out}")
    return 0


def cmd_sweep(cfg, out: Path, jobs: int) -> int:
    b = build_benchmark(cfg)
    sw = cfg["sweep"]
    specs = []
    for m in sw["methods"]:
        mc = method_config(m, 1.0, b.constants)
        spec = {k: v for k, v in mc.echo().items() if k not in ("h", "gamma_schedule")}
        if mc.gamma_schedule is not None:
            spec["gamma_schedule"] = mc.gamma_schedule
        spec["label"] = m.get("label") or bn._label(spec)
        specs.append(spec)
    res = bn.sweep_h(b, specs, sw["h"], steps_rule=bn.horizon_steps(float(sw["horizon"])), jobs=jobs)
    write_atomic(out / "sweep.csv", res.to_csv())
    text = "[problem]\n" + _kv(b.params) + f"seed = {b.seed}\n"
    text += "\n[slopes]\n" + _kv(res.slopes)
    for spec in specs:
        for h in sorted(float(x) for x in sw["h"]):
            mc = alg.MethodConfig(h=h, **{k: v for k, v in spec.items() if k != "label"})
            text += f"\n[bounds \"{spec['label']}\" h={h!r}]\n" + _report_block(b.constants, mc, cfg["bounds"]["tau"])
    write_atomic(out / "sweep_summary.txt", text)
    for k, v in res.slopes.items():
        print(f"slope {k}: {v:.4f}")
    return 0


BUDGET_VARIANTS = ("RG", "RN", "DPC-G", "DPC-N")


def cmd_budget(cfg, out: Path, jobs: int) -> int:
    b = build_benchmark(cfg)
    bc = cfg["budget"]
    rows = ["h,variant,rounds,K,K_prime,n_C,n_EC,feasible,asymptotic_err"]
    for h in sorted(float(x) for x in bc["h"]):
        steps = bn.horizon_steps(float(bc["horizon"]))(h)
        ref = bn.optimal_trajectory(b.oracle, b.graph, h * np.arange(steps + 1))
        for v in BUDGET_VARIANTS:
            a = bn.budget_allocation(float(bc["t_bar"]), float(bc["r"]), h, v, bc["min_level"])
            err = "nan"
            if a["feasible"]:
                mc = alg.MethodConfig(v, h, K=a["K"], K_prime=a["K_prime"],
                                      gamma=resolve_gamma("auto", v, b.constants), n_C=a["n_C"],
                                      n_EC=a["n_EC"] if v in ("RG", "RN") else 0)
                rec = bn.run_method(b.oracle, b.graph, mc, steps, reference=ref)
                err = repr(bn.asymptotic_error(rec, bn.default_k_bar(steps, h)))
            rows.append(f"{h!r},{v},{a['rounds']},{a['K']},{a['K_prime']},{a['n_C']},{a['n_EC']},"
                        f"{str(a['feasible']).lower()},{err}")
            print(f"budget h={h:g} {v}: feasible={a['feasible']} err={err}")
    write_atomic(out / "budget.csv", "\n".join(rows) + "\n")
    return 0


def cmd_verify(cfg, out: Path, jobs: int) -> int:
    from .verify import run_suites
    results = run_suites(seed=cfg["problem"]["seed"])
    failed = [r for r in results if not r.passed]
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name}")
        for f in r.failures:
            print(f"    {f}")
    if failed:
        raise CliError("VERIFY_FAILED", EXIT_VERIFY, "failing suites: " + ",".join(r.name for r in failed))
    return 0


def cmd_bounds(cfg, out: Path, jobs: int) -> int:
    b = build_benchmark(cfg)
    mc = method_config(cfg["method"], cfg["method"]["h"], b.constants)
    text = "[constants]\n" + _kv(vars(b.constants)) + "\n[bounds]\n" + _report_block(b.constants, mc, cfg["bounds"]["tau"])
    write_atomic(out / "bounds.txt", text)
    print(text, end="")
    return 0


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "budget": cmd_budget, "verify": cmd_verify, "bounds": cmd_bounds}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="TOML configuration file")
    common.add_argument("--out", metavar="DIR", help=f"output directory (default ${OUT_ENV} or ./{DEFAULT_OUT})")
    common.add_argument("--seed", type=int, help="master seed, overrides problem.seed")
    common.add_argument("--scale", choices=("desk", "paper"), help="problem size, overrides problem.scale")
    common.add_argument("--jobs", type=int, default=1, help="parallel sweep cells")
    parser = _Parser(prog="dpctrack", description="Decentralized prediction-correction tracking experiments.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, fn in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=fn.__doc__ or name)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = load(args.config)
        if args.seed is not None:
            cfg["problem"]["seed"] = args.seed
        if args.scale is not None:
            cfg["problem"]["scale"] = args.scale
        if args.jobs < 1:
            raise CliError("CONFIG_ERROR", EXIT_CONFIG, "--jobs must be at least 1")
        out = Path(args.out or os.environ.get(OUT_ENV) or DEFAULT_OUT)
        out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](cfg, out, args.jobs)
    except CliError as err:
        _emit_error(err)
        return err.status
    except (ConfigFileError, alg.ConfigError) as exc:
        _emit_error(CliError("CONFIG_ERROR", EXIT_CONFIG, str(exc)))
        return EXIT_CONFIG
    except (bn.NumericalError, SplitError, np.linalg.LinAlgError, FloatingPointError) as exc:
        _emit_error(CliError("NUMERICAL_ERROR", EXIT_NUMERIC, str(exc)))
        return EXIT_NUMERIC
    except ValueError as exc:
        _emit_error(CliError("CONFIG_ERROR", EXIT_CONFIG, str(exc)))
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
