"""Command-line entry point.

    solve run <config.toml> [--output-dir DIR] [--workers N]
    solve compare <dirA> <dirB> [--output report.json]
    solve oracle <problem> [--variant V] --grid WxH [--output fields.csv]

Relative output directories resolve against ``$SOLVE_OUTPUT_ROOT`` (default
``runs``).  Exit codes: 0 success, 2 configuration error, 3 numeric failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
OUTPUT_ROOT_ENV = "SOLVE_OUTPUT_ROOT"
OPTIMIZERS = ("adam", "bfgs", "adam_then_bfgs")

log = logging.getLogger("biharmonic_pinn")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    problem: str
    variant: str
    optimizer: str = "bfgs"
    output_dir: str | None = None
    options: dict = field(default_factory=dict)
    adam: dict = field(default_factory=dict)
    bfgs: dict = field(default_factory=dict)
    eval_shape: list | None = None

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        known = {"problem", "variant", "optimizer", "output_dir", "options", "eval"}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown top-level keys {sorted(unknown)}")
        for key in ("problem", "variant"):
            if not isinstance(d.get(key), str):
                raise ConfigError(f"config needs a string {key!r}")
        opt = d.get("optimizer", {"kind": "bfgs"})
        if isinstance(opt, str):
            opt = {"kind": opt}
        kind = opt.get("kind", "bfgs")
        if kind not in OPTIMIZERS:
            raise ConfigError(f"unknown optimizer {kind!r}; choose from {OPTIMIZERS}")
        extra = set(opt) - {"kind", "adam", "bfgs"}
        if extra:
            raise ConfigError(f"unknown optimizer keys {sorted(extra)}")
        ev = d.get("eval", {})
        return cls(
            problem=d["problem"],
            variant=d["variant"],
            optimizer=kind,
            output_dir=d.get("output_dir"),
            options=dict(d.get("options", {})),
            adam=dict(opt.get("adam", {})),
            bfgs=dict(opt.get("bfgs", {})),
            eval_shape=ev.get("shape"),
        )

    @classmethod
    def load(cls, path):
        try:
            import tomllib as tomli
        except ImportError:  # Python < 3.11
            import tomli

        try:
            with open(path, "rb") as fh:
                data = tomli.load(fh)
        except FileNotFoundError as e:
            raise ConfigError(f"config file not found: {path}") from e
        except tomli.TOMLDecodeError as e:
            raise ConfigError(f"malformed config {path}: {e}") from e
        return cls.from_dict(data)


def resolve_output(path):
    p = Path(path)
    if p.is_absolute():
        return p
    return Path(os.environ.get(OUTPUT_ROOT_ENV, "runs")) / p


def prepare(cfg):
    """Build the problem and optimizer configs; every configuration error surfaces here."""
    from .optimize import AdamConfig, QuasiNewtonConfig
    from .problems import build_problem

    try:
        problem = build_problem(cfg.problem, cfg.variant, **cfg.options)
        adam = AdamConfig(**cfg.adam) if cfg.optimizer in ("adam", "adam_then_bfgs") else None
        qn = QuasiNewtonConfig(**cfg.bfgs) if cfg.optimizer in ("bfgs", "adam_then_bfgs") else None
    except (TypeError, ValueError, KeyError) as e:
        raise ConfigError(str(e)) from e
    problem.optimizer = {"kind": cfg.optimizer, "adam": adam and asdict(adam), "bfgs": qn and asdict(qn)}
    return problem, adam, qn


def train(problem, adam, qn):
    from .optimize import train_adam, train_quasi_newton

    hist = None
    if adam is not None:
        hist = train_adam(problem.loss, adam)
    if qn is not None:
        h2 = train_quasi_newton(problem.loss, qn)
        hist = h2 if hist is None else hist.extend(h2)
    return hist


def write_outputs(out, problem, hist, cfg, extra=None):
    import numpy as np

    from .io import write_json
    from .oracle import FieldGrid

    out.mkdir(parents=True, exist_ok=True)
    hist.to_csv(out / "history.csv")
    theta = problem.params.get()
    shape = tuple(cfg.eval_shape) if cfg.eval_shape else problem.eval_shape
    pred = problem.predicted_grid(theta, shape)
    ref = problem.reference_grid(shape)
    fields = dict(pred.fields)
    fields.update({f"{k}_exact": v for k, v in ref.fields.items()})
    FieldGrid(pred.coords, fields, pred.units).to_csv(out / "fields.csv")
    errors = problem.errors(theta, shape)
    summary = {
        "fields": errors,
        "final_loss": hist.losses[-1],
        "final_normalized_loss": hist.final_normalized,
        "epochs": int(hist.epochs[-1]),
        "status": hist.status,
    }
    if extra:
        summary.update(extra)
    write_json(out / "errors.json", summary)
    params = {"theta": theta.tolist(), "components": {k: v.tolist() for k, v in problem.params.split(theta).items()}}
    if problem.identified is not None:
        params["identified"] = problem.identified(theta)
    write_json(out / "params.json", params)
    import jax
    import scipy

    spec = problem.to_json()
    spec["config"] = asdict(cfg)
    spec["versions"] = {"numpy": np.__version__, "scipy": scipy.__version__, "jax": jax.__version__}
    write_json(out / "spec.json", spec)
    return summary


def run(config_path, output_dir=None):
    """Run one config end to end; returns ``(exit_code, output_dir or None)``."""
    from .errors import NumericError

    try:
        cfg = RunConfig.load(config_path)
        if output_dir is not None:
            cfg.output_dir = str(output_dir)
        if not cfg.output_dir:
            cfg.output_dir = Path(config_path).stem
        problem, adam, qn = prepare(cfg)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG, None
    out = resolve_output(cfg.output_dir)
    try:
        hist = train(problem, adam, qn)
    except NumericError as e:
        print(f"numeric failure: {e}", file=sys.stderr)
        partial = getattr(e, "history", None)
        if partial is not None and partial.rows:
            out.mkdir(parents=True, exist_ok=True)
            partial.to_csv(out / "history.csv")
        return EXIT_NUMERIC, out
    summary = write_outputs(out, problem, hist, cfg)
    print(f"{cfg.problem}/{cfg.variant}: status={summary['status']} L/L0={summary['final_normalized_loss']:.3e} -> {out}")
    for name, e in summary["fields"].items():
        print(f"  {name}: Linf={e['linf']:.3e} L2rel={e['l2_relative']:.3e}")
    return EXIT_OK, out


def summarize_run(d):
    from .optimize import TrainHistory

    d = Path(d)
    hist_path = d / "history.csv"
    if not hist_path.is_file():
        raise ConfigError(f"{d} has no history.csv")
    h = TrainHistory.from_csv(hist_path)
    row = {
        "run": str(d),
        "final_normalized_loss": float(h.normalized[-1]),
        "epochs_to_1e-6": h.epochs_to_reach(1e-6),
        "wall_time_s": float(h.times[-1]),
    }
    err = d / "errors.json"
    if err.is_file():
        row["errors"] = json.loads(err.read_text()).get("fields", {})
    return row


def compare(dir_a, dir_b):
    rows = [summarize_run(dir_a), summarize_run(dir_b)]
    lines = [f"{'run':<40} {'final L/L0':>12} {'ep->1e-6':>9} {'time [s]':>10}  errors (Linf)"]
    for r in rows:
        ep = "-" if r["epochs_to_1e-6"] is None else str(r["epochs_to_1e-6"])
        errs = ", ".join(f"{k}={v['linf']:.2e}" for k, v in r.get("errors", {}).items())
        lines.append(f"{r['run'][-40:]:<40} {r['final_normalized_loss']:>12.3e} {ep:>9} {r['wall_time_s']:>10.2f}  {errs}")
    return rows, "\n".join(lines)


def oracle_grid(problem, variant, grid):
    from .problems import REGISTRY, build_problem

    if problem not in REGISTRY:
        raise ConfigError(f"unknown problem {problem!r}; choose from {sorted(REGISTRY)}")
    variants = REGISTRY[problem][1]
    variant = variant or variants[-1]
    try:
        shape = tuple(int(v) for v in grid.lower().split("x"))
    except ValueError as e:
        raise ConfigError(f"bad grid {grid!r}; expected WxH") from e
    if not shape or min(shape) < 1:
        raise ConfigError(f"bad grid {grid!r}")
    try:
        spec = build_problem(problem, variant)
    except ValueError as e:
        raise ConfigError(str(e)) from e
    ndim = len(spec.eval_shape)
    if ndim == 1:
        if len(shape) == 2 and shape[1] != 1:
            raise ConfigError(f"{problem} has a 1D reference grid; use Wx1 or W")
        shape = shape[:1]
    elif len(shape) == 1:
        shape = (shape[0], shape[0])
    return spec.reference_grid(shape)


def _set_workers(n):
    # must happen before jax initialises its CPU backend
    os.environ["XLA_FLAGS"] = (os.environ.get("XLA_FLAGS", "") + f" --xla_cpu_multi_thread_eigen={'true' if n > 1 else 'false'}"
                               f" intra_op_parallelism_threads={n}").strip()
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ[var] = str(n)


def main(argv=None):
    ap = argparse.ArgumentParser(prog="solve", description=__doc__.splitlines()[0])
    ap.add_argument("--workers", type=int, default=None, help="cap evaluation threads")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True)
    p_run = sub.add_parser("run", help="train one benchmark from a TOML config")
    p_run.add_argument("config")
    p_run.add_argument("--output-dir", default=None)
    p_cmp = sub.add_parser("compare", help="side-by-side summary of two run directories")
    p_cmp.add_argument("dir_a")
    p_cmp.add_argument("dir_b")
    p_cmp.add_argument("--output", default=None)
    p_or = sub.add_parser("oracle", help="dump reference fields on a grid")
    p_or.add_argument("problem")
    p_or.add_argument("--variant", default=None)
    p_or.add_argument("--grid", required=True)
    p_or.add_argument("--output", default=None)
    args = ap.parse_args(argv)

    if args.workers is not None:
        if args.workers < 1:
            print("--workers must be >= 1", file=sys.stderr)
            return EXIT_CONFIG
        _set_workers(args.workers)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")

    if args.cmd == "run":
        code, _ = run(args.config, args.output_dir)
        return code
    try:
        if args.cmd == "compare":
            rows, table = compare(args.dir_a, args.dir_b)
            print(table)
            if args.output:
                from .io import write_json

                write_json(args.output, rows)
            return EXIT_OK
        grid = oracle_grid(args.problem, args.variant, args.grid)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    text = grid.to_csv(args.output)
    if args.output is None:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
