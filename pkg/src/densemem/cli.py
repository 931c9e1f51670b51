"""Command-line entry point (``densemem`` / ``python -m densemem``).

Settings resolve as: command-line flag > config file (``--config``, flat
``key = value`` lines, ``#`` comments) > ``DAM_SEED`` for the seed > built-in
defaults. Exit status: 0 success, 1 usage error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from pathlib import Path

from . import __version__
from .adversary import corrupt_random
from .core import ModelParams
from .diagnostics import estimate_separation, p_for_loading, theory
from .dynamics import SweepConfig, retrieve
from .ensembles import PatternFileError, generate_correlated, generate_random, load_patterns, save_patterns
from .experiments import CapacitySearchConfig, ExperimentGrid, ExperimentKind, run_capacity, run_experiment
from .output import render_records
from .rng import Xoshiro256, derive_seed
from .selftest import run_selftest

log = logging.getLogger("densemem")

DEFAULTS = {
    "n": 3,
    "omega": 0.95,
    "max_sweeps": 60,
    "trials": 60,
    "seed": 42,
    "resamples": 2000,
    "threads": 1,
    "format": "csv",
}

INT_KEYS = {"n", "max_sweeps", "trials", "seed", "resamples", "threads", "rounds", "N", "p", "target", "samples"}
FLOAT_KEYS = {"omega", "gamma", "rho_max", "rho_min", "rho_step", "corruption", "copy_prob"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def parse_config(path) -> dict[str, str]:
    values: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key.replace("-", "_")] = value
    return values


def _coerce(key: str, value):
    if not isinstance(value, str):
        return value
    try:
        if key in INT_KEYS:
            return int(value, 0)
        if key in FLOAT_KEYS:
            return float(value)
    except ValueError as exc:
        raise UsageError(f"bad value for {key}: {value!r}") from exc
    return value


def resolve(args: argparse.Namespace) -> dict:
    """Merge flags, config file, DAM_SEED and defaults."""
    merged = dict(DEFAULTS)
    env_seed = os.environ.get("DAM_SEED")
    if env_seed:
        merged["seed"] = _coerce("seed", env_seed)
    if getattr(args, "config", None):
        for key, value in parse_config(args.config).items():
            merged[key] = _coerce(key, value)
    for key, value in vars(args).items():
        if value is not None and key not in ("command", "config", "handler"):
            merged[key] = value
    _validate(merged)
    return merged


def _validate(cfg: dict) -> None:
    if not 0 < cfg["omega"] <= 1:
        raise UsageError("omega must lie in (0, 1]")
    if cfg["max_sweeps"] < 1 or cfg["trials"] < 1 or cfg["resamples"] < 1 or cfg["threads"] < 1:
        raise UsageError("max-sweeps, trials, resamples and threads must be positive")
    if not 2 <= cfg["n"] <= 8:
        raise UsageError("n must lie in [2, 8]")


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _words(text: str) -> tuple[str, ...]:
    return tuple(v.strip() for v in text.split(",") if v.strip())


def frange(lo: float, hi: float, step: float) -> tuple[float, ...]:
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return tuple(round(lo + k * step, 10) for k in range(count))


def _emit(text: str, cfg: dict) -> None:
    out = cfg.get("out")
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _progress(rec) -> None:
    pt = rec.point
    log.info("%s N=%d p=%d -> success %.3f", pt.kind.value, pt.N, pt.p, rec.success_rate)


def _grid(kind: ExperimentKind, cfg: dict, **axes) -> ExperimentGrid:
    return ExperimentGrid(
        kind=kind,
        trials=cfg["trials"],
        master_seed=cfg["seed"],
        n=cfg["n"],
        omega=cfg["omega"],
        max_sweeps=cfg["max_sweeps"],
        resamples=cfg["resamples"],
        **axes,
    )


def _run_grid(grid: ExperimentGrid, cfg: dict) -> int:
    records = run_experiment(grid, threads=cfg["threads"], progress=_progress)
    _emit(render_records(records, grid.kind, cfg["format"]), cfg)
    return 2 if any(r.error for r in records) else 0


# subcommands ----------------------------------------------------------------


def cmd_generate(cfg: dict) -> int:
    params = ModelParams(n=cfg["n"], N=cfg["N"], p=cfg["p"])
    rng = Xoshiro256(cfg["seed"])
    if cfg["kind"] == "correlated":
        pats = generate_correlated(params, rng, cfg.get("copy_prob", 0.25))
    else:
        pats = generate_random(params, rng)
    written = save_patterns(pats, cfg["out_patterns"], cfg["pattern_format"])
    print(f"wrote {written} bytes: N={pats.N} p={pats.p} -> {cfg['out_patterns']}")
    return 0


def cmd_retrieve(cfg: dict) -> int:
    pats = load_patterns(cfg["patterns"], cfg["n"])
    target = cfg.get("target", 0)
    rng = Xoshiro256(cfg["seed"])
    state = corrupt_random(pats, target, cfg["corruption"], rng)
    out = retrieve(
        pats, state,
        SweepConfig(target=target, mode=cfg["mode"], max_sweeps=cfg["max_sweeps"], omega=cfg["omega"]),
        rng,
    )
    print(f"converged={out.converged} sweeps={out.sweeps_used} final_overlap={out.final_overlap:.6g} "
          f"flips={out.flips_total}")
    return 0


def cmd_verify(cfg: dict) -> int:
    pats = load_patterns(cfg["patterns"], cfg["n"])
    gamma = cfg.get("gamma", 0.6)
    rng = Xoshiro256(cfg["seed"])
    est = estimate_separation(pats, cfg.get("target", 0), gamma, cfg.get("samples", 32), rng)
    tq = theory(pats.params, gamma=gamma, beta=est.beta_patterns)
    lines = [
        f"N={pats.N} p={pats.p} n={pats.n}",
        f"loading alpha = {float(tq.loading):.6g}",
        f"contraction rate = {float(tq.contraction):.6g}",
        f"beta (patterns) = {est.beta_patterns:.6g}",
        f"beta (sampled states) = {est.beta_state_hat:.6g}",
        f"lambda_hat = {est.lambda_hat:.6g} (signal gamma^(n-1) = {gamma ** (pats.n - 1):.6g}, "
        f"dominant={est.dominant}, samples={est.samples_used})",
        f"rho* (alpha/2) = {float(tq.rho_star_alpha):.6g}",
        f"rho* (gamma form) = {tq.rho_star_gamma:.6g}",
        f"rho* (beta-tightened) = {tq.rho_star_beta:.6g}",
        f"capacity bounds = [{float(tq.cap_lower):.6g}, {float(tq.cap_upper):.6g}]",
    ]
    print("\n".join(lines))
    return 0


def cmd_convergence(cfg: dict) -> int:
    grid = _grid(ExperimentKind.CONVERGENCE, cfg, Ns=cfg["Ns"], loadings=cfg["alphas"], corruptions=cfg["corruptions"])
    return _run_grid(grid, cfg)


def cmd_basin(cfg: dict) -> int:
    corr = frange(cfg["corruption_min"], cfg["corruption_max"], cfg["corruption_step"])
    grid = _grid(ExperimentKind.BASIN, cfg, Ns=cfg["Ns"], loadings=cfg["alphas"], corruptions=corr)
    return _run_grid(grid, cfg)


def cmd_adversarial(cfg: dict) -> int:
    if cfg.get("ps") and cfg.get("alphas"):
        raise UsageError("--p and --alpha are mutually exclusive")
    axes = {"ps": cfg["ps"]} if cfg.get("ps") else {"loadings": cfg.get("alphas") or (0.005,)}
    rhos = frange(cfg.get("rho_min", 0.0), cfg["rho_max"], cfg["rho_step"])
    grid = _grid(
        ExperimentKind.ADVERSARIAL, cfg, Ns=cfg["Ns"], rhos=rhos, adversaries=cfg["adversaries"],
        gamma=cfg.get("gamma", 0.6), rounds=cfg.get("rounds", 10), **axes,
    )
    return _run_grid(grid, cfg)


def cmd_capacity(cfg: dict) -> int:
    search = CapacitySearchConfig(
        trials=cfg["trials"], corruption=cfg["corruption"], max_sweeps=cfg["max_sweeps"], omega=cfg["omega"]
    )
    result = run_capacity(
        cfg["Ns"], cfg["n"], search, cfg["seed"], cfg["threads"],
        progress=lambda pt: log.info("capacity N=%d -> p_max=%d", pt.N, pt.p_max),
    )
    _emit(render_records(result, ExperimentKind.CAPACITY, cfg["format"]), cfg)
    return 0


def cmd_update_compare(cfg: dict) -> int:
    grid = _grid(ExperimentKind.UPDATE_COMPARE, cfg, Ns=cfg["Ns"], loadings=cfg["alpha3"], corruptions=cfg["m0"])
    return _run_grid(grid, cfg)


def cmd_pattern_compare(cfg: dict) -> int:
    grid = _grid(ExperimentKind.PATTERN_COMPARE, cfg, Ns=cfg["Ns"], loadings=cfg["alphas"],
                 corruptions=(cfg["corruption"],))
    return _run_grid(grid, cfg)


def cmd_realdata(cfg: dict) -> int:
    grid = _grid(ExperimentKind.REALDATA, cfg, sources=tuple(cfg["sources"]), corruptions=cfg["corruptions"])
    return _run_grid(grid, cfg)


def cmd_selftest(cfg: dict) -> int:
    return 0 if run_selftest(cfg["seed"], cfg.get("cases") or 2000) else 2


def cmd_seed(cfg: dict) -> int:
    print(derive_seed(cfg["seed"], cfg["tag"], cfg["point"], cfg["trial"]))
    return 0


# parser ---------------------------------------------------------------------


def _common(p: argparse.ArgumentParser, experiment: bool = True) -> None:
    p.add_argument("--config", help="key=value settings file")
    p.add_argument("--seed", type=lambda s: int(s, 0), help="master seed (default 42, or $DAM_SEED)")
    p.add_argument("--n", type=int, help="interaction order (default 3)")
    p.add_argument("--omega", type=float, help="matching fraction counted as retrieval (default 0.95)")
    p.add_argument("--max-sweeps", dest="max_sweeps", type=int, help="sweep cap (default 60)")
    if experiment:
        p.add_argument("--trials", type=int, help="trials per grid point")
        p.add_argument("--resamples", type=int, help="bootstrap resamples (default 2000)")
        p.add_argument("--threads", type=int, help="worker threads (output does not depend on it)")
        p.add_argument("--format", choices=("csv", "markdown"))
        p.add_argument("--out", help="write the table here instead of stdout")
    p.add_argument("-v", "--verbose", action="store_true", default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="densemem", description="Dense associative memory retrieval experiments")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("generate", help="write a pattern file")
    _common(p, experiment=False)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--kind", choices=("random", "correlated"), default="random")
    p.add_argument("--copy-prob", dest="copy_prob", type=float)
    p.add_argument("--pattern-format", dest="pattern_format", choices=("binary", "text"), default="binary")
    p.add_argument("out_patterns", metavar="PATH")
    p.set_defaults(handler=cmd_generate)

    p = sub.add_parser("retrieve", help="one retrieval from a pattern file")
    _common(p, experiment=False)
    p.add_argument("--patterns", required=True)
    p.add_argument("--target", type=int, help="0-based pattern index (default 0)")
    p.add_argument("--corruption", type=float, default=0.15)
    p.add_argument("--mode", choices=("async", "sync"), default="async")
    p.set_defaults(handler=cmd_retrieve)

    p = sub.add_parser("verify", help="theory quantities and separation estimates for a pattern file")
    _common(p, experiment=False)
    p.add_argument("--patterns", required=True)
    p.add_argument("--gamma", type=float)
    p.add_argument("--target", type=int)
    p.add_argument("--samples", type=int)
    p.set_defaults(handler=cmd_verify)

    p = sub.add_parser("exp-convergence", help="sweeps to retrieval vs N and loading")
    _common(p)
    p.add_argument("--N", dest="Ns", type=_ints, default=(200, 300, 400, 500))
    p.add_argument("--alpha", dest="alphas", type=_floats, default=(0.03, 0.05))
    p.add_argument("--corruption", dest="corruptions", type=_floats, default=(0.15,))
    p.set_defaults(handler=cmd_convergence)

    p = sub.add_parser("exp-basin", help="success rate over (loading, corruption)")
    _common(p)
    p.add_argument("--N", dest="Ns", type=_ints, default=(200, 400, 600))
    p.add_argument("--alpha", dest="alphas", type=_floats, default=(0.005, 0.01, 0.02))
    p.add_argument("--corruption-min", dest="corruption_min", type=float, default=0.33)
    p.add_argument("--corruption-max", dest="corruption_max", type=float, default=0.50)
    p.add_argument("--corruption-step", dest="corruption_step", type=float, default=0.01)
    p.set_defaults(handler=cmd_basin)

    p = sub.add_parser("exp-adversarial", help="success vs per-round adversarial budget")
    _common(p)
    p.add_argument("--N", dest="Ns", type=_ints, default=(500,))
    p.add_argument("--p", dest="ps", type=_ints)
    p.add_argument("--alpha", dest="alphas", type=_floats)
    p.add_argument("--gamma", type=float)
    p.add_argument("--rho-min", dest="rho_min", type=float)
    p.add_argument("--rho-max", dest="rho_max", type=float, default=0.35)
    p.add_argument("--rho-step", dest="rho_step", type=float, default=0.01)
    p.add_argument("--rounds", type=int)
    p.add_argument("--adversary", dest="adversaries", type=_words, default=("strong", "weak"))
    p.set_defaults(handler=cmd_adversarial)

    p = sub.add_parser("exp-capacity", help="largest reliably retrievable p per N")
    _common(p)
    p.add_argument("--N", dest="Ns", type=_ints, default=(100, 150, 200, 300, 400, 500))
    p.add_argument("--corruption", type=float, default=0.15)
    p.set_defaults(handler=cmd_capacity, trials=None)

    p = sub.add_parser("exp-update-compare", help="asynchronous vs parallel updates")
    _common(p)
    p.add_argument("--N", dest="Ns", type=_ints, default=(500,))
    p.add_argument("--alpha3", type=_floats, default=(0.10, 0.15, 0.20, 0.25, 0.30))
    p.add_argument("--m0", type=_floats, default=(0.3, 0.5, 0.7))
    p.set_defaults(handler=cmd_update_compare)

    p = sub.add_parser("exp-pattern-compare", help="random vs correlated pattern sets")
    _common(p)
    p.add_argument("--N", dest="Ns", type=_ints, default=(500,))
    p.add_argument("--alpha", dest="alphas", type=_floats,
                   default=(0.002, 0.004, 0.006, 0.008, 0.01, 0.015, 0.02, 0.03, 0.05))
    p.add_argument("--corruption", type=float, default=0.2)
    p.set_defaults(handler=cmd_pattern_compare)

    p = sub.add_parser("exp-realdata", help="retrieval on pre-binarized pattern files")
    _common(p)
    p.add_argument("--patterns", dest="sources", nargs="+", required=True)
    p.add_argument("--corruption", dest="corruptions", type=_floats, default=(0.10, 0.20, 0.30, 0.35, 0.40, 0.45))
    p.set_defaults(handler=cmd_realdata)

    p = sub.add_parser("selftest", help="enumeration and exact-identity oracles")
    _common(p, experiment=False)
    p.add_argument("--cases", type=int)
    p.set_defaults(handler=cmd_selftest)

    p = sub.add_parser("derive-seed", help="print the per-trial seed for (tag, point, trial)")
    _common(p, experiment=False)
    p.add_argument("--tag", default="")
    p.add_argument("--point", type=int, default=0)
    p.add_argument("--trial", type=int, default=0)
    p.set_defaults(handler=cmd_seed)
    return parser


def _capacity_trials(argv_cfg: dict, args) -> None:
    # capacity probes use 40 trials unless set explicitly
    if args.command == "exp-capacity" and args.trials is None and "trials" not in argv_cfg:
        args.trials = 40


def dispatch(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(parser.format_usage().strip())
        file_cfg = parse_config(args.config) if getattr(args, "config", None) else {}
        _capacity_trials(file_cfg, args)
        cfg = resolve(args)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"densemem: {exc}", file=sys.stderr)
        return 1
    logging.basicConfig(
        level=logging.INFO if cfg.get("verbose") else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.handler(cfg)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except (PatternFileError, ValueError, OSError) as exc:
        print(f"densemem: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(dispatch())
