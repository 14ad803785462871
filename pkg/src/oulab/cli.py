"""Batch command-line entry point.

Subcommands: ``simulate`` (path ensembles plus stationarity summaries),
``heat-bound`` (per-mode trace table and spectral product), ``wasserstein``
(distance between two measure CSV files), and ``verify <suite>``.  All runs
are driven by a flat key-value config file with dotted sections and a
mandatory seed; reports are plain CSV rows plus a JSON summary, and are
byte-identical across runs of the same (config, seed).

Exit codes: 0 ok, 2 config error, 3 IO error, 4 verification failure,
5 solver non-convergence.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .calculus import named_function
from .forms import MCEstimate
from .lifted import anchored_positions, sample_coefficients
from .measures import eigenbasis_cosine, load_measure_csv, make_base_measure
from .reporting import (ReportRow, write_json_summary, write_mc_estimates_csv,
                        write_report_csv)
from .spectral import make_spectrum
from .suites import ModelContext, heat_bound_rows, run_suite, suite_names
from .wasserstein import EXACT_ATOM_CAP, w1d, w_exact, w_sinkhorn

__all__ = ["main", "RunConfig", "load_config", "ConfigError"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_VERIFY = 4
EXIT_SOLVER = 5


class ConfigError(ValueError):
    pass


def load_config(path) -> dict[str, str]:
    """Parse a flat ``key = value`` file with # comments into a dict."""
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc}") from exc
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out


class RunConfig:
    """Validated run configuration with typed accessors and defaults."""

    def __init__(self, raw: dict[str, str]):
        self.raw = dict(raw)
        if "mc.seed" not in self.raw:
            raise ConfigError("mc.seed is mandatory (wall-clock seeding is not allowed)")
        self.seed = self.get_int("mc.seed")
        self.n_samples = self.get_int("mc.n_samples", 100_000)
        if self.n_samples < 2:
            raise ConfigError("mc.n_samples must be at least 2")
        for key, value in self.raw.items():
            if key.startswith("tol.") and float(value) <= 0.0:
                raise ConfigError(f"{key} must be positive")

    def get_str(self, key: str, default: str | None = None) -> str:
        if key in self.raw:
            return self.raw[key]
        if default is None:
            raise ConfigError(f"missing config key {key}")
        return default

    def get_int(self, key: str, default: int | None = None) -> int:
        if key not in self.raw:
            if default is None:
                raise ConfigError(f"missing config key {key}")
            return default
        try:
            return int(self.raw[key])
        except ValueError:
            raise ConfigError(f"{key} must be an integer, got {self.raw[key]!r}") from None

    def get_float(self, key: str, default: float | None = None) -> float:
        if key not in self.raw:
            if default is None:
                raise ConfigError(f"missing config key {key}")
            return default
        try:
            return float(self.raw[key])
        except ValueError:
            raise ConfigError(f"{key} must be a number, got {self.raw[key]!r}") from None

    def get_floats(self, key: str, default: list[float]) -> list[float]:
        if key not in self.raw:
            return default
        try:
            return [float(v) for v in self.raw[key].split(",") if v.strip()]
        except ValueError:
            raise ConfigError(f"{key} must be a comma-separated number list") from None

    def spectrum(self):
        family = self.get_str("spectrum.family", "power")
        if family == "power":
            return make_spectrum("power", self.get_int("spectrum.M", 8),
                                 a=self.get_float("spectrum.a", 1.0),
                                 s=self.get_float("spectrum.s", 2.0))
        if family == "explicit":
            alphas = self.get_floats("spectrum.alphas", [])
            if not alphas:
                raise ConfigError("explicit spectrum needs spectrum.alphas")
            return make_spectrum("explicit", alphas=alphas)
        raise ConfigError(f"unknown spectrum.family {family!r}")

    def context(self) -> ModelContext:
        try:
            spectrum = self.spectrum()
            base = make_base_measure(self.get_str("base.kind", "uniform01"),
                                     self.get_int("base.N", 200))
            basis = eigenbasis_cosine(base, self.get_int("basis.M", spectrum.n_modes))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if basis.n_modes != spectrum.n_modes:
            raise ConfigError("basis.M must match the spectrum mode count")
        tolerances = {k[len("tol."):]: float(v) for k, v in self.raw.items()
                      if k.startswith("tol.")}
        ibp_names = self.name_list("functions.ibp", ("mean", "second_moment", "tanh_mean"))
        c1_names = self.name_list("functions.c1", ("mean", "tanh_mean", "atan_mean"))
        return ModelContext(
            spectrum=spectrum, base=base, basis=basis,
            n_samples=self.n_samples, seed=self.seed,
            n_triples=self.get_int("verify.n_triples", 100),
            n_pairs=self.get_int("verify.n_pairs", 500),
            n_monotone=self.get_int("verify.n_monotone", 100),
            fd_h=self.get_float("fd.h", 1e-5),
            tolerances=tolerances,
            ibp_names=ibp_names,
            c1_names=c1_names,
        )

    def name_list(self, key: str, default: tuple) -> tuple:
        """Comma-separated catalogue names, validated against the catalogue."""
        if key not in self.raw:
            return default
        names = tuple(n.strip() for n in self.raw[key].split(",") if n.strip())
        for name in names:
            try:
                named_function(name)
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
        return names

    def out_dir(self, override: str | None = None) -> str:
        out = override or self.get_str("out.dir", "reports")
        os.makedirs(out, exist_ok=True)
        return out


def _fail(code: int, message: str) -> int:
    print(f'OULAB-ERROR code={code} message="{message}"', file=sys.stderr)
    return code


def _finish(rows: list[ReportRow], suite: str, cfg: RunConfig, out: str) -> int:
    write_report_csv(rows, os.path.join(out, f"{suite.replace('-', '_')}.csv"))
    summary = write_json_summary(suite, rows, cfg.seed,
                                 os.path.join(out, f"{suite.replace('-', '_')}_summary.json"))
    print(f"{suite}: {summary['passed']} passed, {summary['failed']} failed "
          f"(seed {cfg.seed})")
    return EXIT_OK if summary["failed"] == 0 else EXIT_VERIFY


def cmd_verify(args, cfg: RunConfig) -> int:
    if args.suite not in suite_names():
        return _fail(EXIT_CONFIG, f"unknown suite {args.suite}")
    ctx = cfg.context()
    rows = run_suite(args.suite, ctx)
    return _finish(rows, f"verify-{args.suite}", cfg, cfg.out_dir(args.out))


def cmd_heat_bound(args, cfg: RunConfig) -> int:
    spectrum = cfg.spectrum()
    times = cfg.get_floats("heat.times", [0.1, 1.0, 10.0])
    if any(t <= 0.0 for t in times):
        raise ConfigError("heat.times must be positive")
    rows = heat_bound_rows(spectrum, times, cfg.seed)
    return _finish(rows, "heat-bound", cfg, cfg.out_dir(args.out))


def cmd_wasserstein(args, cfg: RunConfig) -> int:
    try:
        mu = load_measure_csv(args.mu)
        nu = load_measure_csv(args.nu)
    except OSError as exc:
        return _fail(EXIT_IO, str(exc))
    except ValueError as exc:
        return _fail(EXIT_IO, f"malformed measure CSV: {exc}")
    p = cfg.get_float("wasserstein.p", 2.0)
    solver = args.solver or cfg.get_str("wasserstein.solver", "auto")
    if solver == "auto":
        if mu.dim == 1:
            solver = "quantile"
        elif mu.n_atoms + nu.n_atoms <= EXACT_ATOM_CAP:
            solver = "exact"
        else:
            solver = "sinkhorn"
    if solver == "quantile":
        distance, _ = w1d(mu, nu, p)
    elif solver == "exact":
        distance, _ = w_exact(mu, nu, p)
    elif solver == "sinkhorn":
        res = w_sinkhorn(mu, nu, p, epsilon=cfg.get_float("sinkhorn.epsilon", 1e-3),
                         max_iter=cfg.get_int("sinkhorn.max_iter", 200_000))
        if not res.converged:
            return _fail(EXIT_SOLVER,
                         f"sinkhorn did not converge (violation {res.marginal_violation:.3e})")
        distance = res.distance
    else:
        return _fail(EXIT_CONFIG, f"unknown wasserstein solver {solver}")
    print(f"{distance:.17g},{p:.17g},{solver},{mu.n_atoms},{nu.n_atoms}")
    return EXIT_OK


def cmd_simulate(args, cfg: RunConfig) -> int:
    ctx = cfg.context()
    t_grid = cfg.get_floats("sim.t_grid", [0.0, 0.25, 0.5, 1.0])
    if len(t_grid) < 1 or any(b <= a for a, b in zip(t_grid, t_grid[1:])):
        raise ConfigError("sim.t_grid must be strictly increasing")
    n_paths = cfg.get_int("sim.n_paths", 2000)
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 7]))
    spectrum, basis = ctx.spectrum, ctx.basis
    states = sample_coefficients(spectrum, rng, n_paths)
    out = cfg.out_dir(args.out)

    # Evolve the whole ensemble exactly over the grid, exporting path 0.
    lines = ["t,mode,coeff"]
    snapshots = [states.copy()]
    for k, t in enumerate(t_grid):
        if k > 0:
            dt = t_grid[k] - t_grid[k - 1]
            decay = np.exp(-spectrum.alphas * dt)
            spread = np.sqrt(-np.expm1(-2.0 * spectrum.alphas * dt) / spectrum.alphas)
            states = decay * states + spread * rng.standard_normal(states.shape)
            snapshots.append(states.copy())
        for n in range(spectrum.n_modes):
            lines.append(f"{t:.17g},{n + 1},{states[0, n]:.17g}")
    with open(os.path.join(out, "path.csv"), "w") as fh:
        fh.write("\n".join(lines) + "\n")

    # Stationarity summary: terminal per-mode variances against 1/alpha_n.
    rows = []
    estimates = []
    final = snapshots[-1]
    for n, alpha in enumerate(spectrum.alphas, start=1):
        var = float(np.var(final[:, n - 1], ddof=1))
        se = var * np.sqrt(2.0 / (n_paths - 1))
        target = 1.0 / float(alpha)
        rows.append(ReportRow(f"simulate.var_mode{n}", var, se, 4.0 * se,
                              abs(var - target) <= 4.0 * se, cfg.seed))
        estimates.append((f"var_mode{n}",
                          MCEstimate(value=var, std_error=float(se),
                                     n_samples=n_paths, seed=cfg.seed)))
    write_mc_estimates_csv(estimates, os.path.join(out, "ensemble.csv"))
    mean_stat = float(np.mean(anchored_positions(basis, final) @ ctx.base.weights))
    se = float(np.std(anchored_positions(basis, final) @ ctx.base.weights, ddof=1)
               / np.sqrt(n_paths))
    rows.append(ReportRow("simulate.mean_functional", mean_stat, se, 4.0 * se,
                          abs(mean_stat - 0.5) <= 4.0 * se, cfg.seed))
    return _finish(rows, "simulate", cfg, out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="oulab",
                                     description="OU measure-diffusion laboratory")
    parser.add_argument("--config", required=True, help="key = value config file")
    parser.add_argument("--out", default=None, help="report directory override")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", help="simulate path ensembles and summaries")
    sub.add_parser("heat-bound", help="per-mode trace bounds and the product")
    pw = sub.add_parser("wasserstein", help="distance between two measure CSVs")
    pw.add_argument("mu")
    pw.add_argument("nu")
    pw.add_argument("--solver", choices=["auto", "quantile", "exact", "sinkhorn"],
                    default=None)
    pv = sub.add_parser("verify", help="run a verification suite")
    pv.add_argument("suite", choices=suite_names())
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = RunConfig(load_config(args.config))
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, str(exc))
    except OSError as exc:
        return _fail(EXIT_IO, str(exc))
    handlers = {
        "simulate": cmd_simulate,
        "heat-bound": cmd_heat_bound,
        "wasserstein": cmd_wasserstein,
        "verify": cmd_verify,
    }
    try:
        return handlers[args.command](args, cfg)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, str(exc))
    except OSError as exc:
        return _fail(EXIT_IO, str(exc))
    except ValueError as exc:
        return _fail(EXIT_CONFIG, str(exc))


if __name__ == "__main__":
    sys.exit(main())
