"""Command-line harness: validation, exact tables, kernels, simulation, verify-all.

Subcommands
    validate      admissibility report for a step law
    fluctuations  tau/renewal asymptotics tables -> CSV
    kernel        reflection kernel, stationary measure, spectrum, sigma scans
    simulate      Monte Carlo functional estimates -> CSV + manifest
    laws          closed-form identity self-checks
    verify-all    the full numerical verification pipeline from a config file

Exit codes: 0 pass, 1 usage/config error, 2 distribution validation failure,
3 check failure.  CSV bodies are byte-stable across reruns of the same
configuration; wall-clock information only ever lands in the manifest.
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import limit_laws, montecarlo
from .errors import ConfigError, ReflectedWalkError
from .lattice_dp import (build_tables, ladder_epoch_renewal, meander_expectation,
                         tau_law)
from .montecarlo import SimPlan, estimate_fdd, ks_against_half_normal, modulus_check
from .reflection_kernel import (build_R, reflection_time_kernels, renewal_operators_T,
                                sigma_hat, sigma_limit_check, sigma_tilde,
                                spectral_report, stationary_nu_eig,
                                stationary_nu_formula)
from .report import ConvergenceReport, format_cell
from .step_dist import StepDistribution, load_distribution, moments, validate

EXIT_PASS = 0
EXIT_CONFIG = 1
EXIT_VALIDATION = 2
EXIT_CHECK = 3

DEFAULT_TOLERANCES: dict[str, float] = {
    "laws_gap": 1e-10,
    "tau_tail": 0.03,
    "tau_local": 0.05,
    "ladder_epoch": 0.02,
    "sigma": 0.05,
    "sigma_x_agreement": 0.01,
    "sigma_hat": 0.10,
    "sigma_tilde": 0.15,
    "spectral_lambda1": 1e-9,
    "spectral_gap": 1e-6,
    "nu_residual": 1e-10,
    "mc_ks": 0.02,
    "mc_sigmas": 3.0,
    "meander": 0.03,
}


@dataclass
class RunConfig:
    """One verification run: inputs, scales, randomness, tolerances."""

    dist_path: Path
    out_dir: Path
    seed: int = 20260810
    paths: int = 100_000
    scales: tuple[int, ...] = (1_000, 10_000)
    times: tuple[float, ...] = (0.25, 0.75, 1.0)
    mc_n: int = 4096
    x_list: tuple[int, ...] = (0, 3)
    window: tuple[float, float] = (0.2, 0.8)
    deltas: tuple[float, ...] = (0.125, 0.03125)
    tol_scale: float = 1.0
    tolerances: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))

    def tol(self, name: str) -> float:
        return self.tolerances[name] * self.tol_scale

    def echo(self) -> dict:
        return {
            "dist": str(self.dist_path), "out": str(self.out_dir), "seed": self.seed,
            "paths": self.paths, "scales": list(self.scales), "times": list(self.times),
            "mc_n": self.mc_n, "x_list": list(self.x_list), "window": list(self.window),
            "deltas": list(self.deltas), "tol_scale": self.tol_scale,
            "tolerances": dict(self.tolerances),
        }


def _parse_ints(text: str) -> tuple[int, ...]:
    return tuple(int(p) for p in text.replace(",", " ").split())


def _parse_floats(text: str) -> tuple[float, ...]:
    return tuple(float(p) for p in text.replace(",", " ").split())


def load_config(path) -> RunConfig:
    """Read a key=value config with [run] and optional [tolerances] sections."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    if "run" not in parser:
        raise ConfigError(f"{path}: missing [run] section")
    run = parser["run"]
    try:
        cfg = RunConfig(
            dist_path=Path(run.get("dist", "")),
            out_dir=Path(run.get("out", "out")),
            seed=run.getint("seed", 20260810),
            paths=run.getint("paths", 100_000),
            scales=_parse_ints(run.get("scales", "1000, 10000")),
            times=_parse_floats(run.get("times", "0.25, 0.75, 1.0")),
            mc_n=run.getint("mc_n", 4096),
            x_list=_parse_ints(run.get("x_list", "0, 3")),
            window=tuple(_parse_floats(run.get("window", "0.2, 0.8"))),
            deltas=_parse_floats(run.get("deltas", "0.125, 0.03125")),
            tol_scale=run.getfloat("tol_scale", 1.0),
        )
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if "tolerances" in parser:
        for key, val in parser["tolerances"].items():
            if key not in cfg.tolerances:
                raise ConfigError(f"{path}: unknown tolerance {key!r}")
            cfg.tolerances[key] = float(val)
    if not cfg.dist_path.name:
        raise ConfigError(f"{path}: [run] dist is required")
    if len(cfg.scales) < 1 or any(b <= a for a, b in zip(cfg.scales, cfg.scales[1:])):
        raise ConfigError("scales must be non-empty and strictly increasing")
    if len(cfg.window) != 2:
        raise ConfigError("window must be two fractions s, t")
    return cfg


def _load_dist_or_fail(path) -> StepDistribution:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"distribution file not found: {path}")
    return load_distribution(path)


# ---------------------------------------------------------------------------
# checks (each returns a ConvergenceReport)
# ---------------------------------------------------------------------------

def check_laws(cfg: RunConfig) -> ConvergenceReport:
    tol = cfg.tol("laws_gap")
    rep = ConvergenceReport("laws", ("identity", "value", "reference", "gap"))
    ok = True
    for a, b in ((1.0, 1.0), (0.5, 2.0), (3.0, 0.25)):
        lhs, rhs, gap = limit_laws.imk_identity(a, b)
        rep.add_row(f"imk({a};{b})", lhs, rhs, gap)
        ok &= gap <= tol
    for name, val in (
        ("half_normal_mass", limit_laws.half_normal_expectation(lambda u: 1.0, 1.0)),
        ("meander_mass", limit_laws.meander_limit_expectation(lambda z: 1.0)),
        ("bridge_mass", limit_laws.bridge_limit_expectation(lambda u: 1.0, 0.5, 1.0)),
    ):
        gap = abs(val - 1.0)
        rep.add_row(name, val, 1.0, gap)
        ok &= gap <= max(tol, 1e-9)
    joint = limit_laws.joint_limit_expectation(lambda y: 1.0, lambda z: 1.0, 0.25, 0.75)
    rep.add_row("joint_mass", joint, 1.0, abs(joint - 1.0))
    ok &= abs(joint - 1.0) <= 1e-8
    rep.passed = ok
    rep.note = f"abs tolerance {tol:g}"
    return rep


def check_fluctuations(cfg: RunConfig, d: StepDistribution) -> list[ConvergenceReport]:
    n_max = max(cfg.scales)
    x_max = max(max(cfg.x_list), d.max_down_jump, 8)
    tables = build_tables(d, 2 * n_max, x_max)
    reports = []

    tail_tol = cfg.tol("tau_tail")
    rep = ConvergenceReport("tau_tail", ("x", "n", "sqrt_n_tail", "reference", "rel_gap"))
    ok = True
    for x in cfg.x_list:
        f = tables.tau0_law if x == 0 else tau_law(d, x, n_max)
        ref = tables.c1 * tables.h[x]
        gaps = []
        for n in cfg.scales:
            tail = 1.0 - float(f[1:n + 1].sum())
            val = math.sqrt(n) * tail
            rel = abs(val / ref - 1.0)
            rep.add_row(x, n, val, ref, rel)
            gaps.append(rel)
        ok &= gaps[-1] <= tail_tol and all(b <= a * 1.5 for a, b in zip(gaps, gaps[1:]))
    rep.passed = ok
    rep.note = f"tol={tail_tol:g}"
    reports.append(rep)

    local_tol = cfg.tol("tau_local")
    rep = ConvergenceReport("tau_local", ("x", "n", "n32_pmf", "reference", "rel_gap"))
    ok = True
    for x in cfg.x_list:
        f = tables.tau0_law if x == 0 else tau_law(d, x, n_max)
        ref = 0.5 * tables.c1 * tables.h[x]
        for n in cfg.scales:
            val = n**1.5 * float(f[n])
            rel = abs(val / ref - 1.0)
            rep.add_row(x, n, val, ref, rel)
            if n == cfg.scales[-1]:
                ok &= rel <= local_tol
    rep.passed = ok
    rep.note = f"tol={local_tol:g}"
    reports.append(rep)

    u_tol = cfg.tol("ladder_epoch")
    rep = ConvergenceReport("ladder_epoch", ("n", "sqrt_n_u", "reference", "rel_gap"))
    ref = 1.0 / (tables.c1 * math.pi)
    ok = True
    for n in [*cfg.scales, 2 * n_max]:
        val = math.sqrt(n) * float(tables.u[n])
        rel = abs(val / ref - 1.0)
        rep.add_row(n, val, ref, rel)
        ok &= (rel <= u_tol) if n == 2 * n_max else True
    rep.passed = ok
    rep.note = f"tol={u_tol:g}"
    reports.append(rep)

    mea_tol = cfg.tol("meander")
    n_mea = min(2048, n_max)
    val = meander_expectation(d, 0, n_mea, lambda u: min(u, 10.0))
    ref = limit_laws.meander_limit_expectation(lambda z: min(z, 10.0))
    rep = ConvergenceReport("meander", ("n", "dp_mean", "reference", "rel_gap"))
    rel = abs(val / ref - 1.0)
    rep.add_row(n_mea, val, ref, rel)
    rep.passed = rel <= mea_tol
    rep.note = f"tol={mea_tol:g}"
    reports.append(rep)
    return reports


def check_kernel(cfg: RunConfig, d: StepDistribution) -> list[ConvergenceReport]:
    n_sigma = max(cfg.scales)
    x_max = max(max(cfg.x_list), d.max_down_jump, 8)
    tables = build_tables(d, 64, x_max)  # tau horizon unused here
    kern = build_R(tables, x_max, d.max_down_jump)
    nu = stationary_nu_eig(kern)
    spec = spectral_report(kern, nu)
    reports = []

    rep = ConvergenceReport("spectral", ("quantity", "value", "bound", "ok"))
    c1_ok = abs(spec.lambda1 - 1.0) <= cfg.tol("spectral_lambda1")
    c2_ok = spec.lambda2_modulus <= 1.0 - cfg.tol("spectral_gap")
    c3_ok = nu.residual <= cfg.tol("nu_residual")
    rep.add_row("lambda1_minus_1", abs(spec.lambda1 - 1.0), cfg.tol("spectral_lambda1"), c1_ok)
    rep.add_row("lambda2_modulus", spec.lambda2_modulus, 1.0 - cfg.tol("spectral_gap"), c2_ok)
    rep.add_row("nu_residual", nu.residual, cfg.tol("nu_residual"), c3_ok)
    rep.add_row("simple", 1.0 if spec.simple else 0.0, 1.0, spec.simple)
    rep.passed = bool(c1_ok and c2_ok and c3_ok and spec.simple)
    reports.append(rep)

    seq = reflection_time_kernels(d, tables, cfg.x_list, n_sigma)
    seq = renewal_operators_T(seq)
    scale_list = sorted({max(s, 1) for s in cfg.scales})
    rep = sigma_limit_check(seq, nu, tables.h, tables.c1, cfg.x_list, scale_list,
                            tol=cfg.tol("sigma"))
    # x-independence of the limit at the largest scale
    agree_tol = cfg.tol("sigma_x_agreement")
    n_top = scale_list[-1]
    vals = [float(seq.t[n_top, seq.row_index(x), y])
            for x in cfg.x_list for y in range(1, seq.c + 1)]
    per_y = np.array(vals).reshape(len(cfg.x_list), seq.c)
    spread = float(np.max(np.abs(per_y - per_y[0]) / np.maximum(per_y[0], 1e-300)))
    rep.note += f"; x-spread={spread:.3e} (tol {agree_tol:g})"
    rep.passed = rep.passed and spread <= agree_tol
    reports.append(rep)

    s_frac, t_frac = cfg.window
    rep = ConvergenceReport("sigma_window",
                            ("kind", "n", "value", "reference", "rel_gap"))
    ok = True
    ref_hat = 1.0 / (math.pi * math.sqrt(s_frac * (t_frac - s_frac)))
    ref_til = 1.0 / (2.0 * math.pi * math.sqrt(s_frac * (t_frac - s_frac) ** 3))
    window_scales = sorted({max(4, n // 4) for n in (scale_list[-1],)} | {scale_list[-1]})
    gaps_hat, gaps_til = [], []
    for n in window_scales:
        vh = sigma_hat(d, tables, seq, cfg.x_list[0], s_frac, t_frac, n)
        vt = sigma_tilde(d, tables, seq, cfg.x_list[0], s_frac, t_frac, n)
        gh = abs(vh / ref_hat - 1.0)
        gt = abs(vt / ref_til - 1.0)
        rep.add_row("hat", n, vh, ref_hat, gh)
        rep.add_row("tilde", n, vt, ref_til, gt)
        gaps_hat.append(gh)
        gaps_til.append(gt)
    ok = (gaps_hat[-1] <= cfg.tol("sigma_hat") and gaps_til[-1] <= cfg.tol("sigma_tilde")
          and gaps_hat[-1] <= 1.5 * gaps_hat[0] and gaps_til[-1] <= 1.5 * gaps_til[0])
    rep.passed = ok
    rep.note = f"window=({s_frac},{t_frac})"
    reports.append(rep)
    return reports


def _mean_se(sample: np.ndarray) -> tuple[float, float]:
    m = sample.size
    mean = float(np.sum(sample)) / m
    if m == 1:
        return mean, 0.0
    var = max(0.0, (float(np.sum(sample * sample)) - m * mean * mean) / (m - 1))
    return mean, math.sqrt(var / m)


def check_montecarlo(cfg: RunConfig, d: StepDistribution) -> list[ConvergenceReport]:
    times = tuple(sorted(set(cfg.times) | {1.0}))
    plan = SimPlan(dist=d, x0=0, n=cfg.mc_n, times=times, paths=cfg.paths,
                   seed=cfg.seed, workers=1)
    vals = montecarlo.collect_values(plan)  # one pass over all paths
    sig_tol = cfg.tol("mc_sigmas")
    reports = []

    rep = ConvergenceReport("mc_onedim", ("quantity", "value", "reference", "gap", "bound"))
    col1 = vals[:, times.index(1.0)]
    ks = montecarlo.half_normal_ks(col1)
    cap = 5.0
    mean, se = _mean_se(np.minimum(col1, cap))
    ref = limit_laws.half_normal_expectation(lambda u: min(u, cap), 1.0)
    ks_ok = ks <= cfg.tol("mc_ks")
    mean_ok = abs(mean - ref) <= sig_tol * se
    rep.add_row("ks_t1", ks, 0.0, ks, cfg.tol("mc_ks"))
    rep.add_row("mean_t1", mean, ref, abs(mean - ref), sig_tol * se)
    rep.passed = bool(ks_ok and mean_ok)
    rep.note = f"n={cfg.mc_n}, paths={cfg.paths}"
    reports.append(rep)

    interior = [t for t in times if 0.0 < t < 1.0]
    if len(interior) < 2:
        rep = ConvergenceReport("mc_twodim", ("s", "t", "estimate", "reference",
                                              "gap", "bound"))
        rep.note = "skipped: need two interior time points"
        reports.append(rep)
        return reports
    s, t = interior[0], interior[-1]
    cap2 = 3.0
    prod = np.minimum(vals[:, times.index(s)], cap2) * np.minimum(vals[:, times.index(t)], cap2)
    est, se2 = _mean_se(prod)
    ref2 = limit_laws.joint_limit_expectation(lambda y: min(y, cap2),
                                              lambda z: min(z, cap2), s, t)
    rep = ConvergenceReport("mc_twodim", ("s", "t", "estimate", "reference", "gap", "bound"))
    rep.add_row(s, t, est, ref2, abs(est - ref2), sig_tol * se2)
    rep.passed = abs(est - ref2) <= sig_tol * se2
    reports.append(rep)
    return reports


def check_modulus(cfg: RunConfig, d: StepDistribution) -> ConvergenceReport:
    plan = SimPlan(dist=d, x0=0, n=cfg.mc_n, times=(1.0,),
                   paths=min(cfg.paths, 10_000), seed=cfg.seed + 1, workers=1)
    rep = ConvergenceReport("modulus", ("delta", "window_steps", "max_excess",
                                        "equal_fraction", "literal_violations",
                                        "bound_violations"))
    out = modulus_check(plan, cfg.deltas, strict=False)
    for e in out.entries:
        rep.add_row(e.delta, e.window_steps, e.max_excess, e.equal_fraction,
                    e.literal_violations, e.bound_violations)
    rep.passed = out.literal_violations == 0 and out.bound_violations == 0
    rep.note = (f"{out.paths} paths; overshoot bound C={out.overshoot_bound} "
                f"never exceeded" if out.bound_violations == 0 else f"{out.paths} paths")
    return rep


def verify_all(cfg: RunConfig) -> tuple[list[ConvergenceReport], int]:
    """Run every check; write one CSV per check, a summary, and a manifest."""
    d = _load_dist_or_fail(cfg.dist_path)
    vrep = validate(d)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    (cfg.out_dir / "validation.txt").write_text(str(vrep) + "\n", encoding="utf-8")
    if not vrep.passed:
        names = ", ".join(c.name for c in vrep.failures())
        print(f"validation failed ({names}):\n{vrep}", file=sys.stderr)
        return [], EXIT_VALIDATION

    reports: list[ConvergenceReport] = [check_laws(cfg)]
    reports.extend(check_fluctuations(cfg, d))
    reports.extend(check_kernel(cfg, d))
    reports.extend(check_montecarlo(cfg, d))
    reports.append(check_modulus(cfg, d))

    for rep in reports:
        rep.write_csv(cfg.out_dir / f"{rep.name}.csv")
    summary = ConvergenceReport("summary", ("check", "passed", "note"))
    for rep in reports:
        summary.add_row(rep.name, rep.passed, rep.note.replace(",", ";"))
    summary.write_csv(cfg.out_dir / "summary.csv")
    manifest = {
        "config": cfg.echo(),
        "versions": {"numpy": np.__version__, "python": sys.version.split()[0]},
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "passed": all(r.passed for r in reports),
    }
    with open(cfg.out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    for rep in reports:
        print(rep.summary_line())
    return reports, EXIT_PASS if all(r.passed for r in reports) else EXIT_CHECK


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_validate(args) -> int:
    d = _load_dist_or_fail(args.dist)
    rep = validate(d)
    print(rep)
    return EXIT_PASS if rep.passed else EXIT_VALIDATION


def _cmd_fluctuations(args) -> int:
    d = _load_dist_or_fail(args.dist)
    rep = validate(d)
    if not rep.passed:
        print(rep, file=sys.stderr)
        return EXIT_VALIDATION
    tables = build_tables(d, args.n, args.xmax)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    tau = ConvergenceReport("fluctuations",
                            ("n", "p_tau0", "n32_p_tau0", "u_n", "sqrt_n_u_n"))
    for n in range(1, args.n + 1):
        tau.add_row(n, float(tables.tau0_law[n]), n**1.5 * float(tables.tau0_law[n]),
                    float(tables.u[n]), math.sqrt(n) * float(tables.u[n]))
    tau.write_csv(out)
    ren = ConvergenceReport("renewal", ("x", "u_star", "h", "h_tilde"))
    for x in range(args.xmax + 1):
        ren.add_row(x, float(tables.u_star[x]), float(tables.h[x]), float(tables.h_tilde[x]))
    second = out.with_name(out.stem + "_renewal" + (out.suffix or ".csv"))
    ren.write_csv(second)
    print(f"wrote {out} and {second} (c1={tables.c1!r})")
    return EXIT_PASS


def _cmd_kernel(args) -> int:
    d = _load_dist_or_fail(args.dist)
    vrep = validate(d)
    if not vrep.passed:
        print(vrep, file=sys.stderr)
        return EXIT_VALIDATION
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    c = d.max_down_jump
    x_max = max(8, c, *args.x_list)
    tables = build_tables(d, 64, x_max)
    kern = build_R(tables, x_max, c)
    nu = stationary_nu_eig(kern)
    formula = stationary_nu_formula(tables.mu_star, x_max, eig=nu)
    spec = spectral_report(kern, nu)

    rrep = ConvergenceReport("R", ("x", *[f"y{y}" for y in range(c + 1)], "row_deficit"))
    for x in range(x_max + 1):
        rrep.add_row(x, *[float(v) for v in kern.entries[x]], float(kern.row_deficit[x]))
    rrep.write_csv(out / "R.csv")

    nrep = ConvergenceReport("nu", ("y", "nu_eig", "nu_formula_raw", "nu_formula_norm"))
    for y in range(c + 1):
        nrep.add_row(y, float(nu.weights[y]), float(formula.raw[y]),
                     float(formula.normalized[y]))
    nrep.write_csv(out / "nu.csv")

    with open(out / "spectral.json", "w", encoding="utf-8") as fh:
        json.dump({"lambda1": spec.lambda1, "lambda2_modulus": spec.lambda2_modulus,
                   "simple": spec.simple, "nu_residual": nu.residual,
                   "nu_formula_sr_l1_discrepancy": formula.sr_l1_discrepancy,
                   "nu_formula_mass_at_zero": formula.mass_at_zero},
                  fh, indent=2, sort_keys=True)
        fh.write("\n")

    seq = renewal_operators_T(reflection_time_kernels(d, tables, args.x_list, args.n))
    scales = sorted({max(1, args.n // 10), max(1, args.n // 3), args.n})
    sigma_rep = sigma_limit_check(seq, nu, tables.h, tables.c1, args.x_list, scales)
    sigma_rep.write_csv(out / "sigma.csv")
    win = ConvergenceReport("sigma_window", ("kind", "n", "value", "reference"))
    s_frac, t_frac = 0.2, 0.8
    for n in scales:
        if int(n * s_frac) >= 1 and int(n * (t_frac - s_frac)) <= args.n:
            win.add_row("hat", n, sigma_hat(d, tables, seq, args.x_list[0], s_frac, t_frac, n),
                        1.0 / (math.pi * math.sqrt(s_frac * (t_frac - s_frac))))
            win.add_row("tilde", n, sigma_tilde(d, tables, seq, args.x_list[0], s_frac, t_frac, n),
                        1.0 / (2 * math.pi * math.sqrt(s_frac * (t_frac - s_frac) ** 3)))
    win.write_csv(out / "sigma_window.csv")
    print(f"kernel outputs in {out}")
    return EXIT_PASS


def _cmd_simulate(args) -> int:
    d = _load_dist_or_fail(args.dist)
    vrep = validate(d)
    if not vrep.passed:
        print(vrep, file=sys.stderr)
        return EXIT_VALIDATION
    times = tuple(float(x) for x in args.times.split(","))
    plan = SimPlan(dist=d, x0=args.x0, n=args.n, times=times, paths=args.paths,
                   seed=args.seed, workers=args.workers)
    rep = ConvergenceReport("simulate", ("t", "mean", "se", "ks"))
    cap = 5.0
    for t in times:
        mean, se = estimate_fdd(plan, [lambda u: np.minimum(u, cap)], times=(t,))
        ks = ks_against_half_normal(plan, t)
        rep.add_row(t, mean, se, ks)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    rep.write_csv(out)
    manifest = {
        "plan": {"dist": str(args.dist), "x0": plan.x0, "n": plan.n,
                 "times": list(times), "paths": plan.paths, "seed": plan.seed,
                 "workers": plan.workers, "phi": f"min(u, {cap})"},
        "versions": {"numpy": np.__version__, "python": sys.version.split()[0]},
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    with open(out.with_suffix(".manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {out}")
    return EXIT_PASS


def _cmd_laws(args) -> int:
    cfg = RunConfig(dist_path=Path("unused"), out_dir=Path("."),
                    tol_scale=args.tol_scale)
    rep = check_laws(cfg)
    for row in rep.rows:
        print(", ".join(f"{c}={format_cell(v)}" for c, v in zip(rep.columns, row)))
    print(rep.summary_line())
    return EXIT_PASS if rep.passed else EXIT_CHECK


def _cmd_verify_all(args) -> int:
    cfg = load_config(args.config)
    if args.dist:
        cfg.dist_path = Path(args.dist)
    if args.out:
        cfg.out_dir = Path(args.out)
    if args.seed is not None:
        cfg.seed = args.seed
    cfg.tol_scale *= args.tol_scale
    _, code = verify_all(cfg)
    return code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="reflectedwalk",
        description="Reflected random walks: exact fluctuation tables, reflection "
                    "kernels, and Monte Carlo verification of scaling limits.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="admissibility report for a step law")
    p.add_argument("--dist", required=True)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("fluctuations", help="tau / ladder renewal tables")
    p.add_argument("--dist", required=True)
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--xmax", type=int, default=16)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_fluctuations)

    p = sub.add_parser("kernel", help="reflection kernel, stationary measure, sigma scans")
    p.add_argument("--dist", required=True)
    p.add_argument("--n", type=int, default=2_000)
    p.add_argument("--out", required=True)
    p.add_argument("--x-list", type=lambda s: _parse_ints(s), default=(0, 3), dest="x_list")
    p.set_defaults(func=_cmd_kernel)

    p = sub.add_parser("simulate", help="Monte Carlo functional estimates")
    p.add_argument("--dist", required=True)
    p.add_argument("--n", type=int, default=4096)
    p.add_argument("--paths", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--x0", type=int, default=0)
    p.add_argument("--times", default="0.25,0.5,1.0")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("laws", help="closed-form identity self-checks")
    p.add_argument("--check", default="all", choices=["all"])
    p.add_argument("--tol-scale", type=float, default=1.0)
    p.set_defaults(func=_cmd_laws)

    p = sub.add_parser("verify-all", help="full verification pipeline from a config")
    p.add_argument("--config", required=True)
    p.add_argument("--dist", default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--tol-scale", type=float, default=1.0)
    p.set_defaults(func=_cmd_verify_all)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors; remap
        return EXIT_CONFIG if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ReflectedWalkError as exc:
        print(f"check failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CHECK


if __name__ == "__main__":
    sys.exit(main())
