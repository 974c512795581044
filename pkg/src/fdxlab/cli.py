"""Command-line entry point: flat key=value configs, experiment dispatch, CSV output.

Subcommands: exponents, norms, simulate, threshold, decay, trace, gronwall-check.
Every CSV carries a header row and a trailing '# status: ...' comment line;
floats print with 17 significant digits so identical configs and seeds yield
byte-identical files.

Exit codes: 0 success, 1 domain error, 2 usage error.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import experiments, gronwall, profiles, trace_estimator, ulmorrey
from .exponents import ProblemParams, classify_regime, derive_exponents
from .solver import SolverConfig, simulate

ENV_THREADS = "FDXLAB_THREADS"
SUBCOMMANDS = ("exponents", "norms", "simulate", "threshold", "decay", "trace", "gronwall-check")


def fmt(x) -> str:
    """17-significant-digit float formatting; passthrough for non-floats."""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


def write_csv(path: Path, header: list, rows: list, status: str) -> None:
    lines = [",".join(str(h) for h in header)]
    lines += [",".join(fmt(v) for v in row) for row in rows]
    lines.append(f"# status: {status}")
    path.write_text("\n".join(lines) + "\n")


class ConfigError(Exception):
    """Carries the full list of validation violations."""

    def __init__(self, violations: list):
        self.violations = violations
        super().__init__("; ".join(violations))


@dataclass
class RunConfig:
    subcommand: str
    raw: dict
    out_dir: Path
    seed: int = 0
    threads: int = 1
    file_stem: Optional[str] = None  # default: the subcommand name
    params: Optional[ProblemParams] = None
    profile: Optional[profiles.RadialProfile] = None

    def get(self, key: str, default=None):
        return self.raw.get(key, default)

    def get_float(self, key: str, default=None) -> Optional[float]:
        v = self.raw.get(key)
        return default if v is None else float(v)

    def get_int(self, key: str, default=None) -> Optional[int]:
        v = self.raw.get(key)
        return default if v is None else int(v)

    def get_bool(self, key: str, default=None):
        v = self.raw.get(key)
        if v is None:
            return default
        return v.strip().lower() in ("1", "true", "yes", "on")


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Flat 'key = value' lines; '#' comments; dotted keys for nesting."""
    out = {}
    errors = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            errors.append(f"{source}:{lineno}: expected 'key = value', got {line.strip()!r}")
            continue
        key, value = (part.strip() for part in stripped.split("=", 1))
        if not key:
            errors.append(f"{source}:{lineno}: empty key")
            continue
        out[key] = value
    if errors:
        raise ConfigError(errors)
    return out


_FLOAT_KEYS = {
    "m", "p", "profile.c", "profile.a", "profile.cutoff", "profile.cb", "profile.t0",
    "solver.dt_safety", "solver.u_blowup", "solver.u_floor", "solver.t_end",
    "solver.r_dom", "solver.out_interval", "norm.q", "norm.alpha", "norm.beta",
    "norm.r_cap", "norm.T", "norm.delta", "threshold.horizon", "threshold.c_start",
    "decay.window_lo", "decay.window_hi", "decay.t_offset", "gronwall.T",
    "scan.r_min",
}
_INT_KEYS = {"N", "solver.n_cells", "threshold.bisect_steps", "gronwall.n_draws",
             "gronwall.n_steps", "scan.radii_per_decade"}
_PROFILE_KINDS = ("constant", "power", "critical_log", "barenblatt", "critical_profile")


def validate_config(subcommand: str, raw: dict, out_dir: Path, seed: int, threads: int) -> RunConfig:
    """Full validation pass; collects every violation before failing."""
    violations = []

    for key in sorted(set(raw) & _FLOAT_KEYS):
        try:
            float(raw[key])
        except ValueError:
            violations.append(f"key {key!r}: not a number: {raw[key]!r}")
    for key in sorted(set(raw) & _INT_KEYS):
        try:
            int(raw[key])
        except ValueError:
            violations.append(f"key {key!r}: not an integer: {raw[key]!r}")
    if violations:
        raise ConfigError(violations)

    cfg = RunConfig(subcommand=subcommand, raw=raw, out_dir=out_dir, seed=seed, threads=threads)

    params = None
    if subcommand != "gronwall-check":
        for key in ("N", "m", "p"):
            if key not in raw:
                violations.append(f"key {key!r}: required for subcommand {subcommand!r}")
        if not violations:
            try:
                params = ProblemParams(N=int(raw["N"]), m=float(raw["m"]), p=float(raw["p"]))
            except ValueError as exc:
                key = "m" if "m must" in str(exc) else ("p" if "p must" in str(exc) else "N")
                violations.append(f"key {key!r}: {exc}")
    cfg.params = params

    needs_profile = subcommand in ("norms", "simulate", "threshold", "decay", "trace")
    if needs_profile and params is not None:
        kind = raw.get("profile.kind")
        if kind is None:
            violations.append("key 'profile.kind': required")
        elif kind not in _PROFILE_KINDS:
            violations.append(f"key 'profile.kind': unknown kind {kind!r}")
        else:
            try:
                cfg.profile = build_profile(kind, cfg, params)
            except ValueError as exc:
                violations.append(f"profile: {exc}")

    if violations:
        raise ConfigError(violations)
    return cfg


def build_profile(kind: str, cfg: RunConfig, params: ProblemParams) -> profiles.RadialProfile:
    c = cfg.get_float("profile.c", 1.0)
    cutoff = cfg.get_float("profile.cutoff")
    if kind == "constant":
        return profiles.constant(c, params.N, cutoff)
    if kind == "power":
        return profiles.power_law(c, cfg.get_float("profile.a", 2.0 / (params.p - params.m)), params.N, cutoff)
    if kind == "critical_log":
        return profiles.critical_log(c, params.N, cutoff)
    if kind == "barenblatt":
        return profiles.barenblatt(
            cfg.get_float("profile.cb", 1.0), cfg.get_float("profile.t0", 1.0), params.N, params.m, cutoff
        )
    return profiles.critical_profile(params, c)


def build_solver_config(cfg: RunConfig, t_end: float) -> SolverConfig:
    return SolverConfig(
        params=cfg.params,
        t_end=t_end,
        dt_safety=cfg.get_float("solver.dt_safety", 0.9),
        u_blowup=cfg.get_float("solver.u_blowup", 1e8),
        u_floor=cfg.get_float("solver.u_floor", 1e-4),
        boundary=cfg.get("solver.boundary", "zeroflux"),
        source_on=cfg.get_bool("solver.source_on", True),
        n_cells=cfg.get_int("solver.n_cells", 400),
        r_dom=cfg.get_float("solver.r_dom"),
        out_interval=cfg.get_float("solver.out_interval"),
    )


def _probes(cfg: RunConfig) -> list:
    spec = cfg.get("probes", "1.0")
    return [float(s) for s in spec.split(",") if s.strip()]


def _out_path(cfg: RunConfig, suffix: str = "") -> Path:
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    stem = cfg.file_stem or cfg.subcommand
    return cfg.out_dir / (f"{stem}-{suffix}.csv" if suffix else f"{stem}.csv")


# -- subcommand runners --------------------------------------------------------


def run_exponents(cfg: RunConfig) -> int:
    ex = derive_exponents(cfg.params)
    regime = classify_regime(cfg.params)
    rows = [
        ["p_m", ex.p_m],
        ["theta", ex.theta],
        ["theta_prime", ex.theta_prime],
        ["kappa", ex.kappa],
        ["regime", regime.name.lower()],
    ]
    path = _out_path(cfg)
    write_csv(path, ["quantity", "value"], rows, "ok")
    for name, value in rows:
        print(f"{name} = {fmt(value)}")
    return 0


def run_norms(cfg: RunConfig) -> int:
    kind = cfg.get("norm.kind", "morrey")
    r_cap = cfg.get_float("norm.r_cap", math.inf)
    if kind == "morrey":
        spec = ulmorrey.morrey(cfg.get_float("norm.q", 1.0), cfg.get_float("norm.alpha", 1.0), r_cap)
    elif kind == "orlicz_eta":
        spec = ulmorrey.orlicz_eta(cfg.get_float("norm.alpha", 1.0), r_cap)
    else:
        raise ValueError(f"unknown norm.kind {kind!r}")
    centers = tuple(float(s) for s in cfg.get("scan.centers", "0").split(",") if s.strip())
    scan = ulmorrey.ScanGrid.build(
        spec,
        r_min=cfg.get_float("scan.r_min", 1e-3),
        centers=centers,
        radii_per_decade=cfg.get_int("scan.radii_per_decade", 64),
    )
    result = ulmorrey.norm(cfg.profile, spec, scan, threads=cfg.threads)
    path = _out_path(cfg)
    write_csv(
        path,
        ["value", "center", "radius"],
        [[result.value, result.arg_center, result.arg_radius]],
        f"ok ({result.grid_resolution})",
    )
    print(f"norm value = {fmt(result.value)} at center {fmt(result.arg_center)}, radius {fmt(result.arg_radius)}")

    delta = cfg.get_float("norm.delta")
    if delta is not None:
        T = cfg.get_float("norm.T", 1.0)
        beta_or_alpha = cfg.get_float("norm.beta", cfg.get_float("norm.alpha", 1.0))
        verdict = ulmorrey.check_condition(cfg.params, cfg.profile, T, delta, beta_or_alpha, scan=scan)
        write_csv(
            _out_path(cfg, "verdict"),
            ["regime", "condition_value", "delta", "met", "T"],
            [[verdict.regime.name.lower(), verdict.condition_value, verdict.delta, verdict.met, verdict.T_used]],
            "ok",
        )
        print(f"condition value = {fmt(verdict.condition_value)}, met = {verdict.met}")
    return 0


def run_simulate(cfg: RunConfig) -> int:
    t_end = cfg.get_float("solver.t_end", 1.0)
    scfg = build_solver_config(cfg, t_end)
    trace = simulate(cfg.profile, scfg, _probes(cfg))
    header, rows = trace.csv_rows()
    status = trace.status if trace.t_event is None else f"{trace.status} t={fmt(trace.t_event)}"
    write_csv(_out_path(cfg), header, rows, status)
    print(f"simulate: status={trace.status}, samples={len(trace.times)}, final sup={fmt(trace.sup_norm[-1])}")
    return 0


def run_threshold(cfg: RunConfig) -> int:
    horizon = cfg.get_float("threshold.horizon", 1.0)
    scfg = build_solver_config(cfg, horizon)
    kind = cfg.get("profile.kind")
    params = cfg.params

    def family(c: float) -> profiles.RadialProfile:
        sub = RunConfig(cfg.subcommand, dict(cfg.raw, **{"profile.c": repr(c)}), cfg.out_dir)
        sub.params = params
        return build_profile(kind, sub, params)

    result = experiments.threshold_sweep(
        params,
        family,
        horizon,
        cfg.get_int("threshold.bisect_steps", 8),
        scfg,
        probes=_probes(cfg),
        c_start=cfg.get_float("threshold.c_start", 1.0),
    )
    rows = [
        [s.c, s.status, "" if s.t_event is None else s.t_event, s.proxy_ratio, s.proxy_bounded, s.sup_final]
        for s in result.history
    ]
    write_csv(
        _out_path(cfg),
        ["c", "status", "t_event", "proxy_ratio", "proxy_bounded", "sup_final"],
        rows,
        f"ok bracket=[{fmt(result.c_low)},{fmt(result.c_high)}]",
    )
    print(f"threshold bracket: [{fmt(result.c_low)}, {fmt(result.c_high)}] after {len(result.history)} runs")
    return 0


def run_decay(cfg: RunConfig) -> int:
    t_end = cfg.get_float("solver.t_end", 1.0)
    scfg = build_solver_config(cfg, t_end)
    trace = simulate(cfg.profile, scfg, _probes(cfg))
    offset = cfg.get_float("decay.t_offset", 0.0)
    lo = cfg.get_float("decay.window_lo", (t_end + offset) / 10.0)
    hi = cfg.get_float("decay.window_hi", t_end + offset)
    fit = experiments.decay_fit(trace, cfg.params, (lo, hi), t_offset=offset, T=cfg.get_float("norm.T"))
    write_csv(
        _out_path(cfg),
        ["slope", "n_points", "window_lo", "window_hi", "log_corrected_sup"],
        [[fit.slope, fit.n_points, fit.window[0], fit.window[1],
          "" if fit.log_corrected_sup is None else fit.log_corrected_sup]],
        f"ok trace={trace.status}",
    )
    print(f"decay slope = {fmt(fit.slope)} over window [{fmt(lo)}, {fmt(hi)}]")
    return 0


def run_trace(cfg: RunConfig) -> int:
    t_end = cfg.get_float("solver.t_end", 2e-3)
    scfg = build_solver_config(cfg, t_end)
    trace = simulate(cfg.profile, scfg, _probes(cfg))
    est = trace_estimator.estimate_trace(trace)
    rows = [[s, m, flag] for s, m, flag in zip(est.radii, est.masses, est.converged)]
    status = "ok"
    try:
        fit = trace_estimator.fit_trace_bounds(est, cfg.params, cfg.get_float("norm.T", t_end))
        if fit.slope is not None:
            status = f"ok slope={fmt(fit.slope)} expected={fmt(fit.expected_slope)}"
        else:
            status = f"ok log_shape_residual={fmt(fit.log_shape_residual)}"
    except ValueError as exc:
        status = f"ok (no shape fit: {exc})"
    write_csv(_out_path(cfg), ["sigma", "nu_hat", "converged"], rows, status)
    print(f"trace estimate over {len(rows)} radii; {status}")
    return 0


def run_gronwall_check(cfg: RunConfig) -> int:
    n_draws = cfg.get_int("gronwall.n_draws", 200)
    n_steps = cfg.get_int("gronwall.n_steps", 1000)
    T = cfg.get_float("gronwall.T", 1.0)
    rng = np.random.default_rng(cfg.seed)
    rows = []
    worst = -math.inf
    for k in range(n_draws):
        a1, a2, a3 = rng.uniform(0.0, 2.0, size=3)
        m = float(rng.choice([0.3, 0.5, 0.9]))
        coeffs = gronwall.GronwallCoeffs(A1=float(a1), A2=float(a2), A3=float(a3), m=m, T=T)
        report = gronwall.verify_against_ode(coeffs, n_steps=n_steps)
        ok = report.max_rel_gap <= 1e-8
        worst = max(worst, report.max_rel_gap)
        rows.append([k, a1, a2, a3, m, report.max_rel_gap, ok])
    all_ok = all(bool(r[-1]) for r in rows)
    write_csv(
        _out_path(cfg),
        ["draw", "A1", "A2", "A3", "m", "max_rel_gap", "pass"],
        rows,
        f"{'pass' if all_ok else 'fail'} worst_rel_gap={fmt(worst)}",
    )
    print(f"gronwall-check: {'pass' if all_ok else 'FAIL'} over {n_draws} draws (worst rel gap {fmt(worst)})")
    return 0 if all_ok else 1


_RUNNERS = {
    "exponents": run_exponents,
    "norms": run_norms,
    "simulate": run_simulate,
    "threshold": run_threshold,
    "decay": run_decay,
    "trace": run_trace,
    "gronwall-check": run_gronwall_check,
}


def dispatch(cfg: RunConfig) -> int:
    return _RUNNERS[cfg.subcommand](cfg)


def main(argv: Optional[list] = None) -> int:
    parser = argparse.ArgumentParser(prog="fdxlab", description=__doc__)
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", type=Path, default=None, help="flat key=value config file")
    parser.add_argument("--out", type=Path, default=None, help="output directory for CSV artifacts")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--threads", type=int, default=None)
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override or supply a single config entry")

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0

    threads = args.threads
    if threads is None:
        threads = int(os.environ.get(ENV_THREADS, "1"))
    if threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2

    raw = {}
    try:
        if args.config is not None:
            raw.update(parse_config_text(args.config.read_text(), source=str(args.config)))
        for item in args.set:
            raw.update(parse_config_text(item, source="--set"))
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        for v in exc.violations:
            print(f"error: {v}", file=sys.stderr)
        return 2

    if args.out is not None:
        out_dir, stem = args.out, None
    else:
        out_dir, stem = Path("."), f"{args.subcommand}-{int(time.time())}"

    try:
        cfg = validate_config(args.subcommand, raw, out_dir, args.seed, threads)
        cfg.file_stem = stem
    except ConfigError as exc:
        for v in exc.violations:
            print(f"error: {v}", file=sys.stderr)
        return 2

    try:
        return dispatch(cfg)
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
