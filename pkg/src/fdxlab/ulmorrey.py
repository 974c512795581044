"""Uniformly local Morrey and Orlicz-Morrey norms, and the solvability conditions.

The general norm is

    |||f|||_{rho,Phi;R} = sup_z sup_{sigma in (0,R)} rho(sigma) Phi^{-1}( avg_{B(z,sigma)} Phi(f) ).

Two concrete specs are supported:

    morrey(q, alpha):   rho(sigma) = sigma^{N/q},  Phi(xi) = xi^alpha
    orlicz_eta(alpha):  rho(sigma) = eta(sigma/R), Phi = psi_alpha   (R = T^theta)

The sup over centers is approximated by a finite scan: the origin plus any
configured offsets for analytic radial profiles (the radially decreasing
structure puts the sup at the singularity, which the off-center monotonicity
property test cross-checks), and all grid nodes for gridded fields.  Radii are
scanned on a log grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .exponents import ProblemParams, Regime, classify_regime, derive_exponents, validate_beta
from .profiles import RadialProfile, ball_average_power, ball_volume
from .special_functions import eta, psi, psi_inv
from .solver import GridField

MORREY = "morrey"
ORLICZ_ETA = "orlicz_eta"

DEFAULT_RADIUS_CAP = 1e6  # stands in for R = infinity
DEFAULT_RADII_PER_DECADE = 64


@dataclass(frozen=True)
class NormSpec:
    kind: str
    R: float
    q: float = 1.0  # morrey only
    alpha: float = 1.0

    def __post_init__(self):
        if self.kind not in (MORREY, ORLICZ_ETA):
            raise ValueError("norm kind must be 'morrey' or 'orlicz_eta'")
        if not self.R > 0.0:
            raise ValueError("R must be > 0 (use math.inf for an uncapped norm)")
        if self.kind == MORREY and (self.q < 1.0 or self.alpha < 1.0):
            raise ValueError("morrey norm requires q >= 1 and alpha >= 1")
        if self.kind == ORLICZ_ETA and self.alpha <= 0.0:
            raise ValueError("orlicz_eta norm requires alpha > 0")

    def radius_cap(self) -> float:
        return DEFAULT_RADIUS_CAP if math.isinf(self.R) else self.R


def morrey(q: float, alpha: float = 1.0, R: float = math.inf) -> NormSpec:
    return NormSpec(kind=MORREY, R=R, q=q, alpha=alpha)


def orlicz_eta(alpha: float, R: float) -> NormSpec:
    return NormSpec(kind=ORLICZ_ETA, R=R, alpha=alpha)


@dataclass(frozen=True)
class ScanGrid:
    """Finite (center, radius) scan; centers are radial offsets |z|."""

    centers: tuple
    radii: tuple

    @classmethod
    def build(
        cls,
        spec: NormSpec,
        r_min: float,
        centers: tuple = (0.0,),
        radii_per_decade: int = DEFAULT_RADII_PER_DECADE,
    ) -> "ScanGrid":
        r_max = spec.radius_cap() * (1.0 - 1e-9)  # sup runs over the open interval (0, R)
        if r_min <= 0.0 or r_min >= r_max:
            raise ValueError("need 0 < r_min < radius cap")
        decades = math.log10(r_max / r_min)
        n = max(2, int(math.ceil(decades * radii_per_decade)) + 1)
        radii = np.logspace(math.log10(r_min), math.log10(r_max), n)
        return cls(centers=tuple(float(c) for c in centers), radii=tuple(radii))

    @classmethod
    def for_field(cls, field: GridField, spec: NormSpec, radii_per_decade: int = 16) -> "ScanGrid":
        r_max = min(spec.radius_cap(), field.R_dom)
        r_min = field.dr
        if r_min >= r_max:
            raise ValueError("radius cap below the grid spacing")
        decades = math.log10(r_max / r_min)
        n = max(2, int(math.ceil(decades * radii_per_decade)) + 1)
        radii = np.logspace(math.log10(r_min), math.log10(r_max), n)
        return cls(centers=tuple(field.r), radii=tuple(radii))


@dataclass(frozen=True)
class NormResult:
    value: float
    arg_center: float
    arg_radius: float
    grid_resolution: str

    def __post_init__(self):
        if self.value < 0.0:
            raise ValueError("norm value must be >= 0")


@dataclass(frozen=True)
class SolvabilityVerdict:
    regime: Regime
    condition_value: float
    delta: float
    met: bool
    T_used: float


def orlicz_ball_average(
    f,
    alpha: float,
    z,
    sigma: float,
    scale: float = 1.0,
    quad_tol: float = 1e-8,
) -> float:
    """psi_alpha^{-1} of the ball average of psi_alpha(scale * f) over B(z, sigma)."""
    if sigma <= 0.0:
        raise ValueError("sigma must be > 0")
    if isinstance(f, GridField):
        avg = _grid_psi_average(f, alpha, z, sigma, scale)
        return psi_inv(alpha, avg)
    profile: RadialProfile = f
    if profile.kind == "constant" and (profile.cutoff is None or _offset(z) + sigma <= profile.cutoff):
        return scale * profile.c
    from .profiles import radial_ball_integral

    def g(rho: float) -> float:
        v = profile.value(rho)
        return psi(alpha, scale * v) if np.isfinite(v) else np.inf

    pts = (profile.cutoff,) if profile.cutoff is not None else ()
    total = radial_ball_integral(
        g,
        profile.N,
        _offset(z),
        sigma,
        quad_tol,
        breakpoints=pts,
        gw=_orlicz_gw(profile, alpha, scale),
        gw_eps_cap=profile.cutoff if profile.cutoff is not None else math.inf,
    )
    avg = total / ball_volume(profile.N, sigma)
    return psi_inv(alpha, avg)


def _orlicz_gw(profile: RadialProfile, alpha: float, scale: float):
    """Stable w-space integrand psi_alpha(scale f(rho)) rho^N for singular profiles.

    Written via logs so the huge f values near the origin never materialize:
    psi(y) rho^N = exp(log y + N log rho) * [log(e + y)]^alpha.
    """
    if not profile.is_singular_at_origin() or scale <= 0.0:
        return None
    from .profiles import log_rho_of_w

    N = profile.N
    log_scale = math.log(scale)

    def gw(w: float) -> float:
        ly = log_scale + profile.log_value_w(w)
        log_e_plus_y = math.log(math.e + math.exp(ly)) if ly < 600.0 else ly
        return math.exp(ly + N * log_rho_of_w(w)) * log_e_plus_y**alpha

    return gw


def _offset(z) -> float:
    if np.isscalar(z):
        return abs(float(z))
    return float(np.linalg.norm(np.asarray(z, dtype=float)))


def _grid_power_average(field: GridField, expo: float, d: float, sigma: float) -> float:
    powered = GridField(field.N, field.dr, field.u**expo, field.R_dom)
    return powered.ball_mass_at(d, sigma) / ball_volume(field.N, sigma)


def _grid_psi_average(field: GridField, alpha: float, z, sigma: float, scale: float) -> float:
    transformed = GridField(field.N, field.dr, np.asarray(psi(alpha, scale * field.u)), field.R_dom)
    return transformed.ball_mass_at(_offset(z), sigma) / ball_volume(field.N, sigma)


def _ball_quantity(f, spec: NormSpec, d: float, sigma: float, scale: float, quad_tol: float) -> float:
    """The weighted quantity whose (z, sigma)-sup defines the norm."""
    if spec.kind == MORREY:
        N = f.N
        if isinstance(f, GridField):
            avg = _grid_power_average(f, spec.alpha, d, sigma)
            avg *= scale**spec.alpha
        else:
            avg = ball_average_power(f, spec.alpha, d, sigma, quad_tol) * scale**spec.alpha
        return sigma ** (N / spec.q) * avg ** (1.0 / spec.alpha)
    # orlicz_eta: weight eta(sigma / R) with R = T^theta playing the reference scale
    w = eta(f.N, sigma / spec.R)
    return w * orlicz_ball_average(f, spec.alpha, d, sigma, scale=scale, quad_tol=quad_tol)


def norm(
    f,
    spec: NormSpec,
    scan: ScanGrid,
    scale: float = 1.0,
    quad_tol: float = 1e-8,
    threads: int = 1,
) -> NormResult:
    """Max of the spec's weighted ball quantity over the scan grid.

    For analytic power-law profiles scanned at the origin with an uncapped
    Morrey norm, the sigma-dependence is the exact power sigma^{N/q - a}; a
    genuinely divergent norm is reported as inf rather than a scan-edge value.
    """
    if not scan.centers or not scan.radii:
        raise ValueError("scan grid must contain at least one center and one radius")
    radii = [s for s in scan.radii if s < spec.R or (math.isinf(spec.R) and s <= spec.radius_cap())]
    if not radii:
        raise ValueError("scan grid has no radii below the cap R")

    if (
        spec.kind == MORREY
        and isinstance(f, RadialProfile)
        and f.kind == "power"
        and f.cutoff is None
        and math.isinf(spec.R)
    ):
        grow = f.N / spec.q - f.a
        if abs(grow) > 1e-13 and f.c > 0.0:
            # sup over sigma in (0, inf) diverges at one end or the other
            edge = radii[-1] if grow > 0.0 else radii[0]
            return NormResult(
                value=math.inf,
                arg_center=0.0,
                arg_radius=float(edge),
                grid_resolution=f"analytic tail: sigma^{grow:+.3g} unbounded on (0, inf)",
            )

    def column_max(d: float) -> tuple[float, float, float]:
        best_v, best_s = -math.inf, radii[0]
        for s in radii:
            v = _ball_quantity(f, spec, d, s, scale, quad_tol)
            if v > best_v:
                best_v, best_s = v, s
        return best_v, d, best_s

    results = []
    if threads > 1 and len(scan.centers) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(column_max, scan.centers))
    else:
        results = [column_max(d) for d in scan.centers]

    value, center, radius = max(results, key=lambda t: t[0])
    res = f"{len(scan.centers)} centers x {len(radii)} radii in [{radii[0]:.3g}, {radii[-1]:.3g}]"
    return NormResult(value=float(value), arg_center=float(center), arg_radius=float(radius), grid_resolution=res)


def check_condition(
    params: ProblemParams,
    f,
    T: float,
    delta: float,
    beta_or_alpha: float,
    scan: Optional[ScanGrid] = None,
    quad_tol: float = 1e-8,
) -> SolvabilityVerdict:
    """Evaluate the regime's solvability condition left side against delta.

    subcritical:    sup_z mu(B(z, T^theta)) / T^{theta (N - 2/(p-m))}   (finite T)
    critical:       sup_{z,sigma<T^theta} eta(sigma/T^theta) psi_alpha^{-1}(avg psi_alpha(T^{1/(p-1)} mu))
    supercritical:  |||mu|||_{N(p-m)/2, beta; T^theta}                   (T = inf allowed)

    The subcritical condition is normalized by its threshold scale so that
    met == (condition_value <= delta) uniformly across regimes.
    """
    if delta <= 0.0:
        raise ValueError("delta must be > 0")
    regime = classify_regime(params)
    ex = derive_exponents(params)
    if regime is not Regime.SUPERCRITICAL and math.isinf(T):
        raise ValueError("T = inf is admissible only in the supercritical regime")
    if T <= 0.0:
        raise ValueError("T must be > 0")

    if regime is Regime.SUBCRITICAL:
        sigma = T**ex.theta
        centers = scan.centers if scan is not None else (0.0,)
        if isinstance(f, GridField):
            mass = max(f.ball_mass_at(_offset(d), sigma) for d in centers)
        else:
            from .profiles import ball_mass

            mass = max(ball_mass(f, d, sigma, quad_tol) for d in centers)
        threshold_scale = T ** (ex.theta * (params.N - 2.0 / (params.p - params.m)))
        value = mass / threshold_scale
    elif regime is Regime.CRITICAL:
        alpha = beta_or_alpha
        if alpha <= 0.0:
            raise ValueError("critical condition requires alpha > 0")
        spec = orlicz_eta(alpha, R=T**ex.theta)
        if scan is None:
            scan = ScanGrid.build(spec, r_min=1e-3 * spec.R)
        scale = T ** (1.0 / (params.p - 1.0))
        value = norm(f, spec, scan, scale=scale, quad_tol=quad_tol).value
    else:
        beta = beta_or_alpha
        validate_beta(params, beta)
        spec = morrey(q=params.N * (params.p - params.m) / 2.0, alpha=beta, R=T**ex.theta if math.isfinite(T) else math.inf)
        if scan is None:
            r_hi = spec.radius_cap()
            scan = ScanGrid.build(spec, r_min=1e-6 * min(r_hi, 1e3))
        value = norm(f, spec, scan, quad_tol=quad_tol).value

    return SolvabilityVerdict(
        regime=regime,
        condition_value=float(value),
        delta=delta,
        met=bool(value <= delta),
        T_used=T,
    )
