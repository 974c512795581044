"""Radial finite-volume solver for u_t = Laplace(u^m) + u^p with blow-up detection.

The scheme is conservative in the radial variable: with v = u^m, the flux
through the face at radius r is r^{N-1} (v_right - v_left)/dr, cell volumes
are exact ((r_+^N - r_-^N)/N per unit solid angle), and the origin face has
zero area by symmetry.  Time stepping is explicit Euler with the adaptive
stability bound

    dt = dt_safety * min( dr^2 / (2 N max_i m u_i^{m-1}),  1 / (2 max_i u_i^{p-1}) ),

where the diffusivity max includes the fixed-floor ghost value when that
boundary is active (the singular diffusivity m u^{m-1} is what makes the
regularization floor u_floor = 1/n necessary in the first place).

Initial data are projected by exact cell averages of the profile, then
regularized as min(., n) + 1/n with n = 1/u_floor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .exponents import ProblemParams, derive_exponents
from .profiles import SPHERE_AREA, RadialProfile, cell_averages

STATUS_COMPLETED = "completed"
STATUS_BLEW_UP = "blew_up"
STATUS_DT_UNDERFLOW = "dt_underflow"

_DT_UNDERFLOW_FRACTION = 1e-14


@dataclass
class GridField:
    """Nonnegative radial field on uniform cells; r holds the cell centers."""

    N: int
    dr: float
    u: np.ndarray
    R_dom: float

    def __post_init__(self):
        if self.N not in (1, 2, 3):
            raise ValueError("solver supports radial N in {1, 2, 3}")
        if self.dr <= 0.0:
            raise ValueError("dr must be > 0")
        self.u = np.asarray(self.u, dtype=float)
        if self.u.ndim != 1 or len(self.u) == 0:
            raise ValueError("u must be a nonempty 1-D array")
        if not np.all(np.isfinite(self.u)) or np.any(self.u < 0.0):
            raise ValueError("field values must be finite and >= 0")

    @property
    def r(self) -> np.ndarray:
        return (np.arange(len(self.u)) + 0.5) * self.dr

    @property
    def edges(self) -> np.ndarray:
        return np.arange(len(self.u) + 1) * self.dr

    @property
    def volumes(self) -> np.ndarray:
        """Cell volumes per unit solid angle: (r_+^N - r_-^N)/N."""
        e = self.edges
        return (e[1:] ** self.N - e[:-1] ** self.N) / self.N

    def copy(self) -> "GridField":
        return GridField(self.N, self.dr, self.u.copy(), self.R_dom)

    def sup(self) -> float:
        return float(self.u.max())

    def total_mass(self) -> float:
        return SPHERE_AREA[self.N] * float(np.dot(self.u, self.volumes))

    def ball_mass(self, sigma: float) -> float:
        """Exact mass of B(0, sigma) for the piecewise-constant field."""
        if sigma <= 0.0:
            raise ValueError("sigma must be > 0")
        sigma = min(sigma, self.R_dom)
        e, N = self.edges, self.N
        j = int(np.searchsorted(e, sigma) - 1)  # straddling cell index
        vols = self.volumes
        full = float(np.dot(self.u[:j], vols[:j]))
        partial = self.u[j] * (sigma**N - e[j] ** N) / N if j < len(self.u) else 0.0
        return SPHERE_AREA[N] * (full + partial)

    def _interval_integral(self, lo: float, hi: float) -> float:
        """integral of u(rho) drho over [lo, hi] subset [0, R_dom], exact per cell."""
        lo, hi = max(lo, 0.0), min(hi, self.R_dom)
        if hi <= lo:
            return 0.0
        e = self.edges
        i0 = min(int(np.searchsorted(e, lo, side="right") - 1), len(self.u) - 1)
        i1 = min(int(np.searchsorted(e, hi, side="left") - 1), len(self.u) - 1)
        if i0 == i1:
            return self.u[i0] * (hi - lo)
        total = self.u[i0] * (e[i0 + 1] - lo) + self.u[i1] * (hi - e[i1])
        total += float(np.sum(self.u[i0 + 1 : i1])) * self.dr
        return total

    def ball_mass_at(self, d: float, sigma: float) -> float:
        """Mass of B(z, sigma) for |z| = d; exact in 1-D, cell-wise Gauss for N >= 2."""
        if d == 0.0:
            return self.ball_mass(sigma)
        if self.N == 1:
            inner = self._interval_integral(0.0, max(sigma - d, 0.0))
            outer = self._interval_integral(abs(sigma - d) if d < sigma else d - sigma, d + sigma)
            return 2.0 * inner + outer if d < sigma else outer + 2.0 * inner
        from .profiles import cap_measure  # local import keeps module load light

        nodes, weights = np.polynomial.legendre.leggauss(6)
        lo, hi = max(0.0, d - sigma), min(d + sigma, self.R_dom)
        total = 0.0
        e = self.edges
        kink = abs(sigma - d)
        for i, ui in enumerate(self.u):
            a, b = max(e[i], lo), min(e[i + 1], hi)
            if b <= a or ui == 0.0:
                continue
            segs = [(a, kink), (kink, b)] if a < kink < b else [(a, b)]
            for sa, sb in segs:
                if sb <= sa:
                    continue
                mid, half = 0.5 * (sa + sb), 0.5 * (sb - sa)
                val = sum(
                    w * cap_measure(self.N, mid + half * x, d, sigma) for x, w in zip(nodes, weights)
                )
                total += ui * half * val
        return total


def make_grid(N: int, n_cells: int, R_dom: float) -> GridField:
    """Empty grid geometry (all-zero field) for projection and regularization."""
    if n_cells < 2:
        raise ValueError("need at least 2 cells")
    return GridField(N=N, dr=R_dom / n_cells, u=np.zeros(n_cells), R_dom=R_dom)


@dataclass(frozen=True)
class SolverConfig:
    params: ProblemParams
    t_end: float
    dt_safety: float = 0.9
    u_blowup: float = 1e8
    u_floor: float = 1e-4  # regularization floor 1/n; 0 disables cap and shift
    boundary: str = "zeroflux"  # "zeroflux" | "fixedfloor"
    source_on: bool = True
    n_cells: int = 400
    r_dom: Optional[float] = None  # default 8 * t_end^theta
    out_interval: Optional[float] = None  # default t_end / 200
    energy_beta: Optional[float] = None
    energy_sigma: Optional[float] = None

    def __post_init__(self):
        if not (0.0 < self.dt_safety < 1.0):
            raise ValueError("dt_safety must lie in (0, 1)")
        if self.u_blowup <= 1.0:
            raise ValueError("u_blowup must be > 1")
        if self.t_end <= 0.0:
            raise ValueError("t_end must be > 0")
        if self.u_floor < 0.0:
            raise ValueError("u_floor must be >= 0")
        if self.boundary not in ("zeroflux", "fixedfloor"):
            raise ValueError("boundary must be 'zeroflux' or 'fixedfloor'")
        if self.boundary == "fixedfloor" and self.u_floor <= 0.0:
            raise ValueError("fixedfloor boundary requires u_floor > 0")

    def domain_radius(self) -> float:
        if self.r_dom is not None:
            return self.r_dom
        theta = derive_exponents(self.params).theta
        return 8.0 * self.t_end**theta

    def output_interval(self) -> float:
        return self.out_interval if self.out_interval is not None else self.t_end / 200.0


@dataclass
class SolverTrace:
    """Time series of sup norms, centered ball masses, and termination status."""

    times: np.ndarray
    sup_norm: np.ndarray
    probe_radii: tuple
    ball_mass: np.ndarray  # shape (n_times, n_probes)
    status: str
    t_event: Optional[float] = None
    energy_beta: Optional[np.ndarray] = None
    beta: Optional[float] = None
    final_field: Optional[GridField] = None

    def __post_init__(self):
        if np.any(np.diff(self.times) <= 0.0):
            raise ValueError("trace times must be strictly increasing")

    @property
    def t_blowup(self) -> Optional[float]:
        return self.t_event if self.status == STATUS_BLEW_UP else None

    def csv_rows(self):
        header = ["t", "sup_norm"] + [f"mass_sigma_{j}" for j in range(len(self.probe_radii))]
        if self.energy_beta is not None:
            header.append("energy_beta")
        rows = []
        for k in range(len(self.times)):
            row = [self.times[k], self.sup_norm[k], *self.ball_mass[k]]
            if self.energy_beta is not None:
                row.append(self.energy_beta[k])
            rows.append(row)
        return header, rows


def regularize_initial(profile: RadialProfile, n: float, grid: GridField) -> GridField:
    """Project by exact cell averages, then apply the cap-and-floor min(., n) + 1/n."""
    if n <= 0.0:
        raise ValueError("n must be > 0")
    avg = cell_averages(profile, grid.edges, grid.N)
    u = np.minimum(avg, n) + 1.0 / n
    return GridField(grid.N, grid.dr, u, grid.R_dom)


def project_initial(profile: RadialProfile, cfg: SolverConfig) -> GridField:
    grid = make_grid(cfg.params.N, cfg.n_cells, cfg.domain_radius())
    if cfg.u_floor > 0.0:
        return regularize_initial(profile, 1.0 / cfg.u_floor, grid)
    u = cell_averages(profile, grid.edges, grid.N)
    return GridField(grid.N, grid.dr, u, grid.R_dom)


def stable_dt(field: GridField, cfg: SolverConfig) -> float:
    """The explicit-scheme bound; returns 0 when the diffusivity is unbounded."""
    m, p = cfg.params.m, cfg.params.p
    u_min = float(field.u.min())
    if cfg.boundary == "fixedfloor":
        u_min = min(u_min, cfg.u_floor)
    if u_min <= 0.0:
        return 0.0
    diff_bound = field.dr**2 * u_min ** (1.0 - m) / (2.0 * field.N * m)
    if cfg.source_on:
        u_max = float(field.u.max())
        src_bound = 0.5 * u_max ** (1.0 - p) if u_max > 0.0 else math.inf
        return cfg.dt_safety * min(diff_bound, src_bound)
    return cfg.dt_safety * diff_bound


class _Stepper:
    """Preallocated work arrays for the inner update; one instance per run."""

    def __init__(self, field: GridField, cfg: SolverConfig):
        N, dr, M = field.N, field.dr, len(field.u)
        faces = np.arange(M + 1) * dr
        areas = faces ** (N - 1)
        areas[0] = 0.0  # symmetry at the origin, also forces N=1 inner face off
        vols = (faces[1:] ** N - faces[:-1] ** N) / N
        scale = 1.0 / (dr * vols)
        self.coef_r = areas[1:] * scale  # multiplies flux through the outer face of cell i
        self.coef_l = areas[:-1] * scale
        self.cfg = cfg
        self.m, self.p = cfg.params.m, cfg.params.p
        self.v = np.empty(M)
        self.lap = np.empty(M)
        self.src = np.empty(M)
        self.ghost_v = cfg.u_floor**self.m if cfg.boundary == "fixedfloor" else None

    def apply(self, u: np.ndarray, dt: float) -> None:
        m, p = self.m, self.p
        v, lap = self.v, self.lap
        np.power(u, m, out=v)
        dv = v[1:] - v[:-1]
        np.multiply(self.coef_r[:-1], dv, out=lap[:-1])
        lap[-1] = 0.0
        lap[1:] -= self.coef_l[1:] * dv
        if self.ghost_v is not None:
            lap[-1] += self.coef_r[-1] * (self.ghost_v - v[-1])
        if self.cfg.source_on:
            np.power(u, p, out=self.src)
            self.src += lap
            u += dt * self.src
        else:
            u += dt * lap
        if self.cfg.boundary == "fixedfloor":
            np.maximum(u, self.cfg.u_floor, out=u)
        elif u.min() < 0.0:
            raise RuntimeError("negative cell value: dt exceeded the stability bound")


def step(field: GridField, cfg: SolverConfig, dt: float) -> GridField:
    """One explicit finite-volume update; validates dt against the stability bound."""
    bound = stable_dt(field, cfg)
    if dt > bound * (1.0 + 1e-12):
        raise ValueError(f"dt={dt} exceeds the stability bound {bound}")
    out = field.copy()
    _Stepper(out, cfg).apply(out.u, dt)
    return out


def simulate(profile: RadialProfile, cfg: SolverConfig, probes: list | tuple) -> SolverTrace:
    """Integrate from the regularized projection of the profile.

    Terminates at t_end (completed), at sup >= u_blowup (blew_up), or when the
    adaptive dt underflows below 1e-14 * t_end (dt_underflow).  Samples are
    recorded at t = 0 and every output interval.
    """
    probes = tuple(float(s) for s in probes)
    if any(s <= 0.0 for s in probes):
        raise ValueError("probe radii must be > 0")
    field = project_initial(profile, cfg)
    stepper = _Stepper(field, cfg)
    u = field.u

    record_energy = cfg.energy_beta is not None
    e_sigma = cfg.energy_sigma if cfg.energy_sigma is not None else field.R_dom

    times, sups, masses, energies = [], [], [], []

    def record(t: float) -> None:
        times.append(t)
        sups.append(float(u.max()))
        masses.append([field.ball_mass(s) for s in probes])
        if record_energy:
            mb, _ = energy_diagnostics(field, cfg.energy_beta, e_sigma, cfg.params.m)
            energies.append(mb)

    out_dt = cfg.output_interval()
    t, next_out = 0.0, out_dt
    record(0.0)
    status, t_event = STATUS_COMPLETED, None
    dt_min = _DT_UNDERFLOW_FRACTION * cfg.t_end

    while t < cfg.t_end:
        if float(u.max()) >= cfg.u_blowup:
            status, t_event = STATUS_BLEW_UP, t
            break
        dt = stable_dt(field, cfg)
        if dt < dt_min:
            status, t_event = STATUS_DT_UNDERFLOW, t
            break
        dt = min(dt, cfg.t_end - t, next_out - t)
        stepper.apply(u, dt)
        t += dt
        if t >= next_out - 1e-12 * cfg.t_end:
            record(t)
            next_out = min(next_out + out_dt, cfg.t_end)
            if t >= cfg.t_end:
                break

    if status != STATUS_COMPLETED and (not times or times[-1] < t):
        record(t)

    return SolverTrace(
        times=np.asarray(times),
        sup_norm=np.asarray(sups),
        probe_radii=probes,
        ball_mass=np.asarray(masses),
        status=status,
        t_event=t_event,
        energy_beta=np.asarray(energies) if record_energy else None,
        beta=cfg.energy_beta,
        final_field=field,
    )


def energy_diagnostics(field: GridField, beta: float, sigma: float, m: float = 0.5) -> tuple[float, float]:
    """(integral of u^beta, integral of u^{m+beta-3} |grad u|^2) over B(0, sigma).

    The gradient uses central differences, one-sided at the ends; the ball is
    weighted by exact cell volumes with a partial straddling cell.
    """
    if beta <= 1.0:
        raise ValueError("beta must be > 1")
    if np.any(field.u <= 0.0):
        raise ValueError("energy diagnostics require a strictly positive field")
    u, dr, N = field.u, field.dr, field.N
    grad = np.empty_like(u)
    grad[1:-1] = (u[2:] - u[:-2]) / (2.0 * dr)
    grad[0] = (u[1] - u[0]) / dr
    grad[-1] = (u[-1] - u[-2]) / dr

    vols = field.volumes
    e = field.edges
    sigma = min(sigma, field.R_dom)
    j = int(np.searchsorted(e, sigma) - 1)
    w = np.zeros_like(u)
    w[:j] = vols[:j]
    if j < len(u):
        w[j] = (sigma**N - e[j] ** N) / N

    mass_beta = SPHERE_AREA[N] * float(np.dot(u**beta, w))
    dirichlet = SPHERE_AREA[N] * float(np.dot(u ** (m + beta - 3.0) * grad**2, w))
    return mass_beta, dirichlet


@dataclass(frozen=True)
class DecayCheckReport:
    C: float
    window: tuple[float, float]
    R: float
    n_points: int


def linfty_decay_check(trace: SolverTrace, params: ProblemParams, r: float, R: float) -> DecayCheckReport:
    """Smallest C with sup(t) <= C t^{-N/kappa_r} M(t)^{2/kappa_r} + (t/R^2)^{1/(1-m)}
    along the trace, where M(t) is the running max of the recorded mass at radius R.

    Only r = 1 is supported: the trace records plain masses.  The scan is
    restricted to the window where t^{1/(p-1)} * sup(t) <= 1.
    """
    from .exponents import kappa_r as kappa_r_fn

    if r != 1.0:
        raise ValueError("linfty_decay_check supports r = 1 (the trace records linear ball masses)")
    kr = kappa_r_fn(params, r)
    if not kr.positive:
        raise ValueError("kappa_r must be positive")
    try:
        col = next(j for j, s in enumerate(trace.probe_radii) if abs(s - R) <= 1e-9 * max(1.0, R))
    except StopIteration:
        raise ValueError(f"trace has no mass probe at radius {R}") from None

    t = trace.times
    sup = trace.sup_norm
    pexp = 1.0 / (params.p - 1.0)
    in_window = (t > 0.0) & (t**pexp * sup <= 1.0)
    if not np.any(in_window):
        raise ValueError("empty window: no trace times satisfy t^{1/(p-1)} sup <= 1")

    mass_running = np.maximum.accumulate(trace.ball_mass[:, col])
    tw = t[in_window]
    sw = sup[in_window]
    mw = mass_running[in_window]
    tail = (tw / R**2) ** (1.0 / (1.0 - params.m))
    numer = np.maximum(sw - tail, 0.0)
    C = 0.0
    for k in range(len(tw)):
        if numer[k] == 0.0:
            continue
        if mw[k] <= 0.0:
            C = math.inf
            break
        C = max(C, numer[k] * tw[k] ** (params.N / kr.value) / mw[k] ** (2.0 / kr.value))
    return DecayCheckReport(C=C, window=(float(tw[0]), float(tw[-1])), R=R, n_points=int(len(tw)))


def scaling_transform(obj, lam: float, params: ProblemParams):
    """Rescaling u_lam(x, t) = lam^{2/(p-m)} u(lam x, lam^{theta'} t) applied to a
    field snapshot or a full trace (grid, time axis, masses, and probe radii all
    transform accordingly)."""
    if lam <= 0.0:
        raise ValueError("lambda must be > 0")
    s = 2.0 / (params.p - params.m)
    tp = derive_exponents(params).theta_prime
    if isinstance(obj, GridField):
        return GridField(obj.N, obj.dr / lam, lam**s * obj.u, obj.R_dom / lam)
    if isinstance(obj, SolverTrace):
        mass_scale = lam ** (s - params.N)
        return SolverTrace(
            times=obj.times / lam**tp,
            sup_norm=lam**s * obj.sup_norm,
            probe_radii=tuple(r / lam for r in obj.probe_radii),
            ball_mass=mass_scale * obj.ball_mass,
            status=obj.status,
            t_event=obj.t_event / lam**tp if obj.t_event is not None else None,
            energy_beta=None,
            beta=obj.beta,
            final_field=scaling_transform(obj.final_field, lam, params) if obj.final_field else None,
        )
    raise TypeError("scaling_transform accepts a GridField or a SolverTrace")
