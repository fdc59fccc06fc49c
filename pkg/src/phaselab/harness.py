"""Experiment orchestration: configs, limit-behavior experiments, reports.

Five experiment kinds tie the numerical pieces to the limit statements:

  coeffs       transport coefficients per model with both λ₀ routes and
               the factorization identity.
  generation   from smooth two-phase data, at t^ε = μ⁻¹ε²|ln ε| every
               cell must sit in [α−−η, α++η], and cells that started
               M₀ε above/below α must have committed to their phase;
               M₀ is scanned upward and reported per ε.
  propagation  a standing-wave-seeded circle must track the shrinking
               circle law R(t) = √(r₀²−2λ₀t): Hausdorff distance and
               interface width are reported relative to ε.
  profile      for t ≥ ρt^ε the field must look like U₀(d^ε/ε) near its
               own level set, and the level set must stay a graph over
               the law circle.
  barriers     numerical sign checks of the comparison-principle
               barriers: the reaction-flow barriers of the generation
               phase (scanning the constant C₂) and the profile-based
               propagation barriers (demonstrating the necessity of the
               q(t) term by zeroing it).

Configs are JSON files with the ExperimentSpec schema; every run is a
deterministic function of the spec, and reports are written as CSV
tables plus a plain-text pass/fail summary against the frozen
acceptance thresholds.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline

from . import geometry as geo
from . import mcf
from . import pde
from . import profiles as pf
from .model import BistableModel, build_model, generation_time, reaction_flow_grid

__all__ = [
    "ExperimentSpec",
    "CoeffsReport",
    "GenerationReport",
    "PropagationReport",
    "ProfileReport",
    "BarrierReport",
    "default_grid_n",
    "run_coeffs",
    "run_generation",
    "run_propagation",
    "run_profile",
    "check_barriers",
    "run_experiment",
    "emit_report",
]

EXPERIMENT_KINDS = ("coeffs", "generation", "propagation", "profile",
                    "barriers", "all")


@dataclass(frozen=True)
class ExperimentSpec:
    """One experiment: model, grid, ε list, initial data, outputs.

    ``epsilons`` must be strictly decreasing.  ``grid_n`` of None picks
    the per-ε resolution table (about five cells per ε).  ``t_end`` of
    None uses 0.6 of the circle-law extinction time, keeping the front
    smooth and far from the boundary.
    """

    kind: str
    model: str = "linear-cubic"
    model_params: dict = field(default_factory=dict)
    epsilons: tuple = (0.04, 0.02, 0.01)
    grid_n: int | None = None
    bc: str = "periodic"
    center: tuple = (0.5, 0.5)
    radius: float = 0.25
    t_end: float | None = None
    eta: float | None = None          # None -> 0.05 * (alpha_plus - alpha_minus)
    rho: float = 2.0
    amplitude: float = 0.5
    seed: int | None = None
    n_samples: int = 8
    clamp: float = 0.08
    safety: float = 0.4
    diffusion: bool = True            # generation: False -> pure reaction flow
    barrier_epsilon: float = 0.05
    out_dir: str = "results"

    def __post_init__(self):
        if self.kind not in EXPERIMENT_KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        eps = tuple(float(e) for e in self.epsilons)
        if not eps or any(b >= a for a, b in zip(eps, eps[1:])):
            raise ValueError("epsilon list must be strictly decreasing")
        object.__setattr__(self, "epsilons", eps)
        build_model(self.model, self.model_params)  # names must resolve now

    @classmethod
    def from_json(cls, path, **overrides) -> "ExperimentSpec":
        data = json.loads(Path(path).read_text())
        data.update({k: v for k, v in overrides.items() if v is not None})
        if "epsilons" in data:
            data["epsilons"] = tuple(data["epsilons"])
        if "center" in data:
            data["center"] = tuple(data["center"])
        return cls(**data)

    def eta_value(self, model: BistableModel) -> float:
        return self.eta if self.eta is not None else 0.05 * model.span


def default_grid_n(epsilon: float) -> int:
    """Resolution keeping about five cells per ε, clipped to [128, 512]."""
    n = int(round(5.12 / epsilon / 64.0)) * 64
    return int(min(512, max(128, n)))


def _sine_initializer(spec: ExperimentSpec, model: BistableModel):
    amp = spec.amplitude
    alpha = model.alpha
    if spec.seed is None:
        return pde.FunctionInit(
            lambda X, Y: alpha + amp * np.sin(2 * np.pi * X) * np.sin(2 * np.pi * Y))
    rng = np.random.default_rng(spec.seed)
    modes = rng.integers(1, 4, size=(3, 2))
    phases = rng.uniform(0, 2 * np.pi, size=3)
    weights = rng.uniform(-0.2, 0.2, size=3) * amp

    def fn(X, Y):
        u = alpha + amp * np.sin(2 * np.pi * X) * np.sin(2 * np.pi * Y)
        for (kx, ky), ph, w in zip(modes, phases, weights):
            u = u + w * np.sin(2 * np.pi * (kx * X + ky * Y) + ph)
        return u
    return pde.FunctionInit(fn)


# ---------------------------------------------------------------------------
# coeffs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CoeffsReport:
    rows: list

    header = ("model_name", "lambda0", "mobility", "surface_tension",
              "lambda0_alt", "identity_residual", "wave_residual",
              "cross_residual", "corrector_residual")

    def criteria(self):
        out = []
        for r in self.rows:
            name = r["model_name"]
            out.append((f"coeffs[{name}] identity |λ0−μσ| ≤ 1e-7",
                        r["identity_residual"] <= 1e-7,
                        f"{r['identity_residual']:.3e}"))
            out.append((f"coeffs[{name}] cross-formula ≤ 1e-5",
                        r["cross_residual"] <= 1e-5,
                        f"{r['cross_residual']:.3e}"))
            out.append((f"coeffs[{name}] wave residual ≤ 1e-5",
                        r["wave_residual"] <= 1e-5,
                        f"{r['wave_residual']:.3e}"))
            out.append((f"coeffs[{name}] corrector solvability ≤ 1e-6",
                        abs(r["corrector_residual"]) <= 1e-6,
                        f"{r['corrector_residual']:.3e}"))
            if name == "linear-cubic":
                out.append(("coeffs[linear-cubic] λ0 = 1 ± 1e-8",
                            abs(r["lambda0"] - 1.0) <= 1e-8,
                            f"{r['lambda0']!r}"))
        return out


def run_coeffs(spec: ExperimentSpec, models: list[BistableModel] | None = None) -> CoeffsReport:
    if models is None:
        models = [build_model(spec.model, spec.model_params)]
    rows = []
    for model in models:
        coeffs = pf.transport_coefficients(model)
        wave = pf.compute_standing_wave(model)
        lam_alt = pf.compute_lambda0_profile(wave, model)
        corr = pf.compute_corrector(wave, model, coeffs.lambda0, laplacian_d=1.0)
        rows.append({
            "model_name": model.name,
            "lambda0": coeffs.lambda0,
            "mobility": coeffs.mobility,
            "surface_tension": coeffs.surface_tension,
            "lambda0_alt": lam_alt,
            "identity_residual": coeffs.identity_residual,
            "cross_residual": abs(coeffs.lambda0 - lam_alt),
            "wave_residual": pf.standing_wave_residual(wave, model),
            "corrector_residual": corr.solvability_residual,
        })
    return CoeffsReport(rows)


# ---------------------------------------------------------------------------
# generation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GenerationReport:
    rows: list
    eta: float

    header = ("epsilon", "grid_n", "t_eps", "fraction_in_range",
              "violation_i", "violation_ii", "violation_iii", "m0")

    def criteria(self):
        out = []
        for r in self.rows:
            out.append((f"generation[ε={r['epsilon']}] all cells in range",
                        r["violation_i"] <= 0.0,
                        f"violation {r['violation_i']:.3e}"))
            out.append((f"generation[ε={r['epsilon']}] M0 found",
                        math.isfinite(r["m0"]), f"M0={r['m0']}"))
        m0s = [r["m0"] for r in self.rows if math.isfinite(r["m0"])]
        if len(m0s) == len(self.rows) and len(m0s) > 1:
            spread = (max(m0s) - min(m0s)) / min(m0s)
            out.append(("generation M0 stable across ε (<50%)",
                        spread < 0.5, f"spread {spread:.2%}"))
        return out


def _phase_committed(u, u0, model, m0, eps, eta):
    """Violations of the two committed-phase conclusions for this M0."""
    plus = u0 >= model.alpha + m0 * eps
    minus = u0 <= model.alpha - m0 * eps
    v_plus = float(np.max((model.alpha_plus - eta) - u[plus], initial=0.0))
    v_minus = float(np.max(u[minus] - (model.alpha_minus + eta), initial=0.0))
    return v_plus, v_minus


def run_generation(spec: ExperimentSpec) -> GenerationReport:
    model = build_model(spec.model, spec.model_params)
    eta = spec.eta_value(model)
    init = _sine_initializer(spec, model)
    rows = []
    for eps in spec.epsilons:
        n = spec.grid_n or 256
        grid = pde.Grid2D.square(n, bc=spec.bc)
        state = pde.init_state(grid, eps, init, model)
        u0 = state.u.copy()
        if u0.max() <= model.alpha or u0.min() >= model.alpha:
            raise ValueError("initial data must take values on both sides of α")
        t_eps = generation_time(model, eps)
        if spec.diffusion:
            config = pde.SolverConfig(safety=spec.safety, record_every=10 ** 9,
                                      diagnostics_every=50)
            state, _ = pde.run(state, config, model, t_eps)
            u = state.u
        else:
            u = reaction_flow_grid(model, t_eps / eps ** 2, u0)
        viol_i = max(0.0, float(np.max(u - (model.alpha_plus + eta))),
                     float(np.max((model.alpha_minus - eta) - u)))
        in_range = ((u >= model.alpha_minus - eta)
                    & (u <= model.alpha_plus + eta))
        m0 = math.nan
        v_plus = v_minus = math.inf
        for cand in np.arange(1.0, 40.0 + 1e-9, 0.25):
            v_plus, v_minus = _phase_committed(u, u0, model, cand, eps, eta)
            if v_plus <= 0.0 and v_minus <= 0.0:
                m0 = float(cand)
                break
        rows.append({
            "epsilon": eps,
            "grid_n": n,
            "t_eps": t_eps,
            "fraction_in_range": float(np.mean(in_range)),
            "violation_i": viol_i,
            "violation_ii": v_plus,
            "violation_iii": v_minus,
            "m0": m0,
        })
    return GenerationReport(rows, eta)


# ---------------------------------------------------------------------------
# propagation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PropagationReport:
    rows: list
    eta: float
    lambda0: float
    width_bound: float     # frozen admissible width/ε constant: 6·z_η

    header = ("epsilon", "grid_n", "n_samples", "sup_hausdorff",
              "hausdorff_over_eps", "sup_width", "width_over_eps", "extinct")

    def criteria(self):
        out = []
        dists = [r["sup_hausdorff"] for r in self.rows]
        if len(dists) > 1:
            out.append(("propagation Hausdorff decreasing in ε",
                        all(b < a for a, b in zip(dists, dists[1:])),
                        " > ".join(f"{d:.4g}" for d in dists)))
        for r in self.rows:
            out.append((f"propagation[ε={r['epsilon']}] dist/ε ≤ 10",
                        r["hausdorff_over_eps"] <= 10.0,
                        f"{r['hausdorff_over_eps']:.3f}"))
            out.append((f"propagation[ε={r['epsilon']}] width/ε bounded",
                        r["width_over_eps"] <= self.width_bound,
                        f"{r['width_over_eps']:.3f} ≤ {self.width_bound:.3f}"))
        return out


def _sample_times(t_start: float, t_end: float, n: int) -> np.ndarray:
    return np.linspace(max(t_start, 1e-12), t_end, n)


def _circle_run(spec: ExperimentSpec, model, wave, law, eps, times, analyze):
    """Run the seeded circle and apply ``analyze(state, t)`` at each time."""
    n = spec.grid_n or default_grid_n(eps)
    grid = pde.Grid2D.square(n, bc=spec.bc)
    state = pde.init_state(grid, eps,
                           pde.ProfileInit(wave, spec.center, spec.radius), model)
    config = pde.SolverConfig(safety=spec.safety, record_every=10 ** 9,
                              diagnostics_every=50)
    results = []
    extinct = False
    for t in times:
        if t > state.time:
            state, _ = pde.run(state, config, model, t)
        contour = geo.extract_contour(state, model.alpha)
        if contour.is_empty:
            extinct = True
            break
        results.append(analyze(state, contour, float(t)))
    return results, extinct, n


def run_propagation(spec: ExperimentSpec) -> PropagationReport:
    model = build_model(spec.model, spec.model_params)
    lam, _ = pf.compute_lambda0(model)
    wave = pf.compute_standing_wave(model)
    law = mcf.CircleLaw(spec.center, spec.radius, lam)
    t_end = spec.t_end if spec.t_end is not None else 0.6 * law.extinction_time
    eta = spec.eta_value(model)
    z_eta = wave.inverse(model.alpha_plus - eta)
    rows = []
    for eps in spec.epsilons:
        times = _sample_times(generation_time(model, eps), t_end, spec.n_samples)

        def analyze(state, contour, t):
            dist = mcf.front_distance(contour, law.polyline(t))
            width = geo.interface_width(state, model, eta)
            return dist, width

        results, extinct, n = _circle_run(spec, model, wave, law, eps, times,
                                          analyze)
        if not results:
            raise RuntimeError(f"interface extinct before first sample (ε={eps})")
        sup_d = max(r[0] for r in results)
        sup_w = max(r[1] for r in results)
        rows.append({
            "epsilon": eps,
            "grid_n": n,
            "n_samples": len(results),
            "sup_hausdorff": sup_d,
            "hausdorff_over_eps": sup_d / eps,
            "sup_width": sup_w,
            "width_over_eps": sup_w / eps,
            "extinct": int(extinct),
        })
    return PropagationReport(rows, eta, lam, width_bound=6.0 * z_eta)


# ---------------------------------------------------------------------------
# profile
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProfileReport:
    rows: list
    span: float
    lambda0: float

    header = ("epsilon", "grid_n", "n_samples", "sup_profile_error",
              "graph_over_all")

    def criteria(self):
        out = []
        errs = [r["sup_profile_error"] for r in self.rows]
        if len(errs) > 1:
            out.append(("profile error decreasing in ε",
                        all(b < a for a, b in zip(errs, errs[1:])),
                        " > ".join(f"{e:.4g}" for e in errs)))
        final = self.rows[-1]
        out.append((f"profile[ε={final['epsilon']}] sup error ≤ 0.1·span",
                    final["sup_profile_error"] <= 0.1 * self.span,
                    f"{final['sup_profile_error']:.4f} ≤ {0.1 * self.span:.4f}"))
        for r in self.rows:
            out.append((f"profile[ε={r['epsilon']}] graph over reference",
                        bool(r["graph_over_all"]), ""))
        return out


def run_profile(spec: ExperimentSpec) -> ProfileReport:
    model = build_model(spec.model, spec.model_params)
    lam, _ = pf.compute_lambda0(model)
    wave = pf.compute_standing_wave(model)
    law = mcf.CircleLaw(spec.center, spec.radius, lam)
    t_end = spec.t_end if spec.t_end is not None else 0.6 * law.extinction_time
    rows = []
    for eps in spec.epsilons:
        t_start = spec.rho * generation_time(model, eps)
        if t_start >= t_end:
            raise ValueError(
                f"profile window empty for ε={eps}: ρ·t^ε = {t_start:.4g} "
                f"≥ t_end = {t_end:.4g}; decrease ε or extend t_end")
        times = _sample_times(t_start, t_end, spec.n_samples)

        def analyze(state, contour, t):
            err = geo.cross_section(state, contour, wave, eps, clamp=spec.clamp)
            ok, _off = geo.is_graph_over(contour, law.polyline(t))
            return err, ok

        results, _extinct, n = _circle_run(spec, model, wave, law, eps, times,
                                           analyze)
        if not results:
            raise RuntimeError(f"interface extinct before first sample (ε={eps})")
        rows.append({
            "epsilon": eps,
            "grid_n": n,
            "n_samples": len(results),
            "sup_profile_error": max(r[0] for r in results),
            "graph_over_all": int(all(r[1] for r in results)),
        })
    return ProfileReport(rows, model.span, lam)


# ---------------------------------------------------------------------------
# barriers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BarrierReport:
    generation_rows: list
    generation_c2: float          # nan when no scanned C2 worked
    propagation: dict

    header = ("c2", "margin_plus", "margin_minus")

    @property
    def rows(self):
        return self.generation_rows

    def criteria(self):
        prop = self.propagation
        return [
            ("barriers generation margin > 0 for some C2",
             math.isfinite(self.generation_c2),
             f"C2={self.generation_c2}"),
            ("barriers q-term necessity (σ=0 breaks the sign)",
             prop["margin_plus_q0"] < 0.0 or prop["margin_minus_q0"] > 0.0,
             f"L(u+) min {prop['margin_plus_q0']:.3e}, "
             f"L(u-) max {prop['margin_minus_q0']:.3e}"),
        ]


def _reaction_barrier_margins(model, spec, eps, c2, n_pts=24, n_times=4):
    """Min of L(w⁺) and max of L(w⁻) over a space-time stencil.

    The barriers ride the reaction flow: w± = Y(t/ε², u₀ ± P(t)) with
    P(t) = ε²C₂(e^{μt/ε²}−1).  Spatial derivatives use a 4th-order
    five-point stencil on the analytic u₀ (no grid involved); the time
    derivative is a centered difference on the ε² scale.
    """
    alpha = model.alpha
    amp = spec.amplitude

    def u0(x, y):
        return alpha + amp * np.sin(2 * np.pi * x) * np.sin(2 * np.pi * y)

    pts = np.linspace(0.037, 0.963, n_pts)
    xg, yg = np.meshgrid(pts, pts)
    x = xg.ravel()
    y = yg.ravel()
    h = 1e-3
    xs = np.concatenate([x, x + 2 * h, x + h, x - h, x - 2 * h, x, x, x, x])
    ys = np.concatenate([y, y, y, y, y, y + 2 * h, y + h, y - h, y - 2 * h])
    base = u0(xs, ys)
    m = x.size

    t_eps = generation_time(model, eps)
    dt = 1e-3 * eps ** 2
    margins_plus, margins_minus = [], []
    for frac in np.linspace(1.0 / n_times, 1.0, n_times):
        t0 = frac * t_eps
        for sign in (1.0, -1.0):
            w = {}
            for t in (t0 - dt, t0, t0 + dt):
                p = eps ** 2 * c2 * (math.exp(model.mu * t / eps ** 2) - 1.0)
                w[t] = reaction_flow_grid(model, t / eps ** 2, base + sign * p,
                                          dtau=2e-3)
            wt = (w[t0 + dt] - w[t0 - dt]) / (2 * dt)
            v = model.phi(w[t0])
            lap = (-v[m:2 * m] + 16 * v[2 * m:3 * m] - 30 * v[:m]
                   + 16 * v[3 * m:4 * m] - v[4 * m:5 * m]) / (12 * h ** 2)
            lap += (-v[5 * m:6 * m] + 16 * v[6 * m:7 * m] - 30 * v[:m]
                    + 16 * v[7 * m:8 * m] - v[8 * m:9 * m]) / (12 * h ** 2)
            lw = wt[:m] - lap - model.f(w[t0][:m]) / eps ** 2
            if sign > 0:
                margins_plus.append(float(lw.min()))
            else:
                margins_minus.append(float(lw.max()))
    return min(margins_plus), max(margins_minus)


def _propagation_constants(model, wave):
    """β from the tail structure and the admissible σ range estimate."""
    phi_p = model.phi_prime(wave.u0)
    h = wave.dz
    pp_zz = np.empty_like(phi_p)
    pp_zz[1:-1] = (phi_p[2:] - 2 * phi_p[1:-1] + phi_p[:-2]) / h ** 2
    pp_zz[0] = pp_zz[1]
    pp_zz[-1] = pp_zz[-2]
    drift = model.f_prime(wave.u0) + pp_zz

    beta = b = math.nan
    for b_cand in model.eta0 * 2.0 ** -np.arange(1, 12):
        j1 = ((wave.u0 <= model.alpha_minus + b_cand)
              | (wave.u0 >= model.alpha_plus - b_cand))
        top = float(np.max(drift[j1]))
        if top < 0.0:
            b = float(b_cand)
            beta = -top / 3.0
            break
    if not math.isfinite(beta):
        raise RuntimeError("no b with negative tail drift; model degenerate?")

    sigma0 = math.nan
    for s_cand in 2.0 ** -np.arange(0, 20):
        if np.all(wave.u0_z - s_cand * drift >= 3.0 * s_cand * beta):
            sigma0 = float(s_cand)
            break
    lo, hi = model.working_interval
    s = np.linspace(lo, hi, 2001)
    f2 = float(np.abs(model.f_second(s)).max())
    sigma1 = 1.0 / (2.0 * (beta + 1.0))
    return {"b": b, "beta": beta, "sigma0": sigma0, "sigma1": sigma1, "F": f2}


def _profile_barrier_margins(model, wave, corr_unit, law, eps, sigma, beta,
                             K, L, n_r=40, n_th=16, n_times=4):
    """Sign margins of the propagation barriers u± on an annulus stencil.

    d(x,t) = |x−c| − R(t) (the cutoff is inactive on the sampled band),
    Δd = 1/|x−c|, and U₁ scales linearly with Δd.  Spline evaluation of
    the profile keeps the finite differences smooth.
    """
    u0_spline = CubicSpline(wave.z_grid, wave.u0)
    u1_spline = CubicSpline(corr_unit.z_grid, corr_unit.u1)
    z_lo, z_hi = wave.z_grid[0], wave.z_grid[-1]

    def u0_eval(z):
        return np.where(z <= z_lo, model.alpha_minus,
                        np.where(z >= z_hi, model.alpha_plus, u0_spline(z)))

    def u1_eval(z):
        return np.where((z <= z_lo) | (z >= z_hi), 0.0, u1_spline(z))

    t_total = 0.5 * law.extinction_time
    cx, cy = law.center
    d0 = 0.3 * law.r0
    h = 0.02 * eps
    dt_fd = 1e-3 * eps ** 2

    def barrier(x, y, t, sign):
        r = np.hypot(x - cx, y - cy)
        d = r - law.radius(t)
        p = -math.exp(-beta * t / eps ** 2) + math.exp(L * t) + K
        q = sigma * (beta * math.exp(-beta * t / eps ** 2)
                     + eps ** 2 * L * math.exp(L * t))
        z = (d + sign * eps * p) / eps
        lap_d = 1.0 / r
        return u0_eval(z) + eps * lap_d * u1_eval(z) + sign * q

    margin_plus = math.inf
    margin_minus = -math.inf
    where_plus = where_minus = (math.nan, math.nan, math.nan)
    for frac in np.linspace(1.0 / n_times, 1.0, n_times):
        t0 = frac * t_total
        rr = law.radius(t0) + np.linspace(-0.8 * d0, 0.8 * d0, n_r)
        th = np.linspace(0.0, 2 * np.pi, n_th, endpoint=False)
        R, TH = np.meshgrid(rr, th)
        x = (cx + R * np.cos(TH)).ravel()
        y = (cy + R * np.sin(TH)).ravel()
        for sign in (1.0, -1.0):
            w0 = barrier(x, y, t0, sign)
            wt = (barrier(x, y, t0 + dt_fd, sign)
                  - barrier(x, y, t0 - dt_fd, sign)) / (2 * dt_fd)
            lap = np.zeros_like(w0)
            for ex, ey in ((h, 0.0), (0.0, h)):
                vp2 = model.phi(barrier(x + 2 * ex, y + 2 * ey, t0, sign))
                vp1 = model.phi(barrier(x + ex, y + ey, t0, sign))
                vm1 = model.phi(barrier(x - ex, y - ey, t0, sign))
                vm2 = model.phi(barrier(x - 2 * ex, y - 2 * ey, t0, sign))
                lap += (-vp2 + 16 * vp1 - 30 * model.phi(w0)
                        + 16 * vm1 - vm2) / (12 * h ** 2)
            lw = wt - lap - model.f(w0) / eps ** 2
            if sign > 0:
                k = int(np.argmin(lw))
                if lw[k] < margin_plus:
                    margin_plus = float(lw[k])
                    where_plus = (float(x[k]), float(y[k]), float(t0))
            else:
                k = int(np.argmax(lw))
                if lw[k] > margin_minus:
                    margin_minus = float(lw[k])
                    where_minus = (float(x[k]), float(y[k]), float(t0))
    return margin_plus, margin_minus, where_plus, where_minus


def check_barriers(spec: ExperimentSpec,
                   c2_grid=(2.0, 8.0, 16.0, 32.0, 64.0, 128.0),
                   n_pts: int = 24, n_times: int = 4) -> BarrierReport:
    model = build_model(spec.model, spec.model_params)
    eps = spec.barrier_epsilon

    rows = []
    c2_found = math.nan
    for c2 in c2_grid:
        mp, mm = _reaction_barrier_margins(model, spec, eps, c2,
                                           n_pts=n_pts, n_times=n_times)
        rows.append({"c2": c2, "margin_plus": mp, "margin_minus": mm})
        if mp > 0.0 and mm < 0.0 and not math.isfinite(c2_found):
            c2_found = c2

    lam, _ = pf.compute_lambda0(model)
    wave = pf.compute_standing_wave(model)
    corr = pf.compute_corrector(wave, model, lam, laplacian_d=1.0)
    law = mcf.CircleLaw(spec.center, spec.radius, lam)
    consts = _propagation_constants(model, wave)
    eta = spec.eta_value(model)
    z_star = wave.inverse(model.alpha_plus - eta / 4.0)
    K = 1.0 + z_star
    L = 1.0
    sigma = min(consts["sigma0"], consts["sigma1"])
    mp_q, mm_q, _, _ = _profile_barrier_margins(
        model, wave, corr, law, eps, sigma, consts["beta"], K, L)
    mp_0, mm_0, at_p, at_m = _profile_barrier_margins(
        model, wave, corr, law, eps, 0.0, consts["beta"], K, L)
    propagation = dict(consts)
    # the q=0 margins are expected to break sign; record where
    worst = at_p if mp_0 < -mm_0 else at_m
    propagation.update({
        "sigma": sigma, "K": K, "L": L, "lambda0": lam,
        "margin_plus_q": mp_q, "margin_minus_q": mm_q,
        "margin_plus_q0": mp_0, "margin_minus_q0": mm_0,
        "q0_break_x": worst[0], "q0_break_y": worst[1],
        "q0_break_t": worst[2],
    })
    return BarrierReport(rows, c2_found, propagation)


# ---------------------------------------------------------------------------
# dispatch and reports
# ---------------------------------------------------------------------------

def run_experiment(spec: ExperimentSpec):
    if spec.kind == "coeffs":
        from .model import registry_models
        return run_coeffs(spec, registry_models())
    if spec.kind == "generation":
        return run_generation(spec)
    if spec.kind == "propagation":
        return run_propagation(spec)
    if spec.kind == "profile":
        return run_profile(spec)
    if spec.kind == "barriers":
        return check_barriers(spec)
    raise ValueError(f"cannot dispatch kind {spec.kind!r}")


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for r in rows:
            fields = []
            for key in header:
                v = r[key]
                fields.append(f"{v:.17g}" if isinstance(v, float) else str(v))
            fh.write(",".join(fields) + "\n")


def emit_report(results: dict, out_dir) -> tuple[bool, Path]:
    """Write per-experiment CSVs plus a pass/fail summary.

    Returns (all_passed, summary path).  Identical results produce
    byte-identical files.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lines = []
    all_ok = True
    for kind in sorted(results):
        report = results[kind]
        _write_csv(out / f"{kind}.csv", report.header, report.rows)
        if kind == "barriers":
            keys = sorted(report.propagation)
            with open(out / "barriers_propagation.csv", "w") as fh:
                fh.write(",".join(keys) + "\n")
                fh.write(",".join(f"{report.propagation[k]:.17g}"
                                  for k in keys) + "\n")
        for name, ok, detail in report.criteria():
            all_ok &= ok
            status = "PASS" if ok else "FAIL"
            lines.append(f"{status}  {name}" + (f"  [{detail}]" if detail else ""))
    summary = out / "summary.txt"
    summary.write_text("\n".join(lines) + "\n")
    return all_ok, summary
