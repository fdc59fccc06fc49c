"""Standing wave, corrector, and homogenized transport coefficients.

The transition layer between the two stable phases is the unique
increasing solution U₀ of

    (φ(U₀))_zz + f(U₀) = 0,   U₀(−∞) = α−,  U₀(0) = α,  U₀(+∞) = α+.

Multiplying by (φ(U₀))_z and integrating gives the exact first-order
reduction  (φ(U₀))_z = √(2 W(U₀)),  i.e.

    U₀' = √(2 W(U₀)) / φ′(U₀),

which this module integrates outward from U₀(0) = α with a classical
RK4 stepper (no shooting, no eigenvalue hunt; the balance condition
makes the connection automatic).  Profile tails are exponential with
rates √(−f′(α±)/φ′(α±)); the measured decay rate λ₁ is fitted from the
computed derivative and cross-checked against the linearization.

The homogenized speed in the limit interface law V_n = −(N−1)λ₀κ is
computed by two independent routes that must agree:

    λ₀ = ∫ φ′(u)√W(u) du / ∫ √W(u) du          (u-space quadrature)
    λ₀ = ∫ (φ′(U₀)U₀')² dz / ∫ φ′(U₀)(U₀')² dz  (profile z-integrals)

and factors as λ₀ = μ_AC · σ_AC with

    μ_AC = φ*± / ∫ √(2W) du,    σ_AC = (1/φ*±) ∫ φ′ √(2W) du,

the mobility and normalized surface tension of the layer.

The first-order corrector U₁ solves, for a given interface Laplacian Δd,

    (φ′(U₀)U₁)_zz + f′(U₀)U₁ = (λ₀ U₀' − (φ(U₀))') Δd,
    U₁(0) = 0,  φ′(U₀)U₁ bounded,

which in the transformed variable V₁ = φ′(U₀)U₁ is a linear two-point
problem whose solvability condition is exactly the λ₀ identity above.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.linalg import solve_banded

from .model import BistableModel

__all__ = [
    "StandingWave",
    "TransportCoefficients",
    "Corrector",
    "ProfileError",
    "DegenerateWellError",
    "CorrectorError",
    "compute_standing_wave",
    "standing_wave_residual",
    "compute_lambda0",
    "compute_lambda0_profile",
    "compute_mobility",
    "compute_surface_tension",
    "transport_coefficients",
    "compute_corrector",
]

TAIL_CUTOFF = 1e-9


class ProfileError(RuntimeError):
    """Standing-wave integration failed (negative W or bad tail fit)."""


class DegenerateWellError(RuntimeError):
    """The well integral ∫√W collapsed; no transition layer exists."""


class CorrectorError(RuntimeError):
    """Corrector problem unsolvable: λ₀ inconsistent with the wave."""


@dataclass(frozen=True)
class StandingWave:
    """Sampled increasing profile U₀ with derivative and tail metadata."""

    z_grid: np.ndarray
    u0: np.ndarray
    u0_z: np.ndarray
    dz: float
    lambda1: float            # measured tail decay rate (min of the two sides)
    tail_amplitude: float     # Ĉ₀ with |U₀'(z)| ≤ Ĉ₀ e^{−λ₁|z|} on the outer decade
    tail_rate_left: float
    tail_rate_right: float
    tail_fit_r2: float
    lambda1_linearized: float
    model_name: str

    @property
    def half_width(self) -> float:
        return float(self.z_grid[-1])

    def evaluate(self, z):
        """U₀(z) by linear interpolation, constant beyond the grid."""
        return np.interp(z, self.z_grid, self.u0)

    def evaluate_derivative(self, z):
        return np.interp(z, self.z_grid, self.u0_z)

    def inverse(self, u_level: float) -> float:
        """z with U₀(z) = u_level (profile is strictly increasing)."""
        if not (self.u0[0] < u_level < self.u0[-1]):
            raise ValueError(f"level {u_level} outside profile range")
        return float(np.interp(u_level, self.u0, self.z_grid))


def _check_well(model: BistableModel) -> None:
    # catches an invalid model that slipped past validation before the
    # march starts; the slope itself uses the clipped factored sqrt
    u = np.linspace(model.alpha_minus, model.alpha_plus, 2001)
    wmin = float(np.min(model.potential_exact(u)))
    if wmin < -1e-9:
        raise ProfileError(f"W dips to {wmin} inside the well interval")


def _slope_fn(model: BistableModel):
    # scalar fast path for the RK4 march: plain-float Horner instead of
    # numpy scalars (the march makes ~10⁵ slope calls per profile)
    sqrt2 = math.sqrt(2.0)
    a_m, a_p = model.alpha_minus, model.alpha_plus
    pp_rev = tuple(reversed(model._pp.tolist()))
    quot = model._w_quot

    def horner(coeffs, x):
        acc = 0.0
        for c in coeffs:
            acc = acc * x + c
        return acc

    if quot is not None:
        q_rev = tuple(reversed(quot.tolist()))

        def slope(u: float) -> float:
            r = horner(q_rev, u)
            if r < 0.0:
                r = 0.0
            return (sqrt2 * abs((u - a_m) * (u - a_p)) * math.sqrt(r)
                    / horner(pp_rev, u))
    else:
        anti_rev = tuple(reversed(model._w_anti.tolist()))
        w_ref = model._w_ref

        def slope(u: float) -> float:
            w = w_ref - horner(anti_rev, u)
            if w < 0.0:
                w = 0.0
            return sqrt2 * math.sqrt(w) / horner(pp_rev, u)

    return slope


def _march(model, slope, u_start, target, dz, n_steps, tail_cut):
    """RK4 march from the interface toward one well.

    Returns (values, derivatives, switch index).  ``target`` is the
    approached well value; the march always runs along increasing |z|
    with the direction carried by sign(target − u_start).  Beyond the
    point where |target − u| drops under ``tail_cut`` the profile and
    its derivative continue by the analytic exponential asymptote
    (anchored at the last marched value; the slope mismatch there is
    O(tail_cut²), far below the FD residual floor).
    """
    vals = np.empty(n_steps + 1)
    derivs = np.empty(n_steps + 1)
    vals[0] = u_start
    derivs[0] = slope(u_start)
    sgn = 1.0 if target > u_start else -1.0
    u = u_start
    switch = None
    for k in range(n_steps):
        k1 = slope(u)
        k2 = slope(u + sgn * 0.5 * dz * k1)
        k3 = slope(u + sgn * 0.5 * dz * k2)
        k4 = slope(u + sgn * dz * k3)
        u = u + sgn * (dz / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        vals[k + 1] = u
        derivs[k + 1] = slope(u)
        if sgn * (target - u) <= tail_cut:
            switch = k + 1
            break
    if switch is None:
        return vals, derivs, n_steps
    lam = math.sqrt(-float(model.f_prime(target)) / float(model.phi_prime(target)))
    c0 = sgn * (target - vals[switch])
    decay = np.exp(-lam * (np.arange(switch + 1, n_steps + 1) - switch) * dz)
    vals[switch + 1:] = target - sgn * c0 * decay
    # the derivative keeps full relative precision here even where the
    # values saturate the float grid next to the well
    derivs[switch + 1:] = lam * c0 * decay
    return vals, derivs, switch


def _fit_tail(z_abs, uz):
    """Least-squares fit of log U₀' = log Ĉ − λ|z| on the outer decade."""
    logs = np.log(uz)
    A = np.vstack([np.ones_like(z_abs), -z_abs]).T
    coef, *_ = np.linalg.lstsq(A, logs, rcond=None)
    pred = A @ coef
    ss_res = float(np.sum((logs - pred) ** 2))
    ss_tot = float(np.sum((logs - logs.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(coef[1]), float(math.exp(coef[0])), r2


def compute_standing_wave(model: BistableModel,
                          half_width: float | None = None,
                          dz: float | None = None,
                          tail_cutoff: float = TAIL_CUTOFF) -> StandingWave:
    """Integrate the first-order profile ODE outward from U₀(0) = α.

    Defaults: the layer width is estimated from the linearized tail
    rates as 1/λ₁ and the grid takes half_width = 22/λ₁, dz = 0.002/λ₁.
    Explicit arguments must respect half_width ≥ 20/λ₁ and dz ≤ 0.01/λ₁.
    """
    lam_p = math.sqrt(-float(model.f_prime(model.alpha_plus))
                      / float(model.phi_prime(model.alpha_plus)))
    lam_m = math.sqrt(-float(model.f_prime(model.alpha_minus))
                      / float(model.phi_prime(model.alpha_minus)))
    width_est = 1.0 / min(lam_p, lam_m)
    if half_width is None:
        half_width = 22.0 * width_est
    if dz is None:
        dz = 0.002 * width_est
    if half_width < 20.0 * width_est:
        raise ValueError(f"half_width {half_width} < 20×expected width {width_est}")
    if dz > 0.01 * width_est:
        raise ValueError(f"dz {dz} too coarse for expected width {width_est}")

    _check_well(model)
    n = int(round(half_width / dz))
    slope = _slope_fn(model)
    right, right_z, _ = _march(model, slope, model.alpha, model.alpha_plus,
                               dz, n, tail_cutoff)
    left, left_z, _ = _march(model, slope, model.alpha, model.alpha_minus,
                             dz, n, tail_cutoff)

    z = np.arange(-n, n + 1) * dz
    u0 = np.concatenate([left[::-1], right[1:]])
    u0_z = np.concatenate([left_z[::-1], right_z[1:]])

    # strict increase except where the exponential tail saturates the
    # float grid next to the wells (increments below one ulp of α±)
    diffs = np.diff(u0)
    core = ((u0 - model.alpha_minus > 1e-12)
            & (model.alpha_plus - u0 > 1e-12))[:-1]
    if (diffs < 0).any() or (diffs[core] <= 0).any():
        raise ProfileError("computed profile is not strictly increasing")

    # measured decay rates from the outer decade of U0'
    outer = slice(n + int(round(0.9 * n)), 2 * n + 1)
    rate_r, _, r2_r = _fit_tail(z[outer], u0_z[outer])
    outer_l = slice(0, n - int(round(0.9 * n)) + 1)
    rate_l, _, r2_l = _fit_tail(-z[outer_l], u0_z[outer_l])
    lambda1 = min(rate_r, rate_l)
    if lambda1 <= 0:
        raise ProfileError(f"fitted tail rate {lambda1} ≤ 0")
    lam_lin = min(lam_p, lam_m)
    if abs(lambda1 - lam_lin) > 0.05 * lam_lin:
        warnings.warn(
            f"{model.name}: measured tail rate {lambda1:.6g} deviates from "
            f"linearization {lam_lin:.6g} by more than 5%", stacklevel=2)

    zo = np.concatenate([z[outer_l], z[outer]])
    uo = np.concatenate([u0_z[outer_l], u0_z[outer]])
    c_hat = float(np.max(uo * np.exp(lambda1 * np.abs(zo))))

    return StandingWave(z, u0, u0_z, float(dz), float(lambda1), c_hat,
                        float(rate_l), float(rate_r), min(r2_l, r2_r),
                        float(lam_lin), model.name)


def standing_wave_residual(wave: StandingWave, model: BistableModel) -> float:
    """max over interior grid points of |(φ(U₀))_zz + f(U₀)|, centered FD."""
    v = model.phi(wave.u0)
    lap = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / wave.dz ** 2
    return float(np.max(np.abs(lap + model.f(wave.u0[1:-1]))))


# ---------------------------------------------------------------------------
# Transport coefficients
# ---------------------------------------------------------------------------

def _well_integrals(model: BistableModel, abs_tol: float):
    def sqrt_w(u):
        return float(model.potential_sqrt(u))

    den, den_err = integrate.quad(sqrt_w, model.alpha_minus, model.alpha_plus,
                                  epsabs=abs_tol / 10, epsrel=1e-12, limit=400)
    num, num_err = integrate.quad(lambda u: float(model.phi_prime(u)) * sqrt_w(u),
                                  model.alpha_minus, model.alpha_plus,
                                  epsabs=abs_tol / 10, epsrel=1e-12, limit=400)
    if den_err > abs_tol or num_err > abs_tol:
        from .model import QuadratureError
        raise QuadratureError("well integral quadrature did not converge",
                              num / den if den else math.nan,
                              max(den_err, num_err))
    if den <= 1e-12:
        raise DegenerateWellError(f"∫√W = {den}; degenerate double well")
    return num, num_err, den, den_err


def compute_lambda0(model: BistableModel, abs_tol: float = 1e-9) -> tuple[float, float]:
    """Homogenized speed λ₀ = ∫φ′√W / ∫√W with a propagated error bound."""
    num, num_err, den, den_err = _well_integrals(model, abs_tol)
    lam = num / den
    err = (num_err + abs(lam) * den_err) / den
    return float(lam), float(err)


def compute_mobility(model: BistableModel, abs_tol: float = 1e-9) -> tuple[float, float]:
    """Mobility μ_AC = φ*± / ∫√(2W): speed response to constant forcing."""
    _, _, den, den_err = _well_integrals(model, abs_tol)
    denom = math.sqrt(2.0) * den
    mob = model.phi_star / denom
    err = model.phi_star * math.sqrt(2.0) * den_err / denom ** 2
    return float(mob), float(err)


def compute_surface_tension(model: BistableModel, abs_tol: float = 1e-9) -> tuple[float, float]:
    """Surface tension σ_AC = (1/φ*±) ∫φ′√(2W): normalized layer energy."""
    num, num_err, _, _ = _well_integrals(model, abs_tol)
    sig = math.sqrt(2.0) * num / model.phi_star
    return float(sig), float(math.sqrt(2.0) * num_err / model.phi_star)


@dataclass(frozen=True)
class TransportCoefficients:
    """λ₀, μ_AC, σ_AC, φ*± for one model, with quadrature error bounds."""

    model_name: str
    lambda0: float
    mobility: float
    surface_tension: float
    phi_star: float
    identity_residual: float      # |λ₀ − μ_AC σ_AC|
    err_estimates: dict[str, float]


def transport_coefficients(model: BistableModel, abs_tol: float = 1e-9) -> TransportCoefficients:
    """All homogenized coefficients at once, with the factorization check."""
    lam, lam_err = compute_lambda0(model, abs_tol)
    mob, mob_err = compute_mobility(model, abs_tol)
    sig, sig_err = compute_surface_tension(model, abs_tol)
    resid = abs(lam - mob * sig)
    combined = lam_err + mob_err * sig + mob * sig_err
    errors = {"lambda0": lam_err, "mobility": mob_err,
              "surface_tension": sig_err, "identity": combined}
    if not (lam > 0 and mob > 0 and sig > 0 and model.phi_star > 0):
        raise DegenerateWellError("transport coefficients must be positive")
    return TransportCoefficients(model.name, lam, mob, sig, model.phi_star,
                                 resid, errors)


def compute_lambda0_profile(wave: StandingWave, model: BistableModel) -> float:
    """λ₀ from the profile route: ∫(φ′(U₀)U₀')² dz / ∫φ′(U₀)(U₀')² dz.

    Trapezoidal sums over the wave grid plus analytic corrections for
    the exponential tails beyond the last grid points.  Must agree with
    ``compute_lambda0`` within the combined tolerance; the pair is the
    cross-validation of the whole profile machinery.
    """
    phip = model.phi_prime(wave.u0)
    num_integrand = (phip * wave.u0_z) ** 2
    den_integrand = phip * wave.u0_z ** 2
    num = float(np.trapezoid(num_integrand, dx=wave.dz))
    den = float(np.trapezoid(den_integrand, dx=wave.dz))
    # both integrands decay like e^{−2λ|z|}; extend with the fitted rates
    for idx, rate in ((-1, wave.tail_rate_right), (0, wave.tail_rate_left)):
        num += float(num_integrand[idx]) / (2.0 * rate)
        den += float(den_integrand[idx]) / (2.0 * rate)
    if den <= 1e-12:
        raise DegenerateWellError("profile denominator integral vanished")
    return num / den


# ---------------------------------------------------------------------------
# Corrector
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Corrector:
    """First-order inner correction U₁ for a given interface Laplacian Δd."""

    z_grid: np.ndarray
    u1: np.ndarray
    laplacian_d: float
    solvability_residual: float

    def evaluate(self, z):
        return np.interp(z, self.z_grid, self.u1)


def compute_corrector(wave: StandingWave, model: BistableModel, lambda0: float,
                      laplacian_d: float, residual_tol: float = 1e-4) -> Corrector:
    """Solve the corrector problem in the transformed variable V₁ = φ′(U₀)U₁.

        V₁'' + g′(V₀)V₁ = [λ₀/φ′(U₀) − 1] V₀' Δd,   g = f ∘ φ⁻¹,

    closed with homogeneous Dirichlet data at the grid ends (the true
    solution decays exponentially there) and the normalization V₁(0)=0.
    The operator has V₀' in its kernel, so the discrete system is solved
    as a bordered (saddle) system constraining V₁ ⊥ V₀'; the kernel
    component is then re-added to pin the center value to zero.

    Records the solvability integral ∫(λ₀/φ′(U₀) − 1)(V₀')² dz, which is
    zero exactly when λ₀ matches the wave; a value above ``residual_tol``
    raises CorrectorError.
    """
    if not math.isfinite(laplacian_d):
        raise ValueError("laplacian_d must be finite")
    z, h = wave.z_grid, wave.dz
    npts = z.size
    phip = model.phi_prime(wave.u0)
    v0z = phip * wave.u0_z
    gprime = model.f_prime(wave.u0) / phip
    coeff = lambda0 / phip - 1.0
    rhs_profile = coeff * v0z

    solv = float(np.trapezoid(coeff * v0z ** 2, dx=h))
    if abs(solv) > residual_tol:
        raise CorrectorError(
            f"solvability residual {solv:.3e} exceeds {residual_tol}; "
            "lambda0 inconsistent with the standing wave")

    if laplacian_d == 0.0:
        return Corrector(z, np.zeros(npts), 0.0, solv)

    b = rhs_profile * laplacian_d
    b[0] = b[-1] = 0.0
    v1 = _solve_transformed_bvp(gprime, v0z, b, h)

    center = npts // 2
    v1 = v1 - (v1[center] / v0z[center]) * v0z
    u1 = v1 / phip
    return Corrector(z, u1, float(laplacian_d), solv)


def _solve_transformed_bvp(gprime, kernel_guess, b, h, tol=1e-13):
    """Solve −(V₁'' + g′(V₀)V₁) = −b on the kernel complement.

    V₀' is the nodeless top eigenfunction of the operator (eigenvalue
    ≈ 0), so the negated operator S is positive semidefinite with an
    O(1) spectral gap.  The system is solved by conjugate gradients
    projected off the discrete kernel, preconditioned with the shifted
    tridiagonal (S + c)⁻¹; a handful of O(N) banded solves.
    """
    n = b.size
    main = 2.0 / h ** 2 - gprime
    off = np.full(n - 1, -1.0 / h ** 2)
    # symmetric Dirichlet elimination of the two boundary nodes
    main[0] = main[-1] = 1.0
    off[0] = off[-1] = 0.0

    def apply_s(v):
        out = main * v
        out[:-1] += off * v[1:]
        out[1:] += off * v[:-1]
        return out

    def banded(shift):
        ab = np.zeros((3, n))
        ab[0, 1:] = off
        ab[1, :] = main + shift
        ab[2, :-1] = off
        return ab

    # inverse iteration pins down the discrete kernel from the analytic one
    ab_tiny = banded(1e-6)
    k = kernel_guess / np.linalg.norm(kernel_guess)
    k[0] = k[-1] = 0.0
    for _ in range(2):
        k = solve_banded((1, 1), ab_tiny, k)
        k /= np.linalg.norm(k)

    def project(v):
        return v - np.dot(k, v) * k

    ab_prec = banded(0.1)
    rhs = project(-b)
    x = np.zeros(n)
    if np.linalg.norm(rhs) <= 1e-300:
        return x
    r = rhs.copy()
    zv = project(solve_banded((1, 1), ab_prec, r))
    p = zv.copy()
    rz = float(np.dot(r, zv))
    norm0 = float(np.linalg.norm(rhs)) or 1.0
    for _ in range(400):
        sp = project(apply_s(p))
        denom = float(np.dot(p, sp))
        if denom <= 0.0:
            raise CorrectorError("corrector operator lost definiteness")
        alpha = rz / denom
        x += alpha * p
        r -= alpha * sp
        if np.linalg.norm(r) <= tol * norm0:
            break
        zv = project(solve_banded((1, 1), ab_prec, r))
        rz_new = float(np.dot(r, zv))
        p = zv + (rz_new / rz) * p
        rz = rz_new
    else:
        raise CorrectorError("corrector CG did not converge")
    return project(x)
