"""Bistable reaction / nonlinear-flux model definition and validation.

The PDE under study is

    u_t = Δφ(u) + ε⁻² f(u)

where f is bistable with zeros α− < α < α+ (outer zeros stable, middle
unstable), φ is a strictly increasing flux (φ′ ≥ c_φ > 0), and f, φ are
tied together by the balance condition

    ∫_{α−}^{α+} φ′(s) f(s) ds = 0,

which guarantees a speed-zero transition layer.  The derived double-well
potential is

    W(u) = −∫_{α−}^{u} f(s) φ′(s) ds,

nonnegative on [α−, α+] and vanishing exactly at α±.

Models are supplied through a closed registry of named polynomial pairs
(so that all derivatives are exact): ``linear-cubic``, ``cubic-flux``,
``quintic-reaction`` and a generic ``polynomial`` entry taking raw
coefficient lists.  A model instance is the single source of truth for
every scalar constant used downstream (c_φ, μ = f′(α), η₀, stiffness
bounds, φ*±).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy import integrate

__all__ = [
    "BistableModel",
    "CheckResult",
    "ValidationReport",
    "PotentialSample",
    "ModelValidationError",
    "QuadratureError",
    "ReactionBlowUpError",
    "validate_model",
    "potential",
    "sample_potential",
    "reaction_flow",
    "reaction_flow_grid",
    "generation_time",
    "linear_cubic",
    "cubic_flux",
    "quintic_reaction",
    "scaled_linear",
    "from_polynomials",
    "build_model",
    "registry_models",
    "MODEL_REGISTRY",
]


class ModelValidationError(ValueError):
    """Raised when a candidate (φ, f) pair fails an admissibility check."""

    def __init__(self, report: "ValidationReport"):
        self.report = report
        failed = ", ".join(c.name for c in report.checks if not c.passed)
        super().__init__(f"model rejected; failed checks: {failed}")


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not reach the requested absolute error."""

    def __init__(self, message: str, value: float, achieved: float):
        super().__init__(f"{message} (value={value!r}, achieved error={achieved:.3e})")
        self.value = value
        self.achieved = achieved


class ReactionBlowUpError(RuntimeError):
    """Reaction ODE left the working interval (signals an inadmissible f)."""


def _polyval(coeffs, u):
    return npoly.polyval(np.asarray(u, dtype=float), np.asarray(coeffs))


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    residual: float
    detail: str = ""


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[CheckResult, ...]
    tol: float

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[CheckResult]:
        return [c for c in self.checks if not c.passed]

    def summary(self) -> str:
        lines = []
        for c in self.checks:
            status = "pass" if c.passed else "FAIL"
            extra = f"  {c.detail}" if c.detail else ""
            lines.append(f"{status:4s}  {c.name:28s} residual={c.residual:+.3e}{extra}")
        return "\n".join(lines)


@dataclass(frozen=True)
class PotentialSample:
    """Sampled double well W on a monotone grid spanning [α−, α+]."""

    u_grid: np.ndarray
    w_values: np.ndarray


@dataclass(frozen=True)
class BistableModel:
    """An admissible (φ, f) pair with exact polynomial derivatives.

    All evaluation methods accept scalars or arrays.  Instances are
    immutable and safe to share across threads; every scalar that other
    modules need (μ, η₀, c_φ, stiffness bounds, φ*±) lives here.
    """

    name: str
    phi_coeffs: tuple[float, ...]
    f_coeffs: tuple[float, ...]
    alpha_minus: float
    alpha: float
    alpha_plus: float
    c_phi: float = float("nan")       # measured min φ′ on the working interval
    mu: float = float("nan")          # f′(α) > 0
    eta0: float = float("nan")        # min(α − α−, α+ − α)
    max_abs_fprime: float = float("nan")   # over the working interval
    max_phi_prime: float = float("nan")    # over the working interval
    validation: ValidationReport | None = None

    # -- derived coefficient arrays (filled in __post_init__) --------------
    def __post_init__(self):
        fc = np.asarray(self.f_coeffs, dtype=float)
        pc = np.asarray(self.phi_coeffs, dtype=float)
        object.__setattr__(self, "_fp", npoly.polyder(fc))
        object.__setattr__(self, "_fpp", npoly.polyder(fc, 2))
        object.__setattr__(self, "_pp", npoly.polyder(pc))
        object.__setattr__(self, "_pps", npoly.polyder(pc, 2))
        # antiderivative A of f·φ′;  W(u) = A(α−) − A(u)
        fphi = npoly.polymul(fc, npoly.polyder(pc))
        A = npoly.polyint(fphi)
        object.__setattr__(self, "_w_anti", A)
        object.__setattr__(self, "_w_ref", float(npoly.polyval(self.alpha_minus, A)))
        # W has double roots at both wells; factoring them out gives full
        # relative precision near α± where the antiderivative form cancels
        # to rounding noise (needed by the profile ODE tails)
        wc = -A
        wc[0] += self._w_ref
        roots = npoly.polymul(
            npoly.polymul((-self.alpha_minus, 1.0), (-self.alpha_minus, 1.0)),
            npoly.polymul((-self.alpha_plus, 1.0), (-self.alpha_plus, 1.0)))
        quot, rem = npoly.polydiv(wc, roots)
        scale = max(float(np.abs(wc).max()), 1e-300)
        if float(np.abs(rem).max()) <= 1e-9 * scale:
            object.__setattr__(self, "_w_quot", quot)
        else:
            object.__setattr__(self, "_w_quot", None)

    # -- function evaluation ------------------------------------------------
    def phi(self, u):
        return _polyval(self.phi_coeffs, u)

    def phi_prime(self, u):
        return _polyval(self._pp, u)

    def phi_second(self, u):
        return _polyval(self._pps, u)

    def f(self, u):
        return _polyval(self.f_coeffs, u)

    def f_prime(self, u):
        return _polyval(self._fp, u)

    def f_second(self, u):
        return _polyval(self._fpp, u)

    def potential_exact(self, u):
        """W(u) through the exact polynomial antiderivative (vectorized).

        This is the fast path used by field-level code (energy, profile
        ODE right-hand sides); ``potential`` below is the quadrature
        route and the two are cross-checked in the test suite.  Values
        can round to ~−1e−17 at the well bottoms; callers taking square
        roots should clip at zero.
        """
        return self._w_ref - _polyval(self._w_anti, u)

    def potential_sqrt(self, u):
        """√max(W(u), 0), cancellation-free near the wells.

        Uses the factored form √W = |u − α−||u − α+|√R(u) when the
        double-root division succeeded (always, for the built-in
        registry); falls back to the clipped antiderivative otherwise.
        """
        u = np.asarray(u, dtype=float)
        if self._w_quot is not None:
            r = np.clip(_polyval(self._w_quot, u), 0.0, None)
            return np.abs((u - self.alpha_minus) * (u - self.alpha_plus)) * np.sqrt(r)
        return np.sqrt(np.clip(self.potential_exact(u), 0.0, None))

    # -- bookkeeping ---------------------------------------------------------
    @property
    def working_interval(self) -> tuple[float, float]:
        return (self.alpha_minus - 1.0, self.alpha_plus + 1.0)

    @property
    def phi_star(self) -> float:
        """Normalized flux gap φ*± = (φ(α+) − φ(α−)) / (α+ − α−)."""
        return float(
            (self.phi(self.alpha_plus) - self.phi(self.alpha_minus))
            / (self.alpha_plus - self.alpha_minus)
        )

    @property
    def span(self) -> float:
        return self.alpha_plus - self.alpha_minus


def _scan_extrema(model: BistableModel, n: int = 1001):
    lo, hi = model.working_interval
    s = np.linspace(lo, hi, n)
    return s, model.phi_prime(s), model.f(s), model.f_prime(s)


def validate_model(candidate: BistableModel, tol: float = 1e-8) -> ValidationReport:
    """Check the admissibility conditions for a candidate (φ, f) pair.

    Conditions: f vanishes exactly at α− < α < α+ with stable outer and
    unstable middle slopes, f keeps a definite sign outside [α−, α+],
    φ′ is bounded below by a positive constant on the working interval
    [α− − 1, α+ + 1], and the equal-area balance integral vanishes.
    The candidate is accepted iff every check passes.
    """
    checks: list[CheckResult] = []
    a_m, a, a_p = candidate.alpha_minus, candidate.alpha, candidate.alpha_plus

    checks.append(CheckResult("zero_ordering", a_m < a < a_p, 0.0,
                              f"({a_m}, {a}, {a_p})"))

    s, phip, fvals, fpvals = _scan_extrema(candidate)
    finite = np.isfinite(phip) & np.isfinite(fvals) & np.isfinite(fpvals)
    if finite.all():
        checks.append(CheckResult("finite_values", True, 0.0))
    else:
        bad = float(s[np.argmin(finite)])
        checks.append(CheckResult("finite_values", False, math.inf,
                                  f"non-finite value at u={bad}"))
        return ValidationReport(tuple(checks), tol)

    for label, root in (("f_zero_alpha_minus", a_m), ("f_zero_alpha", a),
                        ("f_zero_alpha_plus", a_p)):
        r = float(candidate.f(root))
        checks.append(CheckResult(label, abs(r) <= tol, r))

    fp_m = float(candidate.f_prime(a_m))
    fp_0 = float(candidate.f_prime(a))
    fp_p = float(candidate.f_prime(a_p))
    checks.append(CheckResult("f_slope_alpha_minus", fp_m < 0, fp_m))
    checks.append(CheckResult("f_slope_alpha", fp_0 > 0, fp_0))
    checks.append(CheckResult("f_slope_alpha_plus", fp_p < 0, fp_p))

    below = s < a_m - tol
    above = s > a_p + tol
    sign_ok = bool(np.all(fvals[below] > 0)) and bool(np.all(fvals[above] < 0))
    worst = 0.0
    if below.any():
        worst = min(worst, float(fvals[below].min()))
    if above.any():
        worst = min(worst, float(-fvals[above].max()))
    checks.append(CheckResult("f_sign_outside_wells", sign_ok, worst))

    cphi = float(phip.min())
    at = float(s[np.argmin(phip)])
    checks.append(CheckResult("phi_prime_positive", cphi > 0, cphi,
                              f"min φ′ at u={at:.6g}"))

    area, aerr = integrate.quad(
        lambda x: candidate.phi_prime(x) * candidate.f(x), a_m, a_p,
        epsabs=1e-13, epsrel=1e-12, limit=200)
    checks.append(CheckResult("equal_area", abs(area) <= tol, float(area),
                              f"quad error {aerr:.1e}"))

    return ValidationReport(tuple(checks), tol)


def _finalize(model: BistableModel, tol: float) -> BistableModel:
    report = validate_model(model, tol)
    if not report.passed:
        raise ModelValidationError(report)
    s, phip, _, fpvals = _scan_extrema(model)
    return replace(
        model,
        c_phi=float(phip.min()),
        mu=float(model.f_prime(model.alpha)),
        eta0=float(min(model.alpha - model.alpha_minus,
                       model.alpha_plus - model.alpha)),
        max_abs_fprime=float(np.abs(fpvals).max()),
        max_phi_prime=float(phip.max()),
        validation=report,
    )


# ---------------------------------------------------------------------------
# Registry
# ---------------------------------------------------------------------------

def linear_cubic(tol: float = 1e-8) -> BistableModel:
    """φ(u) = u, f(u) = u − u³: the linear-diffusion reference model."""
    return _finalize(BistableModel(
        "linear-cubic", (0.0, 1.0), (0.0, 1.0, 0.0, -1.0), -1.0, 0.0, 1.0), tol)


def cubic_flux(tol: float = 1e-8) -> BistableModel:
    """φ(u) = u + u³/3, f(u) = u − u³: genuinely nonlinear diffusion.

    The balance integrand (1 + s²)(s − s³) is odd, so the equal-area
    condition holds exactly.
    """
    return _finalize(BistableModel(
        "cubic-flux", (0.0, 1.0, 0.0, 1.0 / 3.0), (0.0, 1.0, 0.0, -1.0),
        -1.0, 0.0, 1.0), tol)


def quintic_reaction(tol: float = 1e-8) -> BistableModel:
    """φ(u) = u + u³/3, f(u) = (u − u³)(1 + u²/2): steeper stable slopes."""
    f = npoly.polymul((0.0, 1.0, 0.0, -1.0), (1.0, 0.0, 0.5))
    return _finalize(BistableModel(
        "quintic-reaction", (0.0, 1.0, 0.0, 1.0 / 3.0), tuple(f),
        -1.0, 0.0, 1.0), tol)


def scaled_linear(c: float, tol: float = 1e-8) -> BistableModel:
    """φ(u) = c·u with the cubic reaction; used for scaling checks."""
    if c <= 0:
        raise ValueError("scale must be positive")
    return _finalize(BistableModel(
        f"scaled-linear({c})", (0.0, float(c)), (0.0, 1.0, 0.0, -1.0),
        -1.0, 0.0, 1.0), tol)


def from_polynomials(name, phi_coeffs, f_coeffs, zeros, tol: float = 1e-8) -> BistableModel:
    """Build and validate a model from raw polynomial coefficient lists.

    ``zeros`` is the triple (α−, α, α+); coefficients are low-to-high
    degree.  Raises ModelValidationError if any admissibility check
    fails.
    """
    a_m, a, a_p = (float(z) for z in zeros)
    return _finalize(BistableModel(
        str(name), tuple(float(c) for c in phi_coeffs),
        tuple(float(c) for c in f_coeffs), a_m, a, a_p), tol)


MODEL_REGISTRY = {
    "linear-cubic": linear_cubic,
    "cubic-flux": cubic_flux,
    "quintic-reaction": quintic_reaction,
}


def build_model(name: str, params: dict | None = None) -> BistableModel:
    """Resolve a model by registry name (used by experiment configs)."""
    params = dict(params or {})
    if name in MODEL_REGISTRY:
        return MODEL_REGISTRY[name](**params)
    if name == "scaled-linear":
        return scaled_linear(**params)
    if name == "polynomial":
        return from_polynomials(
            params.get("name", "polynomial"), params["phi_coeffs"],
            params["f_coeffs"], params["zeros"], params.get("tol", 1e-8))
    raise KeyError(f"unknown model {name!r}; registry: "
                   f"{sorted(MODEL_REGISTRY) + ['scaled-linear', 'polynomial']}")


def registry_models() -> list[BistableModel]:
    """All parameter-free built-in models (validated)."""
    return [factory() for factory in MODEL_REGISTRY.values()]


# ---------------------------------------------------------------------------
# Potential
# ---------------------------------------------------------------------------

def potential(model: BistableModel, u: float, abs_tol: float = 1e-10) -> float:
    """W(u) = −∫_{α−}^{u} f φ′ by adaptive quadrature.

    Returns exactly 0.0 at u = α± by construction.  Raises
    QuadratureError when the integrator cannot certify ``abs_tol``.
    """
    u = float(u)
    lo, hi = model.working_interval
    if not (lo <= u <= hi):
        raise ValueError(f"u={u} outside working interval [{lo}, {hi}]")
    if u == model.alpha_minus or u == model.alpha_plus:
        return 0.0
    val, err = integrate.quad(
        lambda s: -model.f(s) * model.phi_prime(s), model.alpha_minus, u,
        epsabs=min(1e-13, abs_tol / 10), epsrel=1e-13, limit=200)
    if err > abs_tol:
        raise QuadratureError("potential quadrature did not converge", val, err)
    return float(val)


def sample_potential(model: BistableModel, n: int = 1001) -> PotentialSample:
    """Sample W on a uniform grid over [α−, α+] (exact antiderivative path)."""
    u = np.linspace(model.alpha_minus, model.alpha_plus, n)
    w = model.potential_exact(u)
    return PotentialSample(u, w)


# ---------------------------------------------------------------------------
# Reaction flow  Y_τ = f(Y), Y(0, ζ) = ζ
# ---------------------------------------------------------------------------

def reaction_flow(model: BistableModel, tau: float, zeta: float,
                  rtol: float = 1e-10, atol: float = 1e-12) -> tuple[float, float]:
    """Integrate the reaction ODE and its ζ-derivative.

    Returns (Y(τ, ζ), Y_ζ(τ, ζ)) where the derivative comes from the
    exact identity Y_ζ = exp(∫₀^τ f′(Y(s, ζ)) ds) integrated alongside
    the flow rather than from differencing.
    """
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    if not math.isfinite(zeta):
        raise ValueError("zeta must be finite")
    if tau == 0.0:
        return float(zeta), 1.0
    lo, hi = model.working_interval
    bound = max(abs(zeta), abs(lo), abs(hi)) + 1.0

    def rhs(_t, y):
        return [float(model.f(y[0])), float(model.f_prime(y[0]))]

    def escape(_t, y):
        return bound - abs(y[0])

    escape.terminal = True
    sol = integrate.solve_ivp(rhs, (0.0, tau), [float(zeta), 0.0],
                              method="RK45", rtol=rtol, atol=atol,
                              events=escape, dense_output=False)
    if sol.status == 1:  # escape event fired
        raise ReactionBlowUpError(
            f"|Y| exceeded {bound} starting from zeta={zeta}; "
            "inadmissible reaction term")
    if not sol.success:
        raise RuntimeError(f"reaction ODE integration failed: {sol.message}")
    y, a = sol.y[0, -1], sol.y[1, -1]
    return float(y), float(math.exp(a))


def reaction_flow_grid(model: BistableModel, tau: float, zeta,
                       dtau: float = 1e-3) -> np.ndarray:
    """Vectorized fixed-step RK4 reaction flow for whole fields.

    Used where Y must be evaluated at every grid cell (ODE-mode
    generation runs, barrier stencils).  Fourth-order accurate in
    ``dtau``; the adaptive scalar route above serves as its oracle.
    """
    z = np.asarray(zeta, dtype=float)
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    if tau == 0.0:
        return z.copy()
    nsteps = max(1, int(math.ceil(tau / dtau)))
    h = tau / nsteps
    y = z.copy()
    f = model.f
    for _ in range(nsteps):
        k1 = f(y)
        k2 = f(y + 0.5 * h * k1)
        k3 = f(y + 0.5 * h * k2)
        k4 = f(y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    lo, hi = model.working_interval
    bound = max(np.abs(z).max() if z.size else 0.0, abs(lo), abs(hi)) + 1.0
    if np.abs(y).max() > bound:
        raise ReactionBlowUpError("reaction flow left the working interval")
    return y


def generation_time(model: BistableModel, epsilon: float) -> float:
    """t^ε = μ⁻¹ ε² |ln ε|, the interface generation time scale."""
    if epsilon <= 0 or epsilon >= 1:
        raise ValueError("epsilon must lie in (0, 1)")
    return abs(math.log(epsilon)) * epsilon ** 2 / model.mu
