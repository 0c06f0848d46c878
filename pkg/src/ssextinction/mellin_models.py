"""Mellin transforms of extinction-time laws, densities, tails and identities.

Laws are represented by their Mellin transform ``M(z) = E[V^z]`` on an open
strip.  Densities and survival functions are recovered by Mellin-Barnes
inversion along a vertical line; the generalized Frechet family also has a
convergent power series.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate
from scipy import special as sc

from .bernstein import (
    Affine,
    BernsteinFunction,
    DomainError,
    IndeterminateError,
    MembershipError,
    STransform,
    WienerHopfPair,
    membership,
    phi_prime_at_zero,
    rescale,
)
from .special import PoleError, falling_factorial, pochhammer
from .wphi import w_phi_eval

__all__ = [
    "StripError",
    "TruncationError",
    "DensityNotAvailable",
    "MellinLaw",
    "gamma_over_w",
    "markov_T_law",
    "lambda_law",
    "chi_law",
    "extinction_law",
    "gen_frechet_law",
    "mellin_markov_T",
    "mellin_lambda",
    "laplace_lambda",
    "mellin_extinction",
    "mellin_gen_frechet",
    "density_series_gen_frechet",
    "density_mellin_barnes",
    "survival",
    "InversionResult",
    "sector_angle",
    "SmoothnessIndex",
    "smoothness_index",
    "PersistenceReport",
    "persistence_report",
    "derivative_constant",
    "one_sided_derivative",
    "verify_theorem3",
]

INF = math.inf
ENDPOINT_GAP = 1e-8


class StripError(DomainError):
    pass


class TruncationError(RuntimeError):
    def __init__(self, message, bound=None):
        super().__init__(message)
        self.bound = bound


class DensityNotAvailable(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# building blocks


def gamma_over_w(phi: BernsteinFunction, w, strategy="auto"):
    """Gamma(w) / W_phi(w), continued to Re w > -a_phi through

        Gamma(w) / W(w) = [Gamma(w + 1) / W(w + 1)] * phi(w) / w.

    When phi(0) = 0 the factor phi(w)/w is regular at w = 0 (value phi'(0+)),
    so the continuation has no pole there; when phi(0) > 0 it does.
    """
    w0 = np.asarray(w, dtype=complex)
    w = np.atleast_1d(w0)
    if np.any(np.real(w) <= -phi.abscissa_a):
        raise StripError(f"Gamma/W_phi needs Re w > -a_phi = {-phi.abscissa_a}")
    steps = np.maximum(0, np.ceil(0.5 - np.real(w))).astype(int)
    base = w + steps
    out = np.atleast_1d(np.exp(sc.loggamma(base)) / np.asarray(w_phi_eval(phi, base, strategy)))
    nmax = int(steps.max()) if steps.size else 0
    if nmax:
        phi0 = phi.phi0
        slope = None
        for j in range(nmax):
            active = steps > j
            u = w[active] + j
            near = np.abs(u) < 1e-9
            fac = np.empty(u.shape, dtype=complex)
            if np.any(near):
                if abs(phi0) > 1e-14:
                    raise PoleError(f"Gamma(w)/W_phi(w) has a pole at w = {-j} since phi(0) > 0")
                if slope is None:
                    slope = phi_prime_at_zero(phi)
                fac[near] = slope
            fac[~near] = phi._eval(u[~near]) / u[~near]
            out[active] = out[active] * fac
    return out.reshape(w0.shape) if w0.ndim else complex(out[0])


def _check_strip(z, strip, what):
    z = np.asarray(z, dtype=complex)
    lo, hi = strip
    re = np.real(z)
    if np.any(re <= lo + ENDPOINT_GAP) or np.any(re >= hi - ENDPOINT_GAP):
        raise StripError(f"{what}: Re z must lie in ({lo}, {hi}) (open, endpoints excluded)")
    return z


def _ret(x):
    x = np.asarray(x)
    return x if x.ndim else complex(x)


# ---------------------------------------------------------------------------
# Mellin laws


@dataclass(frozen=True)
class MellinLaw:
    """A positive law given by ``z -> E[V^z]`` on the strip ``lo < Re z < hi``."""

    kind: str
    transform: Callable
    strip: tuple
    params: dict = field(default_factory=dict)
    decay: str = "power"  # or "exponential"
    decay_rate: Optional[float] = None
    dominant_pole: Optional[float] = None

    def mellin(self, z):
        z = _check_strip(z, self.strip, self.kind)
        return _ret(self.transform(z))

    __call__ = mellin

    def density(self, t, **kw):
        return density_mellin_barnes(self, t, **kw)

    def survival(self, t, **kw):
        return survival(self, t, **kw)


def _lower_bound(phi: BernsteinFunction):
    """a_phi 1{phi(0) = 0} + 1."""
    return (phi.abscissa_a if abs(phi.phi0) < 1e-14 else 0.0) + 1.0


def markov_T_law(pair: WienerHopfPair, x: float) -> MellinLaw:
    """Extinction time of the self-similar Markov process started at x:

    E[T^z] = x^{alpha z} phi+(0) Gamma(z + 1) W_{phi+}(-z) / W_{phi-}(z + 1).
    """
    if not pair.in_class_N:
        raise MembershipError("pair is not in class N: phi_plus(0) = 0")
    if x <= 0:
        raise DomainError("x must be positive")
    pm, pp, alpha = pair.phi_minus, pair.phi_plus, pair.alpha
    strip = (-_lower_bound(pm), pp.abscissa_astar)
    k0 = pp.phi0

    def transform(z):
        z = np.asarray(z, dtype=complex)
        return np.exp(alpha * z * math.log(x)) * k0 * np.asarray(w_phi_eval(pp, -z)) * gamma_over_w(pm, z + 1.0)

    return MellinLaw(
        "markov_T",
        transform,
        strip,
        params={"pair": pair, "x": x, "alpha": alpha},
        dominant_pole=pp.abscissa_astar,
    )


def chi_law(phi_beta: BernsteinFunction, beta: float) -> MellinLaw:
    """chi_1 of the increasing beta-self-similar process whose time change has
    exponent phi_beta: E[chi_1^z] = Gamma(-z/beta) / (phi_beta'(0) W_{phi_beta}(-z/beta))."""
    slope = phi_prime_at_zero(phi_beta)
    if not math.isfinite(slope) or abs(phi_beta.phi0) > 1e-14:
        raise MembershipError("time change exponent must satisfy phi(0) = 0 and phi'(0+) < inf")
    strip = (-INF, beta * phi_beta.abscissa_a)

    def transform(z):
        return gamma_over_w(phi_beta, -np.asarray(z, dtype=complex) / beta) / slope

    return MellinLaw("chi", transform, strip, params={"phi_beta": phi_beta, "beta": beta})


def lambda_law(phi: BernsteinFunction, beta: float, t: float) -> MellinLaw:
    """lambda_t: E[lambda_t^z] = t^{beta z} Gamma(z) / (beta phi'(0+) W_{phi_beta}(z)).

    The strip extends left of 0 to -min(1, a_{phi_beta}) through the continuation
    of Gamma/W, which also gives M(0) = 1.
    """
    ok, reason = membership(phi, "B_rho")
    if not ok:
        raise MembershipError(f"time change exponent not in B_rho: {reason}")
    if t <= 0:
        raise DomainError("t must be positive")
    phib = rescale(phi, beta)
    slope = beta * phi_prime_at_zero(phi)
    strip = (-min(1.0, phib.abscissa_a), INF)

    def transform(z):
        z = np.asarray(z, dtype=complex)
        return np.exp(beta * z * math.log(t)) * gamma_over_w(phib, z) / slope

    return MellinLaw("lambda_t", transform, strip, params={"phi": phi, "beta": beta, "t": t})


def _extinction_from_phi_beta(pair, phi_beta, beta, x, strategy="auto", extra=None):
    slope = phi_prime_at_zero(phi_beta)
    if not math.isfinite(slope) or abs(phi_beta.phi0) > 1e-14:
        raise MembershipError("time change exponent must satisfy phi(0) = 0 and phi'(0+) < inf")
    if not pair.in_class_N:
        raise MembershipError("pair is not in class N: phi_plus(0) = 0")
    pm, pp, alpha = pair.phi_minus, pair.phi_plus, pair.alpha
    lo = -beta * _lower_bound(pm)
    hi = beta * min(phi_beta.abscissa_a, pp.abscissa_astar)
    k0 = pp.phi0
    lx = math.log(x)

    def transform(z):
        z = np.asarray(z, dtype=complex)
        w = z / beta
        chi = gamma_over_w(phi_beta, -w, strategy) / slope
        tee = np.exp(alpha * w * lx) * k0 * np.asarray(w_phi_eval(pp, -w)) * gamma_over_w(pm, w + 1.0)
        return chi * tee

    return MellinLaw(
        "extinction",
        transform,
        (lo, hi),
        params={"pair": pair, "phi_beta": phi_beta, "beta": beta, "x": x, "alpha": alpha, **(extra or {})},
        dominant_pole=hi,
    )


def extinction_law(pair: WienerHopfPair, phi: BernsteinFunction, beta: float, x: float) -> MellinLaw:
    """Extinction time of the inverse-subordinator time change:

    E_x[T^z] = x^{alpha z / beta} phi+(0) / (beta phi'(0+)) * Gamma(-z/beta) / W_{phi_beta}(-z/beta)
               * Gamma(z/beta + 1) W_{phi+}(-z/beta) / W_{phi-}(z/beta + 1).
    """
    ok, reason = membership(phi, "B_rho")
    if not ok:
        raise MembershipError(f"time change exponent not in B_rho: {reason}")
    if x <= 0:
        raise DomainError("x must be positive")
    phib = rescale(phi, beta)
    try:
        idx = smoothness_index(pair, phib)
    except IndeterminateError:
        idx = None
    return _extinction_from_phi_beta(pair, phib, beta, x, extra={"phi": phi, "smoothness": idx})


def gen_frechet_law(phi: BernsteinFunction, beta: float) -> MellinLaw:
    """F_beta(phi): E[F^z] = Gamma(1 - z/beta) Gamma(z/beta + 1) / W_phi(z/beta + 1)."""
    if beta <= 0:
        raise DomainError("beta must be positive")
    strip = (-beta * _lower_bound(phi), beta)
    theta, err = sector_angle(phi)

    def transform(z):
        w = np.asarray(z, dtype=complex) / beta
        return sc.gamma(1.0 - w) * gamma_over_w(phi, w + 1.0)

    return MellinLaw(
        "gen_frechet",
        transform,
        strip,
        params={"phi": phi, "beta": beta},
        decay="exponential",
        decay_rate=max(theta - err, 0.05) / beta,
        dominant_pole=beta,
    )


def mellin_markov_T(pair, x, z):
    return markov_T_law(pair, x).mellin(z)


def mellin_lambda(phi, beta, t, z):
    return lambda_law(phi, beta, t).mellin(z)


def mellin_extinction(pair, phi, beta, x, z):
    return extinction_law(pair, phi, beta, x).mellin(z)


def mellin_gen_frechet(phi, beta, z):
    return gen_frechet_law(phi, beta).mellin(z)


def laplace_lambda(phi: BernsteinFunction, beta: float, t: float, q, rtol: float = 1e-12, max_terms: int = 5000):
    """E[exp(q lambda_t)] = 1 + (1 / (beta phi'(0+))) sum_{n >= 1} (q t^beta)^n / (n W_{phi_beta}(n))."""
    phib = rescale(phi, beta)
    slope = beta * phi_prime_at_zero(phi)
    y = complex(q) * t**beta
    if y == 0:
        return 1.0
    cap = phib.value_at_infinity
    if math.isfinite(cap) and abs(y) >= cap:
        raise ArithmeticError(f"series diverges: |q| t^beta = {abs(y)} >= phi(inf) = {cap}")
    terms = []
    logw = 0.0  # log W(n), built as sum_{k < n} log phi_beta(k)
    small = 0
    for n in range(1, max_terms + 1):
        if n > 1:
            logw += math.log(float(np.real(phib(float(n - 1)))))
        term = np.exp(n * np.log(y) - logw) / n
        terms.append(term)
        total = sum(terms)
        if abs(term) < rtol * max(abs(1.0 + total / slope), 1e-300):
            small += 1
            if small >= 3:
                break
        else:
            small = 0
    else:
        raise ArithmeticError("laplace_lambda series did not converge")
    re = math.fsum(np.real(terms))
    im = math.fsum(np.imag(terms))
    out = 1.0 + complex(re, im) / slope
    return out.real if np.isreal(q) else out


# ---------------------------------------------------------------------------
# densities and tails


def density_series_gen_frechet(phi: BernsteinFunction, beta: float, t, rtol: float = 1e-14, max_terms: int = 4000):
    """f(t) = beta t^{-beta-1} sum_n (n + 1) (-t^{-beta})^n / W_phi(n + 2)."""
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty(t_arr.shape)
    # log W(n + 2) = sum_{k=1}^{n+1} log phi(k)
    cap = phi.value_at_infinity
    for i, tv in enumerate(t_arr):
        if tv <= 0:
            raise DomainError("t must be positive")
        y = tv ** (-beta)
        if math.isfinite(cap) and y >= cap:
            raise DomainError(f"series needs t^-beta < phi(inf) = {cap}")
        terms = []
        logw = 0.0
        peak = 0.0
        for n in range(max_terms):
            logw += math.log(float(np.real(phi(float(n + 1)))))
            mag = math.exp(n * math.log(y) + math.log(n + 1) - logw) if y > 0 else (1.0 if n == 0 else 0.0)
            terms.append(mag if n % 2 == 0 else -mag)
            peak = max(peak, mag)
            if n > 2 and mag < rtol * abs(math.fsum(terms)) and mag < abs(terms[-2]):
                break
        else:
            raise ArithmeticError("density series did not converge")
        val = beta * tv ** (-beta - 1) * math.fsum(terms)
        if val < 0:
            if val < -1e-12:
                raise ArithmeticError(f"negative density {val} at t={tv}")
            val = 0.0
        out[i] = val
    return out if np.ndim(t) else float(out[0])


@dataclass(frozen=True)
class InversionResult:
    value: float
    error_estimate: float
    abscissa: float
    cutoff: float
    regime: str


def _choose_abscissa(logmag, lo, hi, clip=40.0):
    """Real abscissa minimizing the integrand modulus at b = 0."""
    a = max(lo, -clip)
    b = min(hi, clip)
    width = b - a
    margin = min(0.05 * width, 0.05) if math.isfinite(lo) and math.isfinite(hi) else 0.02 * width
    a_in, b_in = a + (margin if math.isfinite(lo) or a == lo else 0.0), b - (margin if b == hi else 0.0)
    if lo == a:
        a_in = a + margin
    if hi == b:
        b_in = b - margin

    # two vectorised grid passes; any abscissa in the strip is valid, this one
    # just keeps the integrand small
    grid = np.linspace(a_in, b_in, 41)
    for _ in range(2):
        vals = np.asarray(logmag(grid), dtype=float)
        vals = np.where(np.isfinite(vals), vals, 1e300)
        i = int(np.argmin(vals))
        best = (float(grid[i]), float(vals[i]))
        grid = np.linspace(grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)], 21)
    return best


def _line_integral(fn, c, t, regime, rate, tol, dist, b_max=4000.0):
    """(1/pi) int_0^inf Re[fn(c + i b)] db with adaptive cutoff and trapezoid halving.

    ``fn`` returns the full integrand (already multiplied by t^{-w}).
    """
    env = lambda b: np.abs(fn(c + 1j * np.asarray(b, dtype=float)))
    scale = float(env(0.0))
    # absolute tolerance for O(1) integrands, relative once they are small
    tol = max(tol * min(1.0, scale), 1e-280)
    # truncation point
    B = 8.0
    while True:
        window = np.linspace(0.9 * B, B, 9)
        e_hi = float(np.max(env(window)))
        if regime == "exponential" and rate:
            bound = e_hi / rate
            tag = "exponential"
        else:
            e_mid = float(np.max(env(window / 2)))
            if e_hi <= 0 or e_mid <= 0:
                bound, tag = 0.0, "power"
            else:
                p = math.log(e_mid / e_hi) / math.log(2.0)
                bound = e_hi * B / (p - 1) if p > 1.05 else INF
                tag = "power"
        if bound < tol * 0.1:
            break
        if B >= b_max:
            raise TruncationError(f"Mellin-Barnes truncation failed, tail bound {bound:.2e} at B={B}", bound)
        B *= 2
    h = min(0.25, max(dist, 1e-3) / 2)
    n = int(math.ceil(B / h))
    B = n * h  # nested grids: each halving only adds the midpoints
    vals = np.real(fn(c + 1j * np.arange(n + 1) * h))
    total = vals[0] / 2 + np.sum(vals[1:-1]) + vals[-1] / 2
    abs_total = float(np.sum(np.abs(vals)))
    prev = None
    while True:
        integral = h * total / math.pi
        floor = 1e-13 * h * abs_total / math.pi  # cancellation roundoff
        if prev is not None and abs(integral - prev) < max(tol, floor):
            return integral, abs(integral - prev) + bound / math.pi, B, tag
        if n > 4_000_000:
            raise TruncationError(f"trapezoid halving did not settle (last change {abs(integral - prev):.2e})")
        prev = integral
        mid = np.real(fn(c + 1j * (np.arange(n) + 0.5) * h))
        total += float(np.sum(mid))
        abs_total += float(np.sum(np.abs(mid)))
        n *= 2
        h /= 2


def _strip_distance(s, lo, hi):
    return min(s - lo if math.isfinite(lo) else INF, hi - s if math.isfinite(hi) else INF)


def density_mellin_barnes(law: MellinLaw, t, c: Optional[float] = None, tol: float = 1e-10, full: bool = False):
    """f(t) = (1/2 pi) int t^{-(c + ib)} M(c - 1 + ib) db."""
    _guard_density(law)
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    lo, hi = law.strip
    results = []
    for tv in t_arr:
        if tv <= 0:
            raise DomainError("t must be positive")
        lt = math.log(tv)
        if c is None:
            logmag = lambda s: -(s + 1) * lt + np.log(np.abs(law.transform(np.asarray(s) + 0j)))
            s, _ = _choose_abscissa(logmag, lo, hi)
        else:
            s = c - 1.0
            _check_strip(s, law.strip, law.kind)
        fn = lambda w: np.exp(-(w + 1.0) * lt) * law.transform(w)
        val, err, B, regime = _line_integral(fn, s, tv, law.decay, law.decay_rate, tol, _strip_distance(s, lo, hi))
        if val < -1e-12:
            if val < -max(10 * err, 1e-8):
                raise ArithmeticError(f"negative density {val} at t={tv}")
        val = max(val, 0.0)
        results.append(InversionResult(val, err, s + 1.0, B, regime))
    if full:
        return results if np.ndim(t) else results[0]
    vals = np.array([r.value for r in results])
    return vals if np.ndim(t) else float(vals[0])


def survival(law: MellinLaw, t, tol: float = 1e-10, full: bool = False):
    """P(V > t) by inverting M(z)/z on a line Re z = c.

    With c > 0 the integral is P(V > t); with c < 0 it is P(V > t) - 1.
    The side and abscissa minimizing the integrand at b = 0 are used.
    """
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    lo, hi = law.strip
    results = []
    for tv in t_arr:
        if tv <= 0:
            raise DomainError("t must be positive")
        lt = math.log(tv)

        def logmag(s):
            s = np.asarray(s, dtype=float)
            with np.errstate(divide="ignore"):
                out = -s * lt + np.log(np.abs(law.transform(s + 0j))) - np.log(np.abs(s))
            return np.where(np.abs(s) < 1e-12, INF, out)

        cands = []
        if hi > 0:
            cands.append(_choose_abscissa(logmag, 0.0, hi))
        if lo < 0:
            cands.append(_choose_abscissa(logmag, lo, 0.0))
        s, _ = min(cands, key=lambda p: p[1])
        fn = lambda w: np.exp(-w * lt) * law.transform(w) / w
        dist = min(_strip_distance(s, lo, hi), abs(s))
        val, err, B, regime = _line_integral(fn, s, tv, law.decay, law.decay_rate, tol, dist)
        if s < 0:
            val += 1.0
        results.append(InversionResult(min(max(val, 0.0), 1.0), err, s, B, regime))
    if full:
        return results if np.ndim(t) else results[0]
    vals = np.array([r.value for r in results])
    return vals if np.ndim(t) else float(vals[0])


def _guard_density(law):
    if law.kind == "extinction":
        idx = law.params.get("smoothness")
        if idx is not None and idx.N <= 1:
            raise DensityNotAvailable(f"smoothness index N = {idx.N} <= 1: no density guarantee")


def sector_angle(phi: BernsteinFunction, b_max: float = 1e3, n: int = 20001):
    """Running average of arg phi(1 + iu) over [0, b_max], with the spread of
    that average over the last decade as an error bar."""
    u = np.linspace(0.0, b_max, n)
    arg = np.angle(phi._eval(1.0 + 1j * u))
    cum = integrate.cumulative_trapezoid(arg, u, initial=0.0)
    avg = np.divide(cum, u, out=np.zeros_like(cum), where=u > 0)
    last = avg[u >= b_max / 10]
    return float(avg[-1]), float(last.max() - last.min())


# ---------------------------------------------------------------------------
# smoothness and persistence


def _ratio(num, den):
    """num/den with the conventions x/0 = inf (x > 0), inf/finite = inf, inf/inf = inf."""
    if den == 0:
        return INF if num > 0 else 0.0
    if math.isinf(num):
        return INF
    if math.isinf(den):
        return 0.0
    return num / den


@dataclass(frozen=True)
class SmoothnessIndex:
    N_phi_beta: float
    N_Psi_alpha: float

    @property
    def N(self):
        return self.N_phi_beta + self.N_Psi_alpha

    @property
    def density_class(self):
        """k such that the density is in C^k_0 (None when N <= 1)."""
        if self.N <= 1:
            return None
        return INF if math.isinf(self.N) else math.ceil(self.N) - 2


def smoothness_index(pair: WienerHopfPair, phi_beta: BernsteinFunction) -> SmoothnessIndex:
    """N = theta_beta(0, inf)/d_beta + N_Psi with

    N_Psi = (phi-(0) + theta-(0, inf))/d- + v+(0+)/(phi+(0) + theta+(0, inf)) + inf 1{d+ > 0}.
    """
    tb = phi_beta.triple
    tm, tp = pair.phi_minus.triple, pair.phi_plus.triple
    if tb is None or tm is None or tp is None:
        raise IndeterminateError("smoothness index needs Levy triples for phi_beta and both factors")
    n_phi = _ratio(tb.mass, tb.drift)
    if tp.drift > 0:
        n_psi = INF
    else:
        first = _ratio(pair.phi_minus.phi0 + tm.mass, tm.drift)
        second = _ratio(tp.v0, pair.phi_plus.phi0 + tp.mass) if tp.v0 > 0 else 0.0
        n_psi = first + second
    return SmoothnessIndex(n_phi, n_psi)


def one_sided_derivative(f, x0, h=None):
    """Right derivative by three-point forward differences plus one Richardson step."""
    if h is None:
        h = 1e-5 * max(1.0, abs(x0))

    def d(hh):
        return (-3 * f(x0) + 4 * f(x0 + hh) - f(x0 + 2 * hh)) / (2 * hh)

    d1, d2 = d(h), d(h / 2)
    return (4 * d2 - d1) / 3


def derivative_constant(c: float, n: int, nbar) -> float:
    """C_c(n) = (1 + c)_{n - Nbar} sum_{k=0}^{Nbar} C(Nbar, k) [Gamma(Nbar - n + 1) / Gamma(k - n + 1)] (-1)^k (1 + c)_k.

    The gamma ratio is read as the falling factorial (Nbar - n)(Nbar - n - 1)...(k - n + 1),
    which is its value whenever it is finite and its limit when both gammas have
    poles.  For Nbar = inf the constant is (1 + c)_n.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    if nbar is None or (isinstance(nbar, float) and math.isinf(nbar)):
        return pochhammer(c, n)
    nbar = int(nbar)
    if nbar < 0:
        raise ValueError("Nbar must be nonnegative")
    total = 0.0
    for k in range(nbar + 1):
        ratio = falling_factorial(nbar - n, nbar - k)
        total += math.comb(nbar, k) * ratio * (-1) ** k * pochhammer(c, k)
    return pochhammer(c, n - nbar) * total


@dataclass(frozen=True)
class PersistenceReport:
    c_alpha: float
    tail_exponent: float
    limit_constant: float
    regularized_moment: float
    chi_moment: float
    phi_plus_derivative: float
    derivative_constants: list
    nbar: float
    assumptions: dict


def persistence_report(
    pair: WienerHopfPair,
    phi: BernsteinFunction,
    beta: float,
    x: float,
    n_max: int = 5,
    unique_zero: bool = True,
    finite_derivative: bool = True,
) -> PersistenceReport:
    """Constant of lim t^{beta c} P_x(T > t) with c = a*_{phi+}.

    The moment E_x[T^{beta c}] sits on the pole of W_{phi+}(-z) at z = c; the
    constant uses its regularized value (phi+(-z) W_{phi+}(-z) -> W_{phi+}(1 - c)):

        L = E[chi_1^{beta c}] x^{alpha c} phi+(0) Gamma(1 + c) W_{phi+}(1 - c)
            / (W_{phi-}(1 + c) c phi+'(-c+)).
    """
    pm, pp, alpha = pair.phi_minus, pair.phi_plus, pair.alpha
    phib = rescale(phi, beta)
    c = pp.abscissa_astar
    if not 0 < c < phib.abscissa_a:
        raise DomainError(f"need 0 < c_alpha = {c} < a_(phi_beta) = {phib.abscissa_a}")
    at_c = float(np.real(pp._eval(np.asarray(-c + 0j))))
    if abs(at_c) > 1e-9:
        raise DomainError(f"phi_plus(-c_alpha) = {at_c} is not 0")
    f = lambda u: float(np.real(pp._eval(np.asarray(u + 0j))))
    dplus = one_sided_derivative(f, -c)
    chi = float(np.real(chi_law(phib, beta).transform(np.asarray(beta * c + 0j))))
    reg = (
        x ** (alpha * c)
        * pp.phi0
        * float(np.real(w_phi_eval(pp, 1 - c)))
        * float(np.real(gamma_over_w(pm, np.asarray(1 + c + 0j))))
    )
    limit = chi * reg / (c * dplus)
    try:
        idx = smoothness_index(pair, phib)
        n_psi = idx.N_Psi_alpha
    except IndeterminateError:
        n_psi = None
    nbar = INF if n_psi is None or math.isinf(n_psi) else math.ceil(n_psi) - 2
    consts = []
    if math.isinf(nbar) or nbar >= 0:
        for n in range(n_max + 1):
            consts.append(derivative_constant(c, n, nbar))
    return PersistenceReport(
        c_alpha=c,
        tail_exponent=beta * c,
        limit_constant=limit,
        regularized_moment=reg,
        chi_moment=chi,
        phi_plus_derivative=dplus,
        derivative_constants=consts,
        nbar=nbar,
        assumptions={"unique_zero_on_critical_line": unique_zero, "finite_psi_derivative": finite_derivative},
    )


# ---------------------------------------------------------------------------
# S-transform identities


def _strip_grid(lo, hi, n_real=10, n_complex=10, clip=3.0):
    a, b = max(lo, -clip), min(hi, clip)
    pad = 0.05 * (b - a)
    real = np.linspace(a + pad, b - pad, n_real)
    im = np.linspace(-4.0, 4.0, n_complex)
    re = np.linspace(a + pad, b - pad, n_complex)
    return np.concatenate([real + 0j, re + 1j * im])


def _linear_slope(phi):
    """k if phi(u) = k u (checked on a few points), else None."""
    u = np.array([0.25, 1.0, 3.0, 10.0])
    vals = np.real(phi._eval(u + 0j)) / u
    if abs(phi.phi0) < 1e-14 and np.ptp(vals) < 1e-12 * abs(vals[0]):
        return float(vals[0])
    return None


def verify_theorem3(pair: WienerHopfPair, beta: float, x: float, grid=None, strategy: str = "euler_product"):
    """Check the S-transform identities for a pair with phi+ in B_1.

    identity 1: M_T(z) with time change S_{phi+} equals x^{alpha z/beta} M_{F_beta(phi-)}(z);
    identity 2 (beta = 1, phi- in B_-): M_T(z) equals the Markov extinction transform
    for the pair (phi-, u + 1);
    identity 3 (phi-(u) = k u): M_T(z) equals (x^alpha / k)^{z/beta} Gamma(1 - z/beta);
    w_identity: W_S(u) u = W_{phi+}(u), left side by ``strategy``.

    The left side uses W_{S_phi+} evaluated by ``strategy`` (Euler product by
    default), so it is independent of the closed forms on the right.
    """
    pm, pp, alpha = pair.phi_minus, pair.phi_plus, pair.alpha
    ok, reason = membership(pp, "B_1")
    if not ok:
        raise MembershipError(f"phi_plus not in B_1: {reason}")
    t = pp.triple
    if not (pp.drift > 0 or (t is not None and math.isinf(t.mass))):
        raise MembershipError("phi_plus violates d > 0 or theta(0, 1) = inf")
    s_phi = STransform(pp)
    lhs_law = _extinction_from_phi_beta(pair, s_phi, beta, x, strategy=strategy)
    fr = gen_frechet_law(pm, beta)
    lo = max(lhs_law.strip[0], fr.strip[0])
    hi = min(lhs_law.strip[1], fr.strip[1])
    z = _strip_grid(lo, hi) if grid is None else np.asarray(grid, dtype=complex)
    lhs = np.asarray(lhs_law.transform(z))
    checks = {}

    def rel(a, b):
        return float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300)))

    rhs1 = np.exp(alpha * z / beta * math.log(x)) * np.asarray(fr.transform(z))
    checks["identity_1_frechet"] = rel(lhs, rhs1)
    if abs(beta - 1) < 1e-15 and membership(pm, "B_-"):
        ref = markov_T_law(WienerHopfPair(pm, Affine(1.0, 1.0), alpha), x)
        inside = (np.real(z) > ref.strip[0]) & (np.real(z) < ref.strip[1])
        checks["identity_2_spectrally_negative"] = rel(lhs[inside], np.asarray(ref.transform(z[inside])))
    slope = _linear_slope(pm)
    if slope is not None:
        # phi-(u) = k u gives W_{phi-}(w + 1) = k^w Gamma(w + 1)
        w = z / beta
        rhs3 = np.exp(w * math.log(x**alpha / slope)) * sc.gamma(1 - w)
        checks["identity_3_frechet_reduction"] = rel(lhs, rhs3)
    u = np.array([0.7, 1.5, 2.5, 1.2 + 2j])
    left = np.asarray(w_phi_eval(s_phi, u, strategy)) * u
    right = np.asarray(w_phi_eval(pp, u))
    checks["w_identity"] = rel(left, right)
    return {"grid": z, "checks": checks, "max_discrepancy": max(checks.values())}
