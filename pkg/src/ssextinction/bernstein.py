"""Bernstein functions, Levy characteristics and Wiener-Hopf pairs.

Every Bernstein function is a vectorised callable ``phi(u)`` accepting real or
complex arrays.  Library entries carry exact metadata (abscissas, derivative at
zero, killing rate, drift); generic objects fall back to numerics and raise
:class:`IndeterminateError` when a property cannot be decided.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate
from scipy import special as sc

__all__ = [
    "DomainError",
    "MembershipError",
    "IndeterminateError",
    "IntegrationError",
    "LevyTriple",
    "BernsteinFunction",
    "Affine",
    "Power",
    "GammaRatio",
    "ExponentialJumps",
    "TripleBernstein",
    "STransform",
    "Rescaled",
    "WienerHopfPair",
    "identity",
    "stable_subordinator_exponent",
    "brownian_pair",
    "stable_example_pair",
    "eval_phi",
    "phi_prime_at_zero",
    "rescale",
    "s_transform",
    "membership",
    "abscissas",
    "MembershipResult",
    "DYADIC_GRID",
    "ModelSpec",
    "ModelSpecError",
    "parse_model_spec",
    "load_model_spec",
]

INF = math.inf

# membership grid for density checks: 2**14 points on (1e-6, 1e6)
DYADIC_GRID = np.geomspace(1e-6, 1e6, 2**14)
MONOTONE_SLACK = 1e-12


class DomainError(ValueError):
    pass


class MembershipError(ValueError):
    pass


class IndeterminateError(ValueError):
    pass


class IntegrationError(RuntimeError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


# ---------------------------------------------------------------------------
# Levy characteristics


def _tabulate_tail(density, lo=1e-12, hi=None, n=600):
    """Tail mass y -> int_y^inf density on a log grid, returned as an interpolant."""
    if hi is None:
        hi = 1e3
    grid = np.geomspace(lo, hi, n)
    pieces = np.empty(n - 1)
    for i in range(n - 1):
        pieces[i] = integrate.quad(density, grid[i], grid[i + 1], limit=200)[0]
    far = integrate.quad(density, hi, np.inf, limit=200)[0]
    tail = np.concatenate([np.cumsum(pieces[::-1])[::-1], [0.0]]) + far
    return grid, tail


@dataclass(frozen=True)
class LevyTriple:
    """Characteristics of a subordinator (one-sided) or a Levy process.

    One-sided (subordinator) convention::

        phi(u) = killing + drift * u + int_0^inf (1 - e^{-u y}) density(y) dy

    Two-sided convention (exponent of ``E[e^{z Y_1}]``)::

        Psi(z) = -killing + sigma2 z^2 + linear z
                 + int (e^{z y} - 1 - z y 1{|y| < 1}) Pi(dy)

    with ``Pi`` given by ``density`` on (0, inf) and ``neg_density(y)`` for the
    mass at ``-y``, ``y > 0``.  Tail masses may be supplied in closed form
    (``tail``, ``neg_tail``); otherwise they are tabulated by quadrature.
    """

    drift: float = 0.0
    killing: float = 0.0
    density: Optional[Callable] = None
    tail: Optional[Callable] = None
    atoms: Sequence[tuple] = ()
    sigma2: float = 0.0
    linear: float = 0.0
    neg_density: Optional[Callable] = None
    neg_tail: Optional[Callable] = None
    two_sided: bool = False
    total_mass: Optional[float] = None
    density_at_zero: Optional[float] = None

    def __post_init__(self):
        if self.drift < 0 or self.killing < 0 or self.sigma2 < 0:
            raise ValueError("drift, killing and sigma2 must be nonnegative")

    @cached_property
    def _tail_table(self):
        if self.density is None:
            return None
        return _tabulate_tail(self.density)

    def tail_mass(self, x):
        """theta(x, inf) for the positive side (including atoms above x)."""
        x = np.asarray(x, dtype=float)
        if self.tail is not None:
            out = np.asarray(self.tail(x), dtype=float)
        elif self.density is not None:
            grid, tab = self._tail_table
            lx = np.log(np.clip(x, grid[0], grid[-1]))
            out = np.exp(np.interp(lx, np.log(grid), np.log(np.maximum(tab, 1e-300))))
            out = np.where(x > grid[-1], tab[-1] * (grid[-1] / np.maximum(x, grid[-1])) ** 2, out)
        else:
            out = np.zeros_like(x)
        for y, m in self.atoms:
            out = out + m * (y > x)
        return out

    def neg_tail_mass(self, x):
        x = np.asarray(x, dtype=float)
        if self.neg_tail is not None:
            return np.asarray(self.neg_tail(x), dtype=float)
        if self.neg_density is None:
            return np.zeros_like(x)
        return np.array([integrate.quad(self.neg_density, xi, np.inf, limit=200)[0] for xi in np.atleast_1d(x)]).reshape(x.shape)

    @property
    def mass(self):
        """theta(0, inf) (may be inf)."""
        if self.total_mass is not None:
            return self.total_mass
        if self.density is None and self.tail is None:
            return float(sum(m for _, m in self.atoms))
        small, smaller = float(self.tail_mass(1e-8)), float(self.tail_mass(1e-12))
        if smaller > 1.5 * small + 1e-12:
            return INF
        return smaller

    @property
    def v0(self):
        """Density value v(0+)."""
        if self.density_at_zero is not None:
            return self.density_at_zero
        if self.density is None:
            return 0.0
        a, b = float(self.density(1e-10)), float(self.density(1e-12))
        if b > 1.5 * a + 1e-12:
            return INF
        return b

    def mean_jump(self):
        """int y theta(dy) (may be inf)."""
        total = sum(y * m for y, m in self.atoms)
        if self.density is not None:
            f = lambda y: y * self.density(y)
            near = integrate.quad(f, 0, 1, limit=200)[0]
            far, err = integrate.quad(f, 1, np.inf, limit=400)
            if not np.isfinite(far) or err > 1e-6 * max(1.0, abs(far)):
                return INF
            total += near + far
        elif self.tail is not None:
            far, err = integrate.quad(lambda y: float(self.tail(y)), 0, np.inf, limit=400)
            if not np.isfinite(far) or err > 1e-6 * max(1.0, abs(far)):
                return INF
            total = far
        return total

    def check_integrability(self):
        """int (1 ^ y) theta(dy) < inf on the dyadic grid (two-sided: 1 ^ y^2)."""
        if self.density is None:
            return True
        y = DYADIC_GRID
        power = 2.0 if self.two_sided else 1.0
        vals = np.minimum(1.0, y**power) * self.density(y)
        # compare contributions from the two lowest decades: they must shrink
        lo = np.trapz(vals[y < 1e-5], y[y < 1e-5])
        mid = np.trapz(vals[(y >= 1e-5) & (y < 1e-4)], y[(y >= 1e-5) & (y < 1e-4)])
        return bool(np.isfinite(lo) and lo <= mid * 1.01 + 1e-300)

    def exponent(self, z):
        """Levy-Khintchine exponent by quadrature (two-sided convention)."""
        if not self.two_sided:
            raise ValueError("exponent() is for two-sided triples; use TripleBernstein")
        z = complex(z)

        def kernel(y, sgn):
            s = z * sgn * y
            comp = z * sgn * y if y < 1 else 0.0
            return np.expm1(s) - comp

        out = -self.killing + self.sigma2 * z * z + self.linear * z
        for sgn, dens in ((1.0, self.density), (-1.0, self.neg_density)):
            if dens is None:
                continue
            for part in (np.real, np.imag):
                g = lambda y: part(kernel(y, sgn)) * dens(y)
                # finite cutoff keeps e^{zy} from overflowing; the integrand is negligible there
                top = 600.0 / (1.0 + abs(z.real))
                val = sum(integrate.quad(g, lo, hi, limit=400)[0] for lo, hi in ((0, 1), (1, top)))
                out += val if part is np.real else 1j * val
        return out


# ---------------------------------------------------------------------------
# Bernstein functions


class BernsteinFunction:
    """Base class.  Subclasses implement ``_eval`` (vectorised, complex)."""

    name = "bernstein"
    abscissa_a: float = INF
    abscissa_astar: float = 0.0
    value_at_infinity: float = INF
    drift: float = 0.0
    b_minus: Optional[bool] = None

    def _eval(self, u):
        raise NotImplementedError

    def __call__(self, u):
        arr = np.asarray(u)
        out = self._eval(arr.astype(complex))
        if np.isrealobj(arr):
            out = np.real(out)
        return out if np.ndim(out) else out.item()

    def logphi(self, u):
        return np.log(np.asarray(self._eval(np.asarray(u, dtype=complex)), dtype=complex))

    @property
    def phi0(self):
        return float(np.real(self._eval(np.asarray(0.0 + 0j))))

    @property
    def derivative_at_zero(self):
        return None

    @property
    def triple(self) -> Optional[LevyTriple]:
        return None

    def w_closed_form(self, z):
        """Closed form of W_phi, or None when unavailable."""
        return None

    def rescale(self, beta):
        return Rescaled(self, beta)

    def params(self):
        return {}

    def __repr__(self):
        inner = ", ".join(f"{k}={v!r}" for k, v in self.params().items())
        return f"{type(self).__name__}({inner})"


class Affine(BernsteinFunction):
    """phi(u) = c (u + b), c > 0, b >= 0."""

    name = "affine"

    def __init__(self, c=1.0, b=0.0):
        if c <= 0:
            raise ValueError("Affine: c must be positive (constant functions are rejected)")
        if b < 0:
            raise ValueError("Affine: b must be nonnegative")
        self.c, self.b = float(c), float(b)
        self.abscissa_a = INF
        self.abscissa_astar = self.b
        self.drift = self.c
        self.b_minus = True

    def _eval(self, u):
        return self.c * (u + self.b)

    def logphi(self, u):
        return math.log(self.c) + np.log(np.asarray(u, dtype=complex) + self.b)

    @property
    def phi0(self):
        return self.c * self.b

    @property
    def derivative_at_zero(self):
        return self.c

    @property
    def triple(self):
        return LevyTriple(drift=self.c, killing=self.c * self.b, total_mass=0.0, density_at_zero=0.0)

    def w_closed_form(self, z):
        z = np.asarray(z, dtype=complex)
        return np.exp((z - 1) * math.log(self.c) + sc.loggamma(z + self.b) - sc.loggamma(1 + self.b))

    def rescale(self, beta):
        return Affine(self.c * beta, self.b / beta)

    def params(self):
        return {"c": self.c, "b": self.b}


def identity():
    return Affine(1.0, 0.0)


class Power(BernsteinFunction):
    """phi(u) = c u^kappa, 0 < kappa <= 1 (Laplace exponent of a stable subordinator)."""

    name = "power"

    def __init__(self, kappa, c=1.0):
        if not 0 < kappa <= 1:
            raise ValueError("Power: kappa must lie in (0, 1]")
        self.kappa, self.c = float(kappa), float(c)
        self.abscissa_a = 0.0 if kappa < 1 else INF
        self.abscissa_astar = 0.0
        self.drift = self.c if kappa == 1 else 0.0
        self.b_minus = True

    def _eval(self, u):
        return self.c * np.power(u, self.kappa)

    def logphi(self, u):
        return math.log(self.c) + self.kappa * np.log(np.asarray(u, dtype=complex))

    @property
    def derivative_at_zero(self):
        return INF if self.kappa < 1 else self.c

    @property
    def triple(self):
        if self.kappa == 1:
            return LevyTriple(drift=self.c, total_mass=0.0)
        k, c = self.kappa, self.c
        coef = c * k / math.gamma(1 - k)
        return LevyTriple(
            density=lambda y: coef * np.power(y, -1 - k),
            tail=lambda y: coef / k * np.power(y, -k),
            total_mass=INF,
            density_at_zero=INF,
        )

    def w_closed_form(self, z):
        z = np.asarray(z, dtype=complex)
        return np.exp((z - 1) * math.log(self.c) + self.kappa * sc.loggamma(z))

    def rescale(self, beta):
        return Power(self.kappa, self.c * beta**self.kappa)

    def params(self):
        return {"kappa": self.kappa, "c": self.c}


class GammaRatio(BernsteinFunction):
    """phi(u) = Gamma(p + s u) / Gamma(q + s u) with 0 <= q, 0 < p - q <= 1, s > 0.

    W_phi is a ratio of Barnes double gamma functions with tau = 1/s.  The
    special case p = s, q = 0 (the Lamperti exponent of a stable subordinator,
    rescaled) has the elementary closed form
    W(z) = Gamma(z) Gamma(1 + s z) / (Gamma(1 + s) Gamma(1 + z)).
    """

    name = "gamma_ratio"

    def __init__(self, p, q, scale=1.0):
        p, q, scale = float(p), float(q), float(scale)
        if scale <= 0 or q < 0 or not 0 < p - q <= 1 + 1e-15:
            raise ValueError("GammaRatio requires scale > 0, q >= 0 and 0 < p - q <= 1")
        self.p, self.q, self.s = p, q, scale
        self.delta = p - q
        self.abscissa_astar = q / scale
        self.abscissa_a = INF if abs(self.delta - 1) < 1e-15 else p / scale
        self.drift = scale if abs(self.delta - 1) < 1e-15 else 0.0
        self.b_minus = True

    def _eval(self, u):
        from .special import log_gamma_ratio

        x = self.s * np.asarray(u, dtype=complex)
        small = np.abs(x) < 100.0
        # rgamma vanishes exactly at the poles of the denominator
        direct = sc.gamma(self.p + np.where(small, x, 0)) * sc.rgamma(self.q + np.where(small, x, 0))
        far = np.exp(log_gamma_ratio(np.where(small, 100.0, x), self.p, self.q))
        return np.where(small, direct, far)

    def logphi(self, u):
        from .special import log_gamma_ratio

        return log_gamma_ratio(self.s * np.asarray(u, dtype=complex), self.p, self.q)

    @property
    def phi0(self):
        return 0.0 if self.q == 0 else math.gamma(self.p) / math.gamma(self.q)

    @property
    def derivative_at_zero(self):
        if self.q == 0:
            return self.s * math.gamma(self.p)
        return self.s * self.phi0 * (sc.digamma(self.p) - sc.digamma(self.q))

    @property
    def triple(self):
        d, p, s = self.delta, self.p, self.s
        if abs(d - 1) < 1e-15:
            return LevyTriple(drift=s, killing=self.phi0, total_mass=0.0, density_at_zero=0.0)
        coef = d / math.gamma(1 - d)

        def density(y):
            x = np.asarray(y, dtype=float) / s
            return coef * np.exp(-p * x) * (-np.expm1(-x)) ** (-d - 1) / s

        return LevyTriple(killing=self.phi0, density=density, total_mass=INF, density_at_zero=INF)

    def w_closed_form(self, z):
        if self.q == 0 and abs(self.p - self.s) < 1e-15:
            z = np.asarray(z, dtype=complex)
            s = self.s
            return np.exp(sc.loggamma(z) + sc.loggamma(1 + s * z) - sc.loggamma(1 + s) - sc.loggamma(1 + z))
        if abs(self.delta - 1) < 1e-15:
            # Gamma(q + 1 + s u) / Gamma(q + s u) = s (u + q / s)
            return Affine(self.s, self.q / self.s).w_closed_form(z)
        return None

    def barnes_w(self, z, threshold=None):
        """W_phi via Barnes double gamma ratios, normalised so that W(1) = 1."""
        from .special import log_barnes_g_ratio

        tau = 1.0 / self.s
        a, b = self.p / self.s, self.q / self.s
        z = np.asarray(z, dtype=complex)
        num = log_barnes_g_ratio(z, a, b, tau, threshold)
        den = log_barnes_g_ratio(np.asarray(1.0 + 0j), a, b, tau, threshold)
        return np.exp(num - den)

    def rescale(self, beta):
        return GammaRatio(self.p, self.q, self.s * beta)

    def params(self):
        return {"p": self.p, "q": self.q, "scale": self.s}


def stable_subordinator_exponent(beta):
    """phi(u) = Gamma(u + beta) / Gamma(u): Lamperti exponent used for the
    inverse beta-stable time change (normalisation E[exp(-q chi_1)] = exp(-q^beta)).
    beta = 1 gives phi(u) = u, the trivial time change."""
    if not 0 < beta <= 1:
        raise ValueError("beta must lie in (0, 1]")
    f = GammaRatio(beta, 0.0, 1.0)
    f.name = "stable_subordinator"
    f.stable_index = beta
    return f


class ExponentialJumps(BernsteinFunction):
    """phi(u) = k + d u + rate u / (u + mu): compound Poisson with Exp(mu) jumps."""

    name = "exponential_jumps"

    def __init__(self, drift=0.0, rate=1.0, mu=1.0, killing=0.0):
        if drift < 0 or rate < 0 or mu <= 0 or killing < 0:
            raise ValueError("invalid ExponentialJumps parameters")
        if drift == 0 and rate == 0:
            raise ValueError("constant Bernstein functions are rejected")
        self.k, self.drift, self.rate, self.mu = float(killing), float(drift), float(rate), float(mu)
        self.abscissa_a = self.mu if self.rate > 0 else INF
        self.abscissa_astar = self._astar()
        self.value_at_infinity = INF if self.drift > 0 else self.k + self.rate
        self.b_minus = True

    def _astar(self):
        # largest u with phi(-u) >= 0 on [0, u], bounded by the pole at mu
        f = lambda u: self.k - self.drift * u - self.rate * u / (self.mu - u)
        if f(0.0) < 0:
            return 0.0
        if self.k == 0:
            return 0.0
        hi = self.mu if self.rate > 0 else self.k / self.drift
        from scipy.optimize import brentq

        return brentq(f, 0.0, hi * (1 - 1e-15), xtol=1e-14)

    def _eval(self, u):
        return self.k + self.drift * u + self.rate * u / (u + self.mu)

    @property
    def phi0(self):
        return self.k

    @property
    def derivative_at_zero(self):
        return self.drift + self.rate / self.mu

    @property
    def triple(self):
        r, mu = self.rate, self.mu
        return LevyTriple(
            drift=self.drift,
            killing=self.k,
            density=lambda y: r * mu * np.exp(-mu * np.asarray(y, dtype=float)),
            tail=lambda y: r * np.exp(-mu * np.asarray(y, dtype=float)),
            total_mass=r,
            density_at_zero=r * mu,
        )

    def params(self):
        return {"drift": self.drift, "rate": self.rate, "mu": self.mu, "killing": self.k}


class TripleBernstein(BernsteinFunction):
    """Bernstein function evaluated from its Levy triple by quadrature."""

    name = "triple"

    def __init__(self, triple: LevyTriple, abscissa_a=0.0, abscissa_astar=0.0):
        if triple.two_sided:
            raise ValueError("TripleBernstein needs a subordinator triple")
        if not triple.check_integrability():
            raise ValueError("Levy measure violates int (1 ^ y) theta(dy) < inf")
        self._triple = triple
        self.drift = triple.drift
        self.abscissa_a = abscissa_a
        self.abscissa_astar = abscissa_astar
        if triple.drift == 0 and triple.density is None and not triple.atoms:
            raise ValueError("constant Bernstein functions are rejected")

    @property
    def triple(self):
        return self._triple

    def _eval_one(self, u):
        t = self._triple
        val = t.killing + t.drift * u + sum(m * (1 - np.exp(-u * y)) for y, m in t.atoms)
        if t.density is not None:
            parts = []
            for part in (np.real, np.imag):
                g = lambda y: part(-np.expm1(-u * y)) * t.density(y)
                r1 = integrate.quad(g, 0, 1, limit=400, full_output=1)
                r2 = integrate.quad(g, 1, np.inf, limit=400, full_output=1)
                res = abs(r1[1]) + abs(r2[1])
                if not np.isfinite(r1[0] + r2[0]) or res > 1e-6 * max(1.0, abs(r1[0] + r2[0])):
                    raise IntegrationError(f"quadrature failed at u={u}", residual=res)
                parts.append(r1[0] + r2[0])
            val = val + parts[0] + 1j * parts[1]
        return val

    def _eval(self, u):
        u = np.asarray(u, dtype=complex)
        out = np.array([self._eval_one(x) for x in u.ravel()], dtype=complex)
        return out.reshape(u.shape)

    @property
    def phi0(self):
        return self._triple.killing

    @property
    def derivative_at_zero(self):
        return self._triple.drift + self._triple.mean_jump()


class STransform(BernsteinFunction):
    """S_phi(u) = u phi(u) / (u + 1) for phi in B_1.

    W_{S_phi}(u) = W_phi(u) / u.
    """

    name = "s_transform"

    def __init__(self, base: BernsteinFunction):
        ok, reason = membership(base, "B_1")
        if not ok:
            raise MembershipError(f"S-transform requires phi in B_1: {reason}")
        self.base = base
        self.drift = base.drift
        self.abscissa_astar = 0.0
        phim1 = complex(base._eval(np.asarray(-1.0 + 0j)))
        self.abscissa_a = base.abscissa_a if abs(phim1) < 1e-12 else min(base.abscissa_a, 1.0)
        self.value_at_infinity = base.value_at_infinity

    def _eval(self, u):
        u = np.asarray(u, dtype=complex)
        return u / (u + 1) * self.base._eval(u)

    def logphi(self, u):
        u = np.asarray(u, dtype=complex)
        return np.log(u) - np.log(u + 1) + self.base.logphi(u)

    @property
    def phi0(self):
        return 0.0

    @property
    def derivative_at_zero(self):
        return self.base.phi0

    def w_closed_form(self, z):
        from .wphi import w_phi_eval

        z = np.asarray(z, dtype=complex)
        return w_phi_eval(self.base, z) / z

    @cached_property
    def triple(self):
        """Levy measure of S_phi from that of phi.

        Tail: theta_S(y) = (k - d) e^{-y} + vbar(y) - int_0^y e^{-(y - s)} vbar(s) ds,
        where k = phi(0), d the drift and vbar the tail of phi's Levy measure.
        """
        base = self.base.triple
        if base is None:
            return None
        k, d = base.killing, base.drift
        vbar = lambda s: float(base.tail_mass(s))
        grid = np.geomspace(1e-10, 80.0, 500)
        conv = np.empty_like(grid)
        prev_y, acc = 0.0, 0.0
        # running convolution int_0^y e^{s - y} vbar(s) ds, accumulated panel by panel
        for i, y in enumerate(grid):
            piece = integrate.quad(lambda s: math.exp(s - y) * vbar(s), prev_y, y, limit=200)[0]
            acc = acc * math.exp(prev_y - y) + piece
            conv[i] = acc
            prev_y = y
        tail_vals = (k - d) * np.exp(-grid) + np.array([vbar(y) for y in grid]) - conv
        tail_vals = np.maximum(tail_vals, 1e-300)
        lg, lt = np.log(grid), np.log(tail_vals)

        def tail(y):
            y = np.asarray(y, dtype=float)
            ly = np.log(np.clip(y, grid[0], None))
            inside = np.exp(np.interp(ly, lg, lt))
            # exponential decay beyond the grid
            slope = (lt[-1] - lt[-2]) / (grid[-1] - grid[-2])
            beyond = tail_vals[-1] * np.exp(slope * (y - grid[-1]))
            return np.where(y > grid[-1], beyond, inside)

        return LevyTriple(drift=d, tail=tail, total_mass=base.mass, density_at_zero=base.v0)

    @property
    def b_minus(self):
        return None

    def params(self):
        return {"base": self.base}


class Rescaled(BernsteinFunction):
    """phi_beta(u) = phi(beta u)."""

    name = "rescaled"

    def __init__(self, base: BernsteinFunction, beta: float):
        if beta <= 0:
            raise ValueError("beta must be positive")
        self.base, self.beta = base, float(beta)
        self.abscissa_a = base.abscissa_a / beta
        self.abscissa_astar = base.abscissa_astar / beta
        self.value_at_infinity = base.value_at_infinity
        self.drift = base.drift * beta
        self.b_minus = base.b_minus

    def _eval(self, u):
        return self.base._eval(self.beta * np.asarray(u, dtype=complex))

    def logphi(self, u):
        return self.base.logphi(self.beta * np.asarray(u, dtype=complex))

    @property
    def phi0(self):
        return self.base.phi0

    @property
    def derivative_at_zero(self):
        d = self.base.derivative_at_zero
        return None if d is None else d * self.beta

    @property
    def triple(self):
        t = self.base.triple
        if t is None:
            return None
        b = self.beta
        dens = None if t.density is None else (lambda y: t.density(np.asarray(y) / b) / b)
        tail = None
        if t.tail is not None or t.density is not None:
            tail = lambda y: t.tail_mass(np.asarray(y) / b)
        return LevyTriple(
            drift=t.drift * b,
            killing=t.killing,
            density=dens,
            tail=tail,
            atoms=[(y * b, m) for y, m in t.atoms],
            total_mass=t.total_mass,
            density_at_zero=None if t.density_at_zero is None else t.density_at_zero / b,
        )

    def rescale(self, beta):
        total = self.beta * beta
        if abs(total - 1) < 1e-15:
            return self.base
        return Rescaled(self.base, total)

    def params(self):
        return {"base": self.base, "beta": self.beta}


# ---------------------------------------------------------------------------
# Wiener-Hopf pairs


@dataclass(frozen=True)
class WienerHopfPair:
    """Psi_alpha(z) = -phi_minus(z) phi_plus(-z), class N requires phi_plus(0) > 0."""

    phi_minus: BernsteinFunction
    phi_plus: BernsteinFunction
    alpha: float
    name: str = "pair"
    levy: Optional[LevyTriple] = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")

    @property
    def in_class_N(self):
        return self.phi_plus.phi0 > 0

    def psi(self, z):
        """Psi_alpha(z) = -phi^-(z) phi^+(-z)."""
        z = np.asarray(z, dtype=complex)
        out = -self.phi_minus._eval(z) * self.phi_plus._eval(-z)
        return out if out.ndim else complex(out)

    def psi_y(self, w):
        """Exponent of Y itself: Psi(w) = Psi_alpha(w / alpha)."""
        return self.psi(np.asarray(w, dtype=complex) / self.alpha)


def brownian_pair():
    """Brownian motion killed at 0: Y_t = B_t - t/2, alpha = 2, Psi_2(z) = 2 z^2 - z."""
    levy = LevyTriple(sigma2=0.5, linear=-0.5, two_sided=True, total_mass=0.0)
    return WienerHopfPair(Affine(1.0, 0.0), Affine(2.0, 0.5), 2.0, name="brownian", levy=levy)


def stable_example_pair(a, rho, b):
    """Wiener-Hopf factors of the alpha-stable example, alpha = a b:

    phi^-(z) = Gamma(1 + alpha z) / Gamma(1 - a(1 - rho) + alpha z)
    phi^+(z) = Gamma(a + alpha z) / Gamma(a(1 - rho) + alpha z)
    """
    if not 0 < a <= 2:
        raise ValueError("stable index a must lie in (0, 2]")
    if not 0 < rho < 1:
        raise ValueError("rho must lie in (0, 1)")
    if not 0 < b <= 1 - rho + 1e-15:
        raise ValueError("b must lie in (0, 1 - rho]")
    alpha = a * b
    k = a * (1 - rho)
    if k > 1 + 1e-12:
        raise ValueError("a (1 - rho) must not exceed 1")
    k = min(k, 1.0)
    phi_minus = GammaRatio(1.0, 1.0 - k, alpha)
    phi_plus = GammaRatio(a, k, alpha)
    levy = lamperti_stable_triple(a, rho) if a < 2 else None
    return WienerHopfPair(
        phi_minus, phi_plus, alpha, name="stable_example", levy=levy, params={"a": a, "rho": rho, "b": b}
    )


def _lamperti_psi(w, a, rho):
    k = a * (1 - rho)
    w = np.asarray(w, dtype=complex)
    return -sc.gamma(1 + w) * sc.gamma(a - w) * sc.rgamma(1 - k + w) * sc.rgamma(k - w)


def lamperti_stable_triple(a, rho):
    """Levy triple of Y with exponent Psi(w) = Psi_alpha(w / alpha) for the stable example.

    Pi(dy) = c+ e^y (e^y - 1)^{-a-1} dy (y > 0),  c- e^y (1 - e^y)^{-a-1} dy (y < 0),
    c+- = Gamma(1 + a) sin(pi a rho or pi a (1 - rho)) / pi; the killing rate is
    c-/a and the linear coefficient is fixed by matching Psi at w = 1/2.
    """
    cp = math.gamma(1 + a) * math.sin(math.pi * a * rho) / math.pi
    cm = math.gamma(1 + a) * math.sin(math.pi * a * (1 - rho)) / math.pi
    cm = max(cm, 0.0) if abs(a * (1 - rho) - 1) > 1e-12 else 0.0

    def pos_density(y):
        y = np.asarray(y, dtype=float)
        return cp * np.exp(y) * np.expm1(y) ** (-a - 1)

    def neg_density(y):  # mass at -y
        y = np.asarray(y, dtype=float)
        return cm * np.exp(-y) * (-np.expm1(-y)) ** (-a - 1)

    pos_tail = lambda y: cp * np.expm1(np.asarray(y, dtype=float)) ** (-a) / a
    neg_tail = lambda y: cm * ((-np.expm1(-np.asarray(y, dtype=float))) ** (-a) - 1.0) / a
    killing = cm / a
    probe = LevyTriple(
        killing=killing,
        density=pos_density,
        tail=pos_tail,
        neg_density=neg_density if cm > 0 else None,
        neg_tail=neg_tail if cm > 0 else None,
        two_sided=True,
        total_mass=INF,
        density_at_zero=INF,
    )
    w0 = 0.5
    target = complex(_lamperti_psi(w0, a, rho))
    linear = ((target - probe.exponent(w0)) / w0).real
    return LevyTriple(
        killing=killing,
        linear=linear,
        density=pos_density,
        tail=pos_tail,
        neg_density=neg_density if cm > 0 else None,
        neg_tail=neg_tail if cm > 0 else None,
        two_sided=True,
        total_mass=INF,
        density_at_zero=INF,
    )


# ---------------------------------------------------------------------------
# operations


def eval_phi(phi: BernsteinFunction, u):
    """Evaluate phi with domain checks: real u must exceed -a_phi, complex u
    needs Re u >= 0."""
    arr = np.asarray(u)
    if np.iscomplexobj(arr):
        if np.any(np.real(arr) < 0) and np.any(np.abs(np.imag(arr)) > 0):
            raise DomainError("complex arguments need Re u >= 0")
    if np.any(np.real(arr) <= -phi.abscissa_a):
        raise DomainError(f"argument left of -a_phi = {-phi.abscissa_a}")
    return phi(u)


def phi_prime_at_zero(phi: BernsteinFunction):
    """phi'(0+) (may be inf)."""
    d = phi.derivative_at_zero
    if d is not None:
        return d
    t = phi.triple
    if t is not None:
        return t.drift + t.mean_jump()
    # one-sided finite differences with Richardson; divergence detected by growth
    f0 = phi(0.0)
    est = []
    for h in (1e-3, 5e-4, 2.5e-4, 1.25e-4):
        est.append(2 * (phi(h) - f0) / h - (phi(2 * h) - f0) / (2 * h))
    if est[-1] > 1.2 * est[0] and est[-1] - est[-2] > 0.9 * (est[-2] - est[-3]) > 0:
        return INF
    return est[-1]


def rescale(phi: BernsteinFunction, beta: float) -> BernsteinFunction:
    return phi.rescale(beta)


def s_transform(phi: BernsteinFunction) -> STransform:
    return STransform(phi)


@dataclass(frozen=True)
class MembershipResult:
    member: bool
    reason: str

    def __iter__(self):
        return iter((self.member, self.reason))

    def __bool__(self):
        return self.member


def membership(phi: BernsteinFunction, cls: str) -> MembershipResult:
    """Membership of phi in B_rho, B_1 or B_-."""
    if cls in ("B_rho", "B_varrho", "B_ϱ"):
        if abs(phi.phi0) > 1e-14:
            return MembershipResult(False, f"phi(0) = {phi.phi0} != 0")
        d = phi_prime_at_zero(phi)
        if not math.isfinite(d):
            return MembershipResult(False, "phi'(0+) is infinite")
        if phi.drift > 0:
            return MembershipResult(True, f"d = {phi.drift} > 0")
        t = phi.triple
        if t is not None and math.isinf(t.mass):
            return MembershipResult(True, "theta(0, 1) = inf")
        if math.isinf(phi.value_at_infinity):
            return MembershipResult(True, "phi(inf) = inf")
        if t is None:
            raise IndeterminateError("cannot decide d > 0 or theta(0,1) = inf without a triple")
        return MembershipResult(False, "d = 0 and theta(0, 1) < inf")
    if cls == "B_1":
        if phi.abscissa_astar >= 1 - 1e-15:
            return MembershipResult(True, f"a*_phi = {phi.abscissa_astar} >= 1")
        u = np.linspace(0.0, 1.0, 1001)
        vals = np.real(phi._eval(-u + 0j))
        bad = ~np.isfinite(vals) | (vals < 0)
        if np.any(bad):
            worst = u[np.nanargmin(np.where(np.isfinite(vals), vals, -np.inf))]
            return MembershipResult(False, f"phi(-u) < 0 or infinite, worst at u = {worst:g}")
        return MembershipResult(True, "0 <= phi(-u) < inf on [0, 1]")
    if cls in ("B_-", "B_minus"):
        if phi.b_minus is not None:
            return MembershipResult(bool(phi.b_minus), "library metadata")
        t = phi.triple
        if t is None or t.density is None:
            raise IndeterminateError("B_- needs a Levy density")
        v = t.density(DYADIC_GRID)
        inc = np.diff(v)
        if np.any(inc > MONOTONE_SLACK * np.maximum(1.0, np.abs(v[:-1]))):
            return MembershipResult(False, "density increases somewhere on the grid")
        return MembershipResult(True, "density nonincreasing on grid")
    raise ValueError(f"unknown class {cls!r}")


def abscissas(phi: BernsteinFunction):
    """(a_phi, a*_phi)."""
    a, astar = phi.abscissa_a, phi.abscissa_astar
    if a is None or astar is None:
        raise IndeterminateError("abscissas unavailable")
    return a, astar


# ---------------------------------------------------------------------------
# model-spec files


class ModelSpecError(ValueError):
    pass


_PHI_KINDS = {
    "identity": ((), lambda p: identity()),
    "affine": (("c", "b"), lambda p: Affine(p.get("c", 1.0), p.get("b", 0.0))),
    "power": (("kappa", "c"), lambda p: Power(p["kappa"], p.get("c", 1.0))),
    "stable_subordinator": (("beta",), lambda p: stable_subordinator_exponent(p["beta"])),
    "gamma_ratio": (("p", "q", "scale"), lambda p: GammaRatio(p["p"], p["q"], p.get("scale", 1.0))),
    "exponential_jumps": (
        ("drift", "rate", "mu", "killing"),
        lambda p: ExponentialJumps(p.get("drift", 0.0), p.get("rate", 1.0), p.get("mu", 1.0), p.get("killing", 0.0)),
    ),
}
_PAIR_KINDS = {
    "brownian": ((), lambda p: brownian_pair()),
    "stable_example": (("a", "rho", "b"), lambda p: stable_example_pair(p["a"], p["rho"], p["b"])),
}
# keys shared by every kind
_COMMON_KEYS = ("x", "t", "time_change", "time_change_beta")
_TIME_CHANGES = ("stable", "identity", "s_transform")


@dataclass(frozen=True)
class ModelSpec:
    """Parsed model: a Bernstein function or a Wiener-Hopf pair plus run parameters.

    For pair kinds, ``time_change`` selects phi for the inverse subordinator:
    ``stable`` (Gamma(u + beta)/Gamma(u) with beta = ``time_change_beta``),
    ``identity`` (beta = 1, no time change) or ``s_transform`` (S applied to phi+).
    """

    kind: str
    params: dict
    x: float = 1.0
    t: float = 1.0
    time_change: Optional[str] = None
    time_change_beta: Optional[float] = None

    @property
    def is_pair(self):
        return self.kind in _PAIR_KINDS

    @property
    def phi(self) -> BernsteinFunction:
        if self.is_pair:
            raise ModelSpecError(f"kind {self.kind!r} is a Wiener-Hopf pair, not a Bernstein function")
        return _PHI_KINDS[self.kind][1](self.params)

    @property
    def pair(self) -> WienerHopfPair:
        if not self.is_pair:
            raise ModelSpecError(f"kind {self.kind!r} is a Bernstein function, not a pair")
        return _PAIR_KINDS[self.kind][1](self.params)

    @property
    def beta(self) -> float:
        if self.time_change_beta is not None:
            return self.time_change_beta
        if self.kind == "stable_subordinator":
            return self.params["beta"]
        return 1.0

    def time_change_phi(self) -> BernsteinFunction:
        """phi (not yet rescaled) for the time change of a pair model."""
        tc = self.time_change or ("stable" if self.time_change_beta is not None else "identity")
        if tc == "stable":
            return stable_subordinator_exponent(self.beta)
        if tc == "identity":
            return identity()
        return STransform(self.pair.phi_plus)

    def with_overrides(self, **values):
        """Copy with flag overrides (None values are ignored)."""
        params = dict(self.params)
        top = {}
        for k, v in values.items():
            if v is None:
                continue
            if k in ("x", "t", "time_change", "time_change_beta"):
                top[k] = v
            elif k in _allowed_keys(self.kind):
                params[k] = float(v)
            else:
                raise ModelSpecError(f"key {k!r} not valid for kind {self.kind!r}")
        return ModelSpec(
            self.kind,
            params,
            top.get("x", self.x),
            top.get("t", self.t),
            top.get("time_change", self.time_change),
            top.get("time_change_beta", self.time_change_beta),
        )


def _allowed_keys(kind):
    table = _PHI_KINDS if kind in _PHI_KINDS else _PAIR_KINDS
    return table[kind][0]


def parse_model_spec(text: str) -> ModelSpec:
    """Parse ``key=value`` pairs separated by newlines or commas; ``#`` starts a comment.

    ``kind`` is required; unknown keys and unparsable numbers are rejected.
    """
    items = {}
    for line in text.splitlines():
        line = line.split("#", 1)[0]
        for chunk in line.split(","):
            chunk = chunk.strip()
            if not chunk:
                continue
            if "=" not in chunk:
                raise ModelSpecError(f"expected key=value, got {chunk!r}")
            k, v = (s.strip() for s in chunk.split("=", 1))
            if k in items:
                raise ModelSpecError(f"duplicate key {k!r}")
            items[k] = v
    kind = items.pop("kind", None)
    if kind is None:
        raise ModelSpecError("missing 'kind'")
    if kind not in _PHI_KINDS and kind not in _PAIR_KINDS:
        raise ModelSpecError(f"unknown kind {kind!r}; choose from {sorted({**_PHI_KINDS, **_PAIR_KINDS})}")
    allowed = set(_allowed_keys(kind)) | set(_COMMON_KEYS)
    unknown = sorted(set(items) - allowed)
    if unknown:
        raise ModelSpecError(f"unknown keys for kind {kind!r}: {unknown}")
    tc = items.pop("time_change", None)
    if tc is not None and tc not in _TIME_CHANGES:
        raise ModelSpecError(f"time_change must be one of {_TIME_CHANGES}")
    try:
        nums = {k: float(v) for k, v in items.items()}
    except ValueError as exc:
        raise ModelSpecError(str(exc)) from None
    x = nums.pop("x", 1.0)
    t = nums.pop("t", 1.0)
    tcb = nums.pop("time_change_beta", None)
    missing = [k for k in _REQUIRED.get(kind, ()) if k not in nums]
    if missing:
        raise ModelSpecError(f"kind {kind!r} needs {missing}")
    spec = ModelSpec(kind, nums, x, t, tc, tcb)
    try:
        spec.pair if spec.is_pair else spec.phi
    except (ValueError, KeyError) as exc:
        raise ModelSpecError(f"invalid parameters for {kind!r}: {exc}") from None
    return spec


_REQUIRED = {
    "power": ("kappa",),
    "stable_subordinator": ("beta",),
    "gamma_ratio": ("p", "q"),
    "stable_example": ("a", "rho", "b"),
}


def load_model_spec(path) -> ModelSpec:
    with open(path) as fh:
        return parse_model_spec(fh.read())
