"""Complex special functions: log-gamma, Pochhammer symbols and Barnes double
gamma ratios.

Barnes' double gamma ``G(u; tau)`` is only ever exposed through ratios
``G(z + a; tau) / G(z + b; tau)``, which do not depend on the normalisation
constant of ``G``.  The ratio is computed by pushing both arguments to the
right with the functional equation ``G(u + 1; tau) = Gamma(u / tau) G(u; tau)``
and then using an Euler-Maclaurin asymptotic expansion of ``log G``.
"""

from __future__ import annotations

import functools
import math
import warnings

import numpy as np
from scipy import special as sc

__all__ = [
    "PoleError",
    "PrecisionWarning",
    "log_gamma",
    "gamma",
    "rgamma",
    "pochhammer",
    "falling_factorial",
    "log_barnes_g_asymptotic",
    "barnes_g_ratio",
    "log_barnes_g_ratio",
    "BarnesGRatio",
    "log_gamma_ratio",
]

POLE_TOL = 1e-9

# B_2, B_4, ..., B_20
_BERNOULLI = [
    1.0 / 6,
    -1.0 / 30,
    1.0 / 42,
    -1.0 / 30,
    5.0 / 66,
    -691.0 / 2730,
    7.0 / 6,
    -3617.0 / 510,
    43867.0 / 798,
    -174611.0 / 330,
]


class PoleError(ValueError):
    """Argument sits on (or within ``POLE_TOL`` of) a pole or lattice point."""


class PrecisionWarning(RuntimeWarning):
    pass


def _check_gamma_poles(z, what="log_gamma"):
    z = np.asarray(z)
    re = np.real(z)
    near = (np.abs(np.imag(z)) < POLE_TOL) & (re < 0.5) & (np.abs(re - np.round(re)) < POLE_TOL)
    if np.any(near):
        bad = np.asarray(z)[near].ravel()[0]
        raise PoleError(f"{what}: argument {bad} is a pole of Gamma")


def log_gamma(z):
    """Principal branch of log Gamma(z) for complex (or real) ``z``.

    Raises PoleError at nonpositive integers.
    """
    z = np.asarray(z, dtype=complex)
    _check_gamma_poles(z)
    out = sc.loggamma(z)
    return out if out.ndim else complex(out)


def gamma(z):
    z = np.asarray(z, dtype=complex)
    _check_gamma_poles(z, "gamma")
    out = sc.gamma(z)
    return out if out.ndim else complex(out)


def rgamma(z):
    """1/Gamma(z); zero at the poles of Gamma."""
    z = np.asarray(z)
    out = sc.rgamma(z)
    return out if out.ndim else out.item()


def pochhammer(c, k):
    """Rising factorial (1 + c)_k = Gamma(1 + c + k) / Gamma(1 + c).

    ``k`` may be negative; the result then uses the gamma-function definition.
    """
    k = int(k)
    if 0 <= k <= 64:
        out = 1.0
        for j in range(k):
            out *= 1.0 + c + j
        return out
    a, b = 1.0 + c + k, 1.0 + c
    for v in (a, b):
        if v <= 0 and abs(v - round(v)) < POLE_TOL:
            raise PoleError(f"pochhammer: Gamma pole at {v}")
    return float(sc.gammasgn(a) * sc.gammasgn(b) * math.exp(sc.gammaln(a) - sc.gammaln(b)))


_RATIO_TERMS = 12
_RATIO_SWITCH = 40.0


@functools.lru_cache(maxsize=None)
def _bernoulli_numbers(n):
    return tuple(float(v) for v in sc.bernoulli(n))


def _bernoulli_poly(n, x):
    """B_n(x) = sum_k C(n, k) B_k x^{n-k}."""
    b = _bernoulli_numbers(n)
    return sum(math.comb(n, k) * b[k] * x ** (n - k) for k in range(n + 1))


@functools.lru_cache(maxsize=None)
def _ratio_coefficients(p, q):
    return tuple(
        (-1) ** (n + 1) * (_bernoulli_poly(n + 1, p) - _bernoulli_poly(n + 1, q)) / (n * (n + 1))
        for n in range(1, _RATIO_TERMS + 1)
    )


def log_gamma_ratio(x, p, q):
    """log Gamma(x + p) - log Gamma(x + q).

    For |x| >= 40 an asymptotic series in Bernoulli polynomials is used; it
    avoids the cancellation between two large log-gamma values.
    """
    x = np.asarray(x, dtype=complex)
    out = np.empty(x.shape, dtype=complex)
    big = np.abs(x) >= _RATIO_SWITCH
    small = ~big
    if np.any(small):
        out[small] = sc.loggamma(x[small] + p) - sc.loggamma(x[small] + q)
    if np.any(big):
        xb = x[big]
        acc = (p - q) * np.log(xb)
        for n, c in enumerate(_ratio_coefficients(float(p), float(q)), start=1):
            acc = acc + c / xb**n
        out[big] = acc
    return out if out.ndim else complex(out)


def falling_factorial(x, m):
    """x (x - 1) ... (x - m + 1); equals 1 for m = 0."""
    out = 1.0
    for j in range(int(m)):
        out *= x - j
    return out


@functools.lru_cache(maxsize=None)
def _polygamma_coefficients(m):
    return tuple(b2k * math.factorial(2 * k + m - 1) / math.factorial(2 * k) for k, b2k in enumerate(_BERNOULLI, start=1))


def _polygamma_asymptotic(m, x):
    """psi^(m)(x) for m >= 1 and large |x| (|x| >= ~20, Re x > 0)."""
    x = np.asarray(x, dtype=complex)
    sign = (-1) ** (m + 1)
    inv = 1.0 / x
    acc = math.factorial(m - 1) * inv**m + math.factorial(m) / 2 * inv ** (m + 1)
    power = inv ** (m + 2)
    inv2 = inv * inv
    for coef in _polygamma_coefficients(m):
        acc = acc + coef * power
        power = power * inv2
    return sign * acc


def _log_gamma_antiderivative(x):
    """Antiderivative of the Stirling series of log Gamma (constant dropped)."""
    lx = np.log(x)
    out = (x * x / 2 - x / 2) * lx - 0.75 * x * x + x / 2 + 0.5 * x * math.log(2 * math.pi)
    out = out + lx / 12.0
    for k, b2k in enumerate(_BERNOULLI[1:], start=2):
        out = out + b2k * x ** (2 - 2 * k) / (2 * k * (2 * k - 1) * (2 - 2 * k))
    return out


def log_barnes_g_asymptotic(w, tau, terms=5):
    """Asymptotic expansion of log G(w; tau) for Re w large, up to an additive
    constant depending only on tau.

    Obtained from Euler-Maclaurin applied to the difference equation
    log G(w + 1) - log G(w) = log Gamma(w / tau).
    """
    w = np.asarray(w, dtype=complex)
    x = w / tau
    out = tau * _log_gamma_antiderivative(x) - 0.5 * sc.loggamma(x)
    out = out + (_BERNOULLI[0] / 2) * sc.psi(x) / tau
    for j in range(2, terms + 1):
        b = _BERNOULLI[j - 1] / math.factorial(2 * j)
        out = out + b * tau ** (1 - 2 * j) * _polygamma_asymptotic(2 * j - 2, x)
    return out


def _default_threshold(tau):
    return 30.0 * max(1.0, tau)


def log_barnes_g_ratio(z, a, b, tau, threshold=None):
    """log[G(z + a; tau) / G(z + b; tau)] (branch not normalised)."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    z = np.asarray(z, dtype=complex)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    if a == b:
        out = np.zeros(z.shape, dtype=complex)
        return complex(out[0]) if scalar else out
    R = _default_threshold(tau) if threshold is None else float(threshold)
    lowest = float(np.min(np.real(z))) + min(a, b)
    n_ladder = max(0, int(math.ceil(R - lowest)))
    acc = np.zeros(z.shape, dtype=complex)
    if n_ladder:
        k = np.arange(n_ladder)[:, None]
        ua = (z[None, :] + a + k) / tau
        ub = (z[None, :] + b + k) / tau
        _check_gamma_poles(ua, "barnes_g_ratio (lattice point)")
        _check_gamma_poles(ub, "barnes_g_ratio (lattice point)")
        acc = np.sum(sc.loggamma(ua) - sc.loggamma(ub), axis=0)
    wa = z + a + n_ladder
    wb = z + b + n_ladder
    out = log_barnes_g_asymptotic(wa, tau) - log_barnes_g_asymptotic(wb, tau) - acc
    # size of the first omitted Euler-Maclaurin term as a remainder proxy
    xmin = float(np.min(np.abs(np.concatenate([wa, wb])))) / tau
    rem = abs(_BERNOULLI[5] / math.factorial(12)) * tau ** (-11) * math.factorial(9) / xmin**10
    if rem > 1e-10:
        warnings.warn(f"barnes_g_ratio: asymptotic remainder {rem:.1e} exceeds tolerance", PrecisionWarning)
    return complex(out[0]) if scalar else out


def barnes_g_ratio(z, a, b, tau, threshold=None):
    """G(z + a; tau) / G(z + b; tau).

    Raises PoleError when a ladder argument lies on the zero/pole lattice.
    """
    return np.exp(log_barnes_g_ratio(z, a, b, tau, threshold))


class BarnesGRatio:
    """Callable ``z -> G(z + a; tau) / G(z + b; tau)`` with a fixed ladder threshold."""

    def __init__(self, tau, numerator_shift, denominator_shift, threshold=None):
        if tau <= 0:
            raise ValueError("tau must be positive")
        self.tau = float(tau)
        self.numerator_shift = float(numerator_shift)
        self.denominator_shift = float(denominator_shift)
        self.threshold = _default_threshold(tau) if threshold is None else float(threshold)

    def log(self, z):
        return log_barnes_g_ratio(z, self.numerator_shift, self.denominator_shift, self.tau, self.threshold)

    def __call__(self, z):
        return np.exp(self.log(z))

    def __repr__(self):
        return (
            f"BarnesGRatio(tau={self.tau}, numerator_shift={self.numerator_shift}, "
            f"denominator_shift={self.denominator_shift})"
        )
