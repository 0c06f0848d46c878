"""W_phi: the positive-definite solution of W(z + 1) = phi(z) W(z), W(1) = 1.

Closed forms are used when a Bernstein function registers one (identity,
affine, power, the rescaled stable-subordinator exponent, S-transforms).  The
stable-example gamma ratios go through Barnes double gamma ratios.  Everything
else falls back to the Euler-type product

    W_n(z) = phi(n)^{z-1} prod_{k=1}^{n-1} phi(k) / phi(k + z - 1),

evaluated in the log domain on dyadic n and extrapolated in 1/n (Romberg).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bernstein import BernsteinFunction, DomainError, GammaRatio

__all__ = [
    "NonConvergenceError",
    "WPhiFunction",
    "w_phi_integer",
    "w_phi_eval",
    "w_phi_reciprocal",
    "euler_product",
    "residual",
]

DEFAULT_TOL = 1e-8
INTERNAL_TOL = 1e-10
MAX_LOG2_N = 20
MIN_LOG2_N = 5
ROMBERG_COLUMNS = 6
CHUNK = 1 << 15


class NonConvergenceError(RuntimeError):
    def __init__(self, message, iterates=None):
        super().__init__(message)
        self.iterates = iterates


def w_phi_integer(phi: BernsteinFunction, n: int, log: bool = False):
    """W_phi(n + 1) = phi(1) ... phi(n), accumulated in logs.

    With ``log=True`` the logarithm is returned, which is the overflow-safe path.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n == 0:
        return 0.0 if log else 1.0
    k = np.arange(1, n + 1, dtype=float)
    vals = np.real(phi(k))
    if np.any(vals <= 0):
        raise DomainError("phi must be positive on the positive integers")
    total = math.fsum(np.log(vals))
    if log:
        return total
    direct = math.prod(vals.tolist())
    if math.isfinite(direct) and direct > 0:
        return direct
    if total > 709.0:
        raise OverflowError(f"W_phi({n + 1}) overflows; log value is {total}")
    return math.exp(total)


def _logphi(phi, u):
    return np.asarray(phi.logphi(np.asarray(u, dtype=complex)), dtype=complex)


def euler_product(phi: BernsteinFunction, z, tol: float = DEFAULT_TOL, max_log2_n: int = MAX_LOG2_N, log=False):
    """W_phi(z) by the Euler-type product with Romberg extrapolation in 1/n.

    Converged when successive diagonal Romberg entries of log W agree within
    ``tol * 1e-2`` (capped below by the roundoff floor of the log sums), or raises
    :class:`NonConvergenceError` with the last two iterates.
    """
    z = np.asarray(z, dtype=complex)
    shape = z.shape
    zf = z.ravel()
    target = max(min(tol * 1e-2, 1e-9), INTERNAL_TOL)

    partial = np.zeros(zf.size, dtype=complex)  # sum_{k=1}^{n-1} [log phi(k) - log phi(k+z-1)]
    next_k = 1
    table = []  # rows of Romberg estimates, each an array over z
    done = np.zeros(zf.size, dtype=bool)
    result = np.full(zf.size, np.nan + 0j)
    prev_diag = None
    for j in range(1, max_log2_n + 1):
        n = 1 << j
        # extend the partial sums to k = n - 1
        while next_k <= n - 1:
            hi = min(n, next_k + CHUNK)
            k = np.arange(next_k, hi, dtype=float)
            lk = _logphi(phi, k)
            shifted = _logphi(phi, k[:, None] + (zf[None, :] - 1.0))
            partial += np.sum(lk) - np.sum(shifted, axis=0)
            next_k = hi
        est = (zf - 1.0) * _logphi(phi, float(n)) + partial
        row = [est]
        if table:
            prev = table[-1]
            for m in range(1, min(len(prev), ROMBERG_COLUMNS - 1) + 1):
                factor = 2.0**m - 1.0
                row.append(row[m - 1] + (row[m - 1] - prev[m - 1]) / factor)
        table.append(row)
        diag = row[-1]
        if prev_diag is not None and j >= MIN_LOG2_N:
            delta = np.abs(diag - prev_diag)
            newly = (~done) & (delta < target * np.maximum(1.0, np.abs(np.real(diag))))
            result[newly] = diag[newly]
            done |= newly
            if np.all(done):
                break
        prev_diag = diag
    if not np.all(done):
        bad = np.flatnonzero(~done)[0]
        raise NonConvergenceError(
            f"Euler product for W_phi did not converge at z={zf[bad]} (n = 2^{max_log2_n})",
            iterates=(complex(table[-2][-1][bad]), complex(table[-1][-1][bad])),
        )
    out = result if log else np.exp(result)
    out = out.reshape(shape)
    return out if out.ndim else complex(out)


def _closed_or_barnes(phi, z):
    closed = phi.w_closed_form(z)
    if closed is not None:
        return closed, "closed_form"
    if isinstance(phi, GammaRatio):
        return phi.barnes_w(z), "barnes"
    return None, None


def _check_domain(phi, z):
    if np.any(np.real(z) <= -phi.abscissa_astar + (1e-12 if phi.abscissa_astar == 0 else 0.0)):
        raise DomainError(f"W_phi is evaluated only for Re z > -a*_phi = {-phi.abscissa_astar}")


def w_phi_eval(phi: BernsteinFunction, z, strategy: str = "auto", tol: float = DEFAULT_TOL):
    """W_phi(z) on Re z > -a*_phi.

    ``strategy`` is ``auto`` (closed form or Barnes when registered, else the
    Euler product), ``closed_form`` or ``euler_product``.
    """
    z = np.asarray(z, dtype=complex)
    _check_domain(phi, z)
    if strategy in ("auto", "closed_form"):
        val, _ = _closed_or_barnes(phi, z)
        if val is not None:
            val = np.asarray(val, dtype=complex)
            return val if val.ndim else complex(val)
        if strategy == "closed_form":
            raise ValueError(f"no closed form registered for {phi!r}")
    elif strategy != "euler_product":
        raise ValueError(f"unknown strategy {strategy!r}")
    return euler_product(phi, z, tol=tol)


def w_phi_reciprocal(phi: BernsteinFunction, z, strategy: str = "auto"):
    """1 / W_phi(z), extended to -a_phi < Re z <= -a*_phi by 1/W(z) = phi(z) / W(z + 1).

    1/W is entire-like across the zeros of phi (where W has poles), which is
    what the Mellin formulas need.
    """
    z = np.asarray(z, dtype=complex)
    if np.any(np.real(z) <= -phi.abscissa_a):
        raise DomainError(f"1/W_phi needs Re z > -a_phi = {-phi.abscissa_a}")
    inside = np.real(z) > -phi.abscissa_astar + (1e-12 if phi.abscissa_astar == 0 else 0.0)
    out = np.empty(z.shape, dtype=complex)
    if np.any(inside):
        out[inside] = 1.0 / np.asarray(w_phi_eval(phi, z[inside], strategy))
    if np.any(~inside):
        zz = z[~inside]
        shift = zz + 1.0
        if np.any(np.real(shift) <= -phi.abscissa_astar):
            raise DomainError("1/W_phi extension needs a single recurrence step")
        out[~inside] = phi._eval(zz) / np.asarray(w_phi_eval(phi, shift, strategy))
    return out if out.ndim else complex(out)


def residual(phi: BernsteinFunction, z, strategy: str = "auto", eps: float = 1e-300):
    """|W(z + 1) - phi(z) W(z)| / max(|W(z + 1)|, eps)."""
    z = np.asarray(z, dtype=complex)
    w1 = np.asarray(w_phi_eval(phi, z + 1.0, strategy))
    w0 = np.asarray(w_phi_eval(phi, z, strategy))
    out = np.abs(w1 - phi._eval(z) * w0) / np.maximum(np.abs(w1), eps)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class WPhiFunction:
    """Callable wrapper binding a Bernstein function to an evaluation strategy."""

    phi: BernsteinFunction
    strategy: str = "auto"
    tolerance: float = DEFAULT_TOL

    def __call__(self, z):
        return w_phi_eval(self.phi, z, self.strategy, self.tolerance)

    def reciprocal(self, z):
        return w_phi_reciprocal(self.phi, z, self.strategy)

    def residual(self, z):
        return residual(self.phi, z, self.strategy)

    @property
    def domain(self):
        return -self.phi.abscissa_astar
