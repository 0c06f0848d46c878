"""Monte Carlo samplers for chi_1, exponential functionals, extinction times
and inverse subordinators, plus the estimators used to confront them with the
Mellin formulas.

Randomness is counter-based: every block of ``CHUNK`` paths draws from its
own Philox stream keyed by (seed, stream id, block index), so results do not
depend on how blocks are spread over workers.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Optional

import numpy as np
from scipy import integrate, optimize

from .bernstein import (
    Affine,
    BernsteinFunction,
    GammaRatio,
    LevyTriple,
    WienerHopfPair,
    rescale,
)

__all__ = [
    "SimConfig",
    "EmpiricalLaw",
    "InsufficientSamples",
    "HorizonWarning",
    "sample_positive_stable",
    "sample_chi",
    "sample_exponential_functional",
    "sample_extinction",
    "sample_inverse_subordinator",
    "sample_subordinator_functional",
    "LevySimulator",
    "write_samples_csv",
    "read_samples_csv",
]

CHUNK = 8192

STREAM_STABLE = 1
STREAM_EXPFUN = 2
STREAM_SUBORDINATOR = 3
STREAM_RESAMPLE = 4
STREAM_PATH = 5


class InsufficientSamples(ValueError):
    pass


class HorizonWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class SimConfig:
    seed: int = 20240601
    n_paths: int = 100_000
    dt: float = 0.01
    horizon: Optional[float] = None
    jump_cutoff: Optional[float] = None
    workers: int = 1
    tol: float = 1e-3
    max_rate: float = 200.0
    gaussian_small_jumps: bool = True
    pool_factor: int = 4

    def __post_init__(self):
        if self.n_paths < 1:
            raise ValueError("n_paths must be >= 1")
        if self.dt <= 0 or (self.horizon is not None and self.horizon <= 0):
            raise ValueError("dt and horizon must be positive")
        if self.jump_cutoff is not None and self.jump_cutoff <= 0:
            raise ValueError("jump_cutoff must be positive")

    def digest(self):
        """Hash of the fields that determine the samples (workers excluded)."""
        d = asdict(self)
        d.pop("workers")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]


def _rng(seed, stream, block):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(stream, block))))


def _blocks(n):
    return [(i, min(CHUNK, n - i * CHUNK)) for i in range((n + CHUNK - 1) // CHUNK)]


def _run_blocks(fn, n, workers):
    blocks = _blocks(n)
    if workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda b: fn(*b), blocks))
    else:
        parts = [fn(*b) for b in blocks]
    return parts


# ---------------------------------------------------------------------------
# empirical laws


@dataclass(frozen=True)
class EmpiricalLaw:
    samples: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        s = np.sort(np.asarray(self.samples, dtype=float))
        if s.size and (not np.all(np.isfinite(s)) or s[0] < 0):
            raise ValueError("samples must be finite and nonnegative")
        object.__setattr__(self, "samples", s)

    @property
    def n(self):
        return self.samples.size

    def _need(self, m=100):
        if self.n < m:
            raise InsufficientSamples(f"need at least {m} samples, have {self.n}")

    def empirical_mellin(self, z):
        """(mean of V^z, standard error)."""
        if z == 0:
            return 1.0, 0.0
        self._need()
        v = self.samples**z
        return float(np.mean(v)), float(np.std(v, ddof=1) / math.sqrt(self.n))

    def ecdf(self, t):
        return np.searchsorted(self.samples, np.asarray(t, dtype=float), side="right") / self.n

    def survival(self, t):
        return 1.0 - self.ecdf(t)

    def ks_distance(self, cdf):
        """sup_t |F_n(t) - F(t)| for a continuous reference cdf."""
        self._need(1)
        f = np.asarray(cdf(self.samples), dtype=float)
        i = np.arange(1, self.n + 1)
        return float(max(np.max(i / self.n - f), np.max(f - (i - 1) / self.n)))

    def ks_two_sample(self, other: "EmpiricalLaw"):
        both = np.concatenate([self.samples, other.samples])
        return float(np.max(np.abs(self.ecdf(both) - other.ecdf(both))))

    def scaled(self, factor):
        return EmpiricalLaw(self.samples * factor, dict(self.meta))

    def tail_exponent_fit(self, window: float = 0.1, exponent: Optional[float] = None, min_count: int = 20):
        """Least-squares slope of log P(V > t) against log t over the top ``window`` fraction.

        Returns (slope, plateau) where plateau is the mean of t^exponent * P(V > t)
        over the window (exponent defaults to -slope).
        """
        self._need()
        n = self.n
        lo = int(math.floor((1 - window) * n))
        hi = n - min_count
        if hi - lo < 10:
            raise InsufficientSamples("tail window too small")
        idx = np.arange(lo, hi)
        t = self.samples[idx]
        surv = (n - idx - 1) / n
        ok = (t > 0) & (surv > 0)
        slope, _ = np.polyfit(np.log(t[ok]), np.log(surv[ok]), 1)
        e = -slope if exponent is None else exponent
        plateau = float(np.mean(t[ok] ** e * surv[ok]))
        return float(slope), plateau


# ---------------------------------------------------------------------------
# positive stable and chi_1


def kanter_sample(beta, rng, size):
    """Positive beta-stable with E[exp(-q S)] = exp(-q^beta) (Kanter's representation)."""
    u = rng.random(size)
    e = rng.standard_exponential(size)
    pu = np.pi * u
    log_a = (
        np.log(np.sin((1 - beta) * pu))
        + beta / (1 - beta) * np.log(np.sin(beta * pu))
        - 1 / (1 - beta) * np.log(np.sin(pu))
    )
    return np.exp((1 - beta) / beta * (log_a - np.log(e)))


def sample_positive_stable(beta: float, config: SimConfig) -> EmpiricalLaw:
    if not 0 < beta < 1:
        raise ValueError("beta must lie in (0, 1)")

    def block(i, m):
        return kanter_sample(beta, _rng(config.seed, STREAM_STABLE, i), m)

    return EmpiricalLaw(np.concatenate(_run_blocks(block, config.n_paths, config.workers)), {"sampler": "kanter"})


def _stable_index(phi_beta: BernsteinFunction, beta: float):
    """beta if phi_beta is the rescaled stable-subordinator exponent Gamma(u+beta)/Gamma(u)."""
    if isinstance(phi_beta, GammaRatio) and phi_beta.q == 0:
        if abs(phi_beta.p - beta) < 1e-14 and abs(phi_beta.s - beta) < 1e-14:
            return beta
    return None


def sample_chi(phi_beta: BernsteinFunction, beta: float, config: SimConfig) -> EmpiricalLaw:
    """chi_1 with E[chi_1^z] = Gamma(-z/beta) / (phi_beta'(0) W_{phi_beta}(-z/beta)).

    Stable time change: Kanter sampler.  Linear phi_beta(u) = c u: chi_1 = c^{1/beta}.
    Otherwise chi_1^{-beta} is drawn from the exponential functional
    I = int_0^inf exp(-rho_t) dt of the subordinator with exponent phi_beta,
    size-biased by 1/I (pool of ``pool_factor * n`` paths, systematic resampling).
    """
    if _stable_index(phi_beta, beta) is not None:
        return sample_positive_stable(beta, config)
    if isinstance(phi_beta, Affine) and phi_beta.b == 0:
        return EmpiricalLaw(np.full(config.n_paths, phi_beta.c ** (1 / beta)), {"sampler": "deterministic"})
    pool_cfg = replace(config, n_paths=config.pool_factor * config.n_paths)
    pool = sample_subordinator_functional(phi_beta, pool_cfg)
    weights = 1.0 / pool
    rng = _rng(config.seed, STREAM_RESAMPLE, 0)
    cum = np.cumsum(weights)
    cum /= cum[-1]
    pos = (rng.random() + np.arange(config.n_paths)) / config.n_paths
    picked = pool[np.minimum(np.searchsorted(cum, pos), pool.size - 1)]
    rng.shuffle(picked)
    ess = weights.sum() ** 2 / np.sum(weights**2)
    return EmpiricalLaw(picked ** (-1.0 / beta), {"sampler": "size_biased_functional", "pool": pool.size, "ess": ess})


# ---------------------------------------------------------------------------
# jump tables


class _JumpTable:
    """Inverse-tail sampler for jumps of size >= eps on one side."""

    def __init__(self, tail, eps, npts=4000):
        self.eps = eps
        self.rate = float(tail(eps))
        ymax = eps
        while float(tail(ymax)) > 1e-13 * self.rate and ymax < 1e4:
            ymax *= 2
        y = np.geomspace(eps, ymax, npts)
        tv = np.maximum(np.asarray(tail(y), dtype=float), 1e-300)
        # strictly decreasing in y; interpolate log y against log tail
        keep = np.concatenate([[True], np.diff(tv) < 0])
        self._lt = np.log(tv[keep])[::-1]
        self._ly = np.log(y[keep])[::-1]

    def draw(self, rng, size):
        v = np.log(self.rate) + np.log(rng.random(size))
        return np.exp(np.interp(v, self._lt, self._ly))


def _cutoff_for_rate(tail_total, max_rate, default=1e-4):
    if tail_total(default) <= max_rate:
        return default
    f = lambda le: math.log(tail_total(math.exp(le))) - math.log(max_rate)
    return math.exp(optimize.brentq(f, math.log(default), math.log(10.0), xtol=1e-6))


# ---------------------------------------------------------------------------
# Levy paths and exponential functionals


@dataclass
class LevySimulator:
    """Event-driven simulation of a Levy process from its two-sided triple.

    Jumps of size >= eps are simulated exactly; jumps below eps are replaced by
    their compensated mean and, optionally, a Gaussian with matching variance.
    Between events the process is advanced by at most ``dt``.
    """

    triple: LevyTriple
    eps: float
    gaussian_small_jumps: bool = True

    def __post_init__(self):
        t = self.triple
        self.pos = _JumpTable(t.tail_mass, self.eps) if (t.density is not None or t.tail is not None) else None
        has_neg = t.neg_density is not None or t.neg_tail is not None
        self.neg = _JumpTable(t.neg_tail_mass, self.eps) if has_neg else None
        self.rate_pos = self.pos.rate if self.pos else 0.0
        self.rate_neg = self.neg.rate if self.neg else 0.0
        self.rate = self.rate_pos + self.rate_neg
        # compensator of jumps with eps <= |y| < 1
        comp = 0.0
        small_var = 0.0
        for dens, sign in ((t.density, 1.0), (t.neg_density, -1.0)):
            if dens is None:
                continue
            if self.eps < 1:
                comp += sign * integrate.quad(lambda y: y * dens(y), self.eps, 1.0, limit=200)[0]
            small_var += integrate.quad(lambda y: y * y * dens(y), 0.0, self.eps, limit=200)[0]
        self.mu = t.linear - comp
        self.var = 2.0 * t.sigma2 + (small_var if self.gaussian_small_jumps else 0.0)

    def jumps(self, rng, size):
        if self.rate_neg == 0:
            return self.pos.draw(rng, size)
        side = rng.random(size) < self.rate_pos / self.rate
        out = np.empty(size)
        k = int(side.sum())
        if k:
            out[side] = self.pos.draw(rng, k)
        if size - k:
            out[~side] = -self.neg.draw(rng, size - k)
        return out


def _levy_triple_of(model):
    if isinstance(model, WienerHopfPair):
        if model.levy is None:
            raise ValueError("pair has no Levy triple for simulation")
        return model.levy, model
    if isinstance(model, LevyTriple):
        return model, None
    raise TypeError("model must be a WienerHopfPair or a LevyTriple")


def _exp_linear(tau, y0, dy, alpha):
    """int_0^tau exp(alpha (y0 + dy s / tau)) ds."""
    a = alpha * dy
    small = np.abs(a) < 1e-8
    ratio = np.where(small, 1.0 + a / 2, np.expm1(a) / np.where(small, 1.0, a))
    return tau * np.exp(alpha * y0) * ratio


def _functional_block(sim: LevySimulator, alpha, horizon, dt, tol, remainder_scale, killing, rng, m):
    """One block of exponential functionals; returns (values, extended count, flagged count)."""
    y = np.zeros(m)
    acc = np.zeros(m)
    t = np.zeros(m)
    zeta = rng.standard_exponential(m) / killing if killing > 0 else np.full(m, np.inf)
    alive = np.arange(m)
    extended = np.zeros(m, dtype=bool)
    weight = np.zeros(m)
    flagged = 0
    sd = math.sqrt(sim.var)
    while alive.size:
        k = alive.size
        wait = rng.standard_exponential(k) / sim.rate if sim.rate > 0 else np.full(k, np.inf)
        room = zeta[alive] - t[alive]
        tau = np.minimum(np.minimum(wait, dt), room)
        dy = sim.mu * tau + (sd * np.sqrt(tau) * rng.standard_normal(k) if sd > 0 else 0.0)
        acc[alive] += _exp_linear(tau, y[alive], dy, alpha)
        y[alive] += dy
        t[alive] += tau
        jump = wait < np.minimum(dt, room)
        if np.any(jump):
            idx = alive[jump]
            y[idx] += sim.jumps(rng, idx.size)
        killed = tau >= room
        small = np.exp(alpha * y[alive]) * remainder_scale < tol * acc[alive]
        over = t[alive] >= horizon * np.where(extended[alive], 2.0, 1.0)
        if np.any(over):
            fresh = over & ~extended[alive]
            extended[alive[fresh]] = True
            stale = over & ~fresh
            flagged += int(np.sum(stale & ~killed & ~small))
            over = stale
        stopped = small & ~killed
        weight[alive[stopped]] = np.exp(alpha * y[alive[stopped]])
        done = killed | small | over
        alive = alive[~done]
    # strong Markov: the unsimulated remainder is exp(alpha Y_stop) times an
    # independent copy of the functional, borrowed from another path
    perm = rng.permutation(m)
    partner = np.empty(m, dtype=int)
    partner[perm] = np.roll(perm, 1)
    if m > 1:
        acc = acc + weight * acc[partner]
    return acc, int(extended.sum()), flagged


def sample_exponential_functional(model, alpha: float, x: float, config: SimConfig) -> EmpiricalLaw:
    """x^alpha int_0^zeta exp(alpha Y_t) dt for Y given by a pair's Levy triple (or a triple)."""
    triple, pair = _levy_triple_of(model)
    tail_total = lambda e: float(triple.tail_mass(e)) + float(triple.neg_tail_mass(e))
    has_jumps = triple.density is not None or triple.neg_density is not None or triple.tail is not None
    eps = config.jump_cutoff
    if eps is None:
        eps = _cutoff_for_rate(tail_total, config.max_rate) if has_jumps else 1.0
    sim = LevySimulator(triple, eps, config.gaussian_small_jumps)
    killing = triple.killing
    scale = pair.phi_plus.phi0 * alpha if pair is not None else 1.0
    mean_slope = _mean_slope(triple, pair, alpha)
    horizon = config.horizon if config.horizon is not None else 50.0 / abs(scale)
    remainder_scale = 1.0 / (alpha * abs(mean_slope) + killing) if (mean_slope < 0 or killing > 0) else 1.0

    def block(i, m):
        return _functional_block(
            sim, alpha, horizon, config.dt, config.tol, remainder_scale, killing, _rng(config.seed, STREAM_EXPFUN, i), m
        )

    parts = _run_blocks(block, config.n_paths, config.workers)
    vals = np.concatenate([p[0] for p in parts]) * x**alpha
    extended = sum(p[1] for p in parts)
    flagged = sum(p[2] for p in parts)
    if flagged:
        warnings.warn(f"{flagged} paths still active after the extended horizon", HorizonWarning)
    return EmpiricalLaw(
        vals,
        {
            "sampler": "levy_euler",
            "eps": eps,
            "jump_rate": sim.rate,
            "extended": extended,
            "flagged": flagged,
            "horizon": horizon,
        },
    )


def _mean_slope(triple, pair, alpha):
    """E[Y_1] of the unkilled process, from the Wiener-Hopf factors when available."""
    if pair is not None:
        h = 1e-6
        f = lambda w: float(np.real(pair.psi_y(w))) + triple.killing
        return (f(h) - f(-h)) / (2 * h)
    return triple.linear


# ---------------------------------------------------------------------------
# subordinator functionals


def _subordinator_block(drift, table, killing, depth, tail_mean, rng, m):
    rho = np.zeros(m)
    acc = np.zeros(m)
    alive = np.arange(m)
    total = table.rate + killing
    while alive.size:
        k = alive.size
        tau = rng.standard_exponential(k) / total
        r = rho[alive]
        if drift > 0:
            acc[alive] += np.exp(-r) * (-np.expm1(-drift * tau)) / drift
        else:
            acc[alive] += np.exp(-r) * tau
        killed = rng.random(k) < killing / total
        r = r + drift * tau + table.draw(rng, k)
        rho[alive] = r
        deep = (r > depth) & ~killed
        acc[alive[deep]] += np.exp(-r[deep]) * tail_mean
        alive = alive[~(deep | killed)]
    return acc


def sample_subordinator_functional(phi: BernsteinFunction, config: SimConfig, depth: float = 20.0) -> np.ndarray:
    """Samples of I = int_0^inf exp(-rho_t) dt for the subordinator with exponent phi.

    Jumps below eps are replaced by their mean; killing ends the integral.  Once
    rho exceeds ``depth`` the remaining integral is replaced by exp(-rho) E[I]
    with E[I] = 1/phi(1).
    """
    triple = phi.triple
    if triple is None:
        raise ValueError("subordinator simulation needs a Levy triple")
    eps = config.jump_cutoff or _cutoff_for_rate(lambda e: float(triple.tail_mass(e)), config.max_rate)
    table = _JumpTable(triple.tail_mass, eps)
    tb = lambda y: float(triple.tail_mass(y))
    small_mean = integrate.quad(tb, 0.0, eps, limit=200)[0] - eps * tb(eps)
    drift = triple.drift + small_mean
    tail_mean = 1.0 / float(np.real(phi(1.0)))

    def block(i, m):
        return _subordinator_block(drift, table, triple.killing, depth, tail_mean, _rng(config.seed, STREAM_SUBORDINATOR, i), m)

    return np.concatenate(_run_blocks(block, config.n_paths, config.workers))


# ---------------------------------------------------------------------------
# extinction times and inverse subordinators


def sample_extinction(
    pair: WienerHopfPair,
    phi: Optional[BernsteinFunction],
    beta: float,
    x: float,
    config: SimConfig,
    phi_beta: Optional[BernsteinFunction] = None,
) -> EmpiricalLaw:
    """chi_1 * T^{1/beta} with independent factors (separate RNG streams)."""
    if phi_beta is None:
        phi_beta = rescale(phi, beta)
    chi = sample_chi(phi_beta, beta, config)
    tee = sample_exponential_functional(pair, pair.alpha, x, config)
    # chi samples come back sorted; restore an arrangement independent of T
    order = _rng(config.seed, STREAM_RESAMPLE, 1).permutation(config.n_paths)
    vals = chi.samples[order] * tee.samples ** (1.0 / beta)
    return EmpiricalLaw(vals, {"chi": chi.meta, "T": tee.meta})


def sample_inverse_subordinator(
    beta: float, t: float, config: SimConfig, route: str = "exact", step: Optional[float] = None
) -> EmpiricalLaw:
    """lambda_t for the beta-stable subordinator.

    ``exact``: t^beta chi_1^{-beta}.  ``path``: first passage above t of a
    simulated stable subordinator on a grid of width ``step`` (midpoint of the
    crossing cell).
    """
    if route == "exact":
        chi = sample_positive_stable(beta, config)
        return EmpiricalLaw(t**beta * chi.samples ** (-beta), {"route": "exact"})
    if route != "path":
        raise ValueError("route must be 'exact' or 'path'")
    h = step if step is not None else 2e-3 * t**beta
    inc_scale = h ** (1.0 / beta)

    def block(i, m):
        rng = _rng(config.seed, STREAM_PATH, i)
        level = np.zeros(m)
        out = np.full(m, np.nan)
        alive = np.arange(m)
        k = 0
        while alive.size:
            steps = 256
            incs = kanter_sample(beta, rng, (alive.size, steps)) * inc_scale
            paths = level[alive, None] + np.cumsum(incs, axis=1)
            crossed = paths > t
            hit = crossed.any(axis=1)
            first = np.argmax(crossed, axis=1)
            out[alive[hit]] = (k + first[hit] + 0.5) * h
            level[alive] = paths[:, -1]
            alive = alive[~hit]
            k += steps
        return out

    vals = np.concatenate(_run_blocks(block, config.n_paths, config.workers))
    return EmpiricalLaw(vals, {"route": "path", "step": h})


# ---------------------------------------------------------------------------
# sample dumps


def write_samples_csv(path, emp: EmpiricalLaw, config: SimConfig):
    with open(path, "w", newline="") as fh:
        fh.write(f"# config_hash={config.digest()} config={json.dumps(asdict(config), sort_keys=True)}\n")
        w = csv.writer(fh)
        w.writerow(["value"])
        for v in emp.samples:
            w.writerow([repr(float(v))])


def read_samples_csv(path) -> EmpiricalLaw:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(line for line in fh if not line.startswith("#"))]
    return EmpiricalLaw(np.array([float(r[0]) for r in rows[1:]]))
