"""Symmetric tempered-stable-driven Ornstein-Uhlenbeck processes.

Parameter algebra, the closed-form transition log-characteristic function
and cumulant generating function, analytical cumulants, the exact per-step
transition decomposition (tempered-stable mass plus compound-Poisson
remainder), simulation schemes, and an independent quadrature oracle.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import exp, expm1, lgamma, log, sqrt

import numpy as np
from scipy.integrate import quad

from tsou import kernels
from tsou.rng import FACTOR2_NAMESPACE, TsLaw
from tsou.special import (asymptotic_constant, binom_alpha, binomial_log_tail,
                          gauss_2f1)

__all__ = [
    "NtsParams", "OuNtsParams", "StepDecomposition", "che_nts",
    "transition_lch", "transition_lch_oracle", "transition_cgf",
    "step_decomposition", "jump_density", "ou_cumulant", "levy_cumulant",
    "simulate_paths", "sample_increments", "err_pct", "PathGrid",
]

SCHEMES = ("exact", "approx1", "approx2")

# switch between the hypergeometric and logarithmic antiderivative branches
_Y_CUT = 8.0


class NumericalError(RuntimeError):
    """Quadrature failure or other numerical breakdown."""


@dataclass(frozen=True)
class NtsParams:
    """Normal tempered stable law/process parameters.

    The subordinator is normalized to unit expectation per unit time, so
    beta = (1 - alpha)/nu and c = beta^(1-alpha)/Gamma(1-alpha) are derived;
    nu is the subordinator variance per unit time.
    """
    alpha: float
    sigma: float
    theta: float
    nu: float

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must be in (0,1), got {self.alpha}")
        if self.sigma < 0.0:
            raise ValueError(f"sigma must be nonnegative, got {self.sigma}")
        if self.nu <= 0.0:
            raise ValueError(f"nu must be positive, got {self.nu}")

    @property
    def beta(self) -> float:
        return (1.0 - self.alpha) / self.nu

    @property
    def c(self) -> float:
        return self.beta ** (1.0 - self.alpha) / math.gamma(1.0 - self.alpha)

    def exp_moment_margin(self, s: float = 1.0) -> float:
        """1 - nu (sigma^2 s^2/2 + theta s)/(1-alpha); > 0 iff E[e^{sY(1)}] < inf."""
        return 1.0 - self.nu * (self.sigma ** 2 * s * s / 2.0
                                + self.theta * s) / (1.0 - self.alpha)


@dataclass(frozen=True)
class OuNtsParams:
    """OU process driven by a symmetric NTS background Levy process."""
    nts: NtsParams
    b: float
    n0: float = 0.0

    def __post_init__(self):
        if self.nts.theta != 0.0:
            raise ValueError("OU driver must be symmetric (theta = 0)")
        if self.b <= 0.0:
            raise ValueError(f"mean-reversion speed must be positive, got {self.b}")

    @property
    def alpha(self) -> float:
        return self.nts.alpha

    @property
    def sigma(self) -> float:
        return self.nts.sigma

    @property
    def nu(self) -> float:
        return self.nts.nu

    @property
    def beta(self) -> float:
        return self.nts.beta

    @property
    def c(self) -> float:
        return self.nts.c

    def cgf_bound(self) -> float:
        """Largest |s| with finite transition moment generating function."""
        return math.inf if self.sigma == 0.0 else sqrt(2.0 * self.beta) / self.sigma


@dataclass(frozen=True)
class StepDecomposition:
    """Exact transition law pieces for one time step.

    The transition noise is sigma * X * sqrt(M1 + M2) with X standard
    normal, M1 tempered stable and M2 a compound-Poisson sum of gamma jumps
    whose random rates come from the mixture density on [1, 1/omega].
    """
    dt: float
    a: float
    omega: float
    m1_law: TsLaw
    lambda_omega: float
    jump_shape: float
    jump_rate_base: float

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ValueError(f"dt must be positive, got {self.dt}")


def che_nts(u: complex, p: NtsParams) -> complex:
    """Characteristic exponent of the NTS process at (possibly complex) u."""
    a = p.alpha
    base = 1.0 + p.nu * (u * u * p.sigma ** 2 / 2.0 - 1j * p.theta * u) / (1.0 - a)
    return (1.0 - a) / (a * p.nu) * (1.0 - base ** a)


def che_snts_real(u: float, p: NtsParams) -> float:
    """Characteristic exponent at real u for the symmetric case (real-valued)."""
    a = p.alpha
    base = 1.0 + p.nu * u * u * p.sigma ** 2 / 2.0 / (1.0 - a)
    return (1.0 - a) / (a * p.nu) * (1.0 - base ** a)


def nts_cgf_rate(s: float, p: NtsParams) -> float:
    """Cumulant generating function of the NTS law per unit time, kappa(s)."""
    margin = p.exp_moment_margin(s)
    if margin <= 0.0:
        raise ValueError(
            f"exponential moment at s={s} does not exist "
            f"(nu (sigma^2 s^2/2 + theta s) >= 1 - alpha)")
    a = p.alpha
    return (1.0 - a) / (a * p.nu) * (1.0 - margin ** a)


def _prim_hyp(alpha: float, y: float) -> float:
    # antiderivative of z^(-1-a) (z+q)^a at z = q*y, hypergeometric branch
    return -(1.0 / alpha) * y ** (-alpha) * gauss_2f1(-alpha, -alpha,
                                                      1.0 - alpha, -y)


def _j_plus_log_omega(alpha: float, y1: float, y2: float,
                      log_omega: float) -> float:
    """J + log(omega) with J the power-kernel integral; cancellation safe.

    y_i = beta_i/q are the integration endpoints scaled by q = sigma^2 u^2/2,
    y2 = y1/omega > y1. For large endpoints only the tail sums survive, which
    avoids the J ~ -log(omega) cancellation at small u.
    """
    if y1 >= _Y_CUT:
        coeffs = binom_alpha(alpha, 80)
        return binomial_log_tail(alpha, y1, coeffs) \
            - binomial_log_tail(alpha, y2, coeffs)
    if y2 <= _Y_CUT:
        return _prim_hyp(alpha, y2) - _prim_hyp(alpha, y1) + log_omega
    upper = log(y2) + asymptotic_constant(alpha) - binomial_log_tail(alpha, y2)
    return upper - _prim_hyp(alpha, y1) + log_omega


def transition_lch(u: float, t: float, p: OuNtsParams) -> float:
    """Log characteristic function of the transition noise Z(t) at real u.

    The initial-state contribution i u n0 exp(-b t) is added by callers.
    Always real and <= 0 for the symmetric driver.
    """
    if t <= 0.0:
        raise ValueError(f"t must be positive, got {t}")
    if u == 0.0 or p.sigma == 0.0:
        return 0.0
    q = p.sigma ** 2 * u * u / 2.0
    y1 = p.beta / q
    log_omega = -2.0 * p.b * t
    omega = exp(log_omega)
    jlo = _j_plus_log_omega(p.alpha, y1, y1 / omega, log_omega)
    # c Gamma(1-alpha) beta^alpha = beta under the unit-mean normalization
    return -(p.beta / (2.0 * p.alpha * p.b)) * jlo


def transition_lch_elementary(u: float, t: float, p: OuNtsParams) -> float:
    """alpha = 1/2 closed form of transition_lch using asinh only."""
    if p.alpha != 0.5:
        raise ValueError("elementary form requires alpha = 1/2")
    if t <= 0.0:
        raise ValueError(f"t must be positive, got {t}")
    if u == 0.0 or p.sigma == 0.0:
        return 0.0
    q = p.sigma ** 2 * u * u / 2.0
    omega = exp(-2.0 * p.b * t)
    y1 = p.beta / q
    y2 = y1 / omega
    # J + log(omega) = 2[log(1+sqrt(1+1/y2)) - log(1+sqrt(1+1/y1))]
    #                - 2[sqrt(1+1/y2) - sqrt(1+1/y1)]; the log(y2/y1) piece
    # cancels log(omega) exactly
    r1 = sqrt(1.0 + 1.0 / y1)
    r2 = sqrt(1.0 + 1.0 / y2)
    jlo = 2.0 * (log((1.0 + r2) / (1.0 + r1)) - (r2 - r1))
    return -(p.beta / p.b) * jlo


def transition_lch_oracle(u: float, t: float, p: OuNtsParams) -> float:
    """Ground truth by adaptive quadrature of the characteristic exponent
    along the mean-reversion flow; shipped as a validation mode."""
    if t <= 0.0:
        raise ValueError(f"t must be positive, got {t}")
    if u == 0.0:
        return 0.0
    res = quad(lambda s: che_snts_real(u * exp(-p.b * s), p.nts), 0.0, t,
               epsabs=1e-12, epsrel=1e-12, limit=500, full_output=True)
    if len(res) > 3:
        raise NumericalError(
            f"transition lch quadrature did not converge: {res[3]}")
    return res[0]


def transition_cgf(s: float, t: float, p: OuNtsParams) -> float:
    """Cumulant generating function of the transition noise Z(t).

    Exists for |s| < sqrt(2 beta)/sigma. Evaluated through the reduction of
    the power-kernel integral to int_0^r v^alpha/(1-v) dv, which keeps every
    branch real (the raw hypergeometric form sits on the branch cut).
    """
    if t <= 0.0:
        raise ValueError(f"t must be positive, got {t}")
    if s == 0.0 or p.sigma == 0.0:
        return 0.0
    bound = p.cgf_bound()
    if abs(s) >= bound:
        raise ValueError(
            f"cgf does not exist at s={s}: |s| >= sqrt(2 beta)/sigma = {bound:.6g}")
    alpha = p.alpha
    pdamp = p.sigma ** 2 * s * s / 2.0
    log_omega = -2.0 * p.b * t
    omega = exp(log_omega)
    x1 = pdamp / p.beta           # = 1 - r1 in the reduced integral
    x2 = x1 * omega
    if x1 <= 0.3:
        coeffs = binom_alpha(alpha, 80)
        jlo = _alternating_tail(alpha, x2, coeffs) \
            - _alternating_tail(alpha, x1, coeffs)
    else:
        jlo = (_reduced_integral(alpha, 1.0 - x2)
               - _reduced_integral(alpha, 1.0 - x1)) + log_omega
    return -(p.beta / (2.0 * alpha * p.b)) * jlo


def transition_cgf_elementary(s: float, t: float, p: OuNtsParams) -> float:
    """alpha = 1/2 logarithmic closed form of transition_cgf."""
    if p.alpha != 0.5:
        raise ValueError("elementary form requires alpha = 1/2")
    if t <= 0.0:
        raise ValueError(f"t must be positive, got {t}")
    if s == 0.0 or p.sigma == 0.0:
        return 0.0
    bound = p.cgf_bound()
    if abs(s) >= bound:
        raise ValueError(
            f"cgf does not exist at s={s}: |s| >= sqrt(2 beta)/sigma = {bound:.6g}")
    pdamp = p.sigma ** 2 * s * s / 2.0
    omega = exp(-2.0 * p.b * t)
    r1 = sqrt(1.0 - pdamp / p.beta)
    r2 = sqrt(1.0 - pdamp * omega / p.beta)
    # T(r) = 2 atanh(sqrt r) - 2 sqrt r; the log(1-r) parts cancel log(omega)
    jlo = 2.0 * (log((1.0 + r2) / (1.0 + r1)) - (r2 - r1))
    return -(p.beta / p.b) * jlo


def _alternating_tail(alpha: float, x: float, coeffs: np.ndarray) -> float:
    # sum_{j>=1} (-1)^(j+1) binom(alpha, j) x^j / j  (x = 1 - r small)
    total = 0.0
    xj = 1.0
    for j in range(1, len(coeffs)):
        xj *= x
        term = coeffs[j] / j * xj
        if j % 2 == 0:
            term = -term
        total += term
        if abs(term) <= 1e-17 * (1.0 + abs(total)):
            break
    return total


def _reduced_integral(alpha: float, r: float) -> float:
    """T(r) = int_0^r v^alpha/(1-v) dv for r in [0, 1)."""
    if r <= 0.7:
        total = 0.0
        rk = r ** (alpha + 1.0)
        k = 0
        while True:
            term = rk / (alpha + 1.0 + k)
            total += term
            rk *= r
            k += 1
            if term <= 1e-17 * max(total, 1e-300) or k > 100_000:
                return total
    harmonic = float(np.euler_gamma) + _digamma_pos(alpha + 1.0)
    coeffs = binom_alpha(alpha, 80)
    return -log(1.0 - r) - harmonic + _alternating_tail(alpha, 1.0 - r, coeffs)


def _digamma_pos(x: float) -> float:
    from scipy.special import digamma
    return float(digamma(x))


def levy_cumulant(k: int, p: NtsParams) -> float:
    """Cumulant of order k of the symmetric NTS law at unit time.

    Odd orders vanish; even orders come from the Bessel-form Levy density
    moment integral, evaluated in log space.
    """
    if p.theta != 0.0:
        raise ValueError("levy_cumulant applies to the symmetric case only")
    if k <= 0:
        raise ValueError(f"cumulant order must be positive, got {k}")
    if k % 2 == 1:
        return 0.0
    if p.sigma == 0.0:
        return 0.0
    n = k // 2
    alpha, sigma, beta = p.alpha, p.sigma, p.beta
    big_a = sqrt(2.0 * beta) / sigma
    log_c = (alpha / 2.0 + 1.25) * log(2.0) - 0.5 * log(2.0 * math.pi) \
        - lgamma(1.0 - alpha) + (alpha - 0.5) * log(sigma) \
        + (1.25 - alpha / 2.0) * log(beta)
    log_val = log_c + (2.0 * n - alpha - 0.5) * log(2.0) \
        + (-2.0 * n + alpha - 0.5) * log(big_a) \
        + lgamma(n + 0.5) + lgamma(n - alpha)
    return exp(log_val)


def ou_cumulant(k: int, t: float, p: OuNtsParams) -> float:
    """Cumulant of order k of N(t) given N(0) = n0."""
    if k <= 0:
        raise ValueError(f"cumulant order must be positive, got {k}")
    if t <= 0.0:
        raise ValueError(f"t must be positive, got {t}")
    if k == 1:
        return p.n0 * exp(-p.b * t)
    if k % 2 == 1:
        return 0.0
    c_levy = levy_cumulant(k, p.nts)
    return c_levy * (-expm1(-k * p.b * t)) / (k * p.b)


def err_pct(true_value: float, estimate: float) -> float:
    """(true - estimated)/true, the signed relative error."""
    if true_value == 0.0:
        raise ValueError("err_pct undefined for true_value = 0")
    return (true_value - estimate) / true_value


def step_decomposition(dt: float, p: OuNtsParams) -> StepDecomposition:
    """Exact transition-law decomposition for a step of length dt."""
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    alpha, b, beta, c = p.alpha, p.b, p.beta, p.c
    a = exp(-b * dt)
    omega = a * a
    eps = 2.0 * alpha * b * dt          # = -log(omega^alpha)
    if omega == 0.0 or eps > 700.0:
        raise NumericalError(
            f"step b*dt = {b * dt:.3g} too large: the transition "
            "decomposition is not representable in double precision")
    one_minus_wa = -expm1(-eps)
    m1_law = TsLaw(alpha=alpha, beta=beta / omega,
                   c_mass=c * one_minus_wa / (2.0 * alpha * b))
    # c Gamma(1-alpha) beta^alpha / (2 b alpha^2 omega^alpha)
    #   * (1 - omega^alpha + omega^alpha log omega^alpha)
    # collapses to beta/(2 b alpha^2) * (exp(eps) - 1 - eps)
    lam = beta / (2.0 * b * alpha * alpha) * (expm1(eps) - eps)
    return StepDecomposition(dt=dt, a=a, omega=omega, m1_law=m1_law,
                             lambda_omega=lam, jump_shape=1.0 - alpha,
                             jump_rate_base=beta)


def mixture_density(v, omega: float, alpha: float):
    """Density of the gamma-rate mixture variable on [1, 1/omega]."""
    wa = omega ** alpha
    norm = alpha * wa / (1.0 - wa + wa * log(wa))
    v = np.asarray(v, dtype=float)
    inside = (v >= 1.0) & (v <= 1.0 / omega)
    out = np.where(inside, norm * (v ** alpha - 1.0) / v, 0.0)
    return out if out.ndim else float(out)


def jump_density(x: float, dec: StepDecomposition, p: OuNtsParams) -> float:
    """Density of one compound-Poisson jump, by quadrature over the mixture."""
    if x <= 0.0:
        return 0.0
    alpha = p.alpha
    beta = dec.jump_rate_base
    shape = 1.0 - alpha

    def integrand(v):
        rate = beta * v
        gamma_pdf = exp(shape * log(rate) + (shape - 1.0) * log(x)
                        - rate * x - lgamma(shape))
        return gamma_pdf * mixture_density(v, dec.omega, alpha)

    val, _ = quad(integrand, 1.0, 1.0 / dec.omega, epsabs=1e-12,
                  epsrel=1e-10, limit=300)
    return val


@dataclass(frozen=True)
class PathGrid:
    """Strictly increasing times after 0; steps are the consecutive gaps."""
    times: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        object.__setattr__(self, "times", t)
        if t.ndim != 1 or len(t) == 0:
            raise ValueError("grid must be a nonempty 1-d time array")
        if t[0] <= 0.0 or np.any(np.diff(t) <= 0.0):
            raise ValueError("grid times must be strictly increasing and > 0")

    @property
    def dts(self) -> np.ndarray:
        return np.diff(np.concatenate(([0.0], self.times)))

    @classmethod
    def regular(cls, t_end: float, n_steps: int) -> "PathGrid":
        return cls(times=t_end * np.arange(1, n_steps + 1) / n_steps)

    @classmethod
    def daily(cls, t_start: float, n_days: int) -> "PathGrid":
        return cls(times=t_start + np.arange(n_days) / 365.0)


def _scheme_step_arrays(grid: PathGrid, p: OuNtsParams, scheme: str):
    """Per-step kernel parameter arrays; one decomposition per distinct dt."""
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
    dts = grid.dts
    n = len(dts)
    a_arr = np.empty(n)
    m1_beta = np.empty(n)
    m1_mass = np.empty(n)
    lam = np.zeros(n)
    omega_alpha = np.empty(n)
    jump_rate = np.empty(n)
    cache: dict[float, StepDecomposition] = {}
    for m, dt in enumerate(dts):
        key = round(float(dt), 15)
        dec = cache.get(key)
        if dec is None:
            dec = step_decomposition(dt, p)
            cache[key] = dec
        a_arr[m] = dec.a
        omega_alpha[m] = dec.omega ** p.alpha
        jump_rate[m] = dec.jump_rate_base
        if scheme == "approx2":
            # Euler-type step: plain NTS increment over dt
            m1_beta[m] = p.beta
            m1_mass[m] = p.c * dt
        else:
            m1_beta[m] = dec.m1_law.beta
            m1_mass[m] = dec.m1_law.c_mass
            if scheme == "exact":
                if dec.lambda_omega > 1.0e9:
                    raise NumericalError(
                        f"Poisson intensity {dec.lambda_omega:.3g} at dt={dt} "
                        "too large for exact simulation")
                lam[m] = dec.lambda_omega
    return a_arr, m1_beta, m1_mass, lam, omega_alpha, jump_rate


def simulate_paths(seed: int, grid: PathGrid, p: OuNtsParams,
                   scheme: str = "exact", n_paths: int = 1,
                   stream_base: int = 0, threads: int = 1,
                   include_t0: bool = False) -> np.ndarray:
    """Simulate OU skeletons on the grid; one substream per path.

    Returns an (n_paths, n_steps) array of N(t_m) (or n_steps + 1 columns
    starting with n0 when include_t0 is set). Results are independent of
    the thread count.
    """
    arrays = _scheme_step_arrays(grid, p, scheme)
    n_steps = len(grid.times)
    out = np.empty((n_paths, n_steps))

    lg1ma = lgamma(1.0 - p.alpha)

    def run_block(lo, hi):
        kernels.ou_paths(seed, stream_base, lo, hi, p.n0, p.alpha, p.sigma,
                         lg1ma, *arrays, out[lo:hi])

    _parallel_blocks(run_block, n_paths, threads)
    if include_t0:
        out = np.hstack([np.full((n_paths, 1), p.n0), out])
    return out


def sample_increments(seed: int, dt: float, p: OuNtsParams,
                      scheme: str = "exact", n: int = 1,
                      stream_base: int = 0, threads: int = 1) -> np.ndarray:
    """n single-step transition-noise draws Z(dt), one substream each."""
    grid = PathGrid(times=np.array([dt]))
    zero_start = OuNtsParams(nts=p.nts, b=p.b, n0=0.0)
    return simulate_paths(seed, grid, zero_start, scheme, n,
                          stream_base, threads)[:, 0]


def nts_increments(seed: int, dts: np.ndarray, p: NtsParams,
                   n_paths: int = 1, stream_base: int = FACTOR2_NAMESPACE,
                   threads: int = 1) -> np.ndarray:
    """Exact per-step increments of a (possibly skewed) NTS Levy process."""
    masses = p.c * np.asarray(dts, dtype=float)
    if np.any(masses < 0.0):
        raise ValueError("negative time step")
    out = np.empty((n_paths, len(masses)))

    lg1ma = lgamma(1.0 - p.alpha)

    def run_block(lo, hi):
        kernels.nts_path_increments(seed, stream_base, lo, hi, p.alpha,
                                    p.theta, p.sigma, p.beta, lg1ma, masses,
                                    out[lo:hi])

    _parallel_blocks(run_block, n_paths, threads)
    return out


def _parallel_blocks(run_block, n_paths: int, threads: int):
    threads = max(1, int(threads))
    if threads == 1 or n_paths < 2 * threads:
        run_block(0, n_paths)
        return
    bounds = np.linspace(0, n_paths, threads + 1).astype(int)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(run_block, int(lo), int(hi))
                   for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]
        for f in futures:
            f.result()
