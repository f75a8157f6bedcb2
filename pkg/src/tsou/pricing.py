"""Contract valuation engines.

Daily call strips priced by damped-characteristic-function FFT inversion
(Carr-Madan) and by Monte Carlo, forward-start Asian options by Monte
Carlo, and swing options by least-squares Monte Carlo with backward
induction over remaining exercise rights.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from math import exp, log, pi, sqrt

import numpy as np

from tsou.models import log_spot_mgf_line, spot_paths
from tsou.process import PathGrid

__all__ = [
    "CallStripSpec", "AsianSpec", "SwingSpec", "PriceEstimate",
    "DampingError", "price_call_strip_fft", "price_call_strip_mc",
    "price_asian_mc", "price_swing_lsmc",
]


class DampingError(ValueError):
    """Damping exponent outside the model's finite-moment domain."""


def _validate_dates(dates) -> np.ndarray:
    d = np.asarray(dates, dtype=float)
    if d.ndim != 1 or len(d) == 0:
        raise ValueError("need at least one fixing date")
    if d[0] <= 0.0 or np.any(np.diff(d) <= 0.0):
        raise ValueError("dates must be strictly increasing and positive")
    return d


@dataclass(frozen=True)
class CallStripSpec:
    """Strip of daily European calls, one per fixing date."""
    fixing_dates: np.ndarray
    strike: float

    def __post_init__(self):
        object.__setattr__(self, "fixing_dates",
                           _validate_dates(self.fixing_dates))
        if self.strike <= 0.0:
            raise ValueError(f"strike must be positive, got {self.strike}")


@dataclass(frozen=True)
class AsianSpec:
    """European-style Asian option on the average over the fixing dates."""
    fixing_dates: np.ndarray
    strike: float

    def __post_init__(self):
        object.__setattr__(self, "fixing_dates",
                           _validate_dates(self.fixing_dates))
        if self.strike <= 0.0:
            raise ValueError(f"strike must be positive, got {self.strike}")

    @property
    def maturity(self) -> float:
        return float(self.fixing_dates[-1])


@dataclass(frozen=True)
class SwingSpec:
    """Swing contract: n_rights exercises of one unit over the date set."""
    exercise_dates: np.ndarray
    n_rights: int
    strike: float

    def __post_init__(self):
        object.__setattr__(self, "exercise_dates",
                           _validate_dates(self.exercise_dates))
        if not 1 <= self.n_rights <= len(self.exercise_dates):
            raise ValueError(
                f"need 1 <= rights <= {len(self.exercise_dates)} dates, "
                f"got {self.n_rights}")
        if self.strike <= 0.0:
            raise ValueError(f"strike must be positive, got {self.strike}")


@dataclass(frozen=True)
class PriceEstimate:
    value: float
    stderr: float
    n_paths: int
    method: str
    seed: int | None = None

    def as_dict(self) -> dict:
        return {"value": self.value, "stderr": self.stderr,
                "n_paths": self.n_paths, "method": self.method,
                "seed": self.seed}


@dataclass(frozen=True)
class StripFftResult:
    estimate: PriceEstimate
    per_fixing: np.ndarray      # undiscounted-by-summation per-date prices


@dataclass(frozen=True)
class AsianResult:
    call: PriceEstimate
    put: PriceEstimate
    mean_average: float         # sample mean of the path averages
    parity_gap: float           # |C - P - df (mean_average - K)|


def _check_damping(model, damping: float):
    if damping <= 0.0:
        raise DampingError(f"damping must be positive, got {damping}")
    s_max = model.max_moment_order()
    if 1.0 + damping >= s_max:
        raise DampingError(
            f"damping {damping} infeasible: moment of order {1 + damping:.4g} "
            f"does not exist; feasible damping interval is (0, {s_max - 1.0:.6g})")


def carr_madan_call(model, t: float, strike: float, rate: float = 0.0,
                    damping: float = 0.75, n_fft: int = 2 ** 14,
                    eta: float = 0.1) -> float:
    """Single European call on S(t) by damped Fourier inversion."""
    _check_damping(model, damping)
    s0 = log(float(model.curve.value(t)))
    k = log(strike)
    # keep the strike comfortably inside the log-strike window of width 2 pi/eta
    if abs(k - s0) > pi / eta - 3.0:
        eta = pi / (abs(k - s0) + 6.0)
    v = eta * np.arange(n_fft)
    phi = log_spot_mgf_line(v, t, model, damping)
    denom = damping * damping + damping - v * v \
        + 1j * (2.0 * damping + 1.0) * v
    psi = exp(-rate * t) * phi / denom
    # Simpson weights 1,4,2,4,...  (eta/3 scaled), first point corrected
    w = np.full(n_fft, 2.0, dtype=float)
    w[1::2] = 4.0
    w[0] = 1.0
    w *= eta / 3.0
    lam = 2.0 * pi / (n_fft * eta)
    k_min = s0 - 0.5 * n_fft * lam
    x = psi * np.exp(-1j * v * k_min) * w
    calls = np.exp(-damping * (k_min + lam * np.arange(n_fft))) / pi \
        * np.real(np.fft.fft(x))
    # 4-point Lagrange interpolation at log-strike k
    j = int((k - k_min) / lam)
    j = min(max(j, 1), n_fft - 3)
    kj = k_min + lam * np.arange(j - 1, j + 3)
    cj = calls[j - 1:j + 3]
    val = 0.0
    for i in range(4):
        li = 1.0
        for m in range(4):
            if m != i:
                li *= (k - kj[m]) / (kj[i] - kj[m])
        val += li * cj[i]
    return float(val)


def price_call_strip_fft(model, spec: CallStripSpec, rate: float = 0.0,
                         damping: float = 0.75, n_fft: int = 2 ** 14,
                         eta: float = 0.1) -> StripFftResult:
    """Deterministic strip price: one Fourier inversion per fixing date."""
    per_fixing = np.array([
        carr_madan_call(model, t, spec.strike, rate, damping, n_fft, eta)
        for t in spec.fixing_dates])
    est = PriceEstimate(value=float(per_fixing.sum()), stderr=0.0,
                        n_paths=0, method="fft")
    return StripFftResult(estimate=est, per_fixing=per_fixing)


def _mc_estimate(per_path: np.ndarray, method: str, seed: int) -> PriceEstimate:
    n = len(per_path)
    if n < 2:
        raise ValueError("need at least 2 paths for a standard error")
    value = float(per_path.mean())
    stderr = float(per_path.std(ddof=1) / sqrt(n))
    return PriceEstimate(value=value, stderr=stderr, n_paths=n,
                         method=method, seed=seed)


def price_call_strip_mc(seed: int, model, spec: CallStripSpec,
                        rate: float = 0.0, n_paths: int = 10_000,
                        scheme: str = "exact", threads: int = 1,
                        return_paths: bool = False):
    """Monte Carlo strip price on the fixing grid (no intermediate dates)."""
    grid = PathGrid(times=spec.fixing_dates)
    s = spot_paths(seed, grid, model, scheme, n_paths, threads)
    df = np.exp(-rate * spec.fixing_dates)
    payoff = df[None, :] * np.maximum(s - spec.strike, 0.0)
    # accumulate date by date so the swing full-exercise degeneracy matches
    # this sum bit for bit
    per_path = np.zeros(n_paths)
    for m in range(payoff.shape[1]):
        per_path += payoff[:, m]
    est = _mc_estimate(per_path, f"mc-{scheme}", seed)
    if return_paths:
        return est, s
    return est


def price_asian_mc(seed: int, model, spec: AsianSpec, rate: float = 0.0,
                   n_paths: int = 10_000, scheme: str = "exact",
                   threads: int = 1) -> AsianResult:
    """Forward-start Asian call and put on shared paths.

    The grid starts directly at the first fixing date (one large exact step
    for the OU factor), so nothing is simulated before the averaging window.
    """
    grid = PathGrid(times=spec.fixing_dates)
    s = spot_paths(seed, grid, model, scheme, n_paths, threads)
    avg = s.mean(axis=1)
    df = exp(-rate * spec.maturity)
    call = _mc_estimate(df * np.maximum(avg - spec.strike, 0.0),
                        f"mc-{scheme}", seed)
    put = _mc_estimate(df * np.maximum(spec.strike - avg, 0.0),
                       f"mc-{scheme}", seed)
    gap = call.value - put.value - df * (float(avg.mean()) - spec.strike)
    return AsianResult(call=call, put=put, mean_average=float(avg.mean()),
                       parity_gap=abs(gap))


def _regression_basis(s: np.ndarray, degree: int):
    """Standardized power-polynomial design matrix.

    Returns (basis, mean, sd, degree); degenerate spot columns fall back to
    the constant basis.
    """
    sd = float(s.std())
    if sd == 0.0:
        warnings.warn("degenerate spot values; continuation regression "
                      "reduced to the constant basis", RuntimeWarning)
        return np.ones((len(s), 1)), float(s.mean()), 0.0, 0
    mean = float(s.mean())
    z = (s - mean) / sd
    basis = np.empty((len(s), degree + 1))
    basis[:, 0] = 1.0
    for d in range(1, degree + 1):
        basis[:, d] = basis[:, d - 1] * z
    return basis, mean, sd, degree


def _fit_continuation(basis: np.ndarray, targets: np.ndarray, date_idx: int):
    """Least-squares coefficients via QR, with rank-deficiency fallback."""
    q, r = np.linalg.qr(basis)
    diag = np.abs(np.diag(r))
    keep = basis.shape[1]
    tol = max(diag) * len(basis) * np.finfo(float).eps if diag.size else 0.0
    while keep > 1 and diag[keep - 1] <= tol:
        keep -= 1
    if keep < basis.shape[1]:
        warnings.warn(
            f"rank-deficient continuation regression at date {date_idx}; "
            f"basis reduced to degree {keep - 1}", RuntimeWarning)
        q, r = np.linalg.qr(basis[:, :keep])
    rhs = q.T @ targets
    coef = np.linalg.solve(r[:keep, :keep], rhs)
    if keep < basis.shape[1]:
        coef = np.vstack([coef, np.zeros((basis.shape[1] - keep,
                                          targets.shape[1]))])
    return coef


def price_swing_lsmc(seed: int, model, spec: SwingSpec, rate: float = 0.0,
                     n_paths: int = 20_000, scheme: str = "exact",
                     threads: int = 1, basis_degree: int = 3) -> PriceEstimate:
    """Swing value by least-squares Monte Carlo.

    Backward induction over (date, remaining rights); continuation values
    regressed on power polynomials of the spot across all paths; exercise
    forced when remaining rights equal remaining dates. A forward pass
    re-values the induced policy on the same paths.
    """
    if n_paths < 10 * (basis_degree + 1):
        raise ValueError("too few paths for the regression basis")
    dates = spec.exercise_dates
    n_dates = len(dates)
    n_rights = spec.n_rights
    grid = PathGrid(times=dates)
    s = spot_paths(seed, grid, model, scheme, n_paths, threads)
    df = np.exp(-rate * dates)
    payoff = df[None, :] * np.maximum(s - spec.strike, 0.0)   # discounted to 0

    # value[n] = time-0-discounted value with n rights left, next date m+1
    value = np.zeros((n_rights + 1, n_paths))
    fits: list[tuple | None] = [None] * n_dates
    cont = np.empty((n_rights, n_paths))
    gain = np.empty((n_rights, n_paths))
    mask = np.empty((n_rights, n_paths), dtype=bool)

    value[1:, :] = payoff[:, n_dates - 1][None, :]
    for m in range(n_dates - 2, -1, -1):
        remaining = n_dates - m
        n_free = min(n_rights, remaining - 1)   # levels that involve a choice
        basis, mean, sd, deg = _regression_basis(s[:, m], basis_degree)
        coef = _fit_continuation(basis, value[1:n_free + 1].T, m)
        fits[m] = (mean, sd, coef)
        np.matmul(coef.T, basis.T, out=cont[:n_free])   # (n_free, n_paths)
        pm = payoff[:, m][None, :]
        # forced levels first: they read the not-yet-updated level below
        if n_rights >= remaining:
            value[remaining:n_rights + 1] = pm + value[remaining - 1:n_rights]
        # exercise the n-th right iff payoff + continuation(n-1) >= continuation(n)
        gain[0] = pm[0]
        np.add(pm, cont[:n_free - 1], out=gain[1:n_free])
        np.greater_equal(gain[:n_free], cont[:n_free], out=mask[:n_free])
        np.add(pm, value[0:n_free], out=gain[:n_free])
        np.copyto(value[1:n_free + 1], gain[:n_free], where=mask[:n_free])

    # forward pass: replay the fitted-policy decisions
    rights = np.full(n_paths, n_rights, dtype=np.int64)
    total = np.zeros(n_paths)
    for m in range(n_dates):
        remaining = n_dates - m
        active = rights > 0
        forced = active & (rights >= remaining)
        choice = active & ~forced
        exercise = forced.copy()
        if np.any(choice):
            mean, sd, coef = fits[m]
            idx = np.where(choice)[0]
            if sd == 0.0:
                basis = np.ones((len(idx), 1))
            else:
                z = (s[idx, m] - mean) / sd
                basis = np.empty((len(idx), coef.shape[0]))
                basis[:, 0] = 1.0
                for d in range(1, coef.shape[0]):
                    basis[:, d] = basis[:, d - 1] * z
            cont_all = basis @ coef              # (len(idx), n_free)
            lvl = rights[idx] - 1                # continuation level index
            rows = np.arange(len(idx))
            c_stay = cont_all[rows, lvl]
            c_ex = np.where(lvl >= 1, cont_all[rows, np.maximum(lvl - 1, 0)], 0.0)
            exercise[idx] = payoff[idx, m] + c_ex >= c_stay
        total += np.where(exercise, payoff[:, m], 0.0)
        rights -= exercise.astype(np.int64)
    return _mc_estimate(total, f"lsmc-{scheme}", seed)
