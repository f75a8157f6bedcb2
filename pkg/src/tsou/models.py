"""Risk-neutral spot-price models for day-ahead energy markets.

One factor: S(t) = F(0,t) exp(h(t) + N(t)) with N a symmetric
tempered-stable-driven OU process and h the drift that makes E[S(t)] match
the forward curve. The two-factor variant adds an independent NTS Levy
factor tied to the month-ahead price.
"""
from __future__ import annotations

import csv
import datetime as dt
import math
from dataclasses import dataclass
from math import exp, log, sqrt

import numpy as np

from tsou import process
from tsou.process import (NtsParams, OuNtsParams, PathGrid, che_nts,
                          nts_cgf_rate, transition_cgf,
                          transition_cgf_elementary, transition_lch)
from tsou.rng import FACTOR2_NAMESPACE

__all__ = [
    "ForwardCurve", "OneFactorModel", "TwoFactorModel",
    "rn_drift_one_factor", "rn_drift_levy", "spot_paths", "log_spot_chf",
]

DAYS_PER_YEAR = 365.0


@dataclass(frozen=True)
class ForwardCurve:
    """Piecewise-constant daily forward curve F(0, t), t in years."""
    values: np.ndarray          # one value per day offset
    anchor: dt.date | None = None

    def __post_init__(self):
        v = np.atleast_1d(np.asarray(self.values, dtype=float))
        object.__setattr__(self, "values", v)
        if np.any(v <= 0.0) or not np.all(np.isfinite(v)):
            raise ValueError("forward curve values must be positive and finite")

    @classmethod
    def flat(cls, level: float) -> "ForwardCurve":
        return cls(values=np.array([level]))

    @classmethod
    def from_csv(cls, path) -> "ForwardCurve":
        """CSV with header date,price; ISO dates, one row per day."""
        dates: list[dt.date] = []
        values: list[float] = []
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [h.strip().lower() for h in header[:2]] != ["date", "price"]:
                raise ValueError(f"{path}: expected header 'date,price'")
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                try:
                    d = dt.date.fromisoformat(row[0].strip())
                    v = float(row[1])
                except (ValueError, IndexError) as e:
                    raise ValueError(f"{path}:{lineno}: {e}") from None
                if v <= 0.0:
                    raise ValueError(f"{path}:{lineno}: nonpositive price {v}")
                if dates and d <= dates[-1]:
                    raise ValueError(f"{path}:{lineno}: dates not increasing at {d}")
                dates.append(d)
                values.append(v)
        if not dates:
            raise ValueError(f"{path}: empty forward curve")
        # expand to a contiguous day grid, forward-filling gaps
        n_days = (dates[-1] - dates[0]).days + 1
        grid = np.empty(n_days)
        j = 0
        for off in range(n_days):
            day = dates[0] + dt.timedelta(days=off)
            if j + 1 < len(dates) and day >= dates[j + 1]:
                j += 1
            grid[off] = values[j]
        return cls(values=grid, anchor=dates[0])

    def value(self, t) -> np.ndarray | float:
        """F(0, t); sub-daily times map to their calendar day."""
        t = np.asarray(t, dtype=float)
        idx = np.clip((t * DAYS_PER_YEAR + 1e-9).astype(int), 0,
                      len(self.values) - 1)
        out = self.values[idx]
        return float(out) if out.ndim == 0 else out


def rn_drift_one_factor(t: float, ou: OuNtsParams,
                        method: str = "auto") -> float:
    """Drift h(t) = -m_N(1, t) restoring the martingale property."""
    if t <= 0.0:
        return 0.0
    if ou.sigma == 0.0:
        return -ou.n0 * exp(-ou.b * t)
    if method == "auto":
        method = "elementary" if ou.alpha == 0.5 else "general"
    if method == "elementary":
        m = transition_cgf_elementary(1.0, t, ou)
    elif method == "general":
        m = transition_cgf(1.0, t, ou)
    else:
        raise ValueError(f"unknown drift method {method!r}")
    return -(ou.n0 * exp(-ou.b * t) + m)


def rn_drift_levy(t: float, p: NtsParams) -> float:
    """Drift h2(t) = -t kappa(1) for the plain NTS factor."""
    if p.sigma == 0.0 and p.theta == 0.0:
        return 0.0
    return -t * nts_cgf_rate(1.0, p)


@dataclass(frozen=True)
class OneFactorModel:
    curve: ForwardCurve
    ou: OuNtsParams
    rate: float = 0.0

    def __post_init__(self):
        if self.ou.sigma > 0.0 and self.ou.cgf_bound() <= 1.0:
            raise ValueError(
                "risk-neutral drift requires sqrt(2 beta)/sigma > 1; "
                f"got {self.ou.cgf_bound():.6g}")

    @property
    def n_factors(self) -> int:
        return 1

    def drift(self, t: float) -> float:
        return rn_drift_one_factor(t, self.ou)

    def mgf_margin(self, s: float) -> float:
        """Distance of s from the largest finite-moment order (> 0 iff finite)."""
        return self.ou.cgf_bound() - abs(s)

    def max_moment_order(self) -> float:
        """sup{s : E[S(t)^s] < infinity}."""
        return self.ou.cgf_bound()


@dataclass(frozen=True)
class TwoFactorModel:
    curve: ForwardCurve
    ou: OuNtsParams
    levy: NtsParams
    rate: float = 0.0

    def __post_init__(self):
        if self.ou.sigma > 0.0 and self.ou.cgf_bound() <= 1.0:
            raise ValueError(
                "risk-neutral drift requires sqrt(2 beta)/sigma > 1; "
                f"got {self.ou.cgf_bound():.6g}")
        if self.levy.exp_moment_margin(1.0) <= 0.0:
            raise ValueError(
                "month-ahead factor needs nu (sigma^2/2 + theta) < 1 - alpha")

    @property
    def n_factors(self) -> int:
        return 2

    def drift(self, t: float) -> float:
        return rn_drift_one_factor(t, self.ou) + rn_drift_levy(t, self.levy)

    def mgf_margin(self, s: float) -> float:
        m1 = self.ou.cgf_bound() - abs(s)
        m2 = self.levy.exp_moment_margin(s)
        return min(m1, m2)

    def max_moment_order(self) -> float:
        """sup{s : E[S(t)^s] < infinity}."""
        p2 = self.levy
        if p2.sigma > 0.0:
            disc = (p2.nu * p2.theta) ** 2 \
                + 2.0 * p2.nu * p2.sigma ** 2 * (1.0 - p2.alpha)
            s2 = (math.sqrt(disc) - p2.nu * p2.theta) / (p2.nu * p2.sigma ** 2)
        elif p2.theta > 0.0:
            s2 = (1.0 - p2.alpha) / (p2.nu * p2.theta)
        else:
            s2 = math.inf
        return min(self.ou.cgf_bound(), s2)


def spot_paths(seed: int, grid: PathGrid, model, scheme: str = "exact",
               n_paths: int = 1, threads: int = 1) -> np.ndarray:
    """Spot price paths S(t_m) on the grid, (n_paths, n_steps).

    Factor one uses the requested simulation scheme; the second factor is
    always simulated exactly (plain NTS increments) on its own stream
    namespace, so a two-factor model with the second factor switched off
    reproduces the one-factor paths draw-for-draw.
    """
    times = grid.times
    n1 = process.simulate_paths(seed, grid, model.ou, scheme, n_paths,
                                threads=threads)
    h = np.array([model.drift(t) for t in times])
    log_s = h + n1
    if model.n_factors == 2:
        p2 = model.levy
        if p2.sigma != 0.0 or p2.theta != 0.0:
            incs = process.nts_increments(seed, grid.dts, p2, n_paths,
                                          stream_base=FACTOR2_NAMESPACE,
                                          threads=threads)
            log_s = log_s + np.cumsum(incs, axis=1)
    return model.curve.value(times)[None, :] * np.exp(log_s)


def log_spot_chf(u: float, t: float, model) -> complex:
    """Characteristic function of log S(t) at real u."""
    ou = model.ou
    level = log(float(model.curve.value(t))) + model.drift(t) \
        + ou.n0 * exp(-ou.b * t)
    val = 1j * u * level + transition_lch(u, t, ou)
    if model.n_factors == 2:
        val = val + t * che_nts(u, model.levy)
    return complex(np.exp(val))


def log_spot_mgf_line(v: np.ndarray, t: float, model,
                      damp: float, n_nodes: int = 128) -> np.ndarray:
    """E[exp((i v + 1 + damp) log S(t))] on a frequency grid.

    The OU contribution at complex argument is integrated along the
    mean-reversion flow with fixed-order Gauss-Legendre quadrature (the
    closed form is kept to real arguments).
    """
    ou = model.ou
    margin = model.mgf_margin(1.0 + damp)
    if margin <= 0.0:
        raise ValueError(
            f"moment of order {1.0 + damp:.4g} does not exist; "
            "reduce the damping")
    zeta = v - 1j * (1.0 + damp)        # chf argument: E[e^{i zeta log S}]
    level = log(float(model.curve.value(t))) + model.drift(t) \
        + ou.n0 * exp(-ou.b * t)
    nodes, weights = np.polynomial.legendre.leggauss(n_nodes)
    s_nodes = 0.5 * t * (nodes + 1.0)
    w = 0.5 * t * weights
    args = zeta[None, :] * np.exp(-ou.b * s_nodes)[:, None]
    a = ou.alpha
    base = 1.0 + ou.nu * (args * args * ou.sigma ** 2 / 2.0) / (1.0 - a)
    psi = (1.0 - a) / (a * ou.nu) * (1.0 - base ** a)
    val = 1j * zeta * level + np.tensordot(w, psi, axes=(0, 0))
    if model.n_factors == 2:
        val = val + t * che_nts(zeta, model.levy)
    return np.exp(val)
