"""Deterministic random-variate generation with per-path substreams.

A stream is addressed by ``(seed, stream_id)``; the pair fully determines
the variate sequence, and distinct stream ids give statistically
independent sequences. Path-level Monte Carlo uses ``stream_id = path
index`` so results do not depend on how paths are partitioned over workers.

Stream-id namespaces (top bits) keep independent consumers apart:
factor-two noise uses ``FACTOR2_NAMESPACE | path``, calibration imputation
uses ``IMPUTE_NAMESPACE``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

from tsou import kernels

__all__ = [
    "RngStream", "TsLaw", "sample_uniform", "sample_normal", "sample_poisson",
    "sample_gamma", "sample_ig", "sample_ts", "sample_v", "sample_v_batch",
    "FACTOR2_NAMESPACE", "IMPUTE_NAMESPACE",
]

log = logging.getLogger(__name__)

FACTOR2_NAMESPACE = 1 << 63
IMPUTE_NAMESPACE = 1 << 62


@dataclass(frozen=True)
class TsLaw:
    """Tempered stable law with Levy density c_mass * exp(-beta x)/x^(1+alpha)."""
    alpha: float
    beta: float
    c_mass: float

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must be in (0,1), got {self.alpha}")
        if self.beta <= 0.0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if self.c_mass < 0.0:
            raise ValueError(f"c_mass must be nonnegative, got {self.c_mass}")

    def cumulant(self, k: int) -> float:
        """k-th cumulant: c_mass * Gamma(k - alpha) * beta^(alpha - k)."""
        return self.c_mass * math.exp(
            math.lgamma(k - self.alpha) + (self.alpha - k) * math.log(self.beta))


class RngStream:
    """One reproducible substream; single-owner, not thread-shared."""

    __slots__ = ("seed", "stream_id", "_s")

    def __init__(self, seed: int, stream_id: int = 0):
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        self._s = kernels.Stream(self.seed, self.stream_id)

    def uniform(self) -> float:
        return self._s.uniform()

    def normal(self) -> float:
        return self._s.normal()

    def poisson(self, lam: float) -> int:
        if lam < 0.0 or not math.isfinite(lam):
            raise ValueError(f"Poisson intensity must be finite and >= 0, got {lam}")
        if lam > 1.0e9:
            raise ValueError(f"Poisson intensity {lam} too large to simulate")
        return self._s.poisson(lam)

    def gamma(self, shape: float, rate: float) -> float:
        if shape <= 0.0 or rate <= 0.0:
            raise ValueError(f"gamma requires shape, rate > 0, got ({shape}, {rate})")
        return self._s.gamma(shape, rate)

    def inverse_gaussian(self, mu: float, lam: float) -> float:
        if mu <= 0.0 or lam <= 0.0:
            raise ValueError(f"IG requires mu, lam > 0, got ({mu}, {lam})")
        return self._s.inverse_gaussian(mu, lam)

    def ts(self, law: TsLaw) -> float:
        return self._s.tempered_stable(law.alpha, law.beta, law.c_mass,
                                       math.lgamma(1.0 - law.alpha))

    def v(self, omega: float, alpha: float) -> float:
        if not 0.0 < omega < 1.0:
            raise ValueError(f"omega must be in (0,1), got {omega}")
        if not 0.0 < alpha < 1.0:
            raise ValueError(f"alpha must be in (0,1), got {alpha}")
        return self._s.mixture_rate(omega ** alpha, alpha)


def sample_v_batch(seed: int, stream_id: int, n: int, omega: float,
                   alpha: float):
    """n mixture-rate draws as an array, with acceptance-rate logging."""
    import numpy as np

    if not 0.0 < omega < 1.0:
        raise ValueError(f"omega must be in (0,1), got {omega}")
    out = np.empty(n)
    proposals = kernels.v_draws(seed, stream_id, n, omega, alpha, out)
    if proposals:
        log.debug("mixture-rate sampler: %d/%d accepted (%.1f%%)",
                  n, proposals, 100.0 * n / proposals)
    return out


# spec-style free-function aliases ------------------------------------------

def sample_uniform(rng: RngStream) -> float:
    return rng.uniform()


def sample_normal(rng: RngStream) -> float:
    return rng.normal()


def sample_poisson(rng: RngStream, lam: float) -> int:
    return rng.poisson(lam)


def sample_gamma(rng: RngStream, shape: float, rate: float) -> float:
    return rng.gamma(shape, rate)


def sample_ig(rng: RngStream, mu: float, lam: float) -> float:
    return rng.inverse_gaussian(mu, lam)


def sample_ts(rng: RngStream, law: TsLaw) -> float:
    return rng.ts(law)


def sample_v(rng: RngStream, omega: float, alpha: float) -> float:
    return rng.v(omega, alpha)
