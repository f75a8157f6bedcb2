"""Pure-Python sampling kernels.

Reference implementation of the hot loops; `tsou._kernels` is the compiled
twin with identical algorithms and identical variate-consumption order, so
both backends produce bit-identical streams for the same ``(seed, stream_id)``.

Stream derivation: a splitmix64 sequence keyed by the 64-bit seed is jumped
by ``5 * stream_id`` and four outputs seed one xoshiro256++ state per stream.
All samplers consume the stream only through 53-bit uniforms in (0, 1).

Per-step draw order for OU increments (a contract shared with the compiled
backend): normal, tempered-stable mass, Poisson count, then per jump the
mixture rate followed by the gamma jump size.
"""
from __future__ import annotations

from math import exp, floor, lgamma, log, pi, sin, sqrt

BACKEND = "python"

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_INV53 = 1.0 / (1 << 53)
_POISSON_CAP = 1.0e9
_INF = float("inf")


def _exp_inf(x: float) -> float:
    # C exp() semantics: overflow yields +inf instead of raising
    try:
        return exp(x)
    except OverflowError:
        return _INF


def _pow_inf(x: float, y: float) -> float:
    # C pow() semantics for positive finite bases
    try:
        return x ** y
    except OverflowError:
        return _INF


def _sm64(state: int) -> int:
    z = state
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & _MASK
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & _MASK
    return z ^ (z >> 31)


class Stream:
    """xoshiro256++ stream addressed by (seed, stream_id)."""

    __slots__ = ("s0", "s1", "s2", "s3")

    def __init__(self, seed: int, stream_id: int):
        seed &= _MASK
        stream_id &= _MASK
        base = (seed + 5 * _GOLDEN * stream_id) & _MASK
        self.s0 = _sm64((base + _GOLDEN) & _MASK)
        self.s1 = _sm64((base + 2 * _GOLDEN) & _MASK)
        self.s2 = _sm64((base + 3 * _GOLDEN) & _MASK)
        self.s3 = _sm64((base + 4 * _GOLDEN) & _MASK)
        if self.s0 == self.s1 == self.s2 == self.s3 == 0:
            self.s0 = _GOLDEN

    def state(self):
        return (self.s0, self.s1, self.s2, self.s3)

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self.s0, self.s1, self.s2, self.s3
        t = (s0 + s3) & _MASK
        result = ((t << 23 | t >> 41) & _MASK) + s0 & _MASK
        t = (s1 << 17) & _MASK
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = (s3 << 45 | s3 >> 19) & _MASK
        self.s0, self.s1, self.s2, self.s3 = s0, s1, s2, s3
        return result

    def uniform(self) -> float:
        """Uniform draw in the open interval (0, 1)."""
        while True:
            u = (self.next_u64() >> 11) * _INV53
            if u > 0.0:
                return u

    def normal(self) -> float:
        """Standard normal via the Marsaglia polar method (spare discarded)."""
        while True:
            u = 2.0 * self.uniform() - 1.0
            v = 2.0 * self.uniform() - 1.0
            s = u * u + v * v
            if 0.0 < s < 1.0:
                return u * sqrt(-2.0 * log(s) / s)

    def gamma(self, shape: float, rate: float) -> float:
        """Gamma draw with mean shape/rate (Marsaglia-Tsang, boosted for shape<1)."""
        if shape < 1.0:
            x = self.gamma(shape + 1.0, rate)
            u = self.uniform()
            return x * u ** (1.0 / shape)
        d = shape - 1.0 / 3.0
        c = 1.0 / (3.0 * sqrt(d))
        while True:
            x = self.normal()
            t = 1.0 + c * x
            if t <= 0.0:
                continue
            v = t * t * t
            u = self.uniform()
            x2 = x * x
            if u < 1.0 - 0.0331 * x2 * x2:
                return d * v / rate
            if log(u) < 0.5 * x2 + d * (1.0 - v + log(v)):
                return d * v / rate

    def poisson(self, lam: float) -> int:
        if lam <= 0.0:
            return 0
        if lam > _POISSON_CAP:
            raise ValueError(f"Poisson intensity {lam} too large to simulate")
        if lam < 10.0:
            limit = exp(-lam)
            k = 0
            p = 1.0
            while True:
                p *= self.uniform()
                if p <= limit:
                    return k
                k += 1
        # PTRS transformed rejection (Hormann 1993)
        b = 0.931 + 2.53 * sqrt(lam)
        a = -0.059 + 0.02483 * b
        inv_alpha = 1.1239 + 1.1328 / (b - 3.4)
        vr = 0.9277 - 3.6224 / (b - 2.0)
        log_lam = log(lam)
        while True:
            u = self.uniform() - 0.5
            v = self.uniform()
            us = 0.5 - abs(u)
            k = int(floor((2.0 * a / us + b) * u + lam + 0.43))
            if us >= 0.07 and v <= vr:
                return k
            if k < 0 or (us < 0.013 and v > us):
                continue
            if (log(v * inv_alpha / (a / (us * us) + b))
                    <= k * log_lam - lam - _lgamma_int(k)):
                return k

    def inverse_gaussian(self, mu: float, lam: float) -> float:
        """IG(mu, lam) via the Michael-Schucany-Haas transformation."""
        n = self.normal()
        y = n * n
        w = mu * y
        s = sqrt(w * (4.0 * lam + w))
        x = mu * (s - w) / (s + w)
        u = self.uniform()
        if u <= mu / (mu + x):
            return x
        return mu * mu / x

    def tilted_stable(self, alpha: float, lam: float) -> float:
        """Exponentially tilted positive stable draw, Devroye double rejection.

        Standardized so that E[exp(-u X)] = exp(lam^alpha - (lam + u)^alpha).
        """
        b = (1.0 - alpha) / alpha
        lam_alpha = lam ** alpha
        gamma_ = lam_alpha * alpha * (1.0 - alpha)
        sqrt_gamma = sqrt(gamma_)
        c1 = sqrt(pi / 2.0)
        c2 = 2.0 + c1
        c3 = c2 * sqrt_gamma
        xi = (1.0 + sqrt(2.0) * c3) / pi
        psi = c3 * exp(-gamma_ * pi * pi / 8.0) / sqrt(pi)
        w1 = c1 * xi / sqrt_gamma
        w2 = 2.0 * sqrt(pi) * psi
        w3 = xi * pi

        while True:
            # outer: sample auxiliary U with its double-rejection envelope
            while True:
                v = self.uniform()
                if gamma_ >= 1.0:
                    if v < w1 / (w1 + w2):
                        u_aux = abs(self.normal()) / sqrt_gamma
                    else:
                        w = self.uniform()
                        u_aux = pi * (1.0 - w * w)
                else:
                    w = self.uniform()
                    if v < w3 / (w2 + w3):
                        u_aux = pi * w
                    else:
                        u_aux = pi * (1.0 - w * w)
                if u_aux >= pi:
                    continue
                zeta = sqrt(_b_ratio(u_aux, alpha))
                den = 1.0 - (1.0 + alpha * zeta / sqrt_gamma) ** (-1.0 / alpha)
                z = 1.0 / den if den != 0.0 else _INF
                rho = pi * _exp_inf(-lam_alpha * (1.0 - 1.0 / (zeta * zeta))) \
                    / ((1.0 + c1) * sqrt_gamma / zeta + z)
                d = 0.0
                if u_aux >= 0.0 and gamma_ >= 1.0:
                    d += xi * exp(-gamma_ * u_aux * u_aux / 2.0)
                if 0.0 < u_aux < pi:
                    d += psi / sqrt(pi - u_aux)
                if gamma_ < 1.0:
                    d += xi
                rho *= d
                big_z = self.uniform() * rho
                if big_z <= 1.0:
                    break
            # inner: sample X from the local envelope around the mode
            a_ = _a_factor(u_aux, alpha) ** (1.0 / (1.0 - alpha))
            m = (b / a_) ** alpha * lam_alpha
            delta = sqrt(m * alpha / a_)
            a1 = delta * c1
            a3 = z / a_
            s_tot = a1 + delta + a3
            v2 = self.uniform()
            n_ = 0.0
            e1 = 0.0
            if v2 < a1 / s_tot:
                n_ = self.normal()
                x = m - delta * abs(n_)
            elif v2 < (a1 + delta) / s_tot:
                x = m + delta * self.uniform()
            else:
                e1 = -log(self.uniform())
                x = m + delta + e1 * a3
            if x <= 0.0:
                continue
            e2 = -log(big_z)
            cost = a_ * (x - m) + _exp_inf((1.0 / alpha) * log(lam_alpha)
                                           - b * log(m)) * (_pow_inf(m / x, b) - 1.0)
            if x < m:
                cost -= n_ * n_ / 2.0
            elif x > m + delta:
                cost -= e1
            if cost <= e2:
                return _pow_inf(x, -b)

    def tempered_stable(self, alpha: float, beta: float, mass: float,
                        lg1ma: float) -> float:
        """Draw from the tempered stable law with Levy density
        mass * exp(-beta x) / x^(1+alpha); inverse Gaussian when alpha = 1/2.

        ``lg1ma`` is log Gamma(1 - alpha), precomputed by the caller so both
        kernel backends consume an identical constant.
        """
        if mass == 0.0:
            return 0.0
        if alpha == 0.5:
            mu = mass * sqrt(pi / beta)
            return self.inverse_gaussian(mu, 2.0 * beta * mu * mu)
        delta = (mass * exp(lg1ma) / alpha) ** (1.0 / alpha)
        return delta * self.tilted_stable(alpha, delta * beta)

    def mixture_rate(self, omega_alpha: float, alpha: float) -> float:
        """Draw V on [1, 1/omega] with density proportional to (v^alpha - 1)/v.

        Proposal density proportional to v^(alpha-1) (inverse CDF), accepted
        with probability (1 - v^-alpha)/(1 - omega^alpha).
        """
        ratio = 1.0 / omega_alpha - 1.0
        if ratio < 1e-14:   # support collapsed onto {1}
            return 1.0
        inv_alpha = 1.0 / alpha
        while True:
            u1 = self.uniform()
            v = (1.0 + u1 * ratio) ** inv_alpha
            u2 = self.uniform()
            if u2 * (1.0 - omega_alpha) <= 1.0 - v ** (-alpha):
                return v

    def ou_step_increment(self, alpha: float, sigma: float, m1_beta: float,
                          m1_mass: float, lam: float, omega_alpha: float,
                          jump_rate: float, lg1ma: float) -> float:
        """One transition-noise draw Z for a single OU step.

        ``jump_rate`` is the base tempering rate multiplying the mixture
        variable in the gamma jump law.
        """
        x = self.normal()
        m1 = self.tempered_stable(alpha, m1_beta, m1_mass, lg1ma)
        m2 = 0.0
        if lam > 0.0:
            p = self.poisson(lam)
            for _ in range(p):
                v = self.mixture_rate(omega_alpha, alpha)
                m2 += self.gamma(1.0 - alpha, jump_rate * v)
        return sigma * x * sqrt(m1 + m2)

    def nts_increment(self, alpha: float, theta: float, sigma: float,
                      beta: float, mass: float, lg1ma: float) -> float:
        """One increment of a (possibly skewed) NTS Levy process."""
        x = self.normal()
        ell = self.tempered_stable(alpha, beta, mass, lg1ma)
        return theta * ell + sigma * sqrt(ell) * x


def _lgamma_int(k: int) -> float:
    """log k! via an explicit loop or Stirling; identical in both backends
    (CPython's math.lgamma is not the C library's)."""
    if k < 20:
        total = 0.0
        for i in range(2, k + 1):
            total += log(i)
        return total
    x = k + 1.0
    xsq = x * x
    return (x - 0.5) * log(x) - x + 0.9189385332046727 \
        + 1.0 / (12.0 * x) - 1.0 / (360.0 * x * xsq) \
        + 1.0 / (1260.0 * x * xsq * xsq)


def _sinc(x: float) -> float:
    if x == 0.0:
        return 1.0
    ax = abs(x)
    if ax < 2e-4:
        return 1.0 - x * x / 6.0
    if ax < 6e-3:
        x2 = x * x
        return 1.0 - x2 / 6.0 * (1.0 - x2 / 20.0)
    return sin(x) / x


def _b_ratio(x: float, alpha: float) -> float:
    return _sinc(x) / (_sinc(alpha * x) ** alpha
                       * _sinc((1.0 - alpha) * x) ** (1.0 - alpha))


def _a_factor(x: float, alpha: float) -> float:
    return ((1.0 - alpha) * _sinc((1.0 - alpha) * x)) ** (1.0 - alpha) \
        * (alpha * _sinc(alpha * x)) ** alpha / _sinc(x)


# ---------------------------------------------------------------------------
# batch entry points (one stream per path: stream_id = stream_base + i)
# ---------------------------------------------------------------------------

def uniforms(seed, stream_id, n, out):
    s = Stream(seed, stream_id)
    for i in range(n):
        out[i] = s.uniform()


def normals(seed, stream_id, n, out):
    s = Stream(seed, stream_id)
    for i in range(n):
        out[i] = s.normal()


def gammas(seed, stream_id, n, shape, rate, out):
    s = Stream(seed, stream_id)
    for i in range(n):
        out[i] = s.gamma(shape, rate)


def poissons(seed, stream_id, n, lam, out):
    if lam > _POISSON_CAP:
        raise ValueError(f"Poisson intensity {lam} too large to simulate")
    s = Stream(seed, stream_id)
    for i in range(n):
        out[i] = s.poisson(lam)


def ts_draws(seed, stream_id, n, alpha, beta, mass, lg1ma, out):
    s = Stream(seed, stream_id)
    for i in range(n):
        out[i] = s.tempered_stable(alpha, beta, mass, lg1ma)


def ig_draws(seed, stream_id, n, mu, lam, out):
    s = Stream(seed, stream_id)
    for i in range(n):
        out[i] = s.inverse_gaussian(mu, lam)


def v_draws(seed, stream_id, n, omega, alpha, out):
    """Fill ``out`` with mixture-rate draws; returns the proposal count."""
    s = Stream(seed, stream_id)
    omega_alpha = omega ** alpha
    ratio = 1.0 / omega_alpha - 1.0
    if ratio < 1e-14:
        for i in range(n):
            out[i] = 1.0
        return n
    inv_alpha = 1.0 / alpha
    proposals = 0
    for i in range(n):
        while True:
            proposals += 1
            u1 = s.uniform()
            v = (1.0 + u1 * ratio) ** inv_alpha
            u2 = s.uniform()
            if u2 * (1.0 - omega_alpha) <= 1.0 - v ** (-alpha):
                out[i] = v
                break
    return proposals


def ou_paths(seed, stream_base, path_lo, path_hi, n0, alpha, sigma, lg1ma,
             a_steps, m1_beta_steps, m1_mass_steps, lam_steps,
             omega_alpha_steps, jump_rate_steps, out):
    """Simulate OU skeletons for paths [path_lo, path_hi).

    ``out[i - path_lo, m]`` receives N(t_{m+1}); the initial value n0 is not
    stored. Per-step parameter arrays describe the exact decomposition (or an
    approximation when lam == 0).
    """
    n_steps = len(a_steps)
    for i in range(path_lo, path_hi):
        s = Stream(seed, stream_base + i)
        value = n0
        row = out[i - path_lo]
        for m in range(n_steps):
            z = s.ou_step_increment(alpha, sigma, m1_beta_steps[m],
                                    m1_mass_steps[m], lam_steps[m],
                                    omega_alpha_steps[m], jump_rate_steps[m],
                                    lg1ma)
            value = a_steps[m] * value + z
            row[m] = value


def nts_path_increments(seed, stream_base, path_lo, path_hi, alpha, theta,
                        sigma, beta, lg1ma, mass_steps, out):
    """Exact NTS Levy increments per step for paths [path_lo, path_hi)."""
    n_steps = len(mass_steps)
    for i in range(path_lo, path_hi):
        s = Stream(seed, stream_base + i)
        row = out[i - path_lo]
        for m in range(n_steps):
            row[m] = s.nts_increment(alpha, theta, sigma, beta, mass_steps[m],
                                     lg1ma)
