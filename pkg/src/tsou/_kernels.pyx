# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled sampling kernels.

Exact transliteration of ``tsou._kernels_py``: same stream derivation, same
algorithms, same variate-consumption order, so both backends are
bit-for-bit interchangeable. See the pure-Python module for documentation.
"""
from libc.math cimport exp, fabs, floor, lgamma, log, pow, sin, sqrt

BACKEND = "cython"

cdef extern from *:
    """
    typedef unsigned long long u64;
    """
    ctypedef unsigned long long u64

cdef u64 _GOLDEN = 0x9E3779B97F4A7C15ULL
cdef double _INV53 = 1.0 / 9007199254740992.0
cdef double _PI = 3.141592653589793
cdef double _POISSON_CAP = 1.0e9

cdef struct rng_t:
    u64 s0
    u64 s1
    u64 s2
    u64 s3


cdef inline u64 _sm64(u64 state) nogil:
    cdef u64 z = state
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline void _init(rng_t *r, u64 seed, u64 stream_id) nogil:
    cdef u64 base = seed + 5ULL * _GOLDEN * stream_id
    r.s0 = _sm64(base + _GOLDEN)
    r.s1 = _sm64(base + 2ULL * _GOLDEN)
    r.s2 = _sm64(base + 3ULL * _GOLDEN)
    r.s3 = _sm64(base + 4ULL * _GOLDEN)
    if r.s0 == 0 and r.s1 == 0 and r.s2 == 0 and r.s3 == 0:
        r.s0 = _GOLDEN


cdef inline u64 _rotl(u64 x, int k) nogil:
    return (x << k) | (x >> (64 - k))


cdef inline u64 _next_u64(rng_t *r) nogil:
    cdef u64 t = r.s0 + r.s3
    cdef u64 result = _rotl(t, 23) + r.s0
    t = r.s1 << 17
    r.s2 ^= r.s0
    r.s3 ^= r.s1
    r.s1 ^= r.s2
    r.s0 ^= r.s3
    r.s2 ^= t
    r.s3 = _rotl(r.s3, 45)
    return result


cdef inline double _uniform(rng_t *r) nogil:
    cdef double u
    while True:
        u = <double>(_next_u64(r) >> 11) * _INV53
        if u > 0.0:
            return u


cdef double _normal(rng_t *r) nogil:
    cdef double u, v, s
    while True:
        u = 2.0 * _uniform(r) - 1.0
        v = 2.0 * _uniform(r) - 1.0
        s = u * u + v * v
        if 0.0 < s < 1.0:
            return u * sqrt(-2.0 * log(s) / s)


cdef double _gamma(rng_t *r, double shape, double rate) nogil:
    cdef double d, c, x, t, v, u, x2
    if shape < 1.0:
        x = _gamma(r, shape + 1.0, rate)
        u = _uniform(r)
        return x * pow(u, 1.0 / shape)
    d = shape - 1.0 / 3.0
    c = 1.0 / (3.0 * sqrt(d))
    while True:
        x = _normal(r)
        t = 1.0 + c * x
        if t <= 0.0:
            continue
        v = t * t * t
        u = _uniform(r)
        x2 = x * x
        if u < 1.0 - 0.0331 * x2 * x2:
            return d * v / rate
        if log(u) < 0.5 * x2 + d * (1.0 - v + log(v)):
            return d * v / rate


cdef long _poisson(rng_t *r, double lam) nogil:
    cdef double limit, p, b, a, inv_alpha, vr, log_lam, u, v, us
    cdef long k
    if lam <= 0.0:
        return 0
    if lam < 10.0:
        limit = exp(-lam)
        k = 0
        p = 1.0
        while True:
            p *= _uniform(r)
            if p <= limit:
                return k
            k += 1
    b = 0.931 + 2.53 * sqrt(lam)
    a = -0.059 + 0.02483 * b
    inv_alpha = 1.1239 + 1.1328 / (b - 3.4)
    vr = 0.9277 - 3.6224 / (b - 2.0)
    log_lam = log(lam)
    while True:
        u = _uniform(r) - 0.5
        v = _uniform(r)
        us = 0.5 - fabs(u)
        k = <long>floor((2.0 * a / us + b) * u + lam + 0.43)
        if us >= 0.07 and v <= vr:
            return k
        if k < 0 or (us < 0.013 and v > us):
            continue
        if log(v * inv_alpha / (a / (us * us) + b)) <= k * log_lam - lam - _lgamma_int(k):
            return k


cdef double _lgamma_int(long k) nogil:
    # log k! via an explicit loop or Stirling; identical in both backends
    # (CPython's math.lgamma is not the C library's)
    cdef double total, x, xsq
    cdef long i
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


cdef double _inverse_gaussian(rng_t *r, double mu, double lam) nogil:
    cdef double n, y, w, s, x, u
    n = _normal(r)
    y = n * n
    w = mu * y
    s = sqrt(w * (4.0 * lam + w))
    x = mu * (s - w) / (s + w)
    u = _uniform(r)
    if u <= mu / (mu + x):
        return x
    return mu * mu / x


cdef inline double _sinc(double x) nogil:
    cdef double ax = fabs(x), x2
    if x == 0.0:
        return 1.0
    if ax < 2e-4:
        return 1.0 - x * x / 6.0
    if ax < 6e-3:
        x2 = x * x
        return 1.0 - x2 / 6.0 * (1.0 - x2 / 20.0)
    return sin(x) / x


cdef inline double _b_ratio(double x, double alpha) nogil:
    return _sinc(x) / (pow(_sinc(alpha * x), alpha)
                       * pow(_sinc((1.0 - alpha) * x), 1.0 - alpha))


cdef inline double _a_factor(double x, double alpha) nogil:
    return pow((1.0 - alpha) * _sinc((1.0 - alpha) * x), 1.0 - alpha) \
        * pow(alpha * _sinc(alpha * x), alpha) / _sinc(x)


cdef double _tilted_stable(rng_t *r, double alpha, double lam) nogil:
    cdef double b, lam_alpha, gamma_, sqrt_gamma, c1, c2, c3, xi, psi
    cdef double w1, w2, w3, v, w, u_aux, zeta, z, rho, d, big_z
    cdef double a_, m, delta, a1, a3, s_tot, v2, n_, e1, x, e2, cost
    b = (1.0 - alpha) / alpha
    lam_alpha = pow(lam, alpha)
    gamma_ = lam_alpha * alpha * (1.0 - alpha)
    sqrt_gamma = sqrt(gamma_)
    c1 = sqrt(_PI / 2.0)
    c2 = 2.0 + c1
    c3 = c2 * sqrt_gamma
    xi = (1.0 + sqrt(2.0) * c3) / _PI
    psi = c3 * exp(-gamma_ * _PI * _PI / 8.0) / sqrt(_PI)
    w1 = c1 * xi / sqrt_gamma
    w2 = 2.0 * sqrt(_PI) * psi
    w3 = xi * _PI

    while True:
        while True:
            v = _uniform(r)
            if gamma_ >= 1.0:
                if v < w1 / (w1 + w2):
                    u_aux = fabs(_normal(r)) / sqrt_gamma
                else:
                    w = _uniform(r)
                    u_aux = _PI * (1.0 - w * w)
            else:
                w = _uniform(r)
                if v < w3 / (w2 + w3):
                    u_aux = _PI * w
                else:
                    u_aux = _PI * (1.0 - w * w)
            if u_aux >= _PI:
                continue
            zeta = sqrt(_b_ratio(u_aux, alpha))
            z = 1.0 / (1.0 - pow(1.0 + alpha * zeta / sqrt_gamma, -1.0 / alpha))
            rho = _PI * exp(-lam_alpha * (1.0 - 1.0 / (zeta * zeta))) \
                / ((1.0 + c1) * sqrt_gamma / zeta + z)
            d = 0.0
            if u_aux >= 0.0 and gamma_ >= 1.0:
                d += xi * exp(-gamma_ * u_aux * u_aux / 2.0)
            if 0.0 < u_aux < _PI:
                d += psi / sqrt(_PI - u_aux)
            if gamma_ < 1.0:
                d += xi
            rho *= d
            big_z = _uniform(r) * rho
            if big_z <= 1.0:
                break
        a_ = pow(_a_factor(u_aux, alpha), 1.0 / (1.0 - alpha))
        m = pow(b / a_, alpha) * lam_alpha
        delta = sqrt(m * alpha / a_)
        a1 = delta * c1
        a3 = z / a_
        s_tot = a1 + delta + a3
        v2 = _uniform(r)
        n_ = 0.0
        e1 = 0.0
        if v2 < a1 / s_tot:
            n_ = _normal(r)
            x = m - delta * fabs(n_)
        elif v2 < (a1 + delta) / s_tot:
            x = m + delta * _uniform(r)
        else:
            e1 = -log(_uniform(r))
            x = m + delta + e1 * a3
        if x <= 0.0:
            continue
        e2 = -log(big_z)
        cost = a_ * (x - m) + exp((1.0 / alpha) * log(lam_alpha)
                                  - b * log(m)) * (pow(m / x, b) - 1.0)
        if x < m:
            cost -= n_ * n_ / 2.0
        elif x > m + delta:
            cost -= e1
        if cost <= e2:
            return pow(x, -b)


cdef double _tempered_stable(rng_t *r, double alpha, double beta, double mass,
                             double lg1ma) nogil:
    cdef double mu, delta
    if mass == 0.0:
        return 0.0
    if alpha == 0.5:
        mu = mass * sqrt(_PI / beta)
        return _inverse_gaussian(r, mu, 2.0 * beta * mu * mu)
    delta = pow(mass * exp(lg1ma) / alpha, 1.0 / alpha)
    return delta * _tilted_stable(r, alpha, delta * beta)


cdef double _mixture_rate(rng_t *r, double omega_alpha, double alpha) nogil:
    cdef double ratio, inv_alpha, u1, v, u2
    ratio = 1.0 / omega_alpha - 1.0
    if ratio < 1e-14:
        return 1.0
    inv_alpha = 1.0 / alpha
    while True:
        u1 = _uniform(r)
        v = pow(1.0 + u1 * ratio, inv_alpha)
        u2 = _uniform(r)
        if u2 * (1.0 - omega_alpha) <= 1.0 - pow(v, -alpha):
            return v


cdef double _ou_step_increment(rng_t *r, double alpha, double sigma,
                               double m1_beta, double m1_mass, double lam,
                               double omega_alpha, double jump_rate,
                               double lg1ma) nogil:
    cdef double x, m1, m2, v
    cdef long p, j
    x = _normal(r)
    m1 = _tempered_stable(r, alpha, m1_beta, m1_mass, lg1ma)
    m2 = 0.0
    if lam > 0.0:
        p = _poisson(r, lam)
        for j in range(p):
            v = _mixture_rate(r, omega_alpha, alpha)
            m2 += _gamma(r, 1.0 - alpha, jump_rate * v)
    return sigma * x * sqrt(m1 + m2)


cdef double _nts_increment(rng_t *r, double alpha, double theta, double sigma,
                           double beta, double mass, double lg1ma) nogil:
    cdef double x, ell
    x = _normal(r)
    ell = _tempered_stable(r, alpha, beta, mass, lg1ma)
    return theta * ell + sigma * sqrt(ell) * x


cdef class Stream:
    """Scalar sampling facade over one (seed, stream_id) state."""
    cdef rng_t r

    def __init__(self, seed, stream_id):
        _init(&self.r, <u64>(seed & 0xFFFFFFFFFFFFFFFF),
              <u64>(stream_id & 0xFFFFFFFFFFFFFFFF))

    def state(self):
        return (self.r.s0, self.r.s1, self.r.s2, self.r.s3)

    def next_u64(self):
        return _next_u64(&self.r)

    def uniform(self):
        return _uniform(&self.r)

    def normal(self):
        return _normal(&self.r)

    def gamma(self, double shape, double rate):
        return _gamma(&self.r, shape, rate)

    def poisson(self, double lam):
        if lam > _POISSON_CAP:
            raise ValueError(f"Poisson intensity {lam} too large to simulate")
        return _poisson(&self.r, lam)

    def inverse_gaussian(self, double mu, double lam):
        return _inverse_gaussian(&self.r, mu, lam)

    def tilted_stable(self, double alpha, double lam):
        return _tilted_stable(&self.r, alpha, lam)

    def tempered_stable(self, double alpha, double beta, double mass,
                        double lg1ma):
        return _tempered_stable(&self.r, alpha, beta, mass, lg1ma)

    def mixture_rate(self, double omega_alpha, double alpha):
        return _mixture_rate(&self.r, omega_alpha, alpha)

    def ou_step_increment(self, double alpha, double sigma, double m1_beta,
                          double m1_mass, double lam, double omega_alpha,
                          double jump_rate, double lg1ma):
        return _ou_step_increment(&self.r, alpha, sigma, m1_beta, m1_mass,
                                  lam, omega_alpha, jump_rate, lg1ma)

    def nts_increment(self, double alpha, double theta, double sigma,
                      double beta, double mass, double lg1ma):
        return _nts_increment(&self.r, alpha, theta, sigma, beta, mass, lg1ma)


def uniforms(seed, stream_id, Py_ssize_t n, double[::1] out):
    cdef rng_t r
    cdef Py_ssize_t i
    _init(&r, <u64>(seed & 0xFFFFFFFFFFFFFFFF), <u64>(stream_id & 0xFFFFFFFFFFFFFFFF))
    with nogil:
        for i in range(n):
            out[i] = _uniform(&r)


def normals(seed, stream_id, Py_ssize_t n, double[::1] out):
    cdef rng_t r
    cdef Py_ssize_t i
    _init(&r, <u64>(seed & 0xFFFFFFFFFFFFFFFF), <u64>(stream_id & 0xFFFFFFFFFFFFFFFF))
    with nogil:
        for i in range(n):
            out[i] = _normal(&r)


def gammas(seed, stream_id, Py_ssize_t n, double shape, double rate, double[::1] out):
    cdef rng_t r
    cdef Py_ssize_t i
    _init(&r, <u64>(seed & 0xFFFFFFFFFFFFFFFF), <u64>(stream_id & 0xFFFFFFFFFFFFFFFF))
    with nogil:
        for i in range(n):
            out[i] = _gamma(&r, shape, rate)


def poissons(seed, stream_id, Py_ssize_t n, double lam, long[::1] out):
    cdef rng_t r
    cdef Py_ssize_t i
    if lam > _POISSON_CAP:
        raise ValueError(f"Poisson intensity {lam} too large to simulate")
    _init(&r, <u64>(seed & 0xFFFFFFFFFFFFFFFF), <u64>(stream_id & 0xFFFFFFFFFFFFFFFF))
    with nogil:
        for i in range(n):
            out[i] = _poisson(&r, lam)


def ts_draws(seed, stream_id, Py_ssize_t n, double alpha, double beta,
             double mass, double lg1ma, double[::1] out):
    cdef rng_t r
    cdef Py_ssize_t i
    _init(&r, <u64>(seed & 0xFFFFFFFFFFFFFFFF), <u64>(stream_id & 0xFFFFFFFFFFFFFFFF))
    with nogil:
        for i in range(n):
            out[i] = _tempered_stable(&r, alpha, beta, mass, lg1ma)


def ig_draws(seed, stream_id, Py_ssize_t n, double mu, double lam, double[::1] out):
    cdef rng_t r
    cdef Py_ssize_t i
    _init(&r, <u64>(seed & 0xFFFFFFFFFFFFFFFF), <u64>(stream_id & 0xFFFFFFFFFFFFFFFF))
    with nogil:
        for i in range(n):
            out[i] = _inverse_gaussian(&r, mu, lam)


def v_draws(seed, stream_id, Py_ssize_t n, double omega, double alpha, double[::1] out):
    """Fill ``out`` with mixture-rate draws; returns the proposal count."""
    cdef rng_t r
    cdef Py_ssize_t i
    cdef long proposals = 0
    cdef double omega_alpha = pow(omega, alpha)
    cdef double ratio = 1.0 / omega_alpha - 1.0
    cdef double inv_alpha = 1.0 / alpha
    cdef double u1, u2, v
    _init(&r, <u64>(seed & 0xFFFFFFFFFFFFFFFF), <u64>(stream_id & 0xFFFFFFFFFFFFFFFF))
    if ratio < 1e-14:
        for i in range(n):
            out[i] = 1.0
        return n
    with nogil:
        for i in range(n):
            while True:
                proposals += 1
                u1 = _uniform(&r)
                v = pow(1.0 + u1 * ratio, inv_alpha)
                u2 = _uniform(&r)
                if u2 * (1.0 - omega_alpha) <= 1.0 - pow(v, -alpha):
                    out[i] = v
                    break
    return proposals


def ou_paths(seed, stream_base, Py_ssize_t path_lo, Py_ssize_t path_hi,
             double n0, double alpha, double sigma, double lg1ma,
             double[::1] a_steps, double[::1] m1_beta_steps,
             double[::1] m1_mass_steps, double[::1] lam_steps,
             double[::1] omega_alpha_steps, double[::1] jump_rate_steps,
             double[:, ::1] out):
    cdef rng_t r
    cdef Py_ssize_t i, m, n_steps = a_steps.shape[0]
    cdef double value, z
    cdef u64 seed_ = <u64>(seed & 0xFFFFFFFFFFFFFFFF)
    cdef u64 base_ = <u64>(stream_base & 0xFFFFFFFFFFFFFFFF)
    with nogil:
        for i in range(path_lo, path_hi):
            _init(&r, seed_, base_ + <u64>i)
            value = n0
            for m in range(n_steps):
                z = _ou_step_increment(&r, alpha, sigma, m1_beta_steps[m],
                                       m1_mass_steps[m], lam_steps[m],
                                       omega_alpha_steps[m], jump_rate_steps[m],
                                       lg1ma)
                value = a_steps[m] * value + z
                out[i - path_lo, m] = value


def nts_path_increments(seed, stream_base, Py_ssize_t path_lo, Py_ssize_t path_hi,
                        double alpha, double theta, double sigma, double beta,
                        double lg1ma, double[::1] mass_steps, double[:, ::1] out):
    cdef rng_t r
    cdef Py_ssize_t i, m, n_steps = mass_steps.shape[0]
    cdef u64 seed_ = <u64>(seed & 0xFFFFFFFFFFFFFFFF)
    cdef u64 base_ = <u64>(stream_base & 0xFFFFFFFFFFFFFFFF)
    with nogil:
        for i in range(path_lo, path_hi):
            _init(&r, seed_, base_ + <u64>i)
            for m in range(n_steps):
                out[i - path_lo, m] = _nts_increment(&r, alpha, theta, sigma,
                                                     beta, mass_steps[m], lg1ma)
