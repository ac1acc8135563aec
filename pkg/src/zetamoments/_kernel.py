"""Compiled Euler-Maclaurin kernel for bulk evaluation in double precision.

Phases t*log(k) are formed and reduced mod 2*pi in double-double arithmetic,
so the only rounding left in each term is that of cos/sin and the final
products.  This keeps the per-term error near 1e-16 even at t ~ 1e6, where a
naive double phase would already be off by ~1e-10.

The planner (:func:`em_plan`) is shared with the arbitrary-precision path: it
works with log-magnitudes only, so it handles targets like 1e-1000 as well.
"""
import math

import numpy as np
from numba import njit

TWO_PI_HI = 6.283185307179586
TWO_PI_LO = 2.4492935982947064e-16
LOG_2PI = math.log(2 * math.pi)
_SPLITTER = 134217729.0  # 2^27 + 1

EPS = 2.0 ** -52


@njit(cache=True, inline="always")
def _split(a):
    c = _SPLITTER * a
    hi = c - (c - a)
    return hi, a - hi


@njit(cache=True, inline="always")
def _two_prod(a, b):
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    err = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, err


@njit(cache=True, inline="always")
def reduced_phase(t_hi, t_lo, l_hi, l_lo):
    """(t_hi + t_lo) * (l_hi + l_lo) mod 2*pi, in [-pi, pi]."""
    p, e = _two_prod(t_hi, l_hi)
    e += t_hi * l_lo + t_lo * l_hi
    q = math.floor(p / TWO_PI_HI + 0.5)
    a, b = _two_prod(q, TWO_PI_HI)
    return ((p - a) - b) + (e - q * TWO_PI_LO)


HALF_PI_HI = 1.5707963267948966
HALF_PI_LO = 6.123233995736766e-17
_INV_HALF_PI = 0.6366197723675814

# Taylor coefficients of sin and cos, enough for |r| <= pi/4 at 1e-18
_S = (-1 / 6, 1 / 120, -1 / 5040, 1 / 362880, -1 / 39916800, 1 / 6227020800,
      -1 / 1307674368000, 1 / 355687428096000)
_C = (-1 / 2, 1 / 24, -1 / 720, 1 / 40320, -1 / 3628800, 1 / 479001600,
      -1 / 87178291200, 1 / 20922789888000, -1 / 6402373705728000)


@njit(cache=True, inline="always")
def phase_cos_sin(t_hi, t_lo, l_hi, l_lo):
    """cos and sin of (t_hi + t_lo) * (l_hi + l_lo).

    The product is reduced mod pi/2 in double-double, then both functions come
    from short polynomials on [-pi/4, pi/4]; cheaper than libm and as accurate.
    """
    p, e = _two_prod(t_hi, l_hi)
    e += t_hi * l_lo + t_lo * l_hi
    q = math.floor(p * _INV_HALF_PI + 0.5)
    a, b = _two_prod(q, HALF_PI_HI)
    r = ((p - a) - b) + (e - q * HALF_PI_LO)
    r2 = r * r
    sp = _S[7]
    sp = sp * r2 + _S[6]
    sp = sp * r2 + _S[5]
    sp = sp * r2 + _S[4]
    sp = sp * r2 + _S[3]
    sp = sp * r2 + _S[2]
    sp = sp * r2 + _S[1]
    sp = sp * r2 + _S[0]
    sn = r + r * r2 * sp
    cp = _C[8]
    cp = cp * r2 + _C[7]
    cp = cp * r2 + _C[6]
    cp = cp * r2 + _C[5]
    cp = cp * r2 + _C[4]
    cp = cp * r2 + _C[3]
    cp = cp * r2 + _C[2]
    cp = cp * r2 + _C[1]
    cp = cp * r2 + _C[0]
    cs = 1.0 + r2 * cp
    quad = int(q) & 3
    if quad == 0:
        return cs, sn
    if quad == 1:
        return -sn, cs
    if quad == 2:
        return -cs, -sn
    return sn, -cs


@njit(cache=True)
def _log_zeta_even_ub(two_k):
    # zeta(2k) <= 1 + 2^-2k + 2^(1-2k)/(2k-1)
    return math.log1p(2.0 ** (-two_k) + 2.0 ** (1 - two_k) / (two_k - 1))


@njit(cache=True)
def em_log_bound(sigma, t, nder, N, M):
    """log of a bound on |d^j/ds^j R_M(s)|, max over j <= nder.

    R_M is the remainder after M Bernoulli corrections with cutoff N.  The
    value bound is Backlund's: |s+2M+1|/(sigma+2M+1) times the first omitted
    term.  Derivatives come from Cauchy's estimate on a circle of radius r
    around s, with the value bound maximised over that circle.
    """
    best = math.inf
    logN = math.log(N)
    if nder == 0:
        nr = 1
    else:
        nr = 4
    for ir in range(nr):
        if nder == 0:
            r = 0.0
        else:
            r = 0.125 * 2.0 ** ir
        denom = sigma - r + 2 * M + 1
        if denom <= 0:
            continue
        deriv = 0.0
        for j in range(1, nder + 1):
            d = math.lgamma(j + 1.0) - j * math.log(r)
            if d > deriv:
                deriv = d
        lp = 0.0
        for i in range(0, 2 * M + 1):
            lp += math.log(math.hypot(sigma + i, t) + r)
        two_k = 2 * (M + 1)
        lb = math.log(2.0) + _log_zeta_even_ub(two_k) - two_k * LOG_2PI
        val = (
            deriv
            + math.log(math.hypot(sigma + 2 * M + 1, t) + r)
            - math.log(denom)
            + lb
            + lp
            + (-sigma + r - 2 * M - 1) * logN
        )
        if val < best:
            best = val
    return best


@njit(cache=True)
def em_plan(sigma, t, nder, log_tol, n_min, m_max):
    """Smallest workable (N, M) with remainder bound below exp(log_tol).

    N starts at max(10, ceil(|t|/2pi) + 10, n_min) and grows by 15% until
    some M <= m_max reaches the target.  Returns (N, M, log_bound), or
    (-1, -1, best_log_bound) if nothing was found.
    """
    N = max(10, int(math.ceil(abs(t) / TWO_PI_HI)) + 10, n_min)
    overall = math.inf
    for attempt in range(200):
        logN = math.log(N)
        for ir in range(4 if nder > 0 else 1):
            r = 0.125 * 2.0 ** ir if nder > 0 else 0.0
            deriv = 0.0
            for j in range(1, nder + 1):
                d = math.lgamma(j + 1.0) - j * math.log(r)
                if d > deriv:
                    deriv = d
            lp = math.log(math.hypot(sigma, t) + r)
            prev = math.inf
            rising = 0
            for M in range(1, m_max + 1):
                lp += math.log(math.hypot(sigma + 2 * M - 1, t) + r)
                lp += math.log(math.hypot(sigma + 2 * M, t) + r)
                denom = sigma - r + 2 * M + 1
                if denom <= 0:
                    continue
                two_k = 2 * (M + 1)
                lb = math.log(2.0) + _log_zeta_even_ub(two_k) - two_k * LOG_2PI
                val = (
                    deriv
                    + math.log(math.hypot(sigma + 2 * M + 1, t) + r)
                    - math.log(denom)
                    + lb
                    + lp
                    + (-sigma + r - 2 * M - 1) * logN
                )
                if val < overall:
                    overall = val
                if val <= log_tol:
                    return N, M, val
                if val > prev:
                    rising += 1
                    if rising > 3:
                        break
                else:
                    rising = 0
                prev = val
        N = int(N * 1.15) + 1
    return -1, -1, overall


@njit(cache=True, inline="always")
def _series_mul(a, b, n, out):
    for i in range(n + 1):
        acc = 0j
        for j in range(i + 1):
            acc += a[j] * b[i - j]
        out[i] = acc


@njit(cache=True)
def em_point(t_hi, t_lo, sigma, nder, N, M, logk_hi, logk_lo, bern, out, rnd):
    """zeta^(j)(sigma + i t) for j <= nder into ``out``.

    ``rnd[j]`` receives a rounding bound for ``out[j]``.  The main sums are
    compensated (TwoSum), so each term contributes only the few ulps of its
    own size incurred while forming it.  ``bern[j]`` holds B_{2j}/(2j)!;
    ``logk_*`` must cover indices < N+1.
    """
    acc_re = np.zeros(nder + 1)
    acc_im = np.zeros(nder + 1)
    cmp_re = np.zeros(nder + 1)  # TwoSum compensation
    cmp_im = np.zeros(nder + 1)
    absum = np.zeros(nder + 1)
    acc_re[0] = 1.0  # k = 1
    absum[0] = 1.0
    half = sigma == 0.5
    for k in range(2, N):
        lh = logk_hi[k]
        cs, sn = phase_cos_sin(t_hi, t_lo, lh, logk_lo[k])
        if half:
            mag = 1.0 / math.sqrt(k)
        else:
            mag = math.exp(-sigma * lh)
        a = mag * cs
        b = -mag * sn
        p = 1.0
        for j in range(nder + 1):
            x = a * p
            u = acc_re[j] + x
            z = u - acc_re[j]
            cmp_re[j] += (acc_re[j] - (u - z)) + (x - z)
            acc_re[j] = u
            x = b * p
            u = acc_im[j] + x
            z = u - acc_im[j]
            cmp_im[j] += (acc_im[j] - (u - z)) + (x - z)
            acc_im[j] = u
            absum[j] += mag * p
            p *= lh

    t = t_hi + t_lo
    s = complex(sigma, t)
    logN = logk_hi[N]
    phN = reduced_phase(t_hi, t_lo, logN, logk_lo[N])
    magN = math.exp(-sigma * logN)
    Ns = complex(magN * math.cos(phN), -magN * math.sin(phN))  # N^-s

    n1 = nder + 1
    E = np.empty(n1, dtype=np.complex128)
    fact = 1.0
    pw = 1.0
    for j in range(n1):
        if j > 0:
            fact *= j
            pw *= -logN
        E[j] = Ns * (pw / fact)

    total = np.empty(n1, dtype=np.complex128)
    fact = 1.0
    for j in range(n1):
        if j > 0:
            fact *= j
        sign = 1.0 if j % 2 == 0 else -1.0
        total[j] = sign * complex(acc_re[j] + cmp_re[j], acc_im[j] + cmp_im[j]) / fact

    # N^(1-s)/(s-1) and N^-s/2
    inv = 1.0 / (s - 1.0)
    G = np.empty(n1, dtype=np.complex128)
    g = inv
    for j in range(n1):
        G[j] = g
        g *= -inv
    tmp = np.empty(n1, dtype=np.complex128)
    _series_mul(E, G, nder, tmp)
    for j in range(n1):
        total[j] += N * tmp[j] + 0.5 * E[j]

    # Bernoulli corrections with the rising factorial carried as a series in eps
    # (s)_{2m-1} N^(1-2m) is carried as one scaled series so nothing overflows
    P = np.zeros(n1, dtype=np.complex128)
    P[0] = s / N
    if nder >= 1:
        P[1] = 1.0 / N
    lin = np.zeros(n1, dtype=np.complex128)
    for m in range(1, M + 1):
        if m > 1:
            for shift in (2 * m - 3, 2 * m - 2):
                lin[0] = (s + shift) / N
                if nder >= 1:
                    lin[1] = 1.0 / N
                _series_mul(P, lin, nder, tmp)
                for j in range(n1):
                    P[j] = tmp[j]
        _series_mul(P, E, nder, tmp)
        c = bern[m]
        for j in range(n1):
            total[j] += c * tmp[j]

    fact = 1.0
    for j in range(n1):
        if j > 0:
            fact *= j
        out[j] = total[j] * fact
    tailmag = (N / abs(s - 1.0) + 1.0) * magN
    for j in range(n1):
        rnd[j] = EPS * (
            2.0 * abs(out[j]) + (4 + j) * absum[j] + 16.0 * (j + 1) * tailmag * (1.0 + logN) ** j
        ) + N * EPS * EPS * absum[j]


@njit(cache=True)
def em_batch(t_hi, t_lo, sigma, nder, log_tol, logk_hi, logk_lo, bern, out, err, used_N):
    """Vectorised :func:`em_point` with per-point planning.

    Writes ``out[i, j]`` = zeta^(j), ``err[i, j]`` = remainder bound plus
    rounding bound, ``used_N[i]`` = cutoff.  A point whose plan needs more
    logs or Bernoulli numbers than supplied gets ``used_N[i] = -1``.
    """
    kmax = logk_hi.shape[0] - 1
    mmax = bern.shape[0] - 1
    row = np.empty(nder + 1, dtype=np.complex128)
    rnd = np.empty(nder + 1)
    # the remainder bound grows with |t|, so a plan made for a slightly larger
    # height covers a run of nearby points (grids, Newton batches)
    t_plan = -1.0
    N, M, lb = -1, -1, math.inf
    for i in range(t_hi.shape[0]):
        t = abs(t_hi[i] + t_lo[i])
        if not (t <= t_plan and t >= t_plan / 1.05 - 1.0):
            t_plan = t * 1.02 + 1.0
            N, M, lb = em_plan(sigma, t_plan, nder, log_tol, 0, mmax)
        if N < 0 or N > kmax:
            used_N[i] = -1
            for j in range(nder + 1):
                err[i, j] = math.inf
            continue
        em_point(t_hi[i], t_lo[i], sigma, nder, N, M, logk_hi, logk_lo, bern, row, rnd)
        tail = math.exp(lb)
        for j in range(nder + 1):
            out[i, j] = row[j]
            err[i, j] = tail + rnd[j]
        used_N[i] = N


# ---------------------------------------------------------------------------
# Riemann-Siegel on the critical line
#
#   zeta(1/2+it) = sum_{k<=N} k^-s + chi(s) sum_{k<=N} k^(s-1) + e^(-i theta) R,
#   chi(1/2+it) = e^(-2 i theta(t)),  a = sqrt(t/2pi),  N = floor(a),
#   R = (-1)^(N-1) a^(-1/2) sum_{j<=4} C_j(a-N) a^-j.
#
# Derivatives in s come from power series in a shift d of s, equivalently a
# shift h = -i d of t.

RS_T_MIN = 200.0
RS_D4 = 0.017  # |error after C_4| <= RS_D4 a^(-11/2) for t >= 200

# theta(t) = t/2 log(t/2pi) - t/2 - pi/8 + sum_k THETA_C[k] t^(1-2k)
THETA_C = (1 / 48, 7 / 5760, 31 / 80640, 127 / 430080)


@njit(cache=True)
def theta_mod(t_hi, t_lo, logk_hi, logk_lo):
    """theta(t) mod 2*pi, in [-pi, pi], good to a few ulps of pi.

    With t/2pi = k0 (1 + u), |u| <= 1/(2 k0), the large part t/2 log k0 is
    reduced in double-double and t/2 log1p(u) is small.
    """
    t = t_hi + t_lo
    k0 = math.floor(t / TWO_PI_HI + 0.5)
    p, e = _two_prod(k0, TWO_PI_HI)
    d = (t_hi - p) + (t_lo - e - k0 * TWO_PI_LO)
    u = d / (k0 * TWO_PI_HI)
    k = int(k0)
    ph = reduced_phase(t_hi, t_lo, 0.5 * logk_hi[k], 0.5 * logk_lo[k])
    ph -= reduced_phase(t_hi, t_lo, 0.5, 0.0)
    ph += 0.5 * t * math.log1p(u) - math.pi / 8
    ti = 1.0 / t
    t2 = ti * ti
    ph += ti * (THETA_C[0] + t2 * (THETA_C[1] + t2 * (THETA_C[2] + t2 * THETA_C[3])))
    return ph - 2 * math.pi * math.floor(ph / (2 * math.pi) + 0.5)


@njit(cache=True)
def theta_taylor(t, K, out):
    """out[m] = theta^(m)(t) / m! for 1 <= m <= K (out[0] untouched)."""
    lt = math.log(t / TWO_PI_HI)
    fact = 1.0
    for m in range(1, K + 1):
        fact *= m
        if m == 1:
            v = 0.5 * lt
        else:
            v = 0.5 * (-1.0) ** m * math.gamma(m - 1.0) * t ** (1.0 - m)
        for i in range(4):
            e = 1.0 - 2.0 * (i + 1)
            ff = 1.0
            for r in range(m):
                ff *= e - r
            v += THETA_C[i] * ff * t ** (e - m)
        out[m] = v / fact


@njit(cache=True)
def _series_exp(g, K, out):
    """out = exp(g) with g[0] = 0, truncated after order K."""
    out[0] = 1.0
    for m in range(1, K + 1):
        acc = 0j
        for k in range(1, m + 1):
            acc += k * g[k] * out[m - k]
        out[m] = acc / m


@njit(cache=True)
def _series_mul_c(a, b, K, out):
    for m in range(K + 1):
        acc = 0j
        for k in range(m + 1):
            acc += a[k] * b[m - k]
        out[m] = acc


@njit(cache=True)
def _taylor_shift(poly, z, K, out, work):
    """out[m] = P^(m)(z)/m!, m <= K, by repeated synthetic division."""
    D = poly.shape[0] - 1
    work[:] = poly
    for m in range(K + 1):
        acc = work[D]
        for d in range(D - 1, m - 1, -1):
            acc = acc * z + work[d]
            work[d] = acc
        out[m] = work[m]


@njit(cache=True)
def rs_point(t_hi, t_lo, nder, logk_hi, logk_lo, cpoly, out, err, wc, wf, wpoly):
    """zeta^(j)(1/2 + i t) for j <= nder, and an error estimate per order.

    ``wc`` (12 x nder+1 complex), ``wf`` (4 x nder+1) and ``wpoly`` (one
    polynomial row) are scratch space.
    """
    t = t_hi + t_lo
    K = nder
    a = math.sqrt(t / TWO_PI_HI)
    N = int(math.floor(a))
    z = a - N - 0.5

    # main sums S_m = sum (log k)^m k^(-1/2 - i t)
    wc[:, :] = 0
    wf[:, :] = 0
    S, g1, g2, E1, E2, Fu, uh, Rh, upow, tmp, ER, B = (
        wc[0], wc[1], wc[2], wc[3], wc[4], wc[5], wc[6], wc[7], wc[8], wc[9], wc[10], wc[11])
    absum, tt, cj, pw = wf[0], wf[1], wf[2], wf[3]
    for k in range(1, N + 1):
        c, s = phase_cos_sin(t_hi, t_lo, logk_hi[k], logk_lo[k])
        w = 1.0 / math.sqrt(k)
        lk = logk_hi[k]
        term = complex(w * c, -w * s)
        for m in range(K + 1):
            S[m] += term
            absum[m] += w
            w *= lk
            term *= lk

    th = theta_mod(t_hi, t_lo, logk_hi, logk_lo)
    theta_taylor(t, K, tt)

    # exp(-i Theta(h)) and exp(-2 i Theta(h)) as series in h
    for m in range(1, K + 1):
        g1[m] = -1j * tt[m]
        g2[m] = -2j * tt[m]
    _series_exp(g1, K, E1)
    _series_exp(g2, K, E2)

    # remainder as a series in u = a(t+h) - a, then in h
    for j in range(cpoly.shape[0]):
        _taylor_shift(cpoly[j], z, K, cj, wpoly)
        e = -0.5 - j
        b = a ** e
        for m in range(K + 1):
            pw[m] = b
            b *= (e - m) / ((m + 1) * a)
        for m in range(K + 1):
            acc = 0.0
            for k in range(m + 1):
                acc += cj[k] * pw[m - k]
            Fu[m] += acc
    if (N - 1) % 2 == 1:
        for m in range(K + 1):
            Fu[m] = -Fu[m]
    bc = 1.0
    for m in range(1, K + 1):
        bc *= (0.5 - (m - 1)) / m
        uh[m] = a * bc * t ** (-m)
    upow[0] = 1.0
    for m in range(K + 1):
        for i in range(K + 1):
            Rh[i] += Fu[m] * upow[i]
        _series_mul_c(upow, uh, K, tmp)
        upow[:] = tmp

    # assemble in d, with h = -i d
    _series_mul_c(E1, Rh, K, ER)
    rot = 1.0 + 0j
    for m in range(K + 1):
        E2[m] *= rot
        ER[m] *= rot
        rot *= -1j
    fact = 1.0
    for m in range(K + 1):
        if m > 0:
            fact *= m
        B[m] = S[m].conjugate() / fact
    chiB = g1  # g1 is no longer needed
    _series_mul_c(E2, B, K, chiB)
    e1 = complex(math.cos(th), -math.sin(th))
    e2 = e1 * e1

    rem = RS_D4 * a ** -5.5
    dth = tt[1] + 1.0
    fact = 1.0
    for m in range(K + 1):
        if m > 0:
            fact *= m
        sign = 1.0 if m % 2 == 0 else -1.0
        out[m] = sign * S[m] + fact * (e2 * chiB[m] + e1 * ER[m])
        err[m] = 4.0 * rem * dth ** m + EPS * (16.0 + 4 * m) * 2.0 * absum[m]


@njit(cache=True)
def rs_batch(t_hi, t_lo, nder, logk_hi, logk_lo, cpoly, out, err):
    row = np.empty(nder + 1, dtype=np.complex128)
    er = np.empty(nder + 1)
    wc = np.empty((12, nder + 1), dtype=np.complex128)
    wf = np.empty((4, nder + 1))
    wpoly = np.empty(cpoly.shape[1])
    for i in range(t_hi.shape[0]):
        rs_point(t_hi[i], t_lo[i], nder, logk_hi, logk_lo, cpoly, row, er, wc, wf, wpoly)
        for j in range(nder + 1):
            out[i, j] = row[j]
            err[i, j] = er[j]
