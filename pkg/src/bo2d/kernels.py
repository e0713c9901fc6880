"""Hot O(n^2) loops: Stein-derivative quadrature, p.v. Hilbert quadrature and
the brute-force triple convolution.

Each kernel exists twice: a numba ``@njit`` version and a pure-numpy version.
The public names dispatch to the jitted version unless numba is missing or the
environment variable ``BO2D_DISABLE_NUMBA`` is set to a non-empty value other
than ``0``.  Both paths are always importable so tests and the benchmark can
compare them directly.
"""

import os

import numpy as np

try:
    import numba as nb

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in CI
    HAVE_NUMBA = False


def _env_disabled():
    flag = os.environ.get("BO2D_DISABLE_NUMBA", "")
    return flag not in ("", "0")


USE_NUMBA = HAVE_NUMBA and not _env_disabled()


def njit(*args, **kwargs):
    if HAVE_NUMBA:
        return nb.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda func: func


# ---------------------------------------------------------------------------
# Stein derivative: sum_j |f_i - f_j|^2 * kcell[|i - j|]
# ---------------------------------------------------------------------------

def stein_cell_kernel(n, h, b):
    """Kernel |x-y|^{-1-2b} integrated over whole cells at distance d*h.

    Entry ``d`` (d >= 1) is the integral over [(d-1/2)h, (d+1/2)h]; entry 0 is
    unused (the singular cell is handled separately).
    """
    d = np.arange(n, dtype=np.float64)
    k = np.zeros(n)
    lo = (d[1:] - 0.5) * h
    hi = (d[1:] + 0.5) * h
    k[1:] = (lo ** (-2 * b) - hi ** (-2 * b)) / (2 * b)
    return k


@njit(cache=True)
def _stein_sum_nb(fr, fi, kcell):
    n = fr.shape[0]
    out = np.zeros(n)
    for i in range(n):
        acc = 0.0
        for j in range(n):
            if j == i:
                continue
            dr = fr[i] - fr[j]
            di = fi[i] - fi[j]
            d = i - j if i > j else j - i
            acc += (dr * dr + di * di) * kcell[d]
        out[i] = acc
    return out


def _stein_sum_np(fr, fi, kcell):
    n = fr.shape[0]
    out = np.empty(n)
    idx = np.arange(n)
    for i in range(n):
        w = kcell[np.abs(idx - i)]
        w[i] = 0.0
        out[i] = np.dot((fr[i] - fr) ** 2 + (fi[i] - fi) ** 2, w)
    return out


def stein_sum(f, kcell, use_numba=None):
    """Off-diagonal part of the squared Stein derivative for samples ``f``."""
    f = np.asarray(f)
    fr = np.ascontiguousarray(f.real, dtype=np.float64)
    fi = np.ascontiguousarray(f.imag if np.iscomplexobj(f) else np.zeros_like(fr), dtype=np.float64)
    if use_numba is None:
        use_numba = USE_NUMBA
    if use_numba:
        return _stein_sum_nb(fr, fi, np.ascontiguousarray(kcell))
    return _stein_sum_np(fr, fi, kcell)


# ---------------------------------------------------------------------------
# Principal-value Hilbert quadrature (odd-offset rule)
# ---------------------------------------------------------------------------

@njit(cache=True)
def _pv_hilbert_nb(f):
    n = f.shape[0]
    out = np.zeros(n)
    for i in range(n):
        acc = 0.0
        # only odd offsets contribute: kernel 2/(pi*m)
        j = (i + 1) % 2
        while j < n:
            acc += f[j] / (i - j)
            j += 2
        out[i] = acc * 2.0 / np.pi
    return out


def _pv_hilbert_np(f):
    n = f.shape[0]
    out = np.empty(n)
    idx = np.arange(n)
    for i in range(n):
        m = i - idx
        odd = (m % 2) != 0
        out[i] = np.sum(f[odd] / m[odd])
    return out * 2.0 / np.pi


def pv_hilbert(f, use_numba=None):
    """(1/pi) p.v. int f(y)/(x-y) dy on a uniform grid by the odd-offset rule.

    The rule is exact for the Whittaker (sinc) interpolant of the samples, so it
    is independent of any FFT and of the window padding.  Cost is O(n^2).
    """
    f = np.ascontiguousarray(f, dtype=np.float64)
    if use_numba is None:
        use_numba = USE_NUMBA
    return _pv_hilbert_nb(f) if use_numba else _pv_hilbert_np(f)


# ---------------------------------------------------------------------------
# Triple convolution  sum f1(k1,c1) f2(k2,c2) f3(k1+k2, c1+c2)
# ---------------------------------------------------------------------------

@njit(cache=True)
def _triple_nb(f1, f2, f3):
    a, b, c = f1.shape
    ra = (a - 1) // 2
    rb = (b - 1) // 2
    rc = (c - 1) // 2
    acc = 0.0
    for i1 in range(a):
        for j1 in range(b):
            for c1 in range(c):
                v1 = f1[i1, j1, c1]
                if v1 == 0.0:
                    continue
                for i2 in range(a):
                    i3 = i1 + i2 - ra
                    if i3 < 0 or i3 >= a:
                        continue
                    for j2 in range(b):
                        j3 = j1 + j2 - rb
                        if j3 < 0 or j3 >= b:
                            continue
                        for c2 in range(c):
                            v2 = f2[i2, j2, c2]
                            if v2 == 0.0:
                                continue
                            c3 = c1 + c2 - rc
                            if c3 < 0 or c3 >= c:
                                continue
                            acc += v1 * v2 * f3[i3, j3, c3]
    return acc


def _triple_np(f1, f2, f3):
    a, b, c = f1.shape
    ra, rb, rc = (a - 1) // 2, (b - 1) // 2, (c - 1) // 2
    big = np.zeros((3 * a, 3 * b, 3 * c))
    big[a:2 * a, b:2 * b, c:2 * c] = f3
    acc = 0.0
    for i1, j1, c1 in zip(*np.nonzero(f1)):
        # f3 evaluated at (k1 + k2): shift the f3 window by k1
        sub = big[a + i1 - ra:2 * a + i1 - ra, b + j1 - rb:2 * b + j1 - rb, c + c1 - rc:2 * c + c1 - rc]
        acc += f1[i1, j1, c1] * np.sum(f2 * sub)
    return float(acc)


def triple_convolution(f1, f2, f3, use_numba=None):
    """sum_{k1,k2,c1,c2} f1(k1,c1) f2(k2,c2) f3(k1+k2,c1+c2) on centered arrays.

    All three arrays share one odd shape ``(2R+1, 2R+1, 2C+1)`` whose centre is
    the zero lattice point; out-of-box sums are dropped (callers size the box so
    that no supported sum leaves it).
    """
    f1, f2, f3 = (np.ascontiguousarray(f, dtype=np.float64) for f in (f1, f2, f3))
    if not (f1.shape == f2.shape == f3.shape):
        raise ValueError("triple_convolution needs equally shaped arrays")
    if use_numba is None:
        use_numba = USE_NUMBA
    return float(_triple_nb(f1, f2, f3)) if use_numba else _triple_np(f1, f2, f3)
