"""Standard normal density, distribution function and quantile.

All three accept floats or numpy arrays and return the same shape
(a Python float for scalar input).
"""

import math

import numpy as np

SQRT2 = math.sqrt(2.0)
SQRT2_LO = -9.667293313452913e-17  # sqrt(2) - SQRT2
SQRT2PI = math.sqrt(2.0 * math.pi)
_TWO_OVER_SQRTPI = 2.0 / math.sqrt(math.pi)
_SPLITTER = 134217729.0  # 2**27 + 1

# Acklam's rational approximation to the normal quantile (relative error
# below 1.15e-9), polished afterwards by one Halley step against norm_cdf.
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549671010229528e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


_erfc_ufunc = np.frompyfunc(math.erfc, 1, 1)


def erfc(x):
    """Complementary error function, elementwise.

    Uses the C library erfc through ``math``; it keeps roughly 1e-16
    relative accuracy deep into the tail, where scipy's version drifts to
    around 1e-14.
    """
    return np.asarray(_erfc_ufunc(x), dtype=float)


def _finite(x, name):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    return arr


def _out(arr, like):
    return float(arr) if np.ndim(like) == 0 else arr


def norm_pdf(x):
    """Standard normal density."""
    arr = _finite(x, "x")
    return _out(np.exp(-0.5 * arr * arr) / SQRT2PI, x)


def _two_product(a, b):
    # Dekker: a * b == p + e exactly
    p = a * b
    ca = _SPLITTER * a
    a_hi = ca - (ca - a)
    a_lo = a - a_hi
    cb = _SPLITTER * b
    b_hi = cb - (cb - b)
    b_lo = b - b_hi
    e = ((a_hi * b_hi - p) + a_hi * b_lo + a_lo * b_hi) + a_lo * b_lo
    return p, e


def norm_cdf(x):
    """Standard normal distribution function, Phi(x) = erfc(-x / sqrt 2) / 2.

    Rounding -x/sqrt(2) costs a relative error of about x^2 * eps in the
    lower tail, so the rounded argument is corrected to first order with
    its exactly computed residual.
    """
    if isinstance(x, float):
        return _cdf_scalar(x)
    arr = _finite(x, "x")
    y = -arr / SQRT2
    with np.errstate(over="ignore", invalid="ignore"):
        p, e = _two_product(y, SQRT2)
        residual = ((-arr - p) - e) - y * SQRT2_LO
        delta = residual / SQRT2
        corr = delta * _TWO_OVER_SQRTPI * np.exp(-y * y)
    corr = np.where(np.isfinite(corr), corr, 0.0)
    return _out(0.5 * (erfc(y) - corr), x)


def _cdf_scalar(x):
    if not math.isfinite(x):
        raise ValueError("x must be finite")
    y = -x / SQRT2
    p, e = _two_product(y, SQRT2)
    delta = (((-x - p) - e) - y * SQRT2_LO) / SQRT2
    corr = delta * _TWO_OVER_SQRTPI * math.exp(-y * y)
    return 0.5 * (math.erfc(y) - corr)


def _lower_quantile_scalar(p):
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        c, d = _C, _D
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / (
            (((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0)
    else:
        q = p - 0.5
        r = q * q
        a, b = _A, _B
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q / (
            ((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0)
    if 0.5 * x * x < 709.0:
        u = (_cdf_scalar(x) - p) * SQRT2PI * math.exp(0.5 * x * x)
        x -= u / (1.0 + 0.5 * x * u)
    return x


def _lower_quantile(p):
    # p in (0, 0.5]; returns x <= 0 with Phi(x) = p
    x = np.empty_like(p)
    tail = p < _P_LOW
    if np.any(tail):
        q = np.sqrt(-2.0 * np.log(p[tail]))
        c, d = _C, _D
        num = ((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]
        den = (((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0
        x[tail] = num / den
    mid = ~tail
    if np.any(mid):
        q = p[mid] - 0.5
        r = q * q
        a, b = _A, _B
        num = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q
        den = ((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0
        x[mid] = num / den

    # Halley step; in the far tail exp(x^2/2) may overflow, keep the
    # unrefined value there (Acklam is already relative-accurate in that range)
    with np.errstate(over="ignore", invalid="ignore"):
        e = norm_cdf(x) - p
        u = e * SQRT2PI * np.exp(0.5 * x * x)
        step = u / (1.0 + 0.5 * x * u)
    ok = np.isfinite(step)
    x[ok] -= step[ok]
    return x


def norm_ppf(p):
    """Standard normal quantile for 0 < p < 1.

    Raises ValueError outside the open unit interval; callers that need
    the limits at 0 or 1 must handle them before calling.
    """
    if isinstance(p, float):
        if not 0.0 < p < 1.0:
            raise ValueError("p must lie strictly between 0 and 1")
        return -_lower_quantile_scalar(1.0 - p) if p > 0.5 else _lower_quantile_scalar(p)
    arr = np.asarray(p, dtype=float)
    if not np.all((arr > 0.0) & (arr < 1.0)):
        raise ValueError("p must lie strictly between 0 and 1")
    flat = np.atleast_1d(arr).ravel()
    upper = flat > 0.5
    # 1 - p is exact for p in [0.5, 1]
    q = np.where(upper, 1.0 - flat, flat)
    x = _lower_quantile(q)
    x = np.where(upper, -x, x)
    return _out(x.reshape(np.shape(arr)), p)
