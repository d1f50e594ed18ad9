"""Hot numeric kernels with numba-jitted and pure-numpy implementations.

The two expensive inner loops of the toolkit live here: filling the
quantized pilot covariance (arcsine law over all antenna/pilot index
pairs) and evaluating the expected soft symbol for every data-symbol
vector of an alphabet. Both carry a numba ``@njit`` path and a
vectorized numpy path; the numpy path is selected automatically when
numba is unavailable or when the environment variable
``ONEBIT_MIMO_DISABLE_NUMBA`` is set to a non-empty value other than 0.

Correlation coefficients can exceed 1 in magnitude by a few ulps due to
rounding; kernels clamp them and report the worst excess so callers can
distinguish rounding from genuine bugs.
"""

import math
import os

import numpy as np

_ENV_FLAG = "ONEBIT_MIMO_DISABLE_NUMBA"

_HAVE_NUMBA = False
if os.environ.get(_ENV_FLAG, "0") in ("", "0"):
    try:
        from numba import njit, prange

        _HAVE_NUMBA = True
    except ImportError:
        _HAVE_NUMBA = False

if not _HAVE_NUMBA:
    prange = range  # keeps the loop sources importable and debuggable


def backend() -> str:
    """Active kernel backend, "numba" or "numpy"."""
    return "numba" if _HAVE_NUMBA else "numpy"


def _omega_np(x: np.ndarray) -> np.ndarray:
    return (2.0 / np.pi) * np.arcsin(x)


def _clip_excess(re: np.ndarray, im: np.ndarray):
    """Clamp both parts to [-1, 1], returning the worst overshoot."""
    excess = 0.0
    for part in (re, im):
        peak = np.abs(part).max() if part.size else 0.0
        if peak > 1.0:
            excess = max(excess, peak - 1.0)
    return np.clip(re, -1.0, 1.0), np.clip(im, -1.0, 1.0), excess


# ---------------------------------------------------------------------------
# quantized pilot covariance: entries of E[r_p r_p^H]
# ---------------------------------------------------------------------------


def _crp_numpy(ct_stack, p, alpha, rho, q, omega=None):
    """Arcsine-law pilot covariance, vectorized.

    ``ct_stack`` holds the transposed per-UE covariances (K, M, M). The
    ((u*M+m), (v*M+n)) entry is q on the diagonal and
    q*(omega(Re zeta) - j*omega(Im zeta)) elsewhere, with zeta the
    normalized pilot-phase correlation coefficient.
    """
    K, M, _ = ct_stack.shape
    tau = p.shape[0]
    if omega is None:
        omega = _omega_np
    weights = p[:, None, :] * p[None, :, :].conj()  # (u, v, k)
    znum = np.einsum("uvk,kmn->uvmn", weights, ct_stack)
    inv = 1.0 / np.sqrt(alpha)
    zeta = rho * znum * inv[None, None, :, None] * inv[None, None, None, :]
    re, im, excess = _clip_excess(zeta.real, zeta.imag)
    out = q * (omega(re) - 1j * omega(im))
    out = out.transpose(0, 2, 1, 3).reshape(M * tau, M * tau)
    np.fill_diagonal(out, q)
    return out, excess


def _crp_loops(ct_stack, p, inv_sqrt_alpha, rho, q):
    K, M, _ = ct_stack.shape
    tau = p.shape[0]
    size = M * tau
    out = np.empty((size, size), np.complex128)
    excess = np.zeros(tau)
    coef = q * 2.0 / np.pi
    for u in prange(tau):
        ex = 0.0
        w = np.empty(K, np.complex128)
        for v in range(tau):
            for k in range(K):
                w[k] = p[u, k] * p[v, k].conjugate()
            for m in range(M):
                row = u * M + m
                for n in range(M):
                    if u == v and m == n:
                        out[row, v * M + n] = q
                        continue
                    zb = 0j
                    for k in range(K):
                        zb += w[k] * ct_stack[k, m, n]
                    s = rho * inv_sqrt_alpha[m] * inv_sqrt_alpha[n]
                    zr = zb.real * s
                    zi = zb.imag * s
                    if zr > 1.0:
                        ex = max(ex, zr - 1.0)
                        zr = 1.0
                    elif zr < -1.0:
                        ex = max(ex, -zr - 1.0)
                        zr = -1.0
                    if zi > 1.0:
                        ex = max(ex, zi - 1.0)
                        zi = 1.0
                    elif zi < -1.0:
                        ex = max(ex, -zi - 1.0)
                        zi = -1.0
                    out[row, v * M + n] = coef * complex(math.asin(zr), -math.asin(zi))
        excess[u] = ex
    return out, excess


# ---------------------------------------------------------------------------
# expected soft symbols: one value per data-symbol vector
# ---------------------------------------------------------------------------


def _expectation_one_np(c_stack, p, alpha, diag_c, w_conj, x, rho, q, omega=None):
    """Expected soft symbol for one data-symbol vector.

    ``w_conj`` is the conjugated estimator map of the target UE laid out
    as (tau, M, M) blocks; the result is the trace pairing of that map
    with the data/pilot cross-covariance, computed without materializing
    any (M*tau, M*tau) product.
    """
    if omega is None:
        omega = _omega_np
    beta = rho * (np.abs(x) ** 2 @ diag_c) + 1.0
    coeff = p * x[None, :]  # (tau, K)
    b = np.einsum("uk,kmn->umn", coeff, c_stack)
    eta = rho * b / (np.sqrt(beta)[None, :, None] * np.sqrt(alpha)[None, None, :])
    re, im, excess = _clip_excess(eta.real, eta.imag)
    g = omega(re) + 1j * omega(im)
    return q * np.sum(w_conj * g), excess


def _table_numpy(c_stack, p, alpha, diag_c, w_conj, symbols, K, rho, q):
    L = symbols.size
    total = L**K
    out = np.empty(total, np.complex128)
    pows = L ** np.arange(K - 1, -1, -1)
    excess = 0.0
    for enc in range(total):
        x = symbols[(enc // pows) % L]
        out[enc], ex = _expectation_one_np(
            c_stack, p, alpha, diag_c, w_conj, x, rho, q
        )
        excess = max(excess, ex)
    return out, excess


def _table_loops(c_stack, p, alpha, diag_c, w_conj, symbols, K, rho, q):
    M = c_stack.shape[1]
    tau = p.shape[0]
    L = symbols.shape[0]
    total = L**K
    isa = 1.0 / np.sqrt(alpha)
    coef = q * 2.0 / np.pi
    pows = np.empty(K, np.int64)
    for j in range(K):
        pows[j] = L ** (K - 1 - j)
    out = np.empty(total, np.complex128)
    excess = np.zeros(total)
    for enc in prange(total):
        digits = np.empty(K, np.int64)
        for j in range(K):
            digits[j] = (enc // pows[j]) % L
        x = np.empty(K, np.complex128)
        xmag2 = np.empty(K, np.float64)
        for j in range(K):
            x[j] = symbols[digits[j]]
            xmag2[j] = x[j].real * x[j].real + x[j].imag * x[j].imag
        inv_sqrt_beta = np.empty(M, np.float64)
        for m in range(M):
            bm = 1.0
            for j in range(K):
                bm += rho * diag_c[j, m] * xmag2[j]
            inv_sqrt_beta[m] = 1.0 / np.sqrt(bm)
        acc = 0j
        ex = 0.0
        cw = np.empty(K, np.complex128)
        for u in range(tau):
            for j in range(K):
                cw[j] = x[j] * p[u, j]
            for m in range(M):
                sm = rho * inv_sqrt_beta[m]
                for n in range(M):
                    b = 0j
                    for j in range(K):
                        b += cw[j] * c_stack[j, m, n]
                    s = sm * isa[n]
                    er = b.real * s
                    ei = b.imag * s
                    if er > 1.0:
                        ex = max(ex, er - 1.0)
                        er = 1.0
                    elif er < -1.0:
                        ex = max(ex, -er - 1.0)
                        er = -1.0
                    if ei > 1.0:
                        ex = max(ex, ei - 1.0)
                        ei = 1.0
                    elif ei < -1.0:
                        ex = max(ex, -ei - 1.0)
                        ei = -1.0
                    acc += w_conj[u, m, n] * complex(math.asin(er), math.asin(ei))
        out[enc] = coef * acc
        excess[enc] = ex
    return out, excess


if _HAVE_NUMBA:
    _crp_numba = njit(cache=True, parallel=True)(_crp_loops)
    _table_numba = njit(cache=True, parallel=True)(_table_loops)
else:
    _crp_numba = None
    _table_numba = None


def crp_entries(ct_stack, p, alpha, rho, q):
    """Dispatching builder for the (M*tau, M*tau) pilot covariance.

    Returns (matrix, worst clamp excess).
    """
    if _HAVE_NUMBA:
        out, ex = _crp_numba(
            np.ascontiguousarray(ct_stack),
            np.ascontiguousarray(p),
            1.0 / np.sqrt(alpha),
            float(rho),
            float(q),
        )
        return out, float(ex.max())
    return _crp_numpy(ct_stack, p, alpha, rho, q)


def expectation_values(c_stack, p, alpha, diag_c, w_conj, symbols, K, rho, q):
    """Dispatching builder for the full expected-soft-symbol table.

    Returns (values in radix-L encoding order, worst clamp excess).
    """
    if _HAVE_NUMBA:
        out, ex = _table_numba(
            np.ascontiguousarray(c_stack),
            np.ascontiguousarray(p),
            np.ascontiguousarray(alpha),
            np.ascontiguousarray(diag_c),
            np.ascontiguousarray(w_conj),
            np.ascontiguousarray(symbols),
            int(K),
            float(rho),
            float(q),
        )
        return out, float(ex.max())
    return _table_numpy(c_stack, p, alpha, diag_c, w_conj, symbols, K, rho, q)
