"""Inner-loop kernels with a numba path and a pure-numpy path.

The public names (``kp_rows``, ``block_moments``, ``mode_factor_table``) are
bound to the numba implementations when numba is importable and not disabled,
otherwise to the numpy ones.  Both variants are always importable under their
suffixed names so they can be cross-checked and benchmarked.
"""
import numpy as np

from ._backend import HAVE_NUMBA, njit

__all__ = [
    "kp_rows",
    "block_moments",
    "mode_factor_table",
    "kp_rows_numpy",
    "block_moments_numpy",
    "mode_factor_table_numpy",
    "kp_rows_numba",
    "block_moments_numba",
    "mode_factor_table_numba",
    "BACKEND",
]


# ---------------------------------------------------------------------------
# K_p(X, Y) = |Y|^p + (p-1)|X|^p - p |X|^{p-2} X.Y, row-wise, evaluated as
# |Y|^p - |X|^p - p |X|^{p-2} X.(Y-X) so that K_p(X, X) is exactly zero
# ---------------------------------------------------------------------------

def kp_rows_numpy(p, X, Y):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    nx = np.sqrt(np.einsum("ij,ij->i", X, X))
    ny = np.sqrt(np.einsum("ij,ij->i", Y, Y))
    dot = np.einsum("ij,ij->i", X, Y - X)
    # |X|^{p-2} X.(Y-X) written as |X|^{p-1} (X/|X|).(Y-X), zero at X = 0
    with np.errstate(divide="ignore", invalid="ignore"):
        cross = np.where(nx > 0.0, nx ** (p - 1.0) * dot / nx, 0.0)
    return ny**p - nx**p - p * cross


def _kp_rows_loop(p, X, Y):
    n, d = X.shape
    out = np.empty(n)
    for i in range(n):
        sx = 0.0
        sy = 0.0
        sxy = 0.0
        for j in range(d):
            sx += X[i, j] * X[i, j]
            sy += Y[i, j] * Y[i, j]
            sxy += X[i, j] * (Y[i, j] - X[i, j])
        nx = np.sqrt(sx)
        ny = np.sqrt(sy)
        cross = 0.0
        if nx > 0.0:
            cross = nx ** (p - 1.0) * (sxy / nx)
        out[i] = ny**p - nx**p - p * cross
    return out


# ---------------------------------------------------------------------------
# Monte Carlo block moments with non-finite bookkeeping
# ---------------------------------------------------------------------------

def block_moments_numpy(values):
    """Per-column (count, mean, M2, n_nonfinite) over finite entries of a 2-D block."""
    v = np.asarray(values, dtype=float)
    if v.ndim == 1:
        v = v[:, None]
    finite = np.isfinite(v)
    count = finite.sum(axis=0).astype(np.int64)
    bad = v.shape[0] - count
    safe = np.where(finite, v, 0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        mean = np.where(count > 0, safe.sum(axis=0) / np.maximum(count, 1), 0.0)
    dev = np.where(finite, v - mean, 0.0)
    m2 = np.einsum("ij,ij->j", dev, dev)
    return count, mean, m2, bad


def _block_moments_loop(v):
    n, m = v.shape
    count = np.zeros(m, dtype=np.int64)
    mean = np.zeros(m)
    m2 = np.zeros(m)
    bad = np.zeros(m, dtype=np.int64)
    for j in range(m):
        c = 0
        mu = 0.0
        s = 0.0
        for i in range(n):
            x = v[i, j]
            if not np.isfinite(x):
                bad[j] += 1
                continue
            c += 1
            delta = x - mu
            mu += delta / c
            s += delta * (x - mu)
        count[j] = c
        mean[j] = mu
        m2[j] = s
    return count, mean, m2, bad


# ---------------------------------------------------------------------------
# Mode factor F(N, alpha, k) for k = 0..kmax
# ---------------------------------------------------------------------------

def mode_factor_table_numpy(N, alpha, kmax, lemma36):
    k = np.arange(kmax + 1, dtype=float)
    y = N + 2.0 * k + 2.0 * alpha
    with np.errstate(divide="ignore", invalid="ignore"):
        corr = -4.0 * k * (2.0 * alpha + 2.0) / (y * y)
    if lemma36:
        corr = np.minimum(corr, 0.0)
    out = (1.0 + corr) * (N + 2.0 * k + 4.0 * alpha + 2.0) ** 2 / 4.0
    return np.where(y == 0.0, np.nan, out)


def _mode_factor_loop(N, alpha, kmax, lemma36):
    out = np.empty(kmax + 1)
    for k in range(kmax + 1):
        y = N + 2.0 * k + 2.0 * alpha
        if y == 0.0:
            out[k] = np.nan
            continue
        corr = -4.0 * k * (2.0 * alpha + 2.0) / (y * y)
        if lemma36 and corr > 0.0:
            corr = 0.0
        z = N + 2.0 * k + 4.0 * alpha + 2.0
        out[k] = (1.0 + corr) * z * z / 4.0
    return out


if HAVE_NUMBA:
    _kp_jit = njit(_kp_rows_loop)
    _moments_jit = njit(_block_moments_loop)
    _mode_jit = njit(_mode_factor_loop)

    def kp_rows_numba(p, X, Y):
        X = np.ascontiguousarray(np.atleast_2d(np.asarray(X, dtype=float)))
        Y = np.ascontiguousarray(np.atleast_2d(np.asarray(Y, dtype=float)))
        return _kp_jit(float(p), X, Y)

    def block_moments_numba(values):
        v = np.asarray(values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        return _moments_jit(np.ascontiguousarray(v))

    def mode_factor_table_numba(N, alpha, kmax, lemma36):
        return _mode_jit(float(N), float(alpha), int(kmax), bool(lemma36))

    kp_rows = kp_rows_numba
    block_moments = block_moments_numba
    mode_factor_table = mode_factor_table_numba
    BACKEND = "numba"
else:
    kp_rows_numba = block_moments_numba = mode_factor_table_numba = None
    kp_rows = kp_rows_numpy
    block_moments = block_moments_numpy
    mode_factor_table = mode_factor_table_numpy
    BACKEND = "numpy"
