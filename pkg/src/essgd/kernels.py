"""Hot numeric kernels for the dense data-backed problems.

Each kernel has a vectorized numpy implementation and a loop
implementation compiled with numba. The backend is chosen once at import
from ``ESSGD_BACKEND`` (``numba`` by default, ``numpy`` to force the
fallback). Both implementations stay importable through
:data:`numpy_kernels` and :data:`numba_kernels` for testing and
benchmarking.

Random draws never happen inside kernels; callers pass index and weight
arrays so both backends consume identical random streams.
"""

import math
import os
from types import SimpleNamespace

import numpy as np

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    numba = None
    HAVE_NUMBA = False

BACKEND = os.environ.get("ESSGD_BACKEND", "numba").strip().lower()
if BACKEND not in ("numba", "numpy"):
    raise ValueError(f"ESSGD_BACKEND must be 'numba' or 'numpy', got {BACKEND!r}")
if BACKEND == "numba" and not HAVE_NUMBA:  # pragma: no cover
    BACKEND = "numpy"

__all__ = ["BACKEND", "HAVE_NUMBA", "numpy_kernels", "numba_kernels", "active"]


# ---------------------------------------------------------------------------
# numpy path


def _reg_value(x):
    x2 = x * x
    return float(np.sum(x2 / (1.0 + x2)))


def _reg_grad(x):
    return 2.0 * x / (1.0 + x * x) ** 2


def _np_linreg_minibatch_grad(a, y, x, idx, w, lam, n):
    rows = a[idx]
    res = rows @ x - y[idx]
    g = (2.0 / n) * ((w * res) @ rows)
    g += (lam * w.sum() / n) * _reg_grad(x)
    return g


def _np_logreg_minibatch_grad(a, x, idx, w, lam, n):
    rows = a[idx]
    z = rows @ x
    # d/dz log(1 + exp(-z)) = -1 / (1 + exp(z))
    s = -0.5 * (1.0 - np.tanh(0.5 * z))
    g = ((w * s) @ rows) / n
    g += (lam * w.sum() / n) * _reg_grad(x)
    return g


def _np_linreg_snapshot(a, y, row_sq, x, lam):
    n = a.shape[0]
    res = a @ x - y
    h = _reg_grad(x)
    f = float(np.mean(res * res)) + lam * _reg_value(x)
    grad = (2.0 / n) * (res @ a) + lam * h
    ah = a @ h
    avg = float(np.mean(4.0 * res * res * row_sq + 4.0 * lam * res * ah)) + lam * lam * float(h @ h)
    return f, float(grad @ grad), avg


def _np_logreg_snapshot(a, row_sq, x, lam):
    n = a.shape[0]
    z = a @ x
    h = _reg_grad(x)
    f = float(np.mean(np.logaddexp(0.0, -z))) + lam * _reg_value(x)
    s = -0.5 * (1.0 - np.tanh(0.5 * z))
    grad = (s @ a) / n + lam * h
    ah = a @ h
    avg = float(np.mean(s * s * row_sq + 2.0 * lam * s * ah)) + lam * lam * float(h @ h)
    return f, float(grad @ grad), avg


def _np_linreg_component_gd(a, y, lam, l_comp, iters):
    """Gradient descent with stepsize ``1/L_i`` on every component at once.

    Returns the smallest value seen along each component's path.
    """
    n, d = a.shape
    xs = np.zeros((n, d))
    best = np.full(n, np.inf)
    step = (1.0 / l_comp)[:, None]
    for _ in range(iters + 1):
        res = np.einsum("ij,ij->i", a, xs) - y
        x2 = xs * xs
        vals = res * res + lam * np.sum(x2 / (1.0 + x2), axis=1)
        np.minimum(best, vals, out=best)
        grads = 2.0 * res[:, None] * a + lam * 2.0 * xs / (1.0 + x2) ** 2
        xs -= step * grads
    return best


def _np_logreg_component_gd(a, lam, l_comp, iters):
    n, d = a.shape
    xs = np.zeros((n, d))
    best = np.full(n, np.inf)
    step = (1.0 / l_comp)[:, None]
    for _ in range(iters + 1):
        z = np.einsum("ij,ij->i", a, xs)
        x2 = xs * xs
        vals = np.logaddexp(0.0, -z) + lam * np.sum(x2 / (1.0 + x2), axis=1)
        np.minimum(best, vals, out=best)
        s = -0.5 * (1.0 - np.tanh(0.5 * z))
        grads = s[:, None] * a + lam * 2.0 * xs / (1.0 + x2) ** 2
        xs -= step * grads
    return best


numpy_kernels = SimpleNamespace(
    linreg_minibatch_grad=_np_linreg_minibatch_grad,
    logreg_minibatch_grad=_np_logreg_minibatch_grad,
    linreg_snapshot=_np_linreg_snapshot,
    logreg_snapshot=_np_logreg_snapshot,
    linreg_component_gd=_np_linreg_component_gd,
    logreg_component_gd=_np_logreg_component_gd,
)


# ---------------------------------------------------------------------------
# loop path (compiled by numba)


def _loop_log1pexp_neg(z):
    # log(1 + exp(-z)) without overflow
    if z > 0:
        return math.log1p(math.exp(-z))
    return -z + math.log1p(math.exp(z))


def _loop_dloss(z):
    return -0.5 * (1.0 - math.tanh(0.5 * z))


def _loop_linreg_minibatch_grad(a, y, x, idx, w, lam, n):
    d = a.shape[1]
    g = np.zeros(d)
    wsum = 0.0
    for k in range(idx.shape[0]):
        i = idx[k]
        r = -y[i]
        for j in range(d):
            r += a[i, j] * x[j]
        c = 2.0 * w[k] * r / n
        for j in range(d):
            g[j] += c * a[i, j]
        wsum += w[k]
    c = lam * wsum / n
    for j in range(d):
        t = 1.0 + x[j] * x[j]
        g[j] += c * 2.0 * x[j] / (t * t)
    return g


def _loop_logreg_minibatch_grad(a, x, idx, w, lam, n):
    d = a.shape[1]
    g = np.zeros(d)
    wsum = 0.0
    for k in range(idx.shape[0]):
        i = idx[k]
        z = 0.0
        for j in range(d):
            z += a[i, j] * x[j]
        c = w[k] * _nb_dloss(z) / n
        for j in range(d):
            g[j] += c * a[i, j]
        wsum += w[k]
    c = lam * wsum / n
    for j in range(d):
        t = 1.0 + x[j] * x[j]
        g[j] += c * 2.0 * x[j] / (t * t)
    return g


def _loop_snapshot_common(x, lam):
    d = x.shape[0]
    h = np.empty(d)
    reg = 0.0
    for j in range(d):
        t = 1.0 + x[j] * x[j]
        h[j] = 2.0 * x[j] / (t * t)
        reg += x[j] * x[j] / t
    return h, reg


def _loop_linreg_snapshot(a, y, row_sq, x, lam):
    n, d = a.shape
    h, reg = _nb_snapshot_common(x, lam)
    grad = np.zeros(d)
    fsum = 0.0
    avg = 0.0
    for i in range(n):
        r = -y[i]
        ah = 0.0
        for j in range(d):
            r += a[i, j] * x[j]
            ah += a[i, j] * h[j]
        fsum += r * r
        avg += 4.0 * r * r * row_sq[i] + 4.0 * lam * r * ah
        for j in range(d):
            grad[j] += 2.0 * r * a[i, j]
    hh = 0.0
    gg = 0.0
    for j in range(d):
        gj = grad[j] / n + lam * h[j]
        gg += gj * gj
        hh += h[j] * h[j]
    return fsum / n + lam * reg, gg, avg / n + lam * lam * hh


def _loop_logreg_snapshot(a, row_sq, x, lam):
    n, d = a.shape
    h, reg = _nb_snapshot_common(x, lam)
    grad = np.zeros(d)
    fsum = 0.0
    avg = 0.0
    for i in range(n):
        z = 0.0
        ah = 0.0
        for j in range(d):
            z += a[i, j] * x[j]
            ah += a[i, j] * h[j]
        fsum += _nb_log1pexp_neg(z)
        s = _nb_dloss(z)
        avg += s * s * row_sq[i] + 2.0 * lam * s * ah
        for j in range(d):
            grad[j] += s * a[i, j]
    hh = 0.0
    gg = 0.0
    for j in range(d):
        gj = grad[j] / n + lam * h[j]
        gg += gj * gj
        hh += h[j] * h[j]
    return fsum / n + lam * reg, gg, avg / n + lam * lam * hh


def _loop_linreg_component_gd(a, y, lam, l_comp, iters):
    n, d = a.shape
    best = np.empty(n)
    xi = np.empty(d)
    for i in range(n):
        for j in range(d):
            xi[j] = 0.0
        b = np.inf
        step = 1.0 / l_comp[i]
        for _ in range(iters + 1):
            r = -y[i]
            reg = 0.0
            for j in range(d):
                r += a[i, j] * xi[j]
                reg += xi[j] * xi[j] / (1.0 + xi[j] * xi[j])
            v = r * r + lam * reg
            if v < b:
                b = v
            for j in range(d):
                t = 1.0 + xi[j] * xi[j]
                xi[j] -= step * (2.0 * r * a[i, j] + lam * 2.0 * xi[j] / (t * t))
        best[i] = b
    return best


def _loop_logreg_component_gd(a, lam, l_comp, iters):
    n, d = a.shape
    best = np.empty(n)
    xi = np.empty(d)
    for i in range(n):
        for j in range(d):
            xi[j] = 0.0
        b = np.inf
        step = 1.0 / l_comp[i]
        for _ in range(iters + 1):
            z = 0.0
            reg = 0.0
            for j in range(d):
                z += a[i, j] * xi[j]
                reg += xi[j] * xi[j] / (1.0 + xi[j] * xi[j])
            v = _nb_log1pexp_neg(z) + lam * reg
            if v < b:
                b = v
            s = _nb_dloss(z)
            for j in range(d):
                t = 1.0 + xi[j] * xi[j]
                xi[j] -= step * (s * a[i, j] + lam * 2.0 * xi[j] / (t * t))
        best[i] = b
    return best


if HAVE_NUMBA:
    _jit = numba.njit(cache=True, nogil=True)
    _nb_log1pexp_neg = _jit(_loop_log1pexp_neg)
    _nb_dloss = _jit(_loop_dloss)
    _nb_snapshot_common = _jit(_loop_snapshot_common)
    numba_kernels = SimpleNamespace(
        linreg_minibatch_grad=_jit(_loop_linreg_minibatch_grad),
        logreg_minibatch_grad=_jit(_loop_logreg_minibatch_grad),
        linreg_snapshot=_jit(_loop_linreg_snapshot),
        logreg_snapshot=_jit(_loop_logreg_snapshot),
        linreg_component_gd=_jit(_loop_linreg_component_gd),
        logreg_component_gd=_jit(_loop_logreg_component_gd),
    )
else:  # pragma: no cover
    numba_kernels = None

active = numba_kernels if BACKEND == "numba" else numpy_kernels
