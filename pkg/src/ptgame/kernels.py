"""Round-robin gradient play kernels.

Two interchangeable backends run a batch of independent starts:

* ``numba``: one compiled sequential loop per start.
* ``numpy``: all starts advance together, one vectorized update per iteration.

Both return the same tuple; see :func:`run_batch`.
"""

from __future__ import annotations

import math

import numpy as np

from ._accel import njit, resolve_backend

OK, MAX_ITER, DOMAIN, NONFINITE = 0, 1, 2, 3

IDENTITY, LOG_GAIN, EXPONENTIAL, LINEAR_DERIVATIVE, CONVEX_EXPONENTIAL = 0, 1, 2, 3, 4


@njit
def _log_vprime(kind, c0, c1, z):
    # NaN signals a domain violation
    if kind == LOG_GAIN:
        return -math.log1p(z) if z >= 0.0 else 0.0
    if kind == EXPONENTIAL:
        return math.log(c0) - c0 * z
    if kind == LINEAR_DERIVATIVE:
        v = c0 * z + c1
        return math.log(v) if v > 0.0 else math.nan
    if kind == CONVEX_EXPONENTIAL:
        return c0 * z
    return 0.0


@njit
def _direction(i, x, a, b, y, ysum, p, xi, logq, xibar, kinds, par, scaled):
    """Ascent direction for player i: (scaled direction, v'-weight, status)."""
    n = x.shape[0]
    s = x.sum() - ysum
    g = -2.0 * a[i] / (n * n) * s - p[i]
    if kinds[i] == IDENTITY:
        return g + xibar, 1.0, OK
    base = -a[i] * (s / n) ** 2 + b[i] - p[i] * x[i]
    shortfall = y[i] - x[i]
    m = -math.inf
    lv = np.empty(xi.shape[0])
    for k in range(xi.shape[0]):
        lv[k] = logq[k] + _log_vprime(kinds[i], par[i, 0], par[i, 1], base - shortfall * xi[k])
        if math.isnan(lv[k]):
            return math.nan, math.nan, DOMAIN
        if lv[k] > m:
            m = lv[k]
    tot = 0.0
    mean = 0.0
    for k in range(xi.shape[0]):
        w = math.exp(lv[k] - m)
        tot += w
        mean += w * xi[k]
    d = g + mean / tot
    weight = math.exp(m) * tot
    if not scaled:
        d *= weight
    return d, weight, OK


@njit
def _residual(x, a, b, y, ysum, p, xi, logq, xibar, kinds, par, lo, hi, project):
    """Max boundary-adjusted scaled direction over players (inf/nan propagate)."""
    r = 0.0
    for i in range(x.shape[0]):
        d, _, st = _direction(i, x, a, b, y, ysum, p, xi, logq, xibar, kinds, par, True)
        if st != OK:
            return math.nan
        if project and ((x[i] >= hi[i] and d > 0.0) or (x[i] <= lo[i] and d < 0.0)):
            d = 0.0
        if not abs(d) <= r:
            r = abs(d)
    return r


@njit
def _run_one(x, a, b, y, p, xi, logq, xibar, kinds, par, lo, hi, eps0, eps_exp, max_iter,
             tol, project, scaled, log_every, tr_x, tr_it, tr_res):
    n = x.shape[0]
    ysum = y.sum()
    n_log = 0
    res = _residual(x, a, b, y, ysum, p, xi, logq, xibar, kinds, par, lo, hi, project)
    if log_every > 0:
        tr_x[0, :] = x
        tr_it[0] = 0
        tr_res[0] = res
        n_log = 1
    status = MAX_ITER
    it = 0
    for it in range(1, max_iter + 1):
        i = (it - 1) % n
        eps = eps0 if eps_exp == 0.0 else eps0 / it**eps_exp
        d, _, st = _direction(i, x, a, b, y, ysum, p, xi, logq, xibar, kinds, par, scaled)
        if st != OK:
            status = st
            break
        x[i] += eps * d
        if project:
            x[i] = min(max(x[i], lo[i]), hi[i])
        if not math.isfinite(x[i]):
            status = NONFINITE
            break
        logged = log_every > 0 and it % log_every == 0
        if it % n == 0 or logged:
            res = _residual(x, a, b, y, ysum, p, xi, logq, xibar, kinds, par, lo, hi, project)
            if logged:
                tr_x[n_log, :] = x
                tr_it[n_log] = it
                tr_res[n_log] = res
                n_log += 1
            if it % n == 0 and res <= tol:
                status = OK
                break
    if log_every > 0 and tr_it[n_log - 1] != it:
        tr_x[n_log, :] = x
        tr_it[n_log] = it
        tr_res[n_log] = _residual(x, a, b, y, ysum, p, xi, logq, xibar, kinds, par, lo, hi,
                                  project)
        n_log += 1
    if status != MAX_ITER and status != OK:
        res = math.nan
    return it, status, res, n_log


@njit
def _run_batch_numba(X, a, b, y, p, xi, logq, xibar, kinds, par, lo, hi, eps0, eps_exp,
                     max_iter, tol, project, scaled, log_every, tr_x, tr_it, tr_res):
    n_starts = X.shape[0]
    iters = np.zeros(n_starts, dtype=np.int64)
    status = np.zeros(n_starts, dtype=np.int64)
    resid = np.zeros(n_starts)
    n_log = np.zeros(n_starts, dtype=np.int64)
    for s in range(n_starts):
        iters[s], status[s], resid[s], n_log[s] = _run_one(
            X[s], a, b, y, p, xi, logq, xibar, kinds, par, lo, hi, eps0, eps_exp, max_iter,
            tol, project, scaled, log_every, tr_x[s], tr_it[s], tr_res[s])
    return iters, status, resid, n_log


def _directions_np(i, X, a, b, y, ysum, p, xi, logq, xibar, kinds, par, scaled):
    """Vectorized :func:`_direction` over the rows of X; returns (d, status)."""
    n = X.shape[1]
    s = X.sum(axis=1) - ysum
    g = -2.0 * a[i] / (n * n) * s - p[i]
    status = np.zeros(X.shape[0], dtype=np.int64)
    kind = kinds[i]
    if kind == IDENTITY:
        return g + xibar, status
    base = -a[i] * (s / n) ** 2 + b[i] - p[i] * X[:, i]
    z = base[:, None] - (y[i] - X[:, i])[:, None] * xi[None, :]
    c0, c1 = par[i]
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if kind == LOG_GAIN:
            lvp = np.where(z >= 0.0, -np.log1p(np.maximum(z, 0.0)), 0.0)
        elif kind == EXPONENTIAL:
            lvp = math.log(c0) - c0 * z
        elif kind == LINEAR_DERIVATIVE:
            v = c0 * z + c1
            lvp = np.where(v > 0.0, np.log(np.where(v > 0.0, v, 1.0)), np.nan)
        else:
            lvp = c0 * z
        lv = logq[None, :] + lvp
        bad = np.isnan(lv).any(axis=1)
        status[bad] = DOMAIN
        m = np.max(np.where(np.isnan(lv), -np.inf, lv), axis=1)
        w = np.exp(lv - m[:, None])
        tot = w.sum(axis=1)
        d = g + (w * xi[None, :]).sum(axis=1) / tot
        if not scaled:
            d = d * np.exp(m) * tot
    return d, status


def _residual_np(X, a, b, y, ysum, p, xi, logq, xibar, kinds, par, lo, hi, project):
    r = np.zeros(X.shape[0])
    bad = np.zeros(X.shape[0], dtype=bool)
    for i in range(X.shape[1]):
        d, st = _directions_np(i, X, a, b, y, ysum, p, xi, logq, xibar, kinds, par, True)
        if project:
            d = np.where(((X[:, i] >= hi[i]) & (d > 0)) | ((X[:, i] <= lo[i]) & (d < 0)), 0.0, d)
        bad |= st != OK
        r = np.where(np.abs(d) <= r, r, np.abs(d))
    r[bad] = np.nan
    return r


def _run_batch_numpy(X, a, b, y, p, xi, logq, xibar, kinds, par, lo, hi, eps0, eps_exp,
                     max_iter, tol, project, scaled, log_every, tr_x, tr_it, tr_res):
    n_starts, n = X.shape
    ysum = y.sum()
    iters = np.zeros(n_starts, dtype=np.int64)
    status = np.full(n_starts, MAX_ITER, dtype=np.int64)
    n_log = np.zeros(n_starts, dtype=np.int64)
    rows = np.arange(n_starts)
    args = (a, b, y, ysum, p, xi, logq, xibar, kinds, par)
    resid = _residual_np(X, *args, lo, hi, project)
    if log_every > 0:
        tr_x[:, 0, :] = X
        tr_res[:, 0] = resid
        n_log[:] = 1
    active = rows.copy()
    for it in range(1, max_iter + 1):
        if active.size == 0:
            break
        i = (it - 1) % n
        eps = eps0 if eps_exp == 0.0 else eps0 / it**eps_exp
        Xa = X[active]
        d, st = _directions_np(i, Xa, *args, scaled)
        with np.errstate(invalid="ignore", over="ignore"):
            xi_new = Xa[:, i] + eps * d
            if project:
                xi_new = np.minimum(np.maximum(xi_new, lo[i]), hi[i])
        failed = st != OK
        nonfinite = ~failed & ~np.isfinite(xi_new)
        keep = ~failed
        X[active[keep], i] = xi_new[keep]
        iters[active] = it
        done = np.zeros(active.size, dtype=bool)
        status[active[failed]] = DOMAIN
        status[active[nonfinite]] = NONFINITE
        done |= failed | nonfinite
        logged = log_every > 0 and it % log_every == 0
        if it % n == 0 or logged:
            live = ~done
            r = _residual_np(X[active[live]], *args, lo, hi, project)
            resid[active[live]] = r
            if logged:
                idx = active[live]
                tr_x[idx, n_log[idx], :] = X[idx]
                tr_it[idx, n_log[idx]] = it
                tr_res[idx, n_log[idx]] = r
                n_log[idx] += 1
            if it % n == 0:
                conv = np.zeros(active.size, dtype=bool)
                conv[live] = r <= tol
                status[active[conv]] = OK
                done |= conv
        active = active[~done]
    resid[(status == DOMAIN) | (status == NONFINITE)] = np.nan
    if log_every > 0:
        for s in rows:
            last = n_log[s] - 1
            if tr_it[s, last] != iters[s]:
                tr_x[s, last + 1, :] = X[s]
                tr_it[s, last + 1] = iters[s]
                tr_res[s, last + 1] = _residual_np(X[s:s + 1], *args, lo, hi, project)[0]
                n_log[s] += 1
    return iters, status, resid, n_log


def run_batch(X0, a, b, y, p, xi, q, kinds, par, lo, hi, *, eps0, eps_exp, max_iter, tol,
              project, scaled, log_every=0, backend=None):
    """Run gradient play from every row of ``X0``.

    Returns ``(X, iters, status, resid, trace)`` where ``status`` holds OK, MAX_ITER, DOMAIN or
    NONFINITE per start and ``trace`` is ``(tr_x, tr_it, tr_res, n_log)`` (empty when
    ``log_every == 0``).
    """
    backend = resolve_backend(backend)
    X = np.array(X0, dtype=np.float64, copy=True, ndmin=2)
    n_starts, n = X.shape
    q = np.asarray(q, dtype=np.float64)
    logq = np.log(q, where=q > 0, out=np.full(q.shape, -np.inf))
    xi = np.asarray(xi, dtype=np.float64)
    xibar = float(q @ xi)
    n_slots = (max_iter // log_every + 2) if log_every > 0 else 1
    tr_x = np.zeros((n_starts, n_slots, n))
    tr_it = np.zeros((n_starts, n_slots), dtype=np.int64)
    tr_res = np.zeros((n_starts, n_slots))
    arrays = [np.ascontiguousarray(v, dtype=np.float64) for v in (a, b, y, p)]
    kinds = np.ascontiguousarray(kinds, dtype=np.int64)
    par = np.ascontiguousarray(par, dtype=np.float64).reshape(n, 2)
    lo = np.ascontiguousarray(lo, dtype=np.float64)
    hi = np.ascontiguousarray(hi, dtype=np.float64)
    runner = _run_batch_numba if backend == "numba" else _run_batch_numpy
    iters, status, resid, n_log = runner(
        X, *arrays, xi, logq, xibar, kinds, par, lo, hi, float(eps0), float(eps_exp),
        int(max_iter), float(tol), bool(project), bool(scaled), int(log_every), tr_x, tr_it, tr_res)
    return X, iters, status, resid, (tr_x, tr_it, tr_res, n_log)
