"""Compiled inner loops: bucket grids, interaction statistics, MH chains, pair sums.

All functions take plain arrays so they can be called from any module
without importing higher-level types.
"""

import math

import numpy as np
from numba import njit

POISSON = 0
STRAUSS = 1
GEYER = 2


@njit(cache=True)
def build_cells(px, py, x0, y0, cell, nx, ny):
    n = px.shape[0]
    counts = np.zeros(nx * ny + 1, dtype=np.int64)
    cid = np.empty(n, dtype=np.int64)
    for k in range(n):
        cx = int(math.floor((px[k] - x0) / cell))
        cy = int(math.floor((py[k] - y0) / cell))
        cx = min(max(cx, 0), nx - 1)
        cy = min(max(cy, 0), ny - 1)
        cid[k] = cy * nx + cx
        counts[cid[k] + 1] += 1
    starts = np.cumsum(counts)
    fill = starts[:-1].copy()
    order = np.empty(n, dtype=np.int64)
    for k in range(n):
        order[fill[cid[k]]] = k
        fill[cid[k]] += 1
    return starts, order


@njit(cache=True, inline="always")
def _cell_span(qx, qy, x0, y0, cell, nx, ny):
    cx = int(math.floor((qx - x0) / cell))
    cy = int(math.floor((qy - y0) / cell))
    # a query more than one cell outside the grid has no neighbor within `cell`
    if cx < -1 or cx > nx or cy < -1 or cy > ny:
        return 0, -1, 0, -1
    return max(cx - 1, 0), min(cx + 1, nx - 1), max(cy - 1, 0), min(cy + 1, ny - 1)


@njit(cache=True)
def count_neighbors(qx, qy, exclude, px, py, starts, order, x0, y0, cell, nx, ny, r):
    m = qx.shape[0]
    out = np.zeros(m, dtype=np.int64)
    for i in range(m):
        ax0, ax1, ay0, ay1 = _cell_span(qx[i], qy[i], x0, y0, cell, nx, ny)
        c = 0
        for cy in range(ay0, ay1 + 1):
            for cx in range(ax0, ax1 + 1):
                b = cy * nx + cx
                for t in range(starts[b], starts[b + 1]):
                    k = order[t]
                    if k == exclude[i]:
                        continue
                    dx = px[k] - qx[i]
                    dy = py[k] - qy[i]
                    if math.sqrt(dx * dx + dy * dy) <= r:
                        c += 1
        out[i] = c
    return out


@njit(cache=True)
def geyer_stats(qx, qy, exclude, px, py, tau, starts, order, x0, y0, cell, nx, ny, r, sigma):
    """Geyer saturation increment s(u, x) for each query u.

    ``tau[k]`` is the number of R-neighbors of data point k in x minus k.
    ``exclude[i] >= 0`` means the query is data point ``exclude[i]`` and is
    evaluated against x minus itself.
    """
    m = qx.shape[0]
    out = np.zeros(m)
    for i in range(m):
        e = exclude[i]
        ax0, ax1, ay0, ay1 = _cell_span(qx[i], qy[i], x0, y0, cell, nx, ny)
        tu = 0
        acc = 0.0
        for cy in range(ay0, ay1 + 1):
            for cx in range(ax0, ax1 + 1):
                b = cy * nx + cx
                for t in range(starts[b], starts[b + 1]):
                    k = order[t]
                    if k == e:
                        continue
                    dx = px[k] - qx[i]
                    dy = py[k] - qy[i]
                    if math.sqrt(dx * dx + dy * dy) <= r:
                        tu += 1
                        # k is a neighbor of u, so removing a data query drops tau[k] by one
                        tk = tau[k] - 1 if e >= 0 else tau[k]
                        acc += min(sigma, tk + 1.0) - min(sigma, float(tk))
        out[i] = min(sigma, float(tu)) + acc
    return out


# ---------------------------------------------------------------------------
# birth/death Metropolis-Hastings


@njit(cache=True, inline="always")
def _trend_at(x, y, trend, gx0, gy0, gcell):
    nr, nc = trend.shape
    ix = int(math.floor((x - gx0) / gcell))
    iy = int(math.floor((y - gy0) / gcell))
    ix = min(max(ix, 0), nc - 1)
    iy = min(max(iy, 0), nr - 1)
    return trend[iy, ix]


@njit(cache=True)
def _grow2(a, cap):
    b = np.empty((a.shape[0], cap), dtype=a.dtype)
    b[:, : a.shape[1]] = a
    return b


@njit(cache=True)
def _grow1(a, cap):
    b = np.empty(cap, dtype=a.dtype)
    b[: a.shape[0]] = a
    return b


@njit(cache=True)
def mh_chain(kind, psi, r, sigma, trend, gx0, gy0, gcell,
             wx0, wx1, wy0, wy1, p_birth, uniforms):
    """Run a birth/death chain from the empty configuration.

    ``trend`` holds beta^T z(u) per covariate pixel (row 0 = lowest y).
    ``uniforms`` has shape (n_steps, 4): move type, x or point index, y, acceptance.
    Returns the final x and y coordinate arrays.
    """
    width = wx1 - wx0
    height = wy1 - wy0
    area = width * height
    cell = r if kind != POISSON else max(width, height)
    nx = max(1, min(int(math.ceil(width / cell)), 4096))
    ny = max(1, min(int(math.ceil(height / cell)), 4096))
    cell = max(cell, width / nx, height / ny)
    ncell = nx * ny
    ccap = 8
    cells = np.empty((ncell, ccap), dtype=np.int64)
    ccount = np.zeros(ncell, dtype=np.int64)

    cap = 256
    xs = np.empty(cap)
    ys = np.empty(cap)
    tau = np.zeros(cap, dtype=np.int64)
    cellof = np.empty(cap, dtype=np.int64)
    slot = np.empty(cap, dtype=np.int64)
    n = 0
    nbr = np.empty(64, dtype=np.int64)

    birth_odds = (1.0 - p_birth) / p_birth
    death_odds = p_birth / (1.0 - p_birth)

    for step in range(uniforms.shape[0]):
        if uniforms[step, 0] < p_birth:
            ux = wx0 + uniforms[step, 1] * width
            uy = wy0 + uniforms[step, 2] * height
            logl = _trend_at(ux, uy, trend, gx0, gy0, gcell)
            nn = 0
            if kind != POISSON:
                cx = min(max(int(math.floor((ux - wx0) / cell)), 0), nx - 1)
                cy = min(max(int(math.floor((uy - wy0) / cell)), 0), ny - 1)
                for yy in range(max(cy - 1, 0), min(cy + 1, ny - 1) + 1):
                    for xx in range(max(cx - 1, 0), min(cx + 1, nx - 1) + 1):
                        b = yy * nx + xx
                        for t in range(ccount[b]):
                            k = cells[b, t]
                            dx = xs[k] - ux
                            dy = ys[k] - uy
                            if math.sqrt(dx * dx + dy * dy) <= r:
                                if nn == nbr.shape[0]:
                                    nbr = _grow1(nbr, 2 * nn)
                                nbr[nn] = k
                                nn += 1
                if kind == STRAUSS:
                    logl += psi * nn
                else:
                    s = min(sigma, float(nn))
                    for a in range(nn):
                        tk = tau[nbr[a]]
                        s += min(sigma, tk + 1.0) - min(sigma, float(tk))
                    logl += psi * s
            ratio = birth_odds * math.exp(min(logl, 700.0)) * area / (n + 1)
            if uniforms[step, 3] < ratio:
                if n == cap:
                    cap *= 2
                    xs = _grow1(xs, cap)
                    ys = _grow1(ys, cap)
                    tau = _grow1(tau, cap)
                    cellof = _grow1(cellof, cap)
                    slot = _grow1(slot, cap)
                cx = min(max(int(math.floor((ux - wx0) / cell)), 0), nx - 1)
                cy = min(max(int(math.floor((uy - wy0) / cell)), 0), ny - 1)
                b = cy * nx + cx
                if ccount[b] == ccap:
                    ccap *= 2
                    cells = _grow2(cells, ccap)
                xs[n] = ux
                ys[n] = uy
                tau[n] = nn
                for a in range(nn):
                    tau[nbr[a]] += 1
                cells[b, ccount[b]] = n
                slot[n] = ccount[b]
                cellof[n] = b
                ccount[b] += 1
                n += 1
        else:
            if n == 0:
                continue
            k = min(int(uniforms[step, 1] * n), n - 1)
            vx = xs[k]
            vy = ys[k]
            logl = _trend_at(vx, vy, trend, gx0, gy0, gcell)
            nn = 0
            if kind != POISSON:
                cx = min(max(int(math.floor((vx - wx0) / cell)), 0), nx - 1)
                cy = min(max(int(math.floor((vy - wy0) / cell)), 0), ny - 1)
                for yy in range(max(cy - 1, 0), min(cy + 1, ny - 1) + 1):
                    for xx in range(max(cx - 1, 0), min(cx + 1, nx - 1) + 1):
                        b = yy * nx + xx
                        for t in range(ccount[b]):
                            j = cells[b, t]
                            if j == k:
                                continue
                            dx = xs[j] - vx
                            dy = ys[j] - vy
                            if math.sqrt(dx * dx + dy * dy) <= r:
                                if nn == nbr.shape[0]:
                                    nbr = _grow1(nbr, 2 * nn)
                                nbr[nn] = j
                                nn += 1
                if kind == STRAUSS:
                    logl += psi * nn
                else:
                    # statistic of v against x minus v: neighbors lose v from their counts
                    s = min(sigma, float(nn))
                    for a in range(nn):
                        tk = tau[nbr[a]] - 1
                        s += min(sigma, tk + 1.0) - min(sigma, float(tk))
                    logl += psi * s
            lam_area = math.exp(min(logl, 700.0)) * area
            if lam_area == 0.0 or uniforms[step, 3] * lam_area < death_odds * n:
                for a in range(nn):
                    tau[nbr[a]] -= 1
                # remove k from its cell
                b = cellof[k]
                last = cells[b, ccount[b] - 1]
                cells[b, slot[k]] = last
                slot[last] = slot[k]
                ccount[b] -= 1
                # move point n-1 into slot k
                m = n - 1
                if k != m:
                    xs[k] = xs[m]
                    ys[k] = ys[m]
                    tau[k] = tau[m]
                    cellof[k] = cellof[m]
                    slot[k] = slot[m]
                    cells[cellof[k], slot[k]] = k
                n -= 1
    return xs[:n].copy(), ys[:n].copy()


# ---------------------------------------------------------------------------
# pair enumeration for score-variance double sums


@njit(cache=True)
def _geyer_pair_delta(i, j, qx, qy, qdata, px, py, tau, starts, order,
                      x0, y0, cell, nx, ny, r, sigma):
    """Second difference S(y+a+b) - S(y+a) - S(y+b) + S(y) of the Geyer sum.

    a, b are nodes i, j and y is x without whichever of them are data points.
    For i == j, b is a coincident copy of a that is not in x.
    """
    ax = qx[i]
    ay = qy[i]
    bx = qx[j]
    by = qy[j]
    da = qdata[i]
    db = qdata[j] if i != j else -1
    dxab = ax - bx
    dyab = ay - by
    iab = math.sqrt(dxab * dxab + dyab * dyab) <= r
    tau_a = 0
    common = 0.0
    x0s, x1s, y0s, y1s = _cell_span(ax, ay, x0, y0, cell, nx, ny)
    for cy in range(y0s, y1s + 1):
        for cx in range(x0s, x1s + 1):
            c = cy * nx + cx
            for t in range(starts[c], starts[c + 1]):
                k = order[t]
                if k == da or k == db:
                    continue
                dx = px[k] - ax
                dy = py[k] - ay
                if math.sqrt(dx * dx + dy * dy) > r:
                    continue
                tau_a += 1
                ex = px[k] - bx
                ey = py[k] - by
                if math.sqrt(ex * ex + ey * ey) <= r:
                    tk = tau[k]
                    if da >= 0:
                        tk -= 1
                    if db >= 0:
                        tk -= 1
                    common += (min(sigma, tk + 2.0) - 2.0 * min(sigma, tk + 1.0)
                               + min(sigma, float(tk)))
    if not iab:
        return common
    tau_b = 0
    x0s, x1s, y0s, y1s = _cell_span(bx, by, x0, y0, cell, nx, ny)
    for cy in range(y0s, y1s + 1):
        for cx in range(x0s, x1s + 1):
            c = cy * nx + cx
            for t in range(starts[c], starts[c + 1]):
                k = order[t]
                if k == da or k == db:
                    continue
                dx = px[k] - bx
                dy = py[k] - by
                if math.sqrt(dx * dx + dy * dy) <= r:
                    tau_b += 1
    fa = min(sigma, tau_a + 1.0) - min(sigma, float(tau_a))
    fb = min(sigma, tau_b + 1.0) - min(sigma, float(tau_b))
    return fa + fb + common


@njit(cache=True)
def pair_deltas(kind, qx, qy, qdata, qstarts, qorder, qx0, qy0, qcell, qnx, qny,
                px, py, tau, starts, order, x0, y0, cell, nx, ny,
                r, sigma, reach, include_diag, budget):
    """Ordered node pairs (i, j) within ``reach`` whose statistic increment is nonzero.

    Returns (rows, cols, deltas, total) where ``total`` counts candidate
    pairs examined; arrays are empty when ``total`` exceeds ``budget``.
    """
    m = qx.shape[0]
    total = 0
    for i in range(m):
        ax0, ax1, ay0, ay1 = _cell_span(qx[i], qy[i], qx0, qy0, qcell, qnx, qny)
        for cy in range(ay0, ay1 + 1):
            for cx in range(ax0, ax1 + 1):
                c = cy * qnx + cx
                for t in range(qstarts[c], qstarts[c + 1]):
                    j = qorder[t]
                    dx = qx[j] - qx[i]
                    dy = qy[j] - qy[i]
                    if math.sqrt(dx * dx + dy * dy) <= reach:
                        if j != i or include_diag:
                            total += 1
    if total > budget:
        return (np.empty(0, np.int64), np.empty(0, np.int64), np.empty(0), total)
    rows = np.empty(total, dtype=np.int64)
    cols = np.empty(total, dtype=np.int64)
    vals = np.empty(total)
    k = 0
    for i in range(m):
        ax0, ax1, ay0, ay1 = _cell_span(qx[i], qy[i], qx0, qy0, qcell, qnx, qny)
        for cy in range(ay0, ay1 + 1):
            for cx in range(ax0, ax1 + 1):
                c = cy * qnx + cx
                for t in range(qstarts[c], qstarts[c + 1]):
                    j = qorder[t]
                    if j == i and not include_diag:
                        continue
                    dx = qx[j] - qx[i]
                    dy = qy[j] - qy[i]
                    d = math.sqrt(dx * dx + dy * dy)
                    if d > reach:
                        continue
                    if kind == STRAUSS:
                        delta = 1.0 if d <= r else 0.0
                    else:
                        delta = _geyer_pair_delta(i, j, qx, qy, qdata, px, py, tau,
                                                  starts, order, x0, y0, cell, nx, ny,
                                                  r, sigma)
                    if delta != 0.0:
                        rows[k] = i
                        cols[k] = j
                        vals[k] = delta
                        k += 1
    return rows[:k].copy(), cols[:k].copy(), vals[:k].copy(), total


# ---------------------------------------------------------------------------
# penalties: univariate minimizers of 0.5*a*(theta - z)^2 + c * pen(|theta|)

L1 = 0
L2 = 1
ENET = 2
SCAD = 3
MCP = 4


TIE_BAND = 1e-12


@njit(cache=True, inline="always")
def _soft(z, t):
    # a relative band of 1e-12 counts as a tie, which resolves to zero
    if abs(z) <= t * (1.0 + TIE_BAND):
        return 0.0
    if z > t:
        return z - t
    if z < -t:
        return z + t
    return 0.0


@njit(cache=True)
def penalty_scalar(kind, lam, shape, mix, theta):
    """Penalty value p_lam(theta) for theta >= 0 (``shape`` = SCAD/MC+ gamma)."""
    if kind == L1:
        return lam * theta
    if kind == L2:
        return 0.5 * lam * theta * theta
    if kind == ENET:
        return lam * (mix * theta + 0.5 * (1.0 - mix) * theta * theta)
    if kind == SCAD:
        if theta <= lam:
            return lam * theta
        if theta <= shape * lam:
            return (shape * lam * theta - 0.5 * (theta * theta + lam * lam)) / (shape - 1.0)
        return lam * lam * (shape * shape - 1.0) / (2.0 * (shape - 1.0))
    # MCP
    if theta <= shape * lam:
        return lam * theta - theta * theta / (2.0 * shape)
    return 0.5 * shape * lam * lam


@njit(cache=True)
def _branch_objective(kind, lam, shape, mix, a, c, x, theta):
    d = theta - x
    return 0.5 * a * d * d + c * penalty_scalar(kind, lam, shape, mix, theta)


@njit(cache=True)
def threshold(kind, lam, shape, mix, a, c, z):
    """Global minimizer over theta of 0.5*a*(theta - z)**2 + c*p_lam(|theta|).

    For the elastic net ``c`` scales only the l1 part. Non-convex kinds compare
    every branch candidate; ties go to the candidate closest to zero.
    """
    if c == 0.0 or lam == 0.0:
        return z
    if kind == L1:
        return _soft(z, c * lam / a)
    if kind == L2:
        return a * z / (a + c * lam)
    if kind == ENET:
        return _soft(a * z, c * lam * mix) / (a + lam * (1.0 - mix))
    sgn = 1.0 if z >= 0 else -1.0
    x = abs(z)
    cands = np.empty(6)
    nc = 0
    cands[nc] = 0.0
    nc += 1
    if kind == SCAD:
        knot1 = lam
        knot2 = shape * lam
        cands[nc] = min(max(x - c * lam / a, 0.0), knot1)
        nc += 1
        coef = a - c / (shape - 1.0)
        if coef > 0.0:
            t = (a * x - c * shape * lam / (shape - 1.0)) / coef
            cands[nc] = min(max(t, knot1), knot2)
            nc += 1
        cands[nc] = knot1
        nc += 1
        cands[nc] = knot2
        nc += 1
        cands[nc] = max(x, knot2)
        nc += 1
    else:
        knot = shape * lam
        coef = a - c / shape
        if coef > 0.0:
            t = (a * x - c * lam) / coef
            cands[nc] = min(max(t, 0.0), knot)
            nc += 1
        cands[nc] = knot
        nc += 1
        cands[nc] = max(x, knot)
        nc += 1
    best = 0.0
    fbest = _branch_objective(kind, lam, shape, mix, a, c, x, 0.0)
    for q in range(1, nc):
        f = _branch_objective(kind, lam, shape, mix, a, c, x, cands[q])
        if f < fbest or (f == fbest and cands[q] < best):
            fbest = f
            best = cands[q]
    return sgn * best


@njit(cache=True)
def cd_weighted_ls(X, w, ystar, theta, kinds, lams, shapes, mixes, cs, scale,
                   tol, max_sweeps):
    """Cyclic coordinate descent for
    0.5*scale*sum_i w_i (ystar_i - x_i^T theta)^2 + sum_j c_j p_j(|theta_j|).

    ``X`` should be Fortran-ordered. Uses a full sweep, then active-set sweeps
    until stable, then a confirming full sweep. Returns (theta, sweeps, converged).
    """
    n, p = X.shape
    resid = ystar - X @ theta
    a = np.empty(p)
    for j in range(p):
        s = 0.0
        for i in range(n):
            s += w[i] * X[i, j] * X[i, j]
        a[j] = s * scale
    active = np.zeros(p, dtype=np.bool_)
    sweeps = 0
    full = True
    converged = False
    while sweeps < max_sweeps:
        sweeps += 1
        maxdiff = 0.0
        for j in range(p):
            if not full and not active[j]:
                continue
            if a[j] <= 0.0:
                continue
            g = 0.0
            for i in range(n):
                g += w[i] * X[i, j] * resid[i]
            z = theta[j] + g * scale / a[j]
            new = threshold(kinds[j], lams[j], shapes[j], mixes[j], a[j], cs[j], z)
            d = new - theta[j]
            if d != 0.0:
                for i in range(n):
                    resid[i] -= d * X[i, j]
                theta[j] = new
                if abs(d) > maxdiff:
                    maxdiff = abs(d)
        if full:
            changed = False
            for j in range(p):
                nz = theta[j] != 0.0
                if nz != active[j]:
                    changed = True
                active[j] = nz
            if maxdiff < tol and not changed:
                converged = True
                break
            full = False
        elif maxdiff < tol:
            full = True
    return theta, sweeps, converged
