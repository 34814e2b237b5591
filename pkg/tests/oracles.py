"""Independent reference evaluations: direct sums, explicit DFTs, closed forms.

None of these touch the FFT engine of the package; they loop over probe points
and sum over every grid cell, so they are only practical on small grids.
"""

import math

import numpy as np


def probe_indices(grid, count=9, seed=0, margin=0):
    rng = np.random.default_rng(seed)
    lo, hi = margin, grid.N - margin
    return [tuple(int(v) for v in rng.integers(lo, hi, grid.n)) for _ in range(count)]


def _diffs(grid, idx):
    """x_idx - y_j for every cell j, as a tuple of arrays."""
    x = [grid.axis[i] for i in idx]
    return tuple(xi - c for xi, c in zip(x, grid.coords))


def direct_cz(f, kernel, eps, probes):
    g = f.grid
    out = []
    for idx in probes:
        u = _diffs(g, idx)
        rad = np.sqrt(sum(c * c for c in u))
        keep = rad > eps
        k = np.zeros(g.shape)
        k[keep] = kernel(*[c[keep] for c in u])
        out.append(g.cell_volume * np.sum(k * f.values))
    return np.array(out)


def _omega_vals(omega, u0, u1):
    return omega(np.arctan2(u1, u0))


def direct_rough(f, omega, eps, probes):
    g = f.grid
    out = []
    for idx in probes:
        u0, u1 = _diffs(g, idx)
        rad = np.hypot(u0, u1)
        keep = rad > eps
        k = np.zeros(g.shape)
        k[keep] = _omega_vals(omega, u0[keep], u1[keep]) / rad[keep] ** 2
        out.append(g.cell_volume * np.sum(k * f.values))
    return np.array(out)


def _cell_weights(t):
    t = np.asarray(t, dtype=float)
    mid = np.sqrt(t[1:] * t[:-1])
    lo = np.concatenate([[t[0] ** 2 / mid[0]], mid])
    hi = np.concatenate([mid, [np.inf]])
    return 0.5 * (lo**-2.0 - hi**-2.0)


def direct_marcinkiewicz(f, omega, t, probes, b=None):
    """Same t-quadrature as the package, inner sums evaluated per t by brute force.

    With ``b``, the integrand is (b(x) - b(y)) Omega/|x-y| f(y).
    """
    g = f.grid
    w = _cell_weights(t)
    out = []
    for idx in probes:
        u0, u1 = _diffs(g, idx)
        rad = np.hypot(u0, u1)
        dens = np.zeros(g.shape)
        nz = rad > 0
        dens[nz] = _omega_vals(omega, u0[nz], u1[nz]) / rad[nz]
        vals = f.values if b is None else (b.values[idx] - b.values) * f.values
        total = 0.0
        for tk, wk in zip(t, w):
            inside = nz & (rad <= tk * (1 + 1e-12))
            F = g.cell_volume * np.sum(dens[inside] * vals[inside])
            total += wk * F * F
        out.append(math.sqrt(total))
    return np.array(out)


def exact_t_marcinkiewicz(f, omega, probes):
    """Exact integral over t of the (piecewise constant in t) discrete F_t: no t-grid at all."""
    g = f.grid
    out = []
    for idx in probes:
        u0, u1 = _diffs(g, idx)
        rad = np.hypot(u0, u1).ravel()
        nz = rad > 0
        contrib = np.zeros(rad.shape)
        contrib[nz] = (_omega_vals(omega, u0.ravel()[nz], u1.ravel()[nz]) / rad[nz]) * f.values.ravel()[nz]
        order = np.argsort(rad[nz])
        d = rad[nz][order]
        F = np.cumsum(contrib[nz][order]) * g.cell_volume
        # group equal distances: F is constant on [d_i, d_{i+1})
        last = np.r_[d[1:] > d[:-1] * (1 + 1e-12), True]
        d, F = d[last], F[last]
        nxt = np.r_[d[1:], np.inf]
        total = np.sum(F**2 * 0.5 * (d**-2.0 - nxt**-2.0))
        out.append(math.sqrt(total))
    return np.array(out)


def _dft_matrix(P, N):
    j = np.arange(N)
    k = np.arange(P)
    return np.exp(-2j * np.pi * np.outer(k, j) / P)


def direct_bochner_riesz(f, delta, R, pad, probes):
    """Explicit DFT sums (matrix products, no FFT) of the padded multiplier."""
    g = f.grid
    N, P = g.N, pad * g.N
    xi = 2 * np.pi * np.fft.fftfreq(P, g.h)
    E = _dft_matrix(P, N)
    if g.n == 1:
        fh = E @ f.values
        m = np.maximum(1 - xi**2 / R**2, 0) ** delta
        out = [np.sum(m * fh * np.exp(2j * np.pi * np.arange(P) * i / P)) / P for (i,) in probes]
    else:
        fh = E @ f.values @ E.T
        m = np.maximum(1 - (xi[:, None] ** 2 + xi[None, :] ** 2) / R**2, 0) ** delta
        out = []
        for i, j in probes:
            ei = np.exp(2j * np.pi * np.arange(P) * i / P)
            ej = np.exp(2j * np.pi * np.arange(P) * j / P)
            out.append(ei @ (m * fh) @ ej / P**2)
    out = np.array(out)
    return out.real if not np.iscomplexobj(f.values) else out


def direct_commutator(direct, b, f, probes, **kw):
    """b(x) T f(x) - T(b f)(x) with T a direct oracle."""
    Tf = direct(f, probes=probes, **kw)
    Tbf = direct(f.with_values(b.values * f.values), probes=probes, **kw)
    bx = np.array([b.values[idx] for idx in probes])
    return bx * Tf - Tbf


def hilbert_of_interval(x, a=-1.0, b=1.0):
    return np.log(np.abs((x - a) / (x - b))) / math.pi
