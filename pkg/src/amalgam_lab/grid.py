"""Uniform cell-centered grids on [-L, L]^n, sampled functions and balls.

Everything downstream (norms, weights, operators) works on a ``GridFunction``:
an ``(N,)`` or ``(N, N)`` array of samples taken at cell centers

    x_i = -L + (i + 1/2) h,    h = 2L / N,

so no sample ever sits at the origin. Balls are open and membership is decided
by cell center. Sums over every ball of a given radius centered at grid points
are the workhorse of the ball sweeps and are computed by :func:`ball_sums`.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Iterator

import numpy as np
from scipy.ndimage import minimum_filter1d

from .errors import LabError

__all__ = [
    "Grid",
    "GridFunction",
    "Ball",
    "BallFamily",
    "make_grid",
    "make_family",
    "sample",
    "integrate",
    "ball_indicator",
    "ball_offsets",
    "ball_sums",
    "ball_minimum",
    "admissible_centers",
    "dilate",
]


def _is_pow2(N):
    return N >= 1 and (N & (N - 1)) == 0


@dataclass(frozen=True)
class Grid:
    n: int
    L: float
    N: int

    def __post_init__(self):
        if self.n not in (1, 2):
            raise LabError("invalid-dimension", f"n={self.n}, expected 1 or 2")
        if not isinstance(self.N, (int, np.integer)) or not _is_pow2(int(self.N)) or self.N < 8:
            raise LabError("N-not-power-of-two", f"N={self.N}")
        if not self.L > 0:
            raise LabError("invalid-half-width", f"L={self.L}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "L", float(self.L))

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.N

    @property
    def shape(self) -> tuple:
        return (self.N,) * self.n

    @property
    def cell_volume(self) -> float:
        return self.h**self.n

    @cached_property
    def axis(self) -> np.ndarray:
        """Cell-center coordinates along one axis."""
        return -self.L + (np.arange(self.N) + 0.5) * self.h

    @cached_property
    def coords(self) -> tuple:
        if self.n == 1:
            return (self.axis,)
        return tuple(np.meshgrid(self.axis, self.axis, indexing="ij"))

    @cached_property
    def radius(self) -> np.ndarray:
        """|x| at every cell center."""
        if self.n == 1:
            return np.abs(self.axis)
        x1, x2 = self.coords
        return np.hypot(x1, x2)

    def refine(self, factor=2) -> "Grid":
        return Grid(self.n, self.L, self.N * factor)

    def zeros(self, dtype=float) -> "GridFunction":
        return GridFunction(self, np.zeros(self.shape, dtype=dtype))


def make_grid(n, L, N) -> Grid:
    return Grid(int(n), L, N)


@dataclass(eq=False)
class GridFunction:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.size != self.grid.N**self.grid.n:
            raise LabError("shape-mismatch", f"{values.size} samples for a grid of {self.grid.N}^{self.grid.n}")
        values = values.reshape(self.grid.shape)
        if not np.all(np.isfinite(values)):
            raise LabError("non-finite-values")
        if not np.iscomplexobj(values):
            values = values.astype(float, copy=False)
        self.values = values

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.values)

    def with_values(self, values) -> "GridFunction":
        return GridFunction(self.grid, values)

    def abs(self) -> "GridFunction":
        return self.with_values(np.abs(self.values))

    def is_zero(self) -> bool:
        return not np.any(self.values)

    def _other(self, other):
        if isinstance(other, GridFunction):
            if other.grid != self.grid:
                raise LabError("grid-mismatch")
            return other.values
        return other

    def __add__(self, other):
        return self.with_values(self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return self.with_values(self.values - self._other(other))

    def __mul__(self, other):
        return self.with_values(self.values * self._other(other))

    __rmul__ = __mul__

    def __neg__(self):
        return self.with_values(-self.values)

    def __repr__(self):
        return f"GridFunction(n={self.grid.n}, N={self.grid.N}, L={self.grid.L}, dtype={self.values.dtype})"


def sample(grid: Grid, func: Callable) -> GridFunction:
    """Sample ``func(*coords)`` at the cell centers."""
    values = np.broadcast_to(np.asarray(func(*grid.coords)), grid.shape)
    return GridFunction(grid, np.array(values))


def integrate(f: GridFunction):
    """Riemann sum h^n * sum(values)."""
    return f.grid.cell_volume * f.values.sum()


@dataclass(frozen=True)
class Ball:
    center: tuple
    r: float

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.center, dtype=float))
        object.__setattr__(self, "center", tuple(float(v) for v in c))
        if not self.r > 0:
            raise LabError("nonpositive-radius", f"r={self.r}")
        object.__setattr__(self, "r", float(self.r))

    def scaled(self, lam) -> "Ball":
        return Ball(self.center, lam * self.r)

    def inside(self, grid: Grid) -> bool:
        """True when the ball is contained in [-L, L]^n."""
        return all(abs(c) + self.r <= grid.L for c in self.center)

    def volume(self, n) -> float:
        return 2.0 * self.r if n == 1 else np.pi * self.r**2


def _check_center(grid, B):
    if len(B.center) != grid.n:
        raise LabError("dimension-mismatch", f"center {B.center} in n={grid.n}")
    if any(abs(c) > grid.L for c in B.center):
        raise LabError("ball-outside-domain", f"center {B.center} not in [-{grid.L}, {grid.L}]^{grid.n}")


def ball_mask(grid: Grid, B: Ball) -> np.ndarray:
    _check_center(grid, B)
    if B.r < grid.h:
        raise LabError("radius-below-grid", f"r={B.r} < h={grid.h}")
    d2 = sum((x - c) ** 2 for x, c in zip(grid.coords, B.center))
    return d2 < B.r**2


def ball_indicator(grid: Grid, B: Ball) -> GridFunction:
    return GridFunction(grid, ball_mask(grid, B).astype(float))


def _max_offset(s):
    """Largest integer m >= 0 with m*m < s (s = (r/h)^2)."""
    m = max(int(np.ceil(np.sqrt(s))) - 1, 0)
    while (m + 1) ** 2 < s:
        m += 1
    while m > 0 and m * m >= s:
        m -= 1
    return m


def _row_halfwidths(grid, r):
    s = (r / grid.h) ** 2
    M = _max_offset(s)
    return M, [_max_offset(s - dy * dy) for dy in range(M + 1)]


def ball_offsets(grid: Grid, r) -> np.ndarray:
    """Integer offsets u with |u| h < r, shape (m, n)."""
    M, widths = _row_halfwidths(grid, r)
    if grid.n == 1:
        return np.arange(-M, M + 1)[:, None]
    rows = []
    for dy in range(-M, M + 1):
        a = widths[abs(dy)]
        dx = np.arange(-a, a + 1)
        rows.append(np.column_stack([np.full_like(dx, dy), dx]))
    return np.concatenate(rows)


def ball_sums(values: np.ndarray, grid: Grid, r) -> np.ndarray:
    """Sum of ``values`` over B(x_c, r) for every grid point x_c.

    Cells outside the domain contribute nothing, so the result is only a true
    ball sum at centers returned by :func:`admissible_centers`.
    """
    values = np.asarray(values).reshape(grid.shape)
    N = grid.N
    M, widths = _row_halfwidths(grid, r)
    if grid.n == 1:
        full = np.convolve(values, np.ones(2 * M + 1), mode="full")
        return full[M:M + N]

    # disk = union of horizontal segments, one per row offset dy
    P = np.zeros((N, N + 1), dtype=values.dtype)
    np.cumsum(values, axis=1, out=P[:, 1:])
    cols = np.arange(N)
    out = np.zeros(grid.shape, dtype=values.dtype)
    for dy in range(M + 1):
        a = widths[dy]
        H = P[:, np.minimum(cols + a + 1, N)] - P[:, np.maximum(cols - a, 0)]
        if dy == 0:
            out += H
        elif dy < N:
            out[:-dy] += H[dy:]
            out[dy:] += H[:-dy]
    return out


def ball_minimum(values: np.ndarray, grid: Grid, r) -> np.ndarray:
    """Minimum of ``values`` over B(x_c, r) for every grid point x_c."""
    values = np.asarray(values, dtype=float).reshape(grid.shape)
    M, widths = _row_halfwidths(grid, r)
    if grid.n == 1:
        return minimum_filter1d(values, 2 * M + 1, mode="constant", cval=np.inf)
    out = np.full(grid.shape, np.inf)
    for dy in range(M + 1):
        H = minimum_filter1d(values, 2 * widths[dy] + 1, axis=1, mode="constant", cval=np.inf)
        if dy == 0:
            np.minimum(out, H, out=out)
        elif dy < grid.N:
            np.minimum(out[:-dy], H[dy:], out=out[:-dy])
            np.minimum(out[dy:], H[:-dy], out=out[dy:])
    return out


def admissible_centers(grid: Grid, r, stride=1) -> np.ndarray:
    """Boolean mask of grid points y (on the stride lattice) with B(y, r) inside the domain."""
    x = grid.axis
    ok = (x - r >= -grid.L) & (x + r <= grid.L)
    if stride > 1:
        ok &= (np.arange(grid.N) % stride) == 0
    if grid.n == 1:
        return ok
    return ok[:, None] & ok[None, :]


@dataclass(frozen=True)
class BallFamily:
    """Balls centered on a strided sub-lattice of grid points with radii from a finite set.

    Only balls contained in the domain belong to the family.
    """

    grid: Grid
    radii: tuple
    stride: int = 1

    def __post_init__(self):
        radii = tuple(float(r) for r in self.radii)
        object.__setattr__(self, "radii", radii)
        if not radii:
            raise LabError("empty-family", "no radii")
        for r in radii:
            if r < self.grid.h:
                raise LabError("radius-below-grid", f"r={r} < h={self.grid.h}")
            if not admissible_centers(self.grid, r, self.stride).any():
                raise LabError("empty-family", f"no admissible center for r={r}")

    def centers(self, r) -> np.ndarray:
        return admissible_centers(self.grid, r, self.stride)

    def __iter__(self) -> Iterator[Ball]:
        for r in self.radii:
            mask = self.centers(r)
            for idx in zip(*np.nonzero(mask)):
                yield Ball(tuple(self.grid.axis[i] for i in idx), r)

    def __len__(self):
        return int(sum(self.centers(r).sum() for r in self.radii))

    def extended(self) -> "BallFamily":
        """One more dyadic generation of radii, when the domain allows it."""
        r = 2 * max(self.radii)
        if admissible_centers(self.grid, r, self.stride).any():
            return BallFamily(self.grid, self.radii + (r,), self.stride)
        r = 0.5 * min(self.radii)
        if r >= self.grid.h:
            return BallFamily(self.grid, (r,) + self.radii, self.stride)
        return self

    def on(self, grid: Grid) -> "BallFamily":
        """Same radii on another grid, stride rescaled to keep the physical lattice."""
        stride = max(1, self.stride * grid.N // self.grid.N)
        radii = tuple(r for r in self.radii if r >= grid.h)
        return BallFamily(grid, radii, stride)


def dyadic_radii(grid: Grid, kmin=0, kmax=None, stride=1) -> tuple:
    """Radii 2^k h, k = kmin..kmax, keeping those with an admissible center."""
    out = []
    k = kmin
    while kmax is None or k <= kmax:
        r = grid.h * 2.0**k
        if not admissible_centers(grid, r, stride).any():
            break
        out.append(r)
        k += 1
    return tuple(out)


def make_family(grid: Grid, stride=1, kmin=0, kmax=None) -> BallFamily:
    radii = dyadic_radii(grid, kmin, kmax, stride)
    if not radii:
        raise LabError("empty-family")
    return BallFamily(grid, radii, stride)


def dilate(f: GridFunction, r, alpha) -> GridFunction:
    """delta_r^alpha f(x) = r^(n/alpha) f(r x), nearest-cell lookup, zero outside the domain."""
    if not r > 0:
        raise LabError("nonpositive-scale", f"r={r}")
    if r == 1:
        return f.with_values(f.values.copy())
    g = f.grid
    idx = np.floor((r * g.axis + g.L) / g.h).astype(np.int64)
    valid = (idx >= 0) & (idx < g.N)
    idx = np.clip(idx, 0, g.N - 1)
    scale = r ** (g.n / alpha)
    if g.n == 1:
        out = np.where(valid, f.values[idx], 0)
    else:
        out = f.values[np.ix_(idx, idx)] * (valid[:, None] & valid[None, :])
    return f.with_values(scale * out)


def coarse_lattice(grid: Grid, r) -> Grid:
    """Grid whose cell centers are r * (cell centers of ``grid``)."""
    return Grid(grid.n, grid.L * r, grid.N)
