"""Discrete singular integrals, square functions and Fourier multipliers.

Convolution operators are evaluated as h^n * sum_j K(x - y_j) f(y_j) over the
grid with the kernel sampled on integer offsets -(N-1)..N-1 per axis. The sum
is a linear (not circular) convolution, obtained from a length-2N FFT per axis:
with f zero-padded to 2N, the wrap-around lands only in the discarded half.

Principal values are symmetric truncations |x - y| > eps, eps = 2h by default.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.fft as sfft
from scipy.ndimage import distance_transform_edt

from .errors import LabError
from .grid import Ball, Grid, GridFunction, ball_mask, sample

__all__ = [
    "CZKernel",
    "hilbert_kernel",
    "riesz_kernel",
    "SphereKernel",
    "sphere_kernel",
    "OperatorSpec",
    "parse_operator",
    "symbol",
    "apply_cz",
    "rough_singular",
    "t_grid",
    "marcinkiewicz",
    "bochner_riesz",
    "bochner_riesz_max",
    "br_radii",
    "commutator",
    "marcinkiewicz_commutator",
    "apply",
    "hyp1_majorant",
    "size_majorant",
    "off_support_cells",
    "geometric_estimate_violations",
    "set_fft_workers",
]

_WORKERS = None


def set_fft_workers(k):
    """Cap the threads scipy.fft may use (None = library default)."""
    global _WORKERS
    _WORKERS = None if k is None else max(1, int(k))


# --- convolution engine --------------------------------------------------------


@lru_cache(maxsize=8)
def _offsets(grid: Grid):
    """Offset vectors u (in physical units) on the 2N-periodic layout, slot N zeroed out."""
    N = grid.N
    k = np.fft.fftfreq(2 * N, 1.0 / (2 * N))
    valid1 = np.abs(k) <= N - 1
    if grid.n == 1:
        return (k * grid.h,), valid1
    k0, k1 = np.meshgrid(k, k, indexing="ij")
    return (k0 * grid.h, k1 * grid.h), valid1[:, None] & valid1[None, :]


def _offset_radius(grid):
    u, _ = _offsets(grid)
    return np.sqrt(sum(c * c for c in u))


def _kernel_spectrum(kernel_array):
    return sfft.rfftn(kernel_array, workers=_WORKERS)


def _forward(values, grid: Grid):
    return sfft.rfftn(values, s=(2 * grid.N,) * grid.n, workers=_WORKERS)


def _backward(product, grid: Grid):
    out = sfft.irfftn(product, s=(2 * grid.N,) * grid.n, workers=_WORKERS)
    return grid.cell_volume * out[(slice(0, grid.N),) * grid.n]


def _convolve(values, spectrum, grid: Grid):
    """h^n * linear convolution of grid values with a kernel given by its 2N-spectrum."""
    if np.iscomplexobj(values):
        return _convolve(values.real, spectrum, grid) + 1j * _convolve(values.imag, spectrum, grid)
    return _backward(_forward(values, grid) * spectrum, grid)


def _check_eps(grid, eps):
    if eps is None:
        return 2.0 * grid.h
    if eps < grid.h / 2:
        raise LabError("epsilon-below-grid", f"eps={eps} < h/2={grid.h / 2}")
    return float(eps)


# --- kernels ------------------------------------------------------------------


@dataclass(frozen=True)
class CZKernel:
    """K(x) = c * x_j / |x|^{n+1} (j is 1-based); Hilbert and Riesz kernels are instances.

    ``C_K`` bounds both |K(x)| |x|^n and |grad K(x)| |x|^{n+1}.
    """

    name: str
    n: int
    j: int = 1
    c: float = 1.0 / math.pi

    def __post_init__(self):
        if self.n not in (1, 2) or not (1 <= self.j <= self.n):
            raise LabError("invalid-kernel", f"{self.name}: n={self.n}, j={self.j}")

    @property
    def C_K(self) -> float:
        return (self.n + 2) * abs(self.c)

    def __call__(self, *x):
        x = [np.asarray(v, dtype=float) for v in x]
        r2 = sum(v * v for v in x)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = self.c * x[self.j - 1] / r2 ** ((self.n + 1) / 2.0)
        return np.where(r2 > 0, out, 0.0)

    def gradient(self, *x, step=1e-6):
        """Central finite-difference gradient, relative step."""
        x = [np.asarray(v, dtype=float) for v in x]
        scale = np.sqrt(sum(v * v for v in x))
        grads = []
        for i in range(self.n):
            d = step * scale
            xp = [v + (d if k == i else 0) for k, v in enumerate(x)]
            xm = [v - (d if k == i else 0) for k, v in enumerate(x)]
            grads.append((self(*xp) - self(*xm)) / (2 * d))
        return grads

    def check_bounds(self, shells=range(-6, 7), samples=64, seed=0):
        """Measured sup of |K||x|^n and |grad K||x|^{n+1} over dyadic shells."""
        rng = np.random.default_rng(seed)
        size, grad = 0.0, 0.0
        for k in shells:
            rad = 2.0**k * rng.uniform(1.0, 2.0, samples)
            if self.n == 1:
                pts = [rad * rng.choice([-1.0, 1.0], samples)]
            else:
                ang = rng.uniform(0, 2 * np.pi, samples)
                pts = [rad * np.cos(ang), rad * np.sin(ang)]
            size = max(size, float(np.max(np.abs(self(*pts)) * rad**self.n)))
            g = np.sqrt(sum(gi * gi for gi in self.gradient(*pts)))
            grad = max(grad, float(np.max(g * rad ** (self.n + 1))))
        return size, grad


def hilbert_kernel() -> CZKernel:
    return CZKernel("hilbert", 1, 1, 1.0 / math.pi)


def riesz_kernel(j, n) -> CZKernel:
    """R_j with c_n = Gamma((n+1)/2) / pi^{(n+1)/2}."""
    c = math.gamma((n + 1) / 2.0) / math.pi ** ((n + 1) / 2.0)
    return CZKernel(f"riesz_{j}", n, j, c)


_CLOSED_FORMS = {
    "cos": np.cos,
    "sin": np.sin,
    "cos2": lambda t: np.cos(2 * t),
    "step": lambda t: np.where(np.cos(t) >= 0, 1.0, -1.0),
    "zero": np.zeros_like,
}


@dataclass(frozen=True)
class SphereKernel:
    """Mean-zero function on the circle, sampled at M uniform angles.

    Named closed forms are evaluated exactly (minus the quadrature mean of the
    samples); sampled kernels without a name are read by nearest-angle lookup.
    """

    name: str
    samples: tuple = field(repr=False)
    theta: float = math.inf

    @property
    def M(self):
        return len(self.samples)

    @property
    def angles(self):
        return 2 * np.pi * np.arange(self.M) / self.M

    @property
    def mean(self):
        return float(np.mean(self.samples))

    def __call__(self, angle):
        angle = np.asarray(angle, dtype=float)
        if self.name in _CLOSED_FORMS:
            return _CLOSED_FORMS[self.name](angle) - self._offset
        k = np.rint(np.mod(angle, 2 * np.pi) * self.M / (2 * np.pi)).astype(np.int64) % self.M
        return np.asarray(self.samples)[k]

    @property
    def _offset(self):
        # quadrature mean of the raw closed form, removed at construction
        return float(np.mean(_CLOSED_FORMS[self.name](self.angles)))

    def lebesgue_norm(self, theta=None):
        """||Omega||_{L^theta(S^1)} by the uniform quadrature (theta = inf gives the max)."""
        theta = self.theta if theta is None else theta
        v = np.abs(np.asarray(self.samples))
        if theta == math.inf:
            return float(v.max())
        return float((2 * np.pi * np.mean(v**theta)) ** (1.0 / theta))

    def of_vector(self, u0, u1):
        return self(np.arctan2(u1, u0))


def sphere_kernel(name_or_values, M=256, theta=math.inf) -> SphereKernel:
    """Named closed form (cos, sin, cos2, step, zero) or explicit samples, mean removed."""
    if isinstance(name_or_values, str):
        if name_or_values not in _CLOSED_FORMS:
            raise LabError("unknown-omega", name_or_values)
        raw = _CLOSED_FORMS[name_or_values](2 * np.pi * np.arange(M) / M)
        name = name_or_values
    else:
        raw = np.asarray(name_or_values, dtype=float)
        name = "sampled"
    vals = raw - raw.mean()
    return SphereKernel(name, tuple(float(v) for v in vals), float(theta))


# --- operator specs -----------------------------------------------------------

SYMBOLS = ("linear", "log", "const", "step")
LINEAR_KINDS = ("hilbert", "riesz", "rough", "br", "comm")


@dataclass(frozen=True)
class OperatorSpec:
    kind: str
    params: tuple = ()
    base: "OperatorSpec | None" = None
    b: str | None = None

    def get(self, key, default=None):
        return dict(self.params).get(key, default)

    @property
    def linear(self) -> bool:
        return self.kind in LINEAR_KINDS

    @property
    def text(self) -> str:
        p = dict(self.params)
        if self.kind == "hilbert":
            return "hilbert"
        if self.kind == "riesz":
            return f"riesz:{p['j']}"
        if self.kind in ("rough", "marcinkiewicz"):
            return f"{self.kind}:{p['omega']}"
        if self.kind == "br":
            return f"br:delta={p['delta']:g},R={p['R']:g}"
        if self.kind == "brmax":
            return f"brmax:delta={p['delta']:g}"
        if self.kind == "comm":
            return f"comm:{self.base.text},b={self.b}"
        return f"mcomm:{p['omega']},b={self.b}"


def _kv(body, text):
    out = {}
    for part in body.split(","):
        k, sep, v = part.partition("=")
        if not sep:
            raise LabError("bad-operator-spec", text)
        try:
            out[k.strip()] = float(v)
        except ValueError as exc:
            raise LabError("bad-operator-spec", text) from exc
    return out


def parse_operator(text: str) -> OperatorSpec:
    """Parse the operator mini-language (hilbert, riesz:1, rough:cos, br:delta=0.5,R=16, ...)."""
    text = text.strip()
    kind, _, arg = text.partition(":")
    if kind == "hilbert" and not arg:
        return OperatorSpec("hilbert")
    if kind == "riesz":
        try:
            return OperatorSpec("riesz", (("j", int(arg)),))
        except ValueError as exc:
            raise LabError("bad-operator-spec", text) from exc
    if kind in ("rough", "marcinkiewicz"):
        if arg not in _CLOSED_FORMS:
            raise LabError("bad-operator-spec", text)
        return OperatorSpec(kind, (("omega", arg),))
    if kind == "br":
        kv = _kv(arg, text)
        if set(kv) != {"delta", "R"}:
            raise LabError("bad-operator-spec", text)
        if kv["R"] <= 0:
            raise LabError("nonpositive-R", text)
        if kv["delta"] <= 0:
            raise LabError("invalid-order", text)
        return OperatorSpec("br", (("R", kv["R"]), ("delta", kv["delta"])))
    if kind == "brmax":
        kv = _kv(arg, text)
        if set(kv) != {"delta"} or kv["delta"] <= 0:
            raise LabError("bad-operator-spec", text)
        return OperatorSpec("brmax", (("delta", kv["delta"]),))
    if kind in ("comm", "mcomm"):
        head, sep, b = arg.rpartition(",b=")
        if not sep or b not in SYMBOLS:
            raise LabError("bad-operator-spec", text)
        if kind == "mcomm":
            if head not in _CLOSED_FORMS:
                raise LabError("bad-operator-spec", text)
            return OperatorSpec("mcomm", (("omega", head),), b=b)
        base = parse_operator(head)
        if not base.linear or base.kind == "comm":
            raise LabError("base-not-linear", head)
        return OperatorSpec("comm", base=base, b=b)
    raise LabError("bad-operator-spec", text)


def symbol(name: str, grid: Grid) -> GridFunction:
    """BMO test symbols: linear (x_1), log (log|x|), const (1), step (chi_{x_1 >= 0})."""
    if name == "linear":
        return sample(grid, lambda *x: x[0])
    if name == "log":
        return GridFunction(grid, np.log(grid.radius))
    if name == "const":
        return GridFunction(grid, np.ones(grid.shape))
    if name == "step":
        return sample(grid, lambda *x: (x[0] >= 0).astype(float))
    raise LabError("unknown-symbol", name)


# --- Calderón–Zygmund and rough singular integrals ----------------------------


@lru_cache(maxsize=16)
def _cz_spectrum(K: CZKernel, grid: Grid, eps: float):
    u, valid = _offsets(grid)
    rad = _offset_radius(grid)
    k = np.where(valid & (rad > eps), K(*u), 0.0)
    return _kernel_spectrum(k)


def apply_cz(f: GridFunction, K: CZKernel, eps=None) -> GridFunction:
    """Truncated principal value h^n sum_{|x-y_j|>eps} K(x-y_j) f(y_j)."""
    g = f.grid
    if K.n != g.n:
        raise LabError("dimension-mismatch", f"kernel n={K.n}, grid n={g.n}")
    eps = _check_eps(g, eps)
    return f.with_values(_convolve(f.values, _cz_spectrum(K, g, eps), g))


@lru_cache(maxsize=16)
def _rough_spectrum(omega: SphereKernel, grid: Grid, eps: float):
    u, valid = _offsets(grid)
    rad = _offset_radius(grid)
    keep = valid & (rad > eps)
    with np.errstate(divide="ignore", invalid="ignore"):
        k = np.where(keep, omega.of_vector(*u) / rad**2, 0.0)
    return _kernel_spectrum(k)


def rough_singular(f: GridFunction, omega: SphereKernel, eps=None) -> GridFunction:
    """Truncated T_Omega f with kernel Omega(u/|u|) / |u|^2 (n = 2)."""
    g = f.grid
    if g.n != 2:
        raise LabError("dimension-not-two", f"n={g.n}")
    eps = _check_eps(g, eps)
    return f.with_values(_convolve(f.values, _rough_spectrum(omega, g, eps), g))


# --- Marcinkiewicz integral ---------------------------------------------------


def t_grid(grid: Grid, ratio=2.0**0.25, tmax=None) -> np.ndarray:
    """Geometric t_k = h * ratio^k from h up to the first value >= tmax (default 4L)."""
    tmax = 4.0 * grid.L if tmax is None else tmax
    K = int(math.ceil(math.log(tmax / grid.h) / math.log(ratio) - 1e-12))
    return grid.h * ratio ** np.arange(K + 1)


def _t_weights(t):
    """integral of dt/t^3 over the log-midpoint cell of each t_k; the last cell runs to infinity."""
    t = np.asarray(t, dtype=float)
    if len(t) == 1:
        return np.array([0.5 / t[0] ** 2])
    mid = np.sqrt(t[1:] * t[:-1])
    lo = np.concatenate([[t[0] ** 2 / mid[0]], mid])
    hi = np.concatenate([mid, [np.inf]])
    return 0.5 * (lo**-2.0 - hi**-2.0)


@lru_cache(maxsize=2)
def _shell_spectra(omega: SphereKernel, grid: Grid, t: tuple):
    """Spectra of the shell kernels Omega(u')/|u| on t_{k-1} < |u| <= t_k."""
    u, valid = _offsets(grid)
    rad = _offset_radius(grid)
    tt = np.asarray(t)
    keep = valid & (rad > 0)
    shell = np.searchsorted(tt, rad * (1 - 1e-12), side="left")
    with np.errstate(divide="ignore", invalid="ignore"):
        k = np.where(keep, omega.of_vector(*u) / rad, 0.0)
    spectra = []
    for i in range(len(tt)):
        part = np.where(keep & (shell == i), k, 0.0)
        spectra.append(_kernel_spectrum(part) if part.any() else None)
    return spectra


def _shell_fields(values_list, omega, grid, t):
    """Yield, for each t_k, the truncated fields F_{t_k}[v] for every v in values_list."""
    spectra = _shell_spectra(omega, grid, tuple(float(x) for x in t))
    fwd = [_forward(v, grid) for v in values_list]
    acc = [np.zeros(grid.shape) for _ in values_list]
    for spec in spectra:
        if spec is not None:
            for a, fv in zip(acc, fwd):
                a += _backward(fv * spec, grid)
        yield acc


def _check_t(grid, t):
    if t is None:
        t = t_grid(grid)
    t = np.asarray(t, dtype=float)
    if t.size == 0:
        raise LabError("empty-t-grid")
    if grid.n != 2:
        raise LabError("dimension-not-two", f"n={grid.n}")
    return t


def marcinkiewicz(f: GridFunction, omega: SphereKernel, t=None) -> GridFunction:
    """mu_Omega f = (integral |F_t f|^2 dt/t^3)^{1/2}, F_t f = sum over |x-y| <= t of Omega/|x-y| f h^2."""
    if f.is_complex:
        raise LabError("complex-input", "square function takes real input")
    g = f.grid
    t = _check_t(g, t)
    w = _t_weights(t)
    total = np.zeros(g.shape)
    for wk, (F,) in zip(w, _shell_fields([f.values], omega, g, t)):
        total += wk * F * F
    return f.with_values(np.sqrt(total))


def marcinkiewicz_commutator(b: GridFunction, omega: SphereKernel, f: GridFunction, t=None) -> GridFunction:
    """[b, mu_Omega] f (x) = mu_Omega[(b(x) - b) f](x), from the shell fields of f and b f."""
    g = f.grid
    t = _check_t(g, t)
    w = _t_weights(t)
    bv = np.real(b.values)
    total = np.zeros(g.shape)
    for wk, (F, G) in zip(w, _shell_fields([f.values, bv * f.values], omega, g, t)):
        D = bv * F - G
        total += wk * D * D
    return f.with_values(np.sqrt(total))


# --- Bochner–Riesz ------------------------------------------------------------


@lru_cache(maxsize=16)
def _br_multiplier(grid: Grid, delta: float, R: float, pad: int):
    P = pad * grid.N
    xi = 2 * np.pi * np.fft.fftfreq(P, grid.h)
    if grid.n == 1:
        s = xi**2
    else:
        s = xi[:, None] ** 2 + xi[None, :] ** 2
    m = np.maximum(1.0 - s / R**2, 0.0) ** delta
    m.setflags(write=False)
    return m


def bochner_riesz(f: GridFunction, delta, R, pad=2) -> GridFunction:
    """Multiplier (1 - |xi|^2/R^2)_+^delta on the grid zero-padded to pad*N per axis.

    pad = 1 is the periodic transform, exact on grid-resonant modes.
    """
    if not R > 0:
        raise LabError("nonpositive-R", f"R={R}")
    if not delta > 0:
        raise LabError("invalid-order", f"delta={delta}")
    g = f.grid
    shape = (pad * g.N,) * g.n
    m = _br_multiplier(g, float(delta), float(R), int(pad))
    out = sfft.ifftn(sfft.fftn(f.values, s=shape, workers=_WORKERS) * m, workers=_WORKERS)
    out = out[(slice(0, g.N),) * g.n]
    if not f.is_complex:
        out = out.real
    return f.with_values(out)


def br_radii(grid: Grid) -> tuple:
    """Dyadic R from the coarsest frequency pi/L up to pi N / (2L)."""
    out, R = [], math.pi / grid.L
    top = math.pi * grid.N / (2 * grid.L)
    while R <= top * (1 + 1e-12):
        out.append(R)
        R *= 2
    return tuple(out)


def bochner_riesz_max(f: GridFunction, delta, radii=None, pad=2) -> GridFunction:
    """Pointwise max over the R-set of |T^delta_R f|."""
    radii = br_radii(f.grid) if radii is None else tuple(radii)
    if not radii:
        raise LabError("empty-R-set")
    out = np.zeros(f.grid.shape)
    for R in radii:
        np.maximum(out, np.abs(bochner_riesz(f, delta, R, pad).values), out=out)
    return f.with_values(out)


# --- commutators and dispatch -------------------------------------------------


def _omega(spec):
    return sphere_kernel(spec.get("omega"))


def _linear_apply(spec: OperatorSpec, f: GridFunction, eps=None, pad=2):
    g = f.grid
    if spec.kind == "hilbert":
        if g.n != 1:
            raise LabError("dimension-mismatch", "hilbert needs n = 1")
        return apply_cz(f, hilbert_kernel(), eps)
    if spec.kind == "riesz":
        return apply_cz(f, riesz_kernel(spec.get("j"), g.n), eps)
    if spec.kind == "rough":
        return rough_singular(f, _omega(spec), eps)
    if spec.kind == "br":
        return bochner_riesz(f, spec.get("delta"), spec.get("R"), pad)
    raise LabError("base-not-linear", spec.kind)


def commutator(base: OperatorSpec, b: GridFunction, f: GridFunction, eps=None, pad=2) -> GridFunction:
    """[b, T] f = b T f - T(b f) with one truncation / padding for both terms."""
    if not base.linear or base.kind == "comm":
        raise LabError("base-not-linear", base.kind)
    Tf = _linear_apply(base, f, eps, pad)
    Tbf = _linear_apply(base, f.with_values(np.real(b.values) * f.values), eps, pad)
    return f.with_values(np.real(b.values) * Tf.values - Tbf.values)


def apply(spec: OperatorSpec | str, f: GridFunction, eps=None, pad=2, t=None, radii=None) -> GridFunction:
    """Apply any operator of the mini-language to f."""
    if isinstance(spec, str):
        spec = parse_operator(spec)
    if spec.kind in ("hilbert", "riesz", "rough", "br"):
        return _linear_apply(spec, f, eps, pad)
    if spec.kind == "marcinkiewicz":
        return marcinkiewicz(f, _omega(spec), t)
    if spec.kind == "brmax":
        return bochner_riesz_max(f, spec.get("delta"), radii, pad)
    if spec.kind == "comm":
        return commutator(spec.base, symbol(spec.b, f.grid), f, eps, pad)
    if spec.kind == "mcomm":
        return marcinkiewicz_commutator(symbol(spec.b, f.grid), _omega(spec), f, t)
    raise LabError("bad-operator-spec", spec.kind)


# --- majorants and geometry ---------------------------------------------------


def hyp1_majorant(f: GridFunction, B: Ball, s=1.0, eta=0.0, kmax=4, profile="linear") -> GridFunction:
    """sum_{k=1}^{kmax} c_k (avg over 2^{k+1}B of |f|^s)^{1/s}, constant on B and zero elsewhere.

    c_k = 1 + eta k (``linear``) or k^2 (``k2``).
    """
    if s < 1:
        raise LabError("invalid-exponent", f"s={s}")
    g = f.grid
    if not B.scaled(2.0 ** (kmax + 1)).inside(g):
        raise LabError("dilated-ball-outside-domain", f"2^{kmax + 1}B leaves the domain")
    a = np.abs(f.values) ** s
    total = 0.0
    for k in range(1, kmax + 1):
        m = ball_mask(g, B.scaled(2.0 ** (k + 1)))
        c = 1.0 + eta * k if profile == "linear" else float(k * k)
        total += c * float(a[m].mean()) ** (1.0 / s)
    return f.with_values(np.where(ball_mask(g, B), total, 0.0))


def off_support_cells(supp: np.ndarray, grid: Grid, margin=2.0) -> np.ndarray:
    """Cells at distance >= margin*h from every support cell."""
    supp = np.asarray(supp).reshape(grid.shape) != 0
    if not supp.any():
        return np.ones(grid.shape, dtype=bool)
    dist = distance_transform_edt(~supp, sampling=grid.h)
    return dist >= margin * grid.h * (1 - 1e-12)


@lru_cache(maxsize=8)
def _size_spectrum(grid: Grid):
    u, valid = _offsets(grid)
    rad = _offset_radius(grid)
    with np.errstate(divide="ignore"):
        k = np.where(valid & (rad > 0), 1.0 / rad**grid.n, 0.0)
    return _kernel_spectrum(k)


def size_majorant(f: GridFunction, supp, at=None) -> GridFunction:
    """integral |f(y)| / |x-y|^n dy at off-support cells (zero at the others).

    ``at`` optionally restricts evaluation; asking for a cell inside the support
    or closer than 2h to it raises evaluation-inside-support.
    """
    g = f.grid
    ok = off_support_cells(supp, g)
    if at is not None:
        at = np.asarray(at).reshape(g.shape) != 0
        if np.any(at & ~ok):
            raise LabError("evaluation-inside-support")
        ok = at
    vals = _convolve(np.abs(f.values), _size_spectrum(g), g)
    return f.with_values(np.where(ok, vals, 0.0))


def geometric_estimate_violations(B: Ball, xs, zs) -> int:
    """Count pairs x in B, z outside 2B breaking |y-z| <= 2|z-x| <= 3|y-z| (y = center)."""
    y = np.asarray(B.center)
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    zs = np.atleast_2d(np.asarray(zs, dtype=float))
    xs = xs[np.linalg.norm(xs - y, axis=1) < B.r]
    zs = zs[np.linalg.norm(zs - y, axis=1) >= 2 * B.r]
    yz = np.linalg.norm(zs - y, axis=1)[None, :]
    zx = np.linalg.norm(zs[None, :, :] - xs[:, None, :], axis=2)
    bad = (yz > 2 * zx) | (2 * zx > 3 * yz)
    return int(bad.sum())
