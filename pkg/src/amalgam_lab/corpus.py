"""Seeded test-function corpus.

Members are analytic: each one is a rule ``func(*coords)`` that can be sampled
on any grid, so refinement studies resample the same function instead of
interpolating samples. Every member is supported in [-L/2, L/2]^n.

Intervals and step cells are half-open [a, b) with dyadic endpoints, so a
member sampled at cell centers agrees with its value at the left face of the
cell; the dilation identity relies on this.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import LabError
from .grid import Grid, GridFunction, sample

GENERATORS = ("indicator", "gaussian", "lacunary", "power", "steps")


@dataclass(frozen=True)
class Member:
    label: str
    kind: str
    func: Callable

    def on(self, grid: Grid) -> GridFunction:
        return sample(grid, self.func)


def _fmt(v):
    return "(" + ",".join(f"{float(x):.6g}" for x in v) + ")"


def _in_box(coords, half):
    m = np.ones(np.shape(coords[0]), dtype=bool)
    for x in coords:
        m &= (x >= -half) & (x < half)
    return m


def _indicator(c, rho):
    c = np.asarray(c, dtype=float)

    def f(*x):
        if len(x) == 1:
            return ((x[0] >= c[0] - rho) & (x[0] < c[0] + rho)).astype(float)
        d2 = sum((xi - ci) ** 2 for xi, ci in zip(x, c))
        return (d2 < rho * rho).astype(float)
    return f


def _gen_indicator(rng, n, L, radii=None, centers=5):
    radii = radii or [L / 32, L / 16, L / 8, L / 4]
    out = []
    for rho in radii:
        if rho > L / 2:
            raise LabError("bad-corpus-spec", f"indicator radius {rho} exceeds L/2")
        # centers on the lattice rho * Z so that c +- rho stay dyadic
        mmax = int(np.floor((L / 2 - rho) / rho + 1e-12))
        for _ in range(centers):
            c = rho * rng.integers(-mmax, mmax + 1, n)
            out.append(Member(f"indicator(c={_fmt(c)},r={rho:g})", "indicator", _indicator(c, rho)))
    return out


def _gen_gaussian(rng, n, L, count=5):
    out = []
    for _ in range(count):
        c = rng.uniform(-L / 4, L / 4, n)
        s = L * rng.uniform(1 / 32, 1 / 8)

        def f(*x, c=c, s=s):
            d2 = sum((xi - ci) ** 2 for xi, ci in zip(x, c))
            return np.exp(-d2 / (2 * s * s)) * _in_box(x, L / 2)
        out.append(Member(f"gaussian(c={_fmt(c)},s={s:.6g})", "gaussian", f))
    return out


def _gen_lacunary(rng, n, L, count=3, terms=3):
    out = []
    rho = L / 4
    for _ in range(count):
        omega = rng.uniform(1.0, 2.0, n) * rng.choice([-1.0, 1.0], n)
        amp = rng.uniform(0.5, 1.0, terms)
        phase = rng.uniform(0, 2 * np.pi, terms)

        def f(*x, omega=omega, amp=amp, phase=phase):
            r2 = sum(xi * xi for xi in x)
            bump = np.maximum(1.0 - r2 / rho**2, 0.0) ** 2
            dot = sum(o * xi for o, xi in zip(omega, x))
            s = sum(a * np.cos(2.0**k * dot + p) for k, (a, p) in enumerate(zip(amp, phase)))
            return s * bump
        out.append(Member(f"lacunary(omega={_fmt(omega)})", "lacunary", f))
    return out


def _gen_power(rng, n, L, alpha=2.0):
    if L < 2:
        raise LabError("bad-corpus-spec", "power profile needs L >= 2")

    def f(*x):
        r = np.sqrt(sum(xi * xi for xi in x))
        with np.errstate(divide="ignore"):
            return np.where(r < 1, r ** (-n / alpha), 0.0)
    return [Member(f"power(alpha={alpha:g})", "power", f)]


def _gen_steps(rng, n, L, count=5):
    out = []
    for _ in range(count):
        size = L / 2.0 ** rng.integers(3, 6)
        cells = int(round(L / size))
        signs = rng.choice([-1.0, 1.0], (cells,) * n)

        def f(*x, size=size, cells=cells, signs=signs):
            idx = [np.clip(np.floor((xi + L / 2) / size).astype(np.int64), 0, cells - 1) for xi in x]
            return signs[tuple(idx)] * _in_box(x, L / 2)
        out.append(Member(f"steps(size={size:g})", "steps", f))
    return out


_DISPATCH = {
    "indicator": _gen_indicator,
    "gaussian": _gen_gaussian,
    "lacunary": _gen_lacunary,
    "power": _gen_power,
    "steps": _gen_steps,
}


def _normalize(spec):
    """Accept {name: params}, [name, ...] or [{"kind": name, ...}, ...]."""
    if isinstance(spec, dict) and "generators" in spec:
        spec = spec["generators"]
    items = []
    if isinstance(spec, dict):
        items = [(k, dict(v or {})) for k, v in spec.items()]
    else:
        for entry in spec:
            if isinstance(entry, str):
                items.append((entry, {}))
            else:
                entry = dict(entry)
                items.append((entry.pop("kind"), entry))
    for name, _ in items:
        if name not in _DISPATCH:
            raise LabError("unknown-generator", name)
    return items


def corpus_members(spec, seed: int, n: int, L: float) -> list:
    """Analytic members in generator order, deterministic in ``seed``."""
    rng = np.random.default_rng(seed)
    out = []
    for name, params in _normalize(spec):
        try:
            out.extend(_DISPATCH[name](rng, n, L, **params))
        except TypeError as exc:
            raise LabError("bad-corpus-spec", f"{name}: {exc}") from exc
    return out


def make_corpus(spec, seed: int, grid: Grid) -> list:
    """Sampled corpus on ``grid``; members that vanish on the grid are dropped."""
    out = []
    for m in corpus_members(spec, seed, grid.n, grid.L):
        f = m.on(grid)
        if not f.is_zero():
            out.append(f)
    return out
