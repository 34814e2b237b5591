"""Weights, ball masses and Muckenhoupt-class diagnostics.

A weight is constant, a power ``|x|^beta``, a sampled grid function or a
product of two weights. The A_q quotient, doubling, reverse Hölder and
subset-measure checks all reduce to ball sums of powers of the weight, taken
with the *discrete* ball volume so that ``w == 1`` returns exactly 1.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import awg
from .errors import LabError
from .grid import (
    Ball,
    BallFamily,
    Grid,
    GridFunction,
    admissible_centers,
    ball_mask,
    ball_minimum,
    ball_offsets,
    ball_sums,
    make_family,
)

__all__ = [
    "Weight",
    "constant",
    "power",
    "product",
    "sampled",
    "parse_weight",
    "ball_mass",
    "mass_table",
    "AqReport",
    "aq_constant",
    "aq_refinement",
    "doubling_check",
    "subset_ratio_check",
    "reverse_holder_ratio",
    "reverse_holder_check",
    "calibrate_reverse_holder",
]


@dataclass(frozen=True)
class Weight:
    kind: str
    params: tuple = ()
    key: str = ""
    data: GridFunction | None = field(default=None, compare=False, repr=False)
    factors: tuple = ()

    @property
    def spec(self) -> str:
        if self.kind == "const":
            return f"const:{self.params[0]:g}"
        if self.kind == "power":
            return f"power:{self.params[0]:g}"
        if self.kind == "prod":
            return f"prod:({self.factors[0].spec},{self.factors[1].spec})"
        return f"file:{self.key}"

    def values(self, grid: Grid) -> np.ndarray:
        return _weight_values(self, grid)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return product(constant(float(other)), self)
        return product(self, other)

    __rmul__ = __mul__


@lru_cache(maxsize=32)
def _weight_values(w: Weight, grid: Grid) -> np.ndarray:
    if w.kind == "const":
        out = np.full(grid.shape, w.params[0], dtype=float)
    elif w.kind == "power":
        out = grid.radius ** w.params[0]
    elif w.kind == "prod":
        out = w.factors[0].values(grid) * w.factors[1].values(grid)
    elif w.kind == "sampled":
        if w.data.grid != grid:
            raise LabError("grid-mismatch", "sampled weight lives on another grid")
        out = np.array(w.data.values, dtype=float)
    else:
        raise LabError("unknown-weight", w.kind)
    if not (np.all(np.isfinite(out)) and np.all(out > 0)):
        raise LabError("invalid-weight", f"{w.spec} is not positive and finite on the grid")
    out.setflags(write=False)
    return out


def constant(c=1.0) -> Weight:
    if not c > 0:
        raise LabError("invalid-weight", f"constant {c} must be positive")
    return Weight("const", (float(c),))


def power(beta) -> Weight:
    return Weight("power", (float(beta),))


def product(w1: Weight, w2: Weight) -> Weight:
    return Weight("prod", factors=(w1, w2))


def sampled(f: GridFunction, label=None) -> Weight:
    digest = hashlib.sha1(np.ascontiguousarray(f.values).tobytes()).hexdigest()[:16]
    return Weight("sampled", key=label or digest, data=f)


def _split_pair(body):
    depth = 0
    for i, ch in enumerate(body):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif ch == "," and depth == 0:
            return body[:i], body[i + 1:]
    raise LabError("bad-weight-spec", body)


def parse_weight(text: str) -> Weight:
    """Parse ``const:c``, ``power:beta``, ``prod:(spec,spec)`` or ``file:path.awg``."""
    text = text.strip()
    kind, _, arg = text.partition(":")
    try:
        if kind == "const":
            return constant(float(arg))
        if kind == "power":
            return power(float(arg))
        if kind == "prod":
            if not (arg.startswith("(") and arg.endswith(")")):
                raise LabError("bad-weight-spec", text)
            a, b = _split_pair(arg[1:-1])
            return product(parse_weight(a), parse_weight(b))
        if kind == "file":
            return sampled(awg.load(arg), label=arg)
    except ValueError as exc:
        if isinstance(exc, LabError):
            raise
        raise LabError("bad-weight-spec", text) from exc
    raise LabError("bad-weight-spec", text)


def ball_mass(w: Weight, B: Ball, grid: Grid) -> float:
    """w(B) = h^n * sum of w over cells whose center lies in B."""
    if not B.inside(grid):
        raise LabError("ball-outside-domain", f"{B} leaves [-{grid.L}, {grid.L}]^{grid.n}")
    return float(grid.cell_volume * w.values(grid)[ball_mask(grid, B)].sum())


@lru_cache(maxsize=64)
def mass_table(w: Weight, grid: Grid, r: float) -> np.ndarray:
    """w(B(y, r)) for every grid point y (meaningful at admissible centers)."""
    out = grid.cell_volume * ball_sums(w.values(grid), grid, r)
    out.setflags(write=False)
    return out


def _count_table(grid: Grid, r: float) -> float:
    # discrete |B| at grid-point centers, identical for every center
    return float(len(ball_offsets(grid, r)))


def _power_avg(w, grid, r, s):
    vals = w.values(grid)
    if s == 1:
        sums = ball_sums(vals, grid, r)
    else:
        sums = ball_sums(vals**s, grid, r)
    return sums / _count_table(grid, r)


@dataclass
class AqReport:
    q: float
    estimate: float
    witness: Ball
    family: BallFamily

    def as_dict(self):
        return {
            "q": self.q,
            "estimate": self.estimate,
            "witness_center": list(self.witness.center),
            "witness_radius": self.witness.r,
        }


def _argmax_over_family(F: BallFamily, per_radius):
    """per_radius(r) -> array over grid; returns (max, Ball) over admissible centers."""
    best, witness = -np.inf, None
    for r in F.radii:
        vals = per_radius(r)
        mask = F.centers(r)
        cand = np.where(mask, vals, -np.inf)
        i = np.unravel_index(np.argmax(cand), cand.shape)
        if cand[i] > best:
            best = float(cand[i])
            witness = Ball(tuple(F.grid.axis[j] for j in i), r)
    return best, witness


def aq_constant(w: Weight, q, F: BallFamily) -> AqReport:
    """Largest A_q quotient over the ball family.

    q > 1: (avg_B w) (avg_B w^{-1/(q-1)})^{q-1};  q == 1: avg_B w / min_B w.
    """
    if q < 1:
        raise LabError("invalid-exponent", f"q={q}")
    if F is None or len(F.radii) == 0:
        raise LabError("empty-family")
    grid = F.grid
    if q == 1:
        def quotient(r):
            return _power_avg(w, grid, r, 1) / ball_minimum(w.values(grid), grid, r)
    else:
        e = -1.0 / (q - 1.0)

        def quotient(r):
            return _power_avg(w, grid, r, 1) * _power_avg(w, grid, r, e) ** (q - 1.0)

    est, witness = _argmax_over_family(F, quotient)
    if not est >= 0.99:
        # Hölder forces the discrete quotient to be >= 1
        raise LabError("aq-sanity", f"A_{q} estimate {est} below 0.99")
    return AqReport(float(q), est, witness, F)


def aq_refinement(w: Weight, q, grid: Grid, levels=1, stride=1):
    """A_q estimates on grid, 2N, ..., 2^levels N with the full dyadic family.

    Returns (estimates, growth factors between consecutive levels).
    """
    estimates = []
    g = grid
    for _ in range(levels + 1):
        s = max(1, stride * g.N // grid.N)
        estimates.append(aq_constant(w, q, make_family(g, stride=s)).estimate)
        g = g.refine()
    growth = [b / a for a, b in zip(estimates, estimates[1:])]
    return estimates, growth


def doubling_check(w: Weight, q, lam, F: BallFamily) -> float:
    """max over B of w(lam B) / (lam^{nq} w(B)), over family balls with lam B inside the domain."""
    if lam < 1:
        raise LabError("invalid-scale", f"lambda={lam} < 1")
    grid = F.grid
    best = -np.inf
    for r in F.radii:
        mask = F.centers(r) & admissible_centers(grid, lam * r)
        if not mask.any():
            continue
        if lam == 1:
            ratio = np.ones(grid.shape)
        else:
            ratio = mass_table(w, grid, lam * r) / (lam ** (grid.n * q) * mass_table(w, grid, r))
        best = max(best, float(ratio[mask].max()))
    if best == -np.inf:
        raise LabError("scaled-ball-outside-domain", f"no ball of the family has {lam}B inside the domain")
    return best


def subset_ratio_check(w: Weight, E: GridFunction, B: Ball, gamma) -> float:
    """(w(E)/w(B)) / (|E|/|B|)^{gamma/(1+gamma)} for an indicator E contained in B."""
    grid = E.grid
    if not B.inside(grid):
        raise LabError("ball-outside-domain")
    inB = ball_mask(grid, B)
    e = np.asarray(E.values) != 0
    if np.any(e & ~inB):
        raise LabError("E-not-subset-of-B")
    if not e.any():
        return 0.0
    wv = w.values(grid)
    wE, wB = wv[e].sum(), wv[inB].sum()
    frac = e.sum() / inB.sum()
    return float((wE / wB) / frac ** (gamma / (1.0 + gamma)))


def reverse_holder_ratio(w: Weight, gamma, B: Ball, grid: Grid) -> float:
    """(avg_B w^{1+gamma})^{1/(1+gamma)} / avg_B w for a single ball."""
    if not B.inside(grid):
        raise LabError("ball-outside-domain")
    v = w.values(grid)[ball_mask(grid, B)]
    return float(np.mean(v ** (1.0 + gamma)) ** (1.0 / (1.0 + gamma)) / np.mean(v))


def reverse_holder_check(w: Weight, gamma, F: BallFamily) -> float:
    if gamma <= 0:
        raise LabError("invalid-exponent", f"gamma={gamma}")
    if F is None or len(F.radii) == 0:
        raise LabError("empty-family")
    grid = F.grid

    def ratio(r):
        return _power_avg(w, grid, r, 1.0 + gamma) ** (1.0 / (1.0 + gamma)) / _power_avg(w, grid, r, 1)

    return _argmax_over_family(F, ratio)[0]


def calibrate_reverse_holder(w: Weight, F: BallFamily, threshold=2.0, ladder=None):
    """Largest gamma in a dyadic ladder whose reverse Hölder ratio stays <= threshold.

    Returns (gamma, ratio) or (None, ratio at the smallest rung) when even the
    smallest rung fails.
    """
    ladder = ladder or [2.0**k for k in range(-6, 5)]
    found, found_ratio = None, None
    for g in sorted(ladder):
        ratio = reverse_holder_check(w, g, F)
        if ratio <= threshold:
            found, found_ratio = g, ratio
        else:
            if found is None:
                return None, ratio
            break
    return found, found_ratio
