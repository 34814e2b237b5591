"""Weighted Lebesgue, weak, Morrey, amalgam and BMO norms on grid functions.

All ball-localized norms share one pipeline: for a radius r, the local
quantities ``w(B(y, r))`` and ``||f chi_B(y, r)||_{q_w}`` are tabulated for every
grid point y by :func:`~amalgam_lab.grid.ball_sums`, then combined over the
admissible centers (balls inside the domain). Because the Morrey norm and the
p = inf amalgam norm read the same tables, they agree to rounding when
kappa = 1 - q/alpha.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import LabError
from .grid import (
    Ball,
    BallFamily,
    Grid,
    GridFunction,
    admissible_centers,
    ball_mask,
    ball_offsets,
    ball_sums,
    dyadic_radii,
)
from .weights import Weight, constant, mass_table

__all__ = [
    "ExponentSet",
    "NormValue",
    "lp_norm",
    "weak_norm",
    "morrey_norm",
    "amalgam_norm_at_r",
    "amalgam_norm",
    "weak_amalgam_norm",
    "wiener_norm",
    "bmo_norm",
    "bmo_mean_drift",
    "local_norms",
    "local_weak_norms",
    "NORM_CSV_COLUMNS",
]

INF = math.inf
NORM_CSV_COLUMNS = ("norm_id", "q", "p", "alpha", "kappa", "weight_spec", "r", "value", "witness_center", "witness_radius")


def _as_exponent(x):
    if x is None:
        return None
    if isinstance(x, str) and x.strip().lower() in ("inf", "infinity", "oo"):
        return INF
    return float(x)


@dataclass(frozen=True)
class ExponentSet:
    """Integrability parameters of an amalgam space and its companions.

    ``theta`` is the integrability exponent of a rough kernel, ``kappa`` the
    Morrey exponent, ``delta`` a Bochner-Riesz order.
    """

    q: float
    p: float = INF
    alpha: float | None = None
    theta: float | None = None
    kappa: float | None = None
    delta: float | None = None

    def __post_init__(self):
        for name in ("q", "p", "alpha", "theta", "kappa", "delta"):
            object.__setattr__(self, name, _as_exponent(getattr(self, name)))
        if self.alpha is None:
            object.__setattr__(self, "alpha", self.q)
        if self.q < 1:
            raise LabError("invalid-exponent", f"q={self.q} < 1")
        if not (self.q <= self.alpha <= self.p):
            raise LabError("exponent-order-violation", f"need q <= alpha <= p, got q={self.q}, alpha={self.alpha}, p={self.p}")
        if self.kappa is not None and not (0 < self.kappa < 1):
            raise LabError("invalid-exponent", f"kappa={self.kappa} not in (0, 1)")
        if self.theta is not None and not self.theta > 1:
            raise LabError("invalid-exponent", f"theta={self.theta} must exceed 1")

    @property
    def theta_prime(self):
        if self.theta is None:
            return None
        if self.theta == INF:
            return 1.0
        return self.theta / (self.theta - 1.0)

    @property
    def amalgam_exponent(self):
        """1/alpha - 1/q - 1/p, the power of w(B) in the amalgam norm."""
        return 1.0 / self.alpha - 1.0 / self.q - (0.0 if self.p == INF else 1.0 / self.p)

    @property
    def morrey_kappa(self):
        """kappa matching the p = inf amalgam norm: 1 - q/alpha."""
        return 1.0 - self.q / self.alpha

    def as_dict(self):
        def enc(v):
            return "inf" if v == INF else v
        return {k: enc(getattr(self, k)) for k in ("q", "p", "alpha", "theta", "kappa", "delta")}


@dataclass
class NormValue:
    value: float
    norm_id: str
    params: ExponentSet | None = None
    weight_spec: str = "const:1"
    r: float | None = None
    witness: Ball | None = None
    radii: tuple = field(default=(), repr=False)

    def __float__(self):
        return float(self.value)

    def row(self) -> dict:
        e = self.params
        def fmt(v):
            if v is None:
                return ""
            return "inf" if v == INF else repr(float(v))
        return {
            "norm_id": self.norm_id,
            "q": fmt(e.q if e else None),
            "p": fmt(e.p if e else None),
            "alpha": fmt(e.alpha if e else None),
            "kappa": fmt(e.kappa if e else None),
            "weight_spec": self.weight_spec,
            "r": fmt(self.r),
            "value": repr(float(self.value)),
            "witness_center": " ".join(repr(float(c)) for c in self.witness.center) if self.witness else "",
            "witness_radius": fmt(self.witness.r if self.witness else None),
        }


def _weight(w):
    return constant(1.0) if w is None else w


def lp_norm(f: GridFunction, w: Weight | None = None, q=2.0) -> NormValue:
    """(integral of |f|^q w)^(1/q)."""
    if not (1 <= q < INF):
        raise LabError("invalid-exponent", f"q={q}")
    w = _weight(w)
    g = f.grid
    total = g.cell_volume * np.sum(np.abs(f.values) ** q * w.values(g))
    return NormValue(float(total ** (1.0 / q)), "lp", ExponentSet(q, INF, q), w.spec)


def _weak_from_samples(absf, wv, q, vol):
    """sup over levels v of v * (vol * sum of w where |f| >= v)^(1/q), row-wise."""
    order = np.argsort(-absf, axis=-1, kind="stable")
    v = np.take_along_axis(absf, order, axis=-1)
    cw = vol * np.cumsum(np.take_along_axis(wv, order, axis=-1), axis=-1)
    return np.max(v * cw ** (1.0 / q), axis=-1, initial=0.0)


def weak_norm(f: GridFunction, w: Weight | None = None, q=1.0) -> NormValue:
    """sup_lambda lambda * w({|f| > lambda})^(1/q), lambda over the distinct values of |f|.

    Approaching each value v from below gives the level set {|f| >= v}.
    """
    if not (1 <= q < INF):
        raise LabError("invalid-exponent", f"q={q}")
    w = _weight(w)
    g = f.grid
    val = _weak_from_samples(np.abs(f.values).ravel(), w.values(g).ravel(), q, g.cell_volume)
    return NormValue(float(val), "weak", ExponentSet(q, INF, q), w.spec)


def local_norms(f: GridFunction, w: Weight | None, q, r) -> np.ndarray:
    """||f chi_B(y, r)||_{q_w} for every grid point y."""
    w = _weight(w)
    g = f.grid
    s = ball_sums(np.abs(f.values) ** q * w.values(g), g, r)
    np.maximum(s, 0.0, out=s)
    return (g.cell_volume * s) ** (1.0 / q)


def _gather_rows(grid: Grid, r, mask, chunk_elems=1 << 22):
    """Yield (flat center indices, flat member indices (c, m)) for centers in ``mask``."""
    offs = ball_offsets(grid, r)
    if grid.n == 1:
        flat_offs = offs[:, 0]
    else:
        flat_offs = offs[:, 0] * grid.N + offs[:, 1]
    centers = np.flatnonzero(mask.ravel())
    step = max(1, chunk_elems // len(flat_offs))
    for i in range(0, len(centers), step):
        c = centers[i:i + step]
        yield c, c[:, None] + flat_offs[None, :]


def local_weak_norms(f: GridFunction, w: Weight | None, q, r, mask=None) -> np.ndarray:
    """||f chi_B(y, r)||*_{q_w, inf} at the centers in ``mask`` (zero elsewhere)."""
    w = _weight(w)
    g = f.grid
    if mask is None:
        mask = admissible_centers(g, r)
    absf = np.abs(f.values).ravel()
    wv = w.values(g).ravel()
    out = np.zeros(g.N**g.n)
    for centers, idx in _gather_rows(g, r, mask):
        out[centers] = _weak_from_samples(absf[idx], wv[idx], q, g.cell_volume)
    return out.reshape(g.shape)


def _witness(grid, vals, mask, r):
    cand = np.where(mask, vals, -np.inf)
    i = np.unravel_index(np.argmax(cand), cand.shape)
    return float(cand[i]), Ball(tuple(grid.axis[j] for j in i), r)


def morrey_norm(f: GridFunction, w: Weight | None, q, kappa, F: BallFamily) -> NormValue:
    """max over the family of w(B)^(-kappa/q) ||f chi_B||_{q_w}."""
    if F is None or len(F.radii) == 0:
        raise LabError("empty-family")
    if not (0 < kappa < 1):
        raise LabError("invalid-exponent", f"kappa={kappa}")
    if f.grid != F.grid:
        raise LabError("grid-mismatch")
    w = _weight(w)
    best, witness = -np.inf, None
    for r in F.radii:
        local = local_norms(f, w, q, r)
        term = mass_table(w, f.grid, r) ** (-kappa / q) * local
        val, ball = _witness(f.grid, term, F.centers(r), r)
        if val > best:
            best, witness = val, ball
    e = ExponentSet(q, INF, q / (1.0 - kappa), kappa=kappa)
    return NormValue(best, "morrey", e, w.spec, witness.r, witness, F.radii)


def _outer(term, mask, p, vol):
    t = term[mask]
    if p == INF:
        return float(t.max())
    return float((vol * np.sum(t**p)) ** (1.0 / p))


def _amalgam_at_r(f, w, e: ExponentSet, r, weak=False):
    g = f.grid
    mask = admissible_centers(g, r)
    if not mask.any():
        raise LabError("no-admissible-centers", f"r={r} too large for L={g.L}")
    if weak:
        local = local_weak_norms(f, w, e.q, r, mask)
    else:
        local = local_norms(f, w, e.q, r)
    term = mass_table(w, g, r) ** e.amalgam_exponent * local
    value = _outer(term, mask, e.p, g.cell_volume)
    _, witness = _witness(g, term, mask, r)
    return value, witness


def amalgam_norm_at_r(f: GridFunction, w: Weight | None, e: ExponentSet, r) -> NormValue:
    """[integral over y of (w(B(y,r))^(1/alpha-1/q-1/p) ||f chi_B(y,r)||_{q_w})^p dy]^(1/p)."""
    if r < f.grid.h:
        raise LabError("radius-below-grid", f"r={r} < h={f.grid.h}")
    w = _weight(w)
    value, witness = _amalgam_at_r(f, w, e, r)
    return NormValue(value, "amalgam_r", e, w.spec, r, witness, (r,))


def _sup_over_radii(f, w, e, radii, weak, norm_id):
    if radii is None:
        radii = dyadic_radii(f.grid)
    radii = tuple(radii)
    if not radii:
        raise LabError("empty-radii")
    w = _weight(w)
    best, best_r, best_ball = -np.inf, None, None
    for r in radii:
        value, ball = _amalgam_at_r(f, w, e, r, weak=weak)
        if value > best:
            best, best_r, best_ball = value, r, ball
    return NormValue(best, norm_id, e, w.spec, best_r, best_ball, radii)


def amalgam_norm(f: GridFunction, w: Weight | None, e: ExponentSet, radii=None) -> NormValue:
    """Supremum of :func:`amalgam_norm_at_r` over a finite radius set (dyadic by default)."""
    return _sup_over_radii(f, w, e, radii, False, "amalgam")


def weak_amalgam_norm(f: GridFunction, w: Weight | None, e: ExponentSet, radii=None) -> NormValue:
    """Amalgam norm with the local weighted L^q norm replaced by its weak version."""
    return _sup_over_radii(f, w, e, radii, True, "weak_amalgam")


def wiener_norm(f: GridFunction, q, p, r=1.0, centers=None) -> float:
    """Unweighted (integral over y of ||f chi_B(y,r)||_q^p dy)^(1/p), no rescaling factor."""
    g = f.grid
    mask = admissible_centers(g, r) if centers is None else centers
    if not mask.any():
        raise LabError("no-admissible-centers", f"r={r}")
    return _outer(local_norms(f, None, q, r), mask, p, g.cell_volume)


# --- BMO ---------------------------------------------------------------------

_BMO_VARIANTS = ("mean", "q-power", "weighted")


def _bmo_rows(bv, variant, q, wv):
    mean = bv.mean(axis=1, keepdims=True)
    osc = np.abs(bv - mean)
    if variant == "mean":
        return osc.mean(axis=1)
    if variant == "q-power":
        return np.mean(osc**q, axis=1) ** (1.0 / q)
    return (np.sum(osc**q * wv, axis=1) / np.sum(wv, axis=1)) ** (1.0 / q)


def bmo_norm(b: GridFunction, F: BallFamily, variant="mean", q=None, w: Weight | None = None) -> NormValue:
    """Largest mean oscillation of b over the family.

    ``mean``: avg_B |b - b_B|; ``q-power``: (avg_B |b - b_B|^q)^(1/q);
    ``weighted``: (w(B)^-1 integral_B |b - b_B|^q w)^(1/q). b_B is the plain average.
    """
    if F is None or len(F.radii) == 0:
        raise LabError("empty-family")
    if variant not in _BMO_VARIANTS:
        raise LabError("unknown-variant", variant)
    if variant != "mean" and (q is None or q < 1):
        raise LabError("invalid-exponent", f"variant {variant} needs q >= 1")
    if variant == "weighted" and w is None:
        raise LabError("missing-weight")
    g = b.grid
    bv_all = np.real(b.values).ravel()
    wv_all = w.values(g).ravel() if variant == "weighted" else None
    best, witness = -np.inf, None
    for r in F.radii:
        for centers, idx in _gather_rows(g, r, F.centers(r)):
            vals = _bmo_rows(bv_all[idx], variant, q, None if wv_all is None else wv_all[idx])
            k = int(np.argmax(vals))
            if vals[k] > best:
                best = float(vals[k])
                i = np.unravel_index(centers[k], g.shape)
                witness = Ball(tuple(g.axis[j] for j in i), r)
    e = ExponentSet(q) if q is not None else None
    return NormValue(best, f"bmo_{variant}", e, w.spec if w is not None else "const:1", witness.r, witness, F.radii)


def _ball_average(b, B):
    m = ball_mask(b.grid, B)
    return np.real(b.values)[m].mean()


def bmo_mean_drift(b: GridFunction, B: Ball, k: int) -> float:
    """|b_{2^{k+1}B} - b_B| / (k + 1)."""
    big = B.scaled(2.0 ** (k + 1))
    if not big.inside(b.grid):
        raise LabError("scaled-ball-outside-domain", f"2^{k + 1} B leaves the domain")
    return float(abs(_ball_average(b, big) - _ball_average(b, B)) / (k + 1))
