"""Theorem-verification harness.

A boundedness theorem ``||T f|| <= C ||f||`` is checked by measuring the ratio
on a seeded corpus and asking that its maximum be finite and stable: it may
drift by less than 25% under one grid refinement and under one enlargement of
the corpus. Before any ratio is computed the scenario's hypotheses are checked
(exponent constraints exactly, the weight class and the BMO symbol by
refinement stability); a failed hypothesis is reported as such and no ratios
are produced.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .awg import atomic_write_bytes
from .corpus import Member, corpus_members
from .errors import LabError
from .grid import BallFamily, Grid, coarse_lattice, dilate, dyadic_radii, make_family
from .norms import ExponentSet, amalgam_norm, bmo_norm, lp_norm, morrey_norm, weak_amalgam_norm, wiener_norm
from .operators import OperatorSpec, apply, parse_operator, symbol
from .weights import Weight, aq_refinement, parse_weight

log = logging.getLogger(__name__)

THEOREMS = (
    "CZ-strong",
    "CZ-weak",
    "Rough",
    "Marcinkiewicz",
    "BR-max",
    "BR-weak",
    "Comm-CZ",
    "Comm-Rough",
    "Comm-Marcinkiewicz",
    "Comm-BR",
)
WEAK_THEOREMS = ("CZ-weak", "BR-weak")
DRIFT_LIMIT = 0.25
GROWTH_LIMIT = 1.25
DEGENERATE = 1e-14


@dataclass
class Scenario:
    theorem: str
    grid: Grid
    exponents: ExponentSet
    weight: Weight
    operator: OperatorSpec
    corpus: dict
    seed: int = 0
    radii: object = None
    output: str | None = None

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        try:
            g = d["grid"]
            grid = Grid(int(g["n"]), float(g["L"]), int(g["N"]))
            e = dict(d["exponents"])
            exps = ExponentSet(**{k: e.get(k) for k in ("q", "p", "alpha", "theta", "kappa", "delta") if k in e})
            corpus = d["corpus"]
            return cls(
                theorem=d["theorem"],
                grid=grid,
                exponents=exps,
                weight=parse_weight(d.get("weight", "const:1")),
                operator=parse_operator(d["operator"]),
                corpus={"generators": corpus["generators"]},
                seed=int(corpus.get("seed", 0)),
                radii=d.get("radii"),
                output=d.get("output"),
            )
        except KeyError as exc:
            raise LabError("bad-scenario", f"missing field {exc}") from exc

    @classmethod
    def load(cls, path) -> "Scenario":
        try:
            with open(path, encoding="utf-8") as fh:
                return cls.from_dict(json.load(fh))
        except OSError as exc:
            raise LabError("io-error", str(exc)) from exc
        except json.JSONDecodeError as exc:
            raise LabError("bad-scenario", str(exc)) from exc

    def as_dict(self) -> dict:
        return {
            "theorem": self.theorem,
            "grid": {"n": self.grid.n, "L": self.grid.L, "N": self.grid.N},
            "exponents": self.exponents.as_dict(),
            "weight": self.weight.spec,
            "operator": self.operator.text,
            "corpus": {"generators": self.corpus["generators"], "seed": self.seed},
            "radii": self.radii,
        }

    def radii_on(self, grid: Grid) -> tuple:
        """Dyadic radii for ``grid``; a refined grid keeps the same largest radius."""
        extra = int(round(math.log2(self.grid.h / grid.h)))
        if self.radii is None:
            return dyadic_radii(grid)
        if isinstance(self.radii, dict):
            kmin = int(self.radii.get("kmin", 0))
            kmax = self.radii.get("kmax")
            return dyadic_radii(grid, kmin, None if kmax is None else int(kmax) + extra)
        return tuple(float(r) for r in self.radii)


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""


def _class_exponent(s: Scenario) -> float:
    e = s.exponents
    if s.theorem in ("Rough", "Marcinkiewicz", "Comm-Rough", "Comm-Marcinkiewicz") and e.theta is not None:
        return e.q / e.theta_prime
    return e.q


def _op_kinds(s: Scenario):
    op = s.operator
    return op.kind, (op.base.kind if op.base is not None else None)


def _exponent_checks(s: Scenario) -> list:
    e, n, t = s.exponents, s.grid.n, s.theorem
    kind, base = _op_kinds(s)
    out = []

    def need(name, cond, detail=""):
        out.append(Check(name, bool(cond), detail))

    strict_chain = e.q <= e.alpha < e.p
    need("q<=alpha<p", strict_chain, f"q={e.q}, alpha={e.alpha}, p={e.p}")
    if t == "CZ-strong":
        need("operator", kind in ("hilbert", "riesz"), kind)
        need("q>1", e.q > 1)
    elif t == "CZ-weak":
        need("operator", kind in ("hilbert", "riesz"), kind)
        need("q=1", e.q == 1)
    elif t in ("Rough", "Comm-Rough"):
        need("operator", (kind, base) == ("rough", None) if t == "Rough" else (kind, base) == ("comm", "rough"), s.operator.text)
        need("n=2", n == 2)
        need("1<theta<inf", e.theta is not None and 1 < e.theta < math.inf, f"theta={e.theta}")
        if e.theta is not None:
            if t == "Rough":
                need("theta'<=q", e.theta_prime <= e.q, f"theta'={e.theta_prime}")
            else:
                need("theta'<q", e.theta_prime < e.q, f"theta'={e.theta_prime}")
    elif t in ("Marcinkiewicz", "Comm-Marcinkiewicz"):
        need("operator", kind == ("marcinkiewicz" if t == "Marcinkiewicz" else "mcomm"), s.operator.text)
        need("n=2", n == 2)
        if t == "Marcinkiewicz":
            need("1<theta<=inf", e.theta is not None and e.theta > 1, f"theta={e.theta}")
        else:
            need("1<theta<inf", e.theta is not None and 1 < e.theta < math.inf, f"theta={e.theta}")
        if e.theta is not None:
            need("theta'<q", e.theta_prime < e.q, f"theta'={e.theta_prime}")
    elif t in ("BR-max", "BR-weak"):
        need("operator", kind == ("brmax" if t == "BR-max" else "br"), s.operator.text)
        need("n>=2", n >= 2)
        d = s.operator.get("delta")
        need("delta=(n-1)/2", d is not None and abs(d - (n - 1) / 2) < 1e-12, f"delta={d}")
        need("q>1" if t == "BR-max" else "q=1", e.q > 1 if t == "BR-max" else e.q == 1)
    elif t == "Comm-CZ":
        need("operator", kind == "comm" and base in ("hilbert", "riesz"), s.operator.text)
        need("q>1", e.q > 1)
    elif t == "Comm-BR":
        need("operator", kind == "comm" and base == "br", s.operator.text)
        need("q>1", e.q > 1)
        d = s.operator.base.get("delta") if base == "br" else None
        need("delta>=(n-1)/2", d is not None and d >= (n - 1) / 2, f"delta={d}")
    if e.delta is not None:
        d = s.operator.get("delta") if s.operator.base is None else s.operator.base.get("delta")
        need("delta matches operator", d is not None and abs(d - e.delta) < 1e-12, f"{e.delta} vs {d}")
    return out


def _weight_check(s: Scenario):
    qc = _class_exponent(s)
    est, growth = aq_refinement(s.weight, qc, s.grid, levels=1)
    ok = all(np.isfinite(est)) and all(g <= GROWTH_LIMIT for g in growth)
    detail = f"A_{qc:g}: estimates {[float(x) for x in est]}, growth {[float(x) for x in growth]}"
    return Check(f"w in A_{qc:g}", ok, detail), {"class": qc, "estimates": [float(x) for x in est], "growth": [float(x) for x in growth]}


def _growth(a, b):
    if a == 0:
        return 1.0 if b == 0 else math.inf
    return b / a


def _bmo_check(s: Scenario) -> Check:
    """b's mean-oscillation sup must be stable under refinement and under adding the largest scale.

    On a bounded domain every symbol has finite oscillation; an unbounded one
    (like b = x) shows up as growth with the radius of the largest ball.
    """
    vals = []
    for g in (s.grid, s.grid.refine()):
        F = make_family(g, stride=max(1, g.N // 32))
        vals.append(bmo_norm(symbol(s.operator.b, g), F).value)
    F = make_family(s.grid, stride=max(1, s.grid.N // 32))
    small = BallFamily(s.grid, F.radii[:-1], F.stride)
    below = bmo_norm(symbol(s.operator.b, s.grid), small).value
    refine_growth = _growth(vals[0], vals[1])
    scale_growth = _growth(below, vals[0])
    ok = refine_growth <= GROWTH_LIMIT and scale_growth <= GROWTH_LIMIT
    return Check("b in BMO", ok, f"bmo {vals}, refinement growth {refine_growth}, scale growth {scale_growth}")


def check_hypotheses(s: Scenario):
    """(checks, A_q summary). Exponent checks are exact; class checks are by refinement."""
    if s.theorem not in THEOREMS:
        return [Check("theorem", False, f"unknown theorem {s.theorem}")], None
    checks = _exponent_checks(s)
    wcheck, aq = _weight_check(s)
    checks.append(wcheck)
    if s.operator.kind in ("comm", "mcomm"):
        checks.append(_bmo_check(s))
    return checks, aq


@dataclass
class VerificationReport:
    scenario: dict
    status: str
    hypotheses: list
    aq: dict | None = None
    rows: list = field(default_factory=list)
    skipped: list = field(default_factory=list)
    max_ratio: float | None = None
    witness: str | None = None
    refined_max_ratio: float | None = None
    refinement_drift: float | None = None
    enlarged_max_ratio: float | None = None
    enlargement_drift: float | None = None
    weak_le_strong: bool | None = None

    def summary(self) -> dict:
        d = asdict(self)
        d.pop("rows")
        d["hypotheses"] = [asdict(c) if isinstance(c, Check) else c for c in self.hypotheses]
        d["functions"] = len(self.rows)
        return d

    def to_json(self) -> str:
        return json.dumps(self.summary(), sort_keys=True, indent=2) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        cols = ["index", "label", "input_norm", "output_norm", "ratio", "strong_output_norm"]
        w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
        w.writeheader()
        for r in self.rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items() if k in cols})
        return buf.getvalue()

    def write(self, json_path, csv_path=None):
        atomic_write_bytes(json_path, self.to_json().encode("utf-8"))
        if csv_path is None:
            csv_path = os.path.splitext(json_path)[0] + ".csv"
        atomic_write_bytes(csv_path, self.to_csv().encode("utf-8"))


def _measure(s: Scenario, grid: Grid, radii, member: Member, index: int, eps=None):
    f = member.on(grid)
    e, w = s.exponents, s.weight
    row = {"index": index, "label": member.label}
    n_in = amalgam_norm(f, w, e, radii).value
    row["input_norm"] = float(n_in)
    if n_in < DEGENERATE:
        return row, None
    Tf = apply(s.operator, f, eps=eps)
    if s.theorem in WEAK_THEOREMS:
        out = weak_amalgam_norm(Tf, w, e, radii).value
        row["strong_output_norm"] = float(amalgam_norm(Tf, w, e, radii).value)
    else:
        out = amalgam_norm(Tf, w, e, radii).value
    row["output_norm"] = float(out)
    row["ratio"] = float(out / n_in)
    return row, row["ratio"]


def _study(s: Scenario, grid: Grid, members, threads=None):
    radii = s.radii_on(grid)

    def job(item):
        i, m = item
        return _measure(s, grid, radii, m, i)

    items = list(enumerate(members))
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(job, items))
    else:
        results = [job(it) for it in items]
    rows, skipped = [], []
    for row, ratio in results:
        if ratio is None:
            log.info("degenerate-input: skipping %s (input norm %.3g)", row["label"], row["input_norm"])
            skipped.append(row["label"])
        else:
            rows.append(row)
    return rows, skipped


def _max_row(rows):
    if not rows:
        return None, None
    best = max(rows, key=lambda r: r["ratio"])
    return best["ratio"], best["label"]


def _drift(a, b):
    if a is None or b is None:
        return None
    if a == 0:
        return 0.0 if b == 0 else math.inf
    return abs(b / a - 1.0)


def ratio_study(s: Scenario, members=None, threads=None, refine=True, enlarge=True) -> VerificationReport:
    """Measured ||T f|| / ||f|| over the corpus, with refinement and enlargement drifts."""
    checks, aq = check_hypotheses(s)
    hyp = [asdict(c) for c in checks]
    if not all(c.passed for c in checks):
        return VerificationReport(s.as_dict(), "hypothesis-violation", hyp, aq)
    g = s.grid
    if members is None:
        members = corpus_members(s.corpus, s.seed, g.n, g.L)
    if not members:
        raise LabError("empty-corpus")
    rows, skipped = _study(s, g, members, threads)
    rep = VerificationReport(s.as_dict(), "pass", hyp, aq, rows, skipped)
    rep.max_ratio, rep.witness = _max_row(rows)
    if s.theorem in WEAK_THEOREMS:
        rep.weak_le_strong = all(r["output_norm"] <= r["strong_output_norm"] + 1e-9 for r in rows)
    if refine:
        fine_rows, _ = _study(s, g.refine(), members, threads)
        rep.refined_max_ratio = _max_row(fine_rows)[0]
        rep.refinement_drift = _drift(rep.max_ratio, rep.refined_max_ratio)
    if enlarge:
        extra = corpus_members(s.corpus, s.seed + 1, g.n, g.L)
        extra_rows, _ = _study(s, g, extra, threads)
        rep.enlarged_max_ratio = _max_row(rows + extra_rows)[0]
        rep.enlargement_drift = _drift(rep.max_ratio, rep.enlarged_max_ratio)
    ok = rep.max_ratio is not None and math.isfinite(rep.max_ratio)
    for d in (rep.refinement_drift, rep.enlargement_drift):
        ok &= d is None or d < DRIFT_LIMIT
    if rep.weak_le_strong is False:
        ok = False
    rep.status = "pass" if ok else "fail"
    return rep


# --- embedding, consistency, dilation ---------------------------------------


def embedding_check(f, q, p1, p2, alpha, w: Weight | None = None, radii=None) -> dict:
    """Norms along L^alpha -> (q, p1) -> (q, p2) -> Morrey(kappa = 1 - q/alpha) and adjacent ratios."""
    if not (q <= alpha <= p1 < p2):
        raise LabError("exponent-order-violation", f"need q <= alpha <= p1 < p2, got {q}, {alpha}, {p1}, {p2}")
    g = f.grid
    radii = dyadic_radii(g) if radii is None else tuple(radii)
    la = lp_norm(f, w, alpha).value
    a1 = amalgam_norm(f, w, ExponentSet(q, p1, alpha), radii).value
    a2 = amalgam_norm(f, w, ExponentSet(q, p2, alpha), radii).value
    if q < alpha:
        mo = morrey_norm(f, w, q, 1.0 - q / alpha, BallFamily(g, radii, 1)).value
    else:
        mo = a2 if p2 == math.inf else amalgam_norm(f, w, ExponentSet(q, math.inf, alpha), radii).value

    def ratio(a, b):
        return 0.0 if b == 0 else a / b

    return {
        "values": (la, a1, a2, mo),
        "ratios": (ratio(a1, la), ratio(a2, a1), ratio(mo, a2)),
    }


def morrey_consistency_check(f, w: Weight | None, q, alpha, F: BallFamily) -> float:
    """Relative gap between the p = inf amalgam norm and the Morrey norm with kappa = 1 - q/alpha."""
    if not q < alpha:
        raise LabError("exponent-order-violation", f"need q < alpha, got q={q}, alpha={alpha}")
    if F.stride != 1 or F.grid != f.grid:
        raise LabError("family-mismatch", "the amalgam sweep uses every admissible center of the grid")
    a = amalgam_norm(f, w, ExponentSet(q, math.inf, alpha), F.radii).value
    m = morrey_norm(f, w, q, 1.0 - q / alpha, F).value
    return abs(a - m) / max(abs(a), abs(m), 1e-14)


def dilation_identity(member: Member, grid: Grid, r, q, p, alpha, radius=1.0):
    """(direct, rescaled) values of the unit-ball Wiener norm of delta_r^alpha f.

    direct: ||delta_r^alpha f||_{q,p} with balls of ``radius`` on ``grid``;
    rescaled: r^{n/alpha - n/q - n/p} times the radius*r Wiener norm of f on the
    lattice r * (cell centers of ``grid``).
    """
    n = grid.n
    direct = wiener_norm(dilate(member.on(grid), r, alpha), q, p, radius)
    coarse = coarse_lattice(grid, r)
    inv_p = 0.0 if p == math.inf else 1.0 / p
    rescaled = r ** (n / alpha - n / q - n * inv_p) * wiener_norm(member.on(coarse), q, p, r * radius)
    return float(direct), float(rescaled)
