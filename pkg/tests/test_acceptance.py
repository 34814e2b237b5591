"""Acceptance criteria 1-11, each at its stated tolerance.

Every criterion records one ``PASS``/``FAIL`` line; pytest prints them in the
terminal summary and running this file directly prints them as they finish.
"""

import contextlib
import math
import pathlib
import time

import numpy as np
import pytest

import oracles
from conftest import ACCEPTANCE_LINES
from amalgam_lab.corpus import corpus_members
from amalgam_lab.grid import Ball, BallFamily, Grid, dyadic_radii, make_family, sample
from amalgam_lab.norms import bmo_mean_drift, bmo_norm, lp_norm, weak_norm
from amalgam_lab.operators import (
    apply,
    apply_cz,
    bochner_riesz,
    commutator,
    geometric_estimate_violations,
    hilbert_kernel,
    hyp1_majorant,
    marcinkiewicz,
    marcinkiewicz_commutator,
    parse_operator,
    rough_singular,
    sphere_kernel,
    symbol,
    t_grid,
)
from amalgam_lab.grid import ball_mask
from amalgam_lab.verify import Scenario, dilation_identity, embedding_check, morrey_consistency_check, ratio_study
from amalgam_lab.weights import aq_constant, aq_refinement, constant, parse_weight, power

SCENARIOS = pathlib.Path(__file__).resolve().parent.parent / "scenarios"
C1 = {"indicator": {"radii": [0.125, 0.25, 0.5, 1.0], "centers": 5}, "gaussian": {"count": 12},
      "lacunary": {"count": 6}, "steps": {"count": 12}}


@contextlib.contextmanager
def criterion(k, title):
    notes = []
    try:
        yield notes
    except BaseException as exc:
        line = f"FAIL criterion {k}: {title} -- {type(exc).__name__}: {str(exc).splitlines()[0] if str(exc) else ''}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        raise
    line = f"PASS criterion {k}: {title}" + (f" ({'; '.join(notes)})" if notes else "")
    ACCEPTANCE_LINES.append(line)
    print(line)


def test_c01_hilbert_oracle():
    with criterion(1, "Hilbert transform of an interval") as notes:
        g = Grid(1, 8.0, 4096)
        f = sample(g, lambda x: (np.abs(x) < 1).astype(float))
        t0 = time.perf_counter()
        H = apply_cz(f, hilbert_kernel()).values
        dt = time.perf_counter() - t0
        x = g.axis
        ok = np.abs(np.abs(x) - 1) >= 10 * g.h
        exact = oracles.hilbert_of_interval(x[ok])
        err = float(np.max(np.abs(H[ok] - exact) / np.abs(exact)))
        notes.append(f"max rel err {err:.2e}, {dt * 1e3:.1f} ms")
        assert err < 0.02 and dt < 1.0


def test_c02_multiplier_exactness():
    with criterion(2, "Bochner-Riesz multiplier on grid-resonant modes") as notes:
        rng = np.random.default_rng(2024)
        worst = 0.0
        for trial in range(20):
            n = 1 + trial % 2
            g = Grid(n, float(rng.choice([2.0, 4.0, 8.0])), int(rng.choice([16, 32, 64])))
            k = rng.integers(-g.N // 2 + 1, g.N // 2, n)
            xi = np.pi * k / g.L
            f = sample(g, lambda *x: np.exp(1j * sum(a * b for a, b in zip(xi, x))))
            R = rng.uniform(0.3, 2.0) * max(np.linalg.norm(xi), np.pi / g.L)
            d = rng.uniform(0.1, 3.0)
            m = max(0.0, 1 - float(np.dot(xi, xi)) / R**2) ** d
            out = bochner_riesz(f, d, R, pad=1).values
            worst = max(worst, float(np.max(np.abs(out - m * f.values))))
        notes.append(f"max err {worst:.1e}")
        assert worst <= 1e-12


def test_c03_dilation_identity():
    with criterion(3, "dilation identity at r = 2") as notes:
        g = Grid(1, 8.0, 512)
        members = corpus_members({"indicator": {"radii": [0.25, 0.5, 1.0], "centers": 2},
                                  "steps": {"count": 4}}, 7, 1, 8.0)
        assert len(members) == 10
        worst = 0.0
        for m in members:
            for q, p, alpha in ((1.0, 4.0, 2.0), (2.0, 6.0, 3.0), (1.0, math.inf, 2.0)):
                direct, rescaled = dilation_identity(m, g, 2.0, q, p, alpha)
                worst = max(worst, abs(direct - rescaled) / max(abs(rescaled), 1e-300))
        notes.append(f"max rel gap {worst:.1e}")
        assert worst <= 1e-6


def test_c04_morrey_consistency():
    with criterion(4, "Morrey / amalgam consistency over the corpus") as notes:
        g = Grid(1, 8.0, 512)
        F = BallFamily(g, dyadic_radii(g), 1)
        members = corpus_members(dict(C1, power={"alpha": 2}), 0, 1, 8.0)
        worst = 0.0
        for w in (None, power(0.5)):
            for q, alpha in ((1.0, 2.0), (2.0, 3.0)):
                for m in members:
                    worst = max(worst, morrey_consistency_check(m.on(g), w, q, alpha, F))
        notes.append(f"{len(members)} members, max discrepancy {worst:.1e}")
        assert worst <= 1e-10


def test_c05_aq_calibration():
    with criterion(5, "A_q calibration") as notes:
        t0 = time.perf_counter()
        ident = max(abs(aq_constant(constant(1), q, make_family(g)).estimate - 1)
                    for g in (Grid(1, 8.0, 512), Grid(2, 4.0, 64)) for q in (1.0, 2.0, 3.0))
        _, half = aq_refinement(power(0.5), 2.0, Grid(1, 8.0, 256), levels=2)
        _, two = aq_refinement(power(2.0), 2.0, Grid(1, 8.0, 256), levels=2)
        dt = time.perf_counter() - t0
        notes.append(f"identity err {ident:.0e}, |x|^1/2 growth {[round(x, 4) for x in half]}, "
                     f"|x|^2 growth {[round(x, 3) for x in two]}, {dt:.1f} s")
        assert ident <= 1e-12
        assert all(abs(x - 1) < 0.05 for x in half)
        assert all(x >= 1.5 for x in two)
        assert dt < 30


def test_c06_weak_norm_exactness():
    with criterion(6, "weak norm of indicators and the two-level example") as notes:
        g = Grid(1, 8.0, 1024)
        rng = np.random.default_rng(6)
        worst = 0.0
        for i in range(10):
            w = power(0.5) if i % 2 else constant(1)
            q = float(rng.choice([1.0, 1.5, 2.0, 3.0]))
            a, b = np.sort(rng.uniform(-3, 3, 2))
            c, d = np.sort(rng.uniform(-3, 3, 2))
            E = ((g.axis >= a) & (g.axis < b)) | ((g.axis >= c) & (g.axis < d))
            mass = g.cell_volume * w.values(g)[E].sum()
            val = weak_norm(g.zeros().with_values(E.astype(float)), w, q).value
            worst = max(worst, abs(val - mass ** (1 / q)) / mass ** (1 / q))
        two = sample(g, lambda x: 2.0 * ((x >= 0) & (x < 1)) + 1.0 * ((x >= 1) & (x < 3)))
        v = weak_norm(two, None, 1).value
        notes.append(f"max rel err {worst:.1e}, two-level {v!r}")
        assert worst <= 1e-12 and v == 3.0


def test_c07_oracle_equivalence():
    with criterion(7, "fast operators vs direct summation") as notes:
        errs = {}
        rng = np.random.default_rng(7)
        g1, g2 = Grid(1, 4.0, 64), Grid(2, 4.0, 64)
        f1 = g1.zeros().with_values(rng.normal(size=g1.shape))
        f2 = g2.zeros().with_values(rng.normal(size=g2.shape) * (np.hypot(*g2.coords) < 3))
        p1, p2 = oracles.probe_indices(g1, 9, 1), oracles.probe_indices(g2, 9, 2)
        om = sphere_kernel("cos")
        b1, b2 = symbol("log", g1), symbol("log", g2)

        def gap(out, probes, direct):
            got = np.array([out[p] for p in probes])
            return float(np.max(np.abs(got - direct)))

        H = hilbert_kernel()
        errs["hilbert"] = gap(apply_cz(f1, H).values, p1, oracles.direct_cz(f1, H, 2 * g1.h, p1))
        errs["rough"] = gap(rough_singular(f2, om).values, p2, oracles.direct_rough(f2, om, 2 * g2.h, p2))
        errs["marcinkiewicz"] = gap(marcinkiewicz(f2, om).values, p2,
                                    oracles.direct_marcinkiewicz(f2, om, t_grid(g2), p2))
        for n, f, p in ((1, f1, p1), (2, f2, p2)):
            errs[f"bochner_riesz n={n}"] = gap(bochner_riesz(f, 0.5, 6.0).values, p,
                                               oracles.direct_bochner_riesz(f, 0.5, 6.0, 2, p))
        errs["[b,H]"] = gap(commutator(parse_operator("hilbert"), b1, f1).values, p1,
                            oracles.direct_commutator(oracles.direct_cz, b1, f1, p1, kernel=H, eps=2 * g1.h))
        errs["[b,T_Omega]"] = gap(commutator(parse_operator("rough:cos"), b2, f2).values, p2,
                                  oracles.direct_commutator(oracles.direct_rough, b2, f2, p2, omega=om, eps=2 * g2.h))
        errs["[b,T_R^delta]"] = gap(commutator(parse_operator("br:delta=0.5,R=6"), b1, f1).values, p1,
                                    oracles.direct_commutator(oracles.direct_bochner_riesz, b1, f1, p1,
                                                              delta=0.5, R=6.0, pad=2))
        errs["mu_Omega,b"] = gap(marcinkiewicz_commutator(b2, om, f2).values, p2,
                                 oracles.direct_marcinkiewicz(f2, om, t_grid(g2), p2, b=b2))
        notes.append(", ".join(f"{k} {v:.0e}" for k, v in errs.items()))
        assert max(errs.values()) <= 1e-8


def test_c08_commutator_identities():
    with criterion(8, "commutator identities") as notes:
        worst = 0.0
        for base, n in (("hilbert", 1), ("riesz:1", 2), ("riesz:2", 2), ("rough:cos", 2), ("rough:step", 2),
                        ("br:delta=0.5,R=6", 1), ("br:delta=0.5,R=6", 2)):
            g = Grid(n, 4.0, 64 if n == 1 else 32)
            f = sample(g, lambda *x: np.exp(-sum(xi * xi for xi in x)) * (np.abs(x[0]) < 2))
            out = commutator(parse_operator(base), symbol("const", g) * 2.5, f).values
            worst = max(worst, float(np.max(np.abs(out))))
        g = Grid(1, 8.0, 4096)
        f = sample(g, lambda x: np.exp(-x * x) * (np.abs(x) < 2))
        out = commutator(parse_operator("hilbert"), symbol("linear", g), f).values
        target = float(np.sum(f.values) * g.h / math.pi)
        rel = float(np.max(np.abs(out - target)) / target)
        notes.append(f"constant-b max {worst:.0e}, [x,H]f rel err {rel:.2%}")
        assert worst <= 1e-12 and rel < 0.02


@pytest.mark.slow
def test_c09_theorem_scenarios(tmp_path):
    with criterion(9, "ten theorem scenarios") as notes:
        paths = sorted(SCENARIOS.glob("*.json"))
        assert len(paths) == 10
        n1_total, failures = 0.0, []
        for p in paths:
            s = Scenario.load(p)
            t0 = time.perf_counter()
            rep = ratio_study(s)
            dt = time.perf_counter() - t0
            rep.write(str(tmp_path / f"{p.stem}.json"))
            if s.grid.n == 1:
                n1_total += dt
            elif dt >= 600:
                failures.append(f"{s.theorem} took {dt:.0f} s")
            if rep.status != "pass":
                failures.append(f"{s.theorem}: {rep.status}")
            else:
                assert all(h["passed"] for h in rep.hypotheses)
                assert math.isfinite(rep.max_ratio)
                assert rep.refinement_drift < 0.25 and rep.enlargement_drift < 0.25
            notes.append(f"{s.theorem} max {rep.max_ratio:.3g} drift {rep.refinement_drift:.3f}/"
                         f"{rep.enlargement_drift:.3f} {dt:.0f}s" if rep.status == "pass" else s.theorem)
        notes.append(f"n=1 total {n1_total:.0f} s")
        if n1_total >= 600:
            failures.append(f"n=1 scenarios took {n1_total:.0f} s")
        assert not failures, failures


def _domination(spec, g, B, s, kmax=3):
    r = np.sqrt(sum(c * c for c in g.coords)) if g.n == 2 else np.abs(g.axis)
    f = g.zeros().with_values(((r >= 2 * B.r) & (r < 4 * B.r)).astype(float))
    Tf = apply(spec, f).values
    inB = ball_mask(g, B)
    maj = hyp1_majorant(f, B, s=s, eta=0, kmax=kmax).values
    return float(np.max(np.abs(Tf[inB]) / maj[inB]))


def test_c10_property_suite():
    with criterion(10, "geometric estimate, hyp1 domination, BMO suite") as notes:
        rng = np.random.default_rng(10)
        pairs = 0
        for n in (1, 2):
            for _ in range(50):
                y = rng.uniform(-3, 3, n)
                r = rng.uniform(0.05, 1.0)
                xs = y + rng.uniform(-r, r, (200, n))
                zs = y + rng.normal(scale=3 * r, size=(400, n))
                assert geometric_estimate_violations(Ball(tuple(y), r), xs, zs) == 0
                pairs += 200 * 400
        notes.append(f"{pairs} (x,z) pairs")

        for spec, n, s, N in (("hilbert", 1, 1.0, 256), ("rough:cos", 2, 4 / 3, 128),
                              ("br:delta=0.5,R=8", 2, 1.0, 128)):
            B = Ball((0.0,) * n, 0.5)
            g = Grid(n, 8.0, N)
            c1, c2 = _domination(spec, g, B, s), _domination(spec, g.refine(), B, s)
            notes.append(f"{spec} C {c1:.3f}->{c2:.3f}")
            assert math.isfinite(c2) and abs(c2 / c1 - 1) < 0.25

        g = Grid(1, 8.0, 1024)
        F = make_family(g, stride=4)
        w = power(0.5)
        for name in ("const", "step", "log"):
            b = symbol(name, g)
            base = bmo_norm(b, F).value
            qv = bmo_norm(b, F, "q-power", q=2.0).value
            wv = bmo_norm(b, F, "weighted", q=2.0, w=w).value
            drifts = [bmo_mean_drift(b, Ball((0.25,), 0.125), k) for k in range(5)]
            if name == "const":
                assert base == qv == wv == 0 and max(drifts) == 0
                continue
            # John-Nirenberg: q-power variant comparable to the mean variant
            assert base <= qv + 1e-12 and qv <= 4 * base
            assert wv <= 4 * base
            assert max(drifts) <= 2 * base
            notes.append(f"{name}: bmo {base:.3f}, q-ratio {qv / base:.2f}, w-ratio {wv / base:.2f}, "
                         f"drift/bmo {max(drifts) / base:.2f}")


def _chain_max(members, g, q, p1, alpha, w):
    worst = np.zeros(3)
    for m in members:
        res = embedding_check(m.on(g), q, p1, math.inf, alpha, w)
        worst = np.maximum(worst, res["ratios"])
    return worst


def test_c11_embedding_chain():
    with criterion(11, "embedding chain: adjacent ratios bounded and refinement-stable") as notes:
        members = corpus_members({"indicator": {"radii": [0.25, 0.5, 1.0], "centers": 3},
                                  "gaussian": {"count": 5}, "lacunary": {"count": 3}, "steps": {"count": 4}},
                                 11, 1, 8.0)
        for q, alpha, p1 in ((1.0, 2.0, 4.0), (2.0, 3.0, 6.0)):
            for wname, w in (("1", None), ("|x|^1/2", power(0.5))):
                a = _chain_max(members, Grid(1, 8.0, 256), q, p1, alpha, w)
                b = _chain_max(members, Grid(1, 8.0, 512), q, p1, alpha, w)
                drift = np.max(np.abs(b / a - 1))
                notes.append(f"({q:g},{alpha:g},{p1:g},inf) w={wname} drift {drift:.3f}")
                assert np.all(np.isfinite(b)) and drift < 0.20


@pytest.mark.xfail(strict=True, reason="the L^alpha norm of the truncated |x|^(-n/alpha) profile diverges "
                                       "only like sqrt(log(1/h)), about x1.06 per refinement")
def test_c11_truncated_power_witness():
    with criterion(11, "truncated-power witness grows >= x1.3 per refinement on the L^alpha side only") as notes:
        (m,) = corpus_members({"power": {"alpha": 2}}, 0, 1, 8.0)
        rows = np.array([embedding_check(m.on(Grid(1, 8.0, N)), 1.0, 4.0, math.inf, 2.0)["values"]
                         for N in (512, 1024, 2048)])
        growth = rows[1:] / rows[:-1]
        notes.append("growth [L^a, (1,4), (1,inf), Morrey] "
                     + " | ".join(" ".join(f"{x:.3f}" for x in r) for r in growth))
        assert np.all(np.abs(growth[:, 1:] - 1) < 0.05), f"amalgam side growth {growth[:, 1:]}"
        assert np.all(growth[:, 0] >= 1.3), f"L^alpha growth {growth[:, 0]} below x1.3"


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-q", "-s"]))
