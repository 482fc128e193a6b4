"""Acceptance suite: fourteen numbered checks with explicit tolerances.

Each ``criterion_k(seed, n_jobs)`` returns a :class:`CriterionResult`.
Expensive runs shared by several criteria are cached per seed.
"""

import math
import tempfile
import time
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy import integrate, special

from . import asymquad, ppsampler, sirmc, voronoi
from .fading import Deterministic, nakagami, rayleigh
from .models import Ginibre, LatticeMix, Poisson
from .streams import stream_rng

DEFAULT_SEED = 7
FADING_GRID_M = (0.5, 1.0, 2.0, 4.0)
BETA_GRID = (1.5, 2.0, 3.0, 4.0)
STREAM_ACCEPTANCE = 9


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    summary: str
    details: dict = field(default_factory=dict)

    def line(self):
        return f"[{'PASS' if self.passed else 'FAIL'}] criterion {self.number:2d}: {self.title} | {self.summary}"

    def to_dict(self):
        return {
            "number": self.number,
            "title": self.title,
            "passed": self.passed,
            "summary": self.summary,
            "details": self.details,
        }


# --------------------------------------------------------------------------
# oracles and shared runs


def poisson_rayleigh_coverage(theta, beta):
    """``P(SIR > theta)`` for a Poisson network with Rayleigh fading, by 1-D quadrature.

    ``1 / (1 + rho)`` with ``rho = theta**(1/beta) int_{theta**(-1/beta)}^inf du / (1 + u**beta)``.
    """
    out = []
    for th in np.atleast_1d(theta):
        lo = th ** (-1.0 / beta)
        val, _ = integrate.quad(lambda u: 1.0 / (1.0 + u**beta), lo, math.inf, epsabs=0.0, epsrel=1e-12)
        out.append(1.0 / (1.0 + th ** (1.0 / beta) * val))
    return np.array(out)


TAIL_THETA = np.union1d(sirmc.DEFAULT_THETA, [1e4])


@lru_cache(maxsize=4)
def _poisson_tail(seed, n_jobs):
    t0 = time.perf_counter()
    curve = sirmc.estimate_sir_tail(Poisson(1.0), rayleigh(), 2.0, TAIL_THETA, 10**6, 500, seed, n_jobs)
    return curve, time.perf_counter() - t0


@lru_cache(maxsize=32)
def _ginibre_quadrature(beta, m):
    """Beta-function form for Nakagami fading, ``m = None`` meaning no fading."""
    if m is None:
        return asymquad.ginibre_constant(Deterministic(), beta)
    return asymquad.ginibre_nakagami_constant(beta, m)


# --------------------------------------------------------------------------
# criteria


def criterion_1(seed=DEFAULT_SEED, n_jobs=1):
    c2 = asymquad.poisson_constant(2.0).value
    c4 = asymquad.poisson_constant(4.0).value
    err2 = abs(c2 - 2.0 / math.pi)
    err4 = abs(c4 - 4.0 / math.pi * math.sin(math.pi / 4.0))
    ok = err2 <= 1e-12 and err4 <= 1e-9 and abs(c4 - 0.900316) < 5e-7
    return CriterionResult(1, "Poisson closed form", ok, f"C(2)={c2:.12f} err={err2:.1e}; C(4)={c4:.9f}",
                           {"C2": c2, "C4": c4, "err2": err2, "err4": err4})


def criterion_2(seed=DEFAULT_SEED, n_jobs=1):
    curve, elapsed = _poisson_tail(seed, n_jobs)
    target = 2.0 / math.pi
    i = int(np.flatnonzero(curve.theta == 1e4)[0])
    scaled = float(curve.scaled[i])
    rel = abs(scaled - target) / target
    t0 = time.perf_counter()
    palm = sirmc.estimate_palm_constant(Poisson(1.0), rayleigh(), 2.0, 10**5, 500, seed, n_jobs)
    elapsed_palm = time.perf_counter() - t0
    n_se = abs(palm.value - target) / palm.std_error
    ok = rel < 0.10 and n_se <= 3.0 and elapsed < 300 and elapsed_palm < 300
    return CriterionResult(
        2, "Poisson MC vs closed form", ok,
        f"scaled(1e4)={scaled:.4f} rel={rel:.3f}; palm={palm.value:.5f}+-{palm.std_error:.5f} ({n_se:.2f} se)",
        {"scaled_1e4": scaled, "rel_error": rel, "palm": palm.to_dict(), "n_se": n_se,
         "tail_seconds": elapsed, "palm_seconds": elapsed_palm},
    )


def criterion_3(seed=DEFAULT_SEED, n_jobs=1):
    curve, _ = _poisson_tail(seed, n_jobs)
    mask = curve.theta <= 1e3
    exact = poisson_rayleigh_coverage(curve.theta[mask], 2.0)
    inside = (curve.ci_low[mask] <= exact) & (exact <= curve.ci_high[mask])
    ok = bool(inside.all())
    return CriterionResult(
        3, "Poisson MC vs coverage oracle", ok, f"{int(inside.sum())}/{inside.size} thresholds inside 95% CI",
        {"theta": curve.theta[mask], "exact": exact, "p_hat": curve.p_hat[mask], "inside": inside},
    )


def criterion_4(seed=DEFAULT_SEED, n_jobs=1):
    rep = sirmc.check_intensity_invariance([Poisson(1.0), Poisson(4.0)], rayleigh(), 2.0, 10**5, 500, seed, n_jobs)
    return CriterionResult(4, "intensity invariance", rep.consistent,
                           f"diff={rep.difference:.5f} ({rep.n_se:.2f} combined se)", rep.to_dict())


def criterion_5(seed=DEFAULT_SEED, n_jobs=1):
    rows = []
    ok = True
    for beta in (1.5, 2.0, 3.0):
        general = asymquad.ginibre_constant(nakagami(1.0), beta)
        beta_form = asymquad.ginibre_nakagami_constant(beta, 1.0)
        tight = asymquad.ginibre_constant(nakagami(1.0), beta, asymquad.QuadConfig().tightened())
        rel = abs(general.value - beta_form.value) / beta_form.value
        width = general.bracket_high - general.bracket_low
        shift = abs(tight.value - general.value)
        ok &= rel <= 1e-6 and shift <= width
        rows.append({"beta": beta, "general": general.value, "beta_form": beta_form.value, "rel_gap": rel,
                     "tightened_shift": shift, "bracket_width": width})
    worst = max(r["rel_gap"] for r in rows)
    return CriterionResult(5, "Ginibre form equivalence", ok, f"max rel gap {worst:.1e}; tightened shifts within brackets",
                           {"rows": rows})


def criterion_6(seed=DEFAULT_SEED, n_jobs=1):
    rows = []
    ok = True
    for m, beta in ((1.0, 2.0), (2.0, 3.0)):
        quad = _ginibre_quadrature(beta, m)
        t0 = time.perf_counter()
        mc = sirmc.estimate_palm_constant(Ginibre(), nakagami(m), beta, 10**5, 500, seed, n_jobs)
        elapsed = time.perf_counter() - t0
        n_se = abs(mc.value - quad.value) / mc.std_error
        ok &= n_se <= 3.0 and elapsed < 300
        rows.append({"m": m, "beta": beta, "quadrature": quad.value, "palm_mc": mc.value,
                     "std_error": mc.std_error, "n_se": n_se, "seconds": elapsed})
    summary = "; ".join(f"(m={r['m']:g},b={r['beta']:g}) {r['n_se']:.2f} se" for r in rows)
    return CriterionResult(6, "Ginibre quadrature vs Palm MC", ok, summary, {"rows": rows})


def criterion_7(seed=DEFAULT_SEED, n_jobs=1):
    rows = []
    ok = True
    for beta in BETA_GRID:
        c_poisson = asymquad.poisson_constant(beta)
        c_delta = _ginibre_quadrature(beta, None)
        for m in FADING_GRID_M:
            fading = nakagami(m)
            jp = asymquad.jensen_lower_bound(fading, beta, c_poisson)
            jg = asymquad.jensen_lower_bound(fading, beta, c_delta)
            cg = _ginibre_quadrature(beta, m)
            coef = jp.metadata["coefficient"]
            # the Poisson constant does not depend on the fading law
            p_ok = coef <= 1.0 and c_poisson.value >= jp.value
            g_ok = cg.bracket_high >= jg.bracket_low
            ok &= p_ok and g_ok
            rows.append({"beta": beta, "m": m, "coefficient": coef, "poisson": c_poisson.value,
                         "poisson_bound": jp.value, "ginibre": cg.value, "ginibre_bound": jg.value,
                         "holds": p_ok and g_ok})
    margin = min(r["ginibre"] - r["ginibre_bound"] for r in rows)
    return CriterionResult(7, "Jensen lower bound", ok,
                           f"{sum(r['holds'] for r in rows)}/{len(rows)} grid points; min Ginibre margin {margin:.2e}",
                           {"rows": rows})


def criterion_8(seed=DEFAULT_SEED, n_jobs=1):
    rows = []
    for beta in BETA_GRID:
        for fading in [Deterministic()] + [nakagami(m) for m in FADING_GRID_M]:
            rep = asymquad.h_integral_identity_check(fading, beta)
            rows.append({"beta": beta, "fading": fading.to_dict(), "rel_gap": rep.rel_gap})
    worst = max(r["rel_gap"] for r in rows)
    return CriterionResult(8, "fading integral identity", worst <= 1e-8, f"max rel gap {worst:.1e} over {len(rows)} cases",
                           {"rows": rows})


def criterion_9(seed=DEFAULT_SEED, n_jobs=1, n_configs=1000, step=0.01, box=2.0):
    rng = stream_rng(seed, STREAM_ACCEPTANCE, 9)
    g = np.arange(-box + step / 2, box, step)
    gx, gy = np.meshgrid(g, g)
    grid = np.column_stack((gx.ravel(), gy.ravel()))
    d0 = np.einsum("ij,ij->i", grid, grid)
    worst = 0.0
    for _ in range(n_configs):
        pts = rng.uniform(-1.0, 1.0, size=(5, 2))
        cell = voronoi.cell_of_origin(pts, box)
        d = ((grid[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2).min(axis=1)
        oracle = d0 <= d
        frac = float(np.mean(oracle != cell.contains(grid)))
        worst = max(worst, frac)
    return CriterionResult(9, "Voronoi grid oracle", worst < 1e-3,
                           f"max disagreement {worst:.1e} of box area over {n_configs} configurations",
                           {"max_fraction": worst, "step": step, "box_halfwidth": box, "n_configs": n_configs})


def _domination(sample, bound, r):
    p, _, _ = sample.survival(r)
    n = sample.radii.size
    sigma = np.sqrt(np.maximum(np.maximum(p, bound) * (1 - np.maximum(p, bound)), 1.0 / n) / n)
    excess = (p - bound) / sigma
    return p, excess


def criterion_10(seed=DEFAULT_SEED, n_jobs=1):
    r = np.round(np.arange(0.05, 3.0001, 0.05), 10)
    pois = voronoi.circumscribed_radius_samples(Poisson(1.0), 10**5, seed, n_jobs=n_jobs,
                                                stream=(STREAM_ACCEPTANCE, 10, 0))
    calka, valid = voronoi.calka_poisson_bound(1.0, r)
    p_pois, ex_pois = _domination(pois, calka, r)
    ex_pois = ex_pois[valid]
    gin = voronoi.circumscribed_radius_samples(Ginibre(), 10**4, seed, n_jobs=n_jobs,
                                               stream=(STREAM_ACCEPTANCE, 10, 1))
    petal = voronoi.ginibre_petal_bound(r)
    p_gin, ex_gin = _domination(gin, petal, r)
    r_star = voronoi.ginibre_petal_crossing()
    ok = (
        bool(np.all(ex_pois <= 3.0))
        and bool(np.all(ex_gin <= 3.0))
        and abs(r_star - 0.5276) <= 1e-3
        and pois.discard_rate < 1e-4
        and gin.discard_rate < 1e-4
    )
    return CriterionResult(
        10, "circumscribed radius bounds", ok,
        f"max excess Calka {ex_pois.max():.2f} se, petal {ex_gin.max():.2f} se; r*={r_star:.5f}; "
        f"discards {pois.discarded}+{gin.discarded}",
        {"r": r, "poisson_empirical": p_pois, "calka": calka, "calka_valid": valid, "ginibre_empirical": p_gin,
         "ginibre_petal": petal, "r_star": r_star, "poisson_discard_rate": pois.discard_rate,
         "ginibre_discard_rate": gin.discard_rate},
    )


def criterion_11(seed=DEFAULT_SEED, n_jobs=1):
    rep = voronoi.ginibre_kernel_l2(6.0)
    ok = rep.intensity_gap <= 1e-10 and rep.gap <= 1e-10
    return CriterionResult(11, "Ginibre kernel L2 identity", ok,
                           f"|closed - 1/pi|={rep.intensity_gap:.1e}, |quad - closed|={rep.gap:.1e}",
                           {"closed_form": rep.closed_form, "quadrature": rep.quadrature})


def criterion_12(seed=DEFAULT_SEED, n_jobs=1):
    rep = voronoi.condition_a_report(LatticeMix(1.5), seed=seed)
    ident = voronoi.lattice_palm_identity(1.5, 10**5, seed)
    ok = rep.verdict == "diverging" and ident.n_se <= 3.0
    means = rep.details["median_running_mean_R2"]
    return CriterionResult(
        12, "lattice counterexample", ok,
        f"median running means {', '.join(f'{x:.1f}' for x in means)} ({rep.verdict}); "
        f"Palm identity {ident.n_se:.2f} se",
        {"condition_a": rep.to_dict(), "palm_identity": ident.to_dict()},
    )


def criterion_13(seed=DEFAULT_SEED, n_jobs=1, r=2.0, n_samples=10**5):
    total = float(special.gammainc(np.arange(1, 101), 4.0).sum())
    rng = stream_rng(seed, STREAM_ACCEPTANCE, 13)
    y = ppsampler.ginibre_radii_sq(100, n_samples, rng, palm=True, sort=False)
    counts = (y <= r * r).sum(axis=1)
    expected = r * r + math.expm1(-r * r)
    n_se = abs(counts.mean() - expected) / (counts.std(ddof=1) / math.sqrt(n_samples))
    ok = abs(total - 4.0) <= 1e-8 and n_se <= 3.0
    return CriterionResult(13, "Kostlan identity", ok,
                           f"sum={total:.12f}; Palm count {counts.mean():.4f} vs {expected:.4f} ({n_se:.2f} se)",
                           {"stationary_sum": total, "palm_mean_count": float(counts.mean()), "expected": expected,
                            "n_se": n_se})


DETERMINISM_COMMANDS = (
    ["tail", "--model", "poisson:1.0", "--fading", "rayleigh", "--beta", "2", "--n-samples", "40000",
     "--n-points", "200"],
    ["constant", "--model", "ginibre", "--fading", "nakagami:1", "--beta", "2", "--method", "both",
     "--n-samples", "20000", "--n-points", "200"],
    ["bounds", "--model", "poisson:1.0", "--n-samples", "5000"],
    ["bounds", "--model", "ginibre", "--n-samples", "3000"],
    ["counterexample", "--a", "1.5"],
)


def criterion_14(seed=DEFAULT_SEED, n_jobs=1, threads=(1, 8)):
    from . import cli

    mismatched = []
    checked = 0
    with tempfile.TemporaryDirectory() as tmp:
        for j, cmd in enumerate(DETERMINISM_COMMANDS):
            outputs = []
            for w in threads:
                out = Path(tmp) / f"cmd{j}_t{w}"
                code = cli.main(cmd + ["--seed", str(seed), "--threads", str(w), "--output-dir", str(out), "--quiet"])
                if code != 0:
                    mismatched.append(f"{cmd[0]} exit {code}")
                outputs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
            checked += len(outputs[0])
            if any(o != outputs[0] for o in outputs[1:]):
                mismatched.append(" ".join(cmd[:3]))
    ok = not mismatched and checked > 0
    return CriterionResult(14, "determinism across worker counts", ok,
                           f"{checked} artifacts compared for threads {threads}; mismatches: {mismatched or 'none'}",
                           {"mismatches": mismatched, "artifacts": checked})


CRITERIA = {k: globals()[f"criterion_{k}"] for k in range(1, 15)}


def run_criteria(numbers=None, seed=DEFAULT_SEED, n_jobs=1, callback=None):
    """Run the selected criteria (all by default) and return their results in order."""
    results = []
    for k in sorted(numbers or CRITERIA):
        res = CRITERIA[k](seed=seed, n_jobs=n_jobs)
        if callback is not None:
            callback(res)
        results.append(res)
    return results
