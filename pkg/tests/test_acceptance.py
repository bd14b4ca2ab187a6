"""Acceptance criteria, each evaluated at its stated tolerance over full-size seeded runs.

Every test records one PASS/FAIL line; the lines are printed in the pytest terminal summary
and also when this file is executed directly.
"""
import functools
import math

import pytest

from ambientgeom.report import canonical
from ambientgeom.scenario import bundled_scenarios, load_bundled
from ambientgeom.suites import run_suites

from conftest import ACCEPTANCE_LINES

ALL = bundled_scenarios()
VALID = [name for name in ALL if name != "sphere_violation"]
SURFACES = [name for name in VALID if load_bundled(name).dim == 2]


@functools.lru_cache(maxsize=None)
def full_run(name):
    return run_suites(load_bundled(name))


def worst(names, check):
    """Largest defect of one check over several scenarios, with the scenario that produced it."""
    best = (-math.inf, None)
    for name in names:
        d = full_run(name).record(check).max_defect
        if not d <= best[0]:
            best = (d, name)
    return best


def verdict(label, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'}  {label}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def within(label, names, checks, tol):
    parts, ok = [], True
    for check in checks:
        d, where = worst(names, check)
        ok &= d <= tol
        parts.append(f"{check} {d:.2e} ({where})")
    verdict(label, ok, f"tol {tol:g}; " + ", ".join(parts))


def test_ambient_axioms():
    parts, ok = [], True
    for check, tol in (("ambient_axioms.homothety", 1e-9), ("ambient_axioms.pullback", 1e-10)):
        d, where = worst(ALL, check)
        ok &= d <= tol and all(full_run(n).record(check).samples >= 200 for n in ALL)
        parts.append(f"{check} {d:.2e} <= {tol:g} ({where})")
    verdict("ambient axioms on every bundled scenario", ok, ", ".join(parts))


def test_connection_formulas():
    checks = ["connection.parallel_coordinates", "connection.t_rho", "connection.t_V",
              "connection.rho_V", "connection.V_W"]
    within("closed-form ambient connection", ALL, checks, 1e-8)


def test_ricci_along_slice():
    closed, where = worst(ALL, "ricci_Q.closed_form")
    vanish, vwhere = worst(["sphere_example", "sphere3"], "ricci_Q.vanishing")
    bad = full_run("sphere_violation").record("ricci_Q.vanishing")
    ok = closed <= 1e-7 and vanish <= 1e-7 and bad.max_defect >= 0.5 and bad.witness is not None
    verdict("Ricci along the slice", ok,
            f"closed form {closed:.2e} ({where}), vanishing {vanish:.2e} ({vwhere}), "
            f"violation {bad.max_defect:.3f} at {bad.witness}")


def test_weingarten_maps():
    counts = {n: full_run(n).record("weingarten.a_xi").samples for n in VALID}
    d_xi, w_xi = worst(VALID, "weingarten.a_xi")
    d_eta, w_eta = worst(VALID, "weingarten.a_eta")
    ok = d_xi <= 1e-9 and d_eta <= 1e-8 and min(counts.values()) >= 500
    verdict("Weingarten maps", ok, f"A_xi {d_xi:.2e} ({w_xi}), A_eta {d_eta:.2e} ({w_eta}), "
                                   f"min samples {min(counts.values())}")


def test_schouten_recovery_on_three_sphere():
    spec = load_bundled("sphere3")
    nonconstant = sum(1 for src, _ in spec.scale if src.strip() != "0")
    d = full_run("sphere3").record("recovery.schouten").max_defect
    verdict("Schouten recovery on S^3", d <= 1e-6 and nonconstant >= 3,
            f"{d:.2e} over {nonconstant} non-constant scale functions")


def test_moebius_recovery_on_surfaces():
    within("Moebius recovery on surfaces (transformation law vs Weingarten)", SURFACES,
           ["recovery.moebius"], 1e-6)


def test_normal_bundle_flat():
    within("normal parallelism and normal curvature", VALID,
           ["weingarten.normal_connection", "weingarten.normal_curvature"], 1e-8)


def test_codazzi_and_cotton():
    flat = [n for n in SURFACES if n != "moebius_nonflat"]
    d_flat, w_flat = worst(flat, "cotton.normal_curvature_part")
    run = full_run("moebius_nonflat")
    d_cod = run.record("cotton.codazzi").max_defect
    nonzero = run.record("cotton.nonvanishing")
    ok = d_flat <= 1e-7 and d_cod <= 1e-6 and nonzero.passed
    verdict("normal part of ambient curvature and Codazzi-Cotton", ok,
            f"flat {d_flat:.2e} ({w_flat}), Codazzi-Cotton {d_cod:.2e}, nonzero witness {nonzero.passed}")


def test_tangent_sectional_curvature():
    within("ambient sectional curvature of tangent planes", SURFACES, ["gauss.sectional"], 1e-6)


def test_mean_curvature_and_gauss_bonnet():
    d, where = worst(VALID, "gauss.mean_curvature_scal")
    gb = full_run("sphere_example").record("gauss_bonnet.integral").max_defect
    verdict("|H|^2 against scalar curvature and Gauss-Bonnet", d <= 1e-6 and gb <= 1e-3,
            f"|H|^2 {d:.2e} ({where}), Gauss-Bonnet relative {gb:.2e}")


def test_minkowski_model():
    run = full_run("sphere_example")
    pull = run.record("minkowski.pullback").max_defect
    cone = run.record("minkowski.lightcone").max_defect
    verdict("Minkowski model of the sphere", pull <= 1e-9 and cone <= 1e-10,
            f"pullback {pull:.2e}, light cone {cone:.2e}")


def test_determinism():
    again = run_suites(load_bundled("sphere_example"))
    verdict("repeated seeded runs are canonically identical",
            canonical(again) == canonical(full_run("sphere_example")), "sphere_example, all suites")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
