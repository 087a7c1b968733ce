"""End-to-end acceptance suite, one pass or fail line per criterion.

Each test prints a single ``acceptance criterion N [...]: PASS/FAIL`` line
(visible with ``pytest -s`` or in the failure message). Criteria 5 to 7
share one five-geometry sweep through a module fixture, so the first of
them to run pays the full sweep cost, on the order of fifteen minutes on
a single core. The rest of the module is cheap by comparison.
"""
import json
import math
import time

import numpy as np
import pytest

from voxstokes.cli import SweepSpec, read_csv_rows, run_sweep
from voxstokes.geometry import PackingParams, VoxelGrid, generate_packing, stats
from voxstokes.krylov import PcgConfig, pcg
from voxstokes.operators import assemble
from voxstokes.schur import apply_schur, profile_config, schur_rhs, solve_schur
from voxstokes.spectra import analyze_spectrum, dense_schur, nev_formula_check

PIN_SEED = 42

# Comparison bands for the five-geometry sweep, indexed by
# n_avg = 4, 6, 8, 10, 12. Exact values drift with the random obstacle
# offsets, so iteration counts are checked within +-40% and condition
# numbers within a factor of 3.
BAND_ITERS_UZAWA = np.array([138.0, 98.0, 81.0, 61.0, 52.0])
BAND_COND_S = np.array([4.7e3, 2.3e3, 1.3e3, 7.7e2, 5.3e2])
BAND_COND_PRECOND = np.array([3.4e1, 8.6e1, 1.6e2, 2.6e2, 3.4e2])


def _report(num, title, checks, extra=""):
    """Print the one-line verdict for a criterion, then assert it."""
    failed = [label for ok, label in checks if not ok]
    status = "PASS" if not failed else "FAIL"
    detail = extra if not failed else "failed: " + "; ".join(failed)
    line = f"acceptance criterion {num} [{title}]: {status}"
    if detail:
        line += f" ({detail})"
    print(line)
    assert not failed, line


@pytest.fixture(scope="module")
def sweep_run(tmp_path_factory):
    out_dir = tmp_path_factory.mktemp("acceptance_sweep")
    spec = SweepSpec(
        base=PackingParams(N=7, n_c=50, n_avg=4, n_min=2, seed=PIN_SEED),
        values=(4, 6, 8, 10, 12),
        precs=("uzawa", "simple"),
        profile="paper2d",
        out_dir=str(out_dir),
    )
    start = time.perf_counter()
    paths = run_sweep(spec, jobs=1)
    wall = time.perf_counter() - start
    return {
        "dir": out_dir,
        "wall": wall,
        "summary": read_csv_rows(paths["summary"]),
        "correlation": read_csv_rows(paths["correlation"]),
    }


def test_criterion_1_geometry_determinism():
    expected = {
        4: (15.36, 46.875),
        6: (22.56, 30.496),
        8: (29.44, 22.283),
        10: (36.00, 17.333),
        12: (42.24, 13.996),
    }
    start = time.perf_counter()
    checks = []
    for n_avg, (porosity, stv) in expected.items():
        params = PackingParams(N=7, n_c=50, n_avg=n_avg, n_min=2, seed=PIN_SEED)
        s = stats(generate_packing(params))
        checks.append((
            s.porosity_pct == porosity,
            f"porosity at n_avg={n_avg}: {s.porosity_pct!r} != {porosity!r}",
        ))
        checks.append((
            abs(s.stv_pct - stv) <= 0.05,
            f"stv at n_avg={n_avg}: {s.stv_pct:.4f} off {stv} by more than 0.05",
        ))
    wall = time.perf_counter() - start
    checks.append((wall < 1.0, f"runtime {wall:.2f}s over the 1s budget"))
    _report(1, "geometry determinism", checks,
            f"5 configs, porosity exact, stv within 0.05, {wall:.2f}s")


def _channel(n, width):
    fluid = np.zeros((n, n), dtype=bool)
    lo = (n - width) // 2
    fluid[:, lo : lo + width] = True
    return VoxelGrid(fluid)


def test_criterion_2_poiseuille_oracle():
    # plane channel of physical width 1/4: k = (1/4)^3 / 12
    k_exact = 0.25**3 / 12.0
    start = time.perf_counter()
    errors = {}
    converged = True
    for n in (32, 64, 128):
        sys = assemble(_channel(n, n // 4), flow_dir=0)
        rep = solve_schur(sys, profile_config("reference", "simple"))
        converged = converged and rep.converged
        errors[n] = abs(rep.k_value - k_exact) / k_exact
    wall = time.perf_counter() - start
    orders = (
        math.log2(errors[32] / errors[64]),
        math.log2(errors[64] / errors[128]),
    )
    checks = [
        (converged, "a channel solve did not converge"),
        (errors[64] < 0.02, f"relative error {errors[64]:.3e} at n=64 exceeds 2%"),
        (min(orders) >= 1.9,
         f"convergence orders {orders[0]:.2f}, {orders[1]:.2f} fall below 1.9"),
        (wall < 30.0, f"runtime {wall:.1f}s over the 30s budget"),
    ]
    _report(2, "poiseuille oracle", checks,
            f"err(n=64)={errors[64]:.2e}, orders {orders[0]:.2f}/{orders[1]:.2f}, {wall:.1f}s")


def test_criterion_3_spectrum_sanity():
    # one centered obstacle: n_avg == n_min pins the offset to zero
    start = time.perf_counter()
    grid = generate_packing(PackingParams(N=1, n_c=8, n_avg=4, n_min=4, seed=0))
    s = stats(grid)
    rep = analyze_spectrum(grid)
    n_zero_abs = int(np.count_nonzero(np.abs(rep.eigenvalues) < 1e-10))
    wall = time.perf_counter() - start
    predicted = s.v_surf + 3 * 1 * 1 - 1
    checks = [
        (s.v_surf == 12, f"v_surf {s.v_surf} != 12"),
        (n_zero_abs == 1, f"{n_zero_abs} eigenvalues below 1e-10 in magnitude, want 1"),
        (abs(rep.lambda_max - 1.0) <= 1e-6,
         f"lambda_max {rep.lambda_max!r} not within 1e-6 of 1"),
        (rep.n_ev == 14 and predicted == 14,
         f"n_ev {rep.n_ev} (formula {predicted}) != 14 at tau_unit=1e-6"),
        (wall < 10.0, f"runtime {wall:.1f}s over the 10s budget"),
    ]
    _report(3, "schur spectrum sanity", checks,
            f"one zero mode, lambda_max-1={rep.lambda_max - 1.0:.1e}, n_ev=14, {wall:.1f}s")


def test_criterion_4_eigenvalue_count_formula():
    start = time.perf_counter()
    configs = [
        PackingParams(N=N, n_c=n_c, n_avg=4, n_min=2, seed=0)
        for N in (1, 2, 3)
        for n_c in (8, 12, 16)
    ]
    rows = nev_formula_check(configs, seeds=(0, 1, 2))
    wall = time.perf_counter() - start
    n_match = sum(1 for r in rows if r["match"])
    checks = [
        (len(rows) == 27, f"expected 27 rows, got {len(rows)}"),
        (n_match == len(rows), f"only {n_match}/{len(rows)} rows match the formula"),
        (wall < 600.0, f"runtime {wall:.0f}s over the 10min budget"),
    ]
    _report(4, "eigenvalue count formula", checks,
            f"{n_match}/27 rows match v_surf + 3N^2 - 1, {wall:.0f}s")


def test_criterion_5_condition_correlation(sweep_run):
    corr = sweep_run["correlation"]
    stv = np.array([float(r["stv_pct"]) for r in corr])
    cond_s = np.array([float(r["cond_S"]) for r in corr])
    cond_p = np.array([float(r["cond_precond"]) for r in corr])
    order = np.argsort(stv)
    pearson = float(np.corrcoef(stv, cond_s)[0, 1])
    ratio_s = cond_s / BAND_COND_S
    ratio_p = cond_p / BAND_COND_PRECOND
    wall = sweep_run["wall"]
    checks = [
        (len(corr) == 5, f"expected 5 correlation rows, got {len(corr)}"),
        (np.all(np.diff(cond_s[order]) > 0),
         "cond(S) is not strictly increasing in the surface-to-volume ratio"),
        (np.all(np.diff(cond_p[order]) < 0),
         "preconditioned cond is not strictly decreasing in the surface-to-volume ratio"),
        (pearson >= 0.98, f"pearson r {pearson:.4f} below 0.98"),
        (bool(np.all((ratio_s > 1 / 3) & (ratio_s < 3))),
         f"cond(S) off the band by more than 3x: ratios {np.round(ratio_s, 3)}"),
        (bool(np.all((ratio_p > 1 / 3) & (ratio_p < 3))),
         f"preconditioned cond off the band by more than 3x: ratios {np.round(ratio_p, 3)}"),
        (wall < 1200.0, f"sweep runtime {wall:.0f}s over the 20min budget"),
    ]
    _report(5, "condition number correlation", checks,
            f"pearson r={pearson:.4f}, band ratios {ratio_s.min():.2f}..{ratio_s.max():.2f} "
            f"and {ratio_p.min():.2f}..{ratio_p.max():.2f}, sweep {wall:.0f}s")


def test_criterion_6_preconditioner_comparison(sweep_run):
    rows = sweep_run["summary"]
    uzawa = sorted((r for r in rows if r["prec"] == "uzawa"), key=lambda r: int(r["n_avg"]))
    simple = sorted((r for r in rows if r["prec"] == "simple"), key=lambda r: int(r["n_avg"]))
    iters_u = np.array([int(r["iters"]) for r in uzawa])
    iters_s = np.array([int(r["iters"]) for r in simple])
    err_u = np.array([float(r["e_final"]) for r in uzawa])
    err_s = np.array([float(r["e_final"]) for r in simple])
    in_band = (iters_u >= 0.6 * BAND_ITERS_UZAWA) & (iters_u <= 1.4 * BAND_ITERS_UZAWA)
    checks = [
        (all(r["status"] == "ok" for r in rows), "some sweep member failed"),
        (len(uzawa) == 5 and len(simple) == 5, "expected 5 rows per preconditioner"),
        (np.all(np.diff(iters_u) < 0),
         f"uzawa iterations {iters_u.tolist()} not strictly decreasing in n_avg"),
        (np.all(np.diff(iters_s) > 0),
         f"simple iterations {iters_s.tolist()} not strictly increasing in n_avg"),
        (bool(np.all(err_s < err_u)),
         "simple final permeability error not strictly smaller everywhere"),
        (bool(np.all(in_band)),
         f"uzawa iterations {iters_u.tolist()} outside +-40% of {BAND_ITERS_UZAWA.tolist()}"),
    ]
    _report(6, "preconditioner comparison", checks,
            f"uzawa {iters_u.tolist()} vs simple {iters_s.tolist()}, "
            f"error gap {np.min(err_u / err_s):.1f}x or better")


def test_criterion_7_contraction_asymptote(sweep_run):
    path = sweep_run["dir"] / "navg4_uzawa.json"
    rep = json.loads(path.read_text(encoding="utf-8"))
    res = np.asarray(rep["res_unprec"], dtype=float)
    cond = rep["cond_est_outer"]
    enough = res.size >= 21 and cond is not None
    if enough:
        rho_obs = float((res[-1] / res[-21]) ** (1.0 / 20.0))
        rho_pred = (math.sqrt(cond) - 1.0) / (math.sqrt(cond) + 1.0)
        deviation = abs(rho_obs - rho_pred) / rho_pred
    else:
        rho_obs = rho_pred = deviation = float("nan")
    checks = [
        (enough, f"run too short for a 20-iteration window ({res.size - 1} iterations)"),
        (deviation <= 0.15,
         f"contraction {rho_obs:.5f} deviates {100 * deviation:.1f}% from "
         f"asymptote {rho_pred:.5f}"),
    ]
    _report(7, "convergence rate asymptote", checks,
            f"observed {rho_obs:.5f} vs (sqrt(c)-1)/(sqrt(c)+1)={rho_pred:.5f} "
            f"at c={cond:.0f}, deviation {100 * deviation:.2f}%")


def test_criterion_8_property_suites():
    rng = np.random.default_rng(2024)
    sys = assemble(
        generate_packing(PackingParams(N=2, n_c=10, n_avg=4, n_min=2, seed=11)),
        flow_dir=0,
    )
    checks = []

    # adjointness of the divergence and gradient actions
    u = rng.standard_normal(sys.m_u)
    p = rng.standard_normal(sys.m_p)
    gap = abs(float(sys.apply_divergence(u) @ p) - float(u @ sys.apply_gradient(p)))
    scale = np.linalg.norm(u) * np.linalg.norm(p) / sys.h
    checks.append((gap <= 1e-12 * scale, f"adjointness gap {gap:.2e}"))

    # viscous operator: symmetric with positive Rayleigh quotients
    v = rng.standard_normal(sys.m_u)
    w = rng.standard_normal(sys.m_u)
    sym_gap = abs(float(v @ sys.apply_laplacian(w)) - float(w @ sys.apply_laplacian(v)))
    sym_scale = np.linalg.norm(v) * np.linalg.norm(w) / sys.h**2
    checks.append((sym_gap <= 1e-12 * sym_scale, f"A symmetry gap {sym_gap:.2e}"))
    rayleigh = min(
        float(x @ sys.apply_laplacian(x)) for x in rng.standard_normal((5, sys.m_u))
    )
    checks.append((rayleigh > 0.0, f"nonpositive Rayleigh quotient {rayleigh:.2e}"))

    # the gradient annihilates constant pressure exactly
    checks.append((
        bool(np.all(sys.apply_gradient(np.ones(sys.m_p)) == 0.0)),
        "gradient of a constant is not exactly zero",
    ))

    # conjugate gradients terminates on a modest SPD system
    n = 160
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    mat = (q * np.linspace(1.0, 50.0, n)) @ q.T
    rhs = rng.standard_normal(n)
    res = pcg(
        lambda x: mat @ x, None, rhs,
        cfg=PcgConfig(tol=1e-10, norm_kind="unpreconditioned", max_iter=n),
    )
    checks.append((
        res.converged and res.iterations <= n,
        f"cg needed {res.iterations} iterations on n={n} (converged={res.converged})",
    ))

    # nullspace-projected pressure iterates stay mean free
    g, _ = schur_rhs(sys, 1e-10)
    rel_means = []

    def track(_k, _alpha, x):
        rel_means.append(abs(float(x.mean())) / max(float(np.linalg.norm(x)), 1e-300))

    pcg(
        lambda q_: apply_schur(sys, q_, 1e-10)[0], None, g,
        cfg=PcgConfig(
            tol=1e-8, norm_kind="unpreconditioned", max_iter=40,
            project_nullspace=True,
        ),
        step_hook=track,
    )
    checks.append((
        bool(rel_means) and max(rel_means) <= 1e-12,
        f"projected iterate mean up to {max(rel_means) if rel_means else 'n/a'}",
    ))

    # dense assembly against the matrix-free action
    small = assemble(
        generate_packing(PackingParams(N=1, n_c=10, n_avg=4, n_min=2, seed=7)),
        flow_dir=0,
    )
    eps_a = 1e-12
    dense = dense_schur(small, eps_a)
    worst = 0.0
    for _ in range(5):
        pv = rng.standard_normal(small.m_p)
        diff = np.linalg.norm(dense @ pv - apply_schur(small, pv, eps_a)[0])
        worst = max(worst, diff / np.linalg.norm(pv))
    checks.append((
        worst <= 10 * eps_a,
        f"dense vs matrix-free disagreement {worst:.2e} above {10 * eps_a:.0e}",
    ))

    _report(8, "operator property suites", checks, f"{len(checks)} property groups hold")


def test_criterion_9_three_d_smoke():
    # n_avg == n_min pins the 3D obstacles to the centered position
    start = time.perf_counter()
    grid = generate_packing(PackingParams(N=2, n_c=10, n_avg=2, n_min=2, seed=1, dim=3))
    s = stats(grid)
    sys = assemble(grid, flow_dir=0)
    rep_u = solve_schur(sys, profile_config("paper3d", "uzawa"))
    rep_s = solve_schur(sys, profile_config("paper3d", "simple"))
    wall = time.perf_counter() - start
    checks = [
        (s.stv_pct >= 40.0, f"surface-to-volume {s.stv_pct:.1f}% below the 40% regime"),
        (rep_u.converged, "uzawa run did not converge"),
        (rep_s.converged, "simple run did not converge"),
        (rep_s.iters_outer <= rep_u.iters_outer,
         f"simple took {rep_s.iters_outer} iterations vs uzawa {rep_u.iters_outer}"),
    ]
    _report(9, "3d smoke substitute", checks,
            f"sigma_s={s.stv_pct:.1f}%, iters uzawa={rep_u.iters_outer} "
            f"simple={rep_s.iters_outer}, {wall:.0f}s")
