"""Acceptance gate: twelve end-to-end checks at their stated tolerances.

Each test prints one pass line when its criterion holds; a failed assertion
surfaces as the test's failure line. Every check finishes in well under two
minutes on a laptop.
"""

import math

import numpy as np
import pytest
from scipy import stats

from glevy import (
    CadlagPath,
    BaseJumpModel,
    ControlPolicy,
    DiscreteLevyMeasure,
    Grid1D,
    InverseSquareTail,
    LevyTriple,
    ProcessSpec,
    Region,
    TestFunction,
    UncertaintySet,
    cadlag_modulus,
    constant_policies,
    counterexample_family,
    decompose,
    draw_scenario,
    erlang_bound_check,
    estimate_capacity,
    estimate_upper_expectation,
    g_poisson_distribution,
    martingale_check,
    mean_of_jump_part,
    poisson_integral,
    qc_criterion,
    simulate_path,
    skorohod_distance_upper,
    solve_ipde,
    sup_integral,
    transport_map,
)
from conftest import location_family, mixture_family, point_mass_family

GRID = Grid1D(x_min=-6.0, x_max=8.0, nx=141, dt=0.01, horizon=1.0)


def report(num: int, text: str) -> None:
    print(f"criterion {num:02d}: PASS - {text}")


def refined_policies(uset, horizon):
    """Constant controls plus two-piece switches between the extreme triples."""
    pols = constant_policies(uset, horizon)
    n = len(uset.triples)
    if n > 1:
        bp = np.array([0.0, horizon / 2.0, horizon])
        for i, j in ((0, n - 1), (n - 1, 0)):
            pols.append(ControlPolicy(bp, (i, j)))
    return pols


def test_criterion_01_expectation_identity(lam_12):
    checks = []
    for t in (0.5, 1.0):
        sol = solve_ipde(lambda x: np.asarray(x, dtype=float), lam_12, GRID, horizon=t)
        pide = sol.value_at_zero()
        assert abs(pide - 2.0 * t) <= 1e-2
        est = estimate_upper_expectation(
            lambda p: p.scalar_value(t),
            lam_12,
            constant_policies(lam_12, t),
            4000,
            101,
            horizon=t,
        )
        assert pide - est.value <= 3.0 * est.std_error
        checks.append((t, pide, est.value))
    report(1, f"linear payoff, PIDE = 2t within 1e-2 and MC within 3 sigma below: {checks}")


def test_criterion_02_jump_part_mean():
    neg = UncertaintySet(
        tuple(
            LevyTriple(DiscreteLevyMeasure(np.array([[-1.0], [2.0]]), np.array([w, 0.5])))
            for w in (0.5, 1.0, 2.0)
        )
    )
    families = [
        point_mass_family(np.linspace(1.0, 2.0, 5)),
        mixture_family(),
        location_family(),
        point_mass_family([3.0], location=0.5),
        neg,
    ]
    for fam in families:
        want = sup_integral(fam, lambda z: z).value
        for t in (0.25, 1.0, 2.0):
            got = mean_of_jump_part(fam, t)
            assert abs(float(got[0]) - t * want) <= 1e-12
    report(2, "meanOfJumpPart equals t times the sup first moment to 1e-12 on 5 families")


def test_criterion_03_martingale_and_symmetry(lam_12):
    s, t = 0.25, 0.75
    y = martingale_check(ProcessSpec("compensatedJumpPart", lam_12), s, t, GRID)
    assert y.is_martingale
    assert y.max_deviation <= y.tol
    assert abs(y.symmetric_deviation - (t - s) * (2.0 - 1.0)) <= y.tol
    z = martingale_check(ProcessSpec("symmetricCompensated", lam_12), s, t, GRID)
    assert z.max_deviation <= z.tol and z.symmetric_deviation <= z.tol
    report(3, f"Y martingale one-sided (sym dev {y.symmetric_deviation:.4f} = t-s), Z two-sided")


def test_criterion_04_duality_suite(lam_12, mixtures):
    payoffs = [
        ("linear", lambda x: np.asarray(x, dtype=float)),
        ("clamped", lambda x: np.minimum(np.asarray(x, dtype=float), 1.0)),
        ("antitone", lambda x: np.maximum(1.0 - 0.5 * np.asarray(x, dtype=float), 0.0)),
    ]
    gaps = []
    for si, uset in enumerate((lam_12, mixtures)):
        for name, phi in payoffs:
            sol = solve_ipde(phi, uset, GRID, horizon=1.0)
            pide = sol.value_at_zero()
            est = estimate_upper_expectation(
                lambda p: float(phi(p.scalar_value(1.0))),
                uset,
                refined_policies(uset, 1.0),
                4000,
                300 + si,
                horizon=1.0,
            )
            assert est.value <= pide + 3.0 * est.std_error
            assert pide - est.value <= 0.05
            gaps.append(round(pide - est.value, 4))
    report(4, f"six payoff/set cases, MC below PIDE and gap <= 0.05: gaps {gaps}")


def test_criterion_05_classical_degeneration():
    singleton = point_mass_family([1.0])
    phi = lambda x: np.minimum(np.asarray(x, dtype=float), 1.0)
    sol = solve_ipde(phi, singleton, GRID, horizon=1.0)
    want = 1.0 - math.exp(-1.0)
    assert abs(sol.value_at_zero() - want) <= 5e-3

    ks = np.arange(0, 80)
    series = float(np.sum(stats.poisson.pmf(ks, 1.0) * np.minimum(ks, 1.0)))
    got = g_poisson_distribution(1.0, 1.0, 1.0, lambda k: min(float(k), 1.0))
    assert abs(got - series) <= 1e-6
    report(5, f"singleton set degenerates to the Poisson law ({got:.8f} vs {series:.8f})")


def test_criterion_06_erlang_capacity_bound(mixtures):
    res = erlang_bound_check(
        mixtures,
        region_a=Region.open_interval(0.5, 2.5),
        region_b=Region.open_interval(0.5, 1.5),
        k=1,
        time_window=(0.0, 1.0),
        n_paths=20_000,
        seed=606,
    )
    want = 0.75 * (1.0 - math.exp(-1.0))
    assert res.analytic_bound == pytest.approx(want, abs=1e-12)
    assert abs(res.analytic_bound - 0.4742) <= 5e-4
    assert res.mc_capacity >= res.analytic_bound - 3.0 * res.std_error
    assert res.passes
    report(6, f"mc capacity {res.mc_capacity:.4f} >= bound {res.analytic_bound:.4f} - 3 sigma")


def test_criterion_07_boundary_jump_capacity(mixtures):
    boundary = Region.point_set([0.5, 1.5])

    def event(path):
        return bool(np.any(boundary.contains(path.jump_sizes)))

    est = estimate_capacity(
        event,
        mixtures,
        constant_policies(mixtures, 1.0),
        100_000,
        707,
        horizon=1.0,
    )
    assert est.value == 0.0
    assert est.std_error == 0.0
    report(7, "no jump ever lands on the region boundary over 1e5 paths per control")


def test_criterion_08_transport_exactness():
    rng = np.random.default_rng(808)
    base = InverseSquareTail()
    for _ in range(10):
        n = int(rng.integers(1, 6))
        zs = np.unique(rng.uniform(0.2, 4.0, n) * rng.choice([-1.0, 1.0], n))
        ws = rng.uniform(0.1, 2.0, zs.size)
        m = DiscreteLevyMeasure(zs.reshape(-1, 1), ws)
        tm = transport_map(m, base)
        errs = tm.pushforward_errors(m)
        assert errs.size == m.n_atoms
        assert float(np.max(errs)) <= 1e-12
        for eps in (0.1, 0.5, 1.0):
            eta = tm.separation_radius(eps)
            assert eta > 0.0
            for sh in tm.shells:
                if abs(sh.target) >= eps:
                    assert sh.lo >= eta - 1e-15
    report(8, "ten random targets realized exactly; small jumps separated for eps in {0.1,0.5,1}")


def test_criterion_09_decomposition_reconstruction():
    triple = LevyTriple(DiscreteLevyMeasure.delta(1.0), drift=0.3, cov_root=1.0)
    uset = UncertaintySet((triple,))
    model = BaseJumpModel.from_uncertainty(uset)
    policy = ControlPolicy.constant(0, 0.0, 1.0)
    rng = np.random.default_rng(909)
    worst = 0.0
    for _ in range(1000):
        sc = draw_scenario(model, 1.0, rng, with_brownian=True, brownian_dt=0.1)
        path = simulate_path(sc, policy, uset)
        xc, xd = decompose(path)
        probes = np.concatenate([path.grid_times, path.jump_times, [path.horizon]])
        total = xc.values_at(probes) + xd.values_at(probes)
        worst = max(worst, float(np.max(np.abs(total - path.values_at(probes)))))
    assert worst <= 1e-12
    report(9, f"Xc + Xd reconstructs 1000 mixed paths (worst error {worst:.2e})")


def test_criterion_10_modulus_properties():
    rng = np.random.default_rng(1010)
    for _ in range(1000):
        n = int(rng.integers(1, 8))
        times = np.sort(rng.uniform(0.05, 0.95, n))
        while np.min(np.diff(times, prepend=0.0, append=1.0)) < 1e-4:
            times = np.sort(rng.uniform(0.05, 0.95, n))
        sizes = rng.uniform(0.2, 2.0, n) * rng.choice([-1.0, 1.0], n)
        path = CadlagPath.from_jumps(list(zip(times, sizes)), horizon=1.0)
        gap = float(np.min(np.diff(np.concatenate([[0.0], times, [1.0]]))))
        d_small = 0.9 * gap
        d_big = min(2.0 * d_small + 0.05, 0.95)
        w_small = cadlag_modulus(path, d_small)
        w_big = cadlag_modulus(path, d_big)
        for pair in (w_small, w_big):
            assert pair.w_second <= pair.w_prime + 1e-12
        assert w_small.w_prime == 0.0
        assert w_small.w_prime <= w_big.w_prime + 1e-12
    report(10, "w'' <= w' and w'(delta) vanishes below the smallest event gap, 1000 paths")


def test_criterion_11_counterexample_mechanism(lam_12):
    t, n = 0.5, 100
    a = counterexample_family(t + 1.0 / n, 1.0 + 1.0 / n, horizon=1.0)
    b = counterexample_family(t, 1.0, horizon=1.0)
    dist = skorohod_distance_upper(a, b)
    assert dist < 0.02

    target = Region.point_set([1.0])
    ia = poisson_integral(a, lambda z: 1.0, target, 1.0)
    ib = poisson_integral(b, lambda z: 1.0, target, 1.0)
    assert abs(ia - ib) == 1.0

    indicator = TestFunction(
        lambda z: 1.0 if z == 1.0 else 0.0, discontinuity=Region.point_set([1.0])
    )
    verdict = qc_criterion(indicator, lam_12)
    assert verdict.status == "not-qc"
    assert verdict.witness_atom is not None
    report(11, f"paths {dist:.4f} apart in Skorohod sense, point-mass integrals 1 apart, witness found")


def test_criterion_12_sublinearity_both_backends(lam_12):
    rng = np.random.default_rng(1212)
    xs = np.linspace(-6.0, 8.0, 15)

    def random_payoff():
        ys = np.sort(rng.uniform(0.0, 2.0, xs.size))
        return lambda x, ys=ys: np.interp(np.asarray(x, dtype=float), xs, ys)

    for _ in range(3):
        f, g = random_payoff(), random_payoff()
        uf = solve_ipde(f, lam_12, GRID, horizon=0.5).values
        ug = solve_ipde(g, lam_12, GRID, horizon=0.5).values
        usum = solve_ipde(lambda x: f(x) + g(x), lam_12, GRID, horizon=0.5).values
        udom = solve_ipde(lambda x: f(x) + 0.5, lam_12, GRID, horizon=0.5).values
        assert np.all(usum <= uf + ug + 1e-10)
        assert np.all(uf <= udom + 1e-10)
        uscaled = solve_ipde(lambda x: 3.0 * f(x), lam_12, GRID, horizon=0.5).values
        assert np.allclose(uscaled, 3.0 * uf, atol=1e-9)
    uconst = solve_ipde(lambda x: 0.0 * np.asarray(x) + 0.7, lam_12, GRID, horizon=0.5)
    assert float(np.max(np.abs(uconst.values - 0.7))) == 0.0

    pols = constant_policies(lam_12, 1.0)
    f, g = random_payoff(), random_payoff()
    xi_f = lambda p: float(f(p.scalar_value(1.0)))
    xi_g = lambda p: float(g(p.scalar_value(1.0)))
    ef = estimate_upper_expectation(xi_f, lam_12, pols, 500, 120, horizon=1.0)
    eg = estimate_upper_expectation(xi_g, lam_12, pols, 500, 120, horizon=1.0)
    esum = estimate_upper_expectation(
        lambda p: xi_f(p) + xi_g(p), lam_12, pols, 500, 120, horizon=1.0
    )
    eshift = estimate_upper_expectation(
        lambda p: xi_f(p) + 0.25, lam_12, pols, 500, 120, horizon=1.0
    )
    escaled = estimate_upper_expectation(
        lambda p: 2.0 * xi_f(p), lam_12, pols, 500, 120, horizon=1.0
    )
    edom = estimate_upper_expectation(
        lambda p: xi_f(p) + abs(xi_g(p)), lam_12, pols, 500, 120, horizon=1.0
    )
    assert esum.value <= ef.value + eg.value + 1e-12
    assert eshift.value == pytest.approx(ef.value + 0.25, abs=1e-12)
    assert escaled.value == pytest.approx(2.0 * ef.value, abs=1e-12)
    assert edom.value >= ef.value - 1e-12
    report(12, "monotone, constant-preserving, subadditive, homogeneous on both backends")
