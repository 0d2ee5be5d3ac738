import io
import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from exdiff.stability import (EXAMPLE_1_D, StabilityError, build_error_dynamics, example,
                              example1_characteristic_poly, jury_margins,
                              jury_stability_test, linear_recursion_growth, mu_grid, rho_F,
                              spectral_radius_excluding_one, sweep_rho)


def roots_oracle(coeffs_ascending):
    """All roots strictly inside the unit circle, via companion eigenvalues."""
    return bool(np.all(np.abs(np.roots(coeffs_ascending[::-1])) < 1))


def random_poly(rng, degree):
    roots = []
    while len(roots) < degree:
        r = rng.uniform(0.05, 1.6)
        if abs(r - 1) < 1e-6:
            continue
        if degree - len(roots) >= 2 and rng.random() < 0.5:
            z = r * np.exp(1j * rng.uniform(0, np.pi))
            roots += [z, np.conj(z)]
        else:
            roots.append(r * rng.choice([-1, 1]))
    c = np.real(np.poly(roots))[::-1] * rng.uniform(0.5, 3) * rng.choice([-1, 1])
    return c


def test_jury_matches_root_oracle():
    rng = np.random.default_rng(0)
    stable_seen = 0
    for j in range(120):
        c = random_poly(rng, 2 + j % 5)
        verdict = jury_stability_test(c)
        assert verdict.stable == roots_oracle(c), c
        stable_seen += verdict.stable
    assert 10 < stable_seen < 110


def test_jury_degree4_oracle():
    rng = np.random.default_rng(1)
    for _ in range(50):
        c = random_poly(rng, 4)
        assert jury_stability_test(c).stable == roots_oracle(c)


@given(st.lists(st.floats(-0.95, 0.95), min_size=1, max_size=6))
def test_jury_real_roots_inside(roots):
    c = np.poly(roots)[::-1]
    assert jury_stability_test(c).stable


def test_jury_simple_cases():
    assert jury_stability_test([0.25, 0, 1]).stable          # roots +-0.5i
    v = jury_stability_test([-1.5, 1])                      # root 1.5
    assert not v.stable and v.failing_condition == 1
    with pytest.raises(StabilityError):
        jury_stability_test([1, 0])


def test_jury_condition_count():
    assert len(jury_margins(example1_characteristic_poly(0.1))) == 8


def test_example1_poly_matches_error_dynamics():
    A, p, D = example(1)
    for mu in (0.01, 0.08, 0.5, 1.0, 2.5):
        dyn = build_error_dynamics(A, p, mu, D)
        ref = 32 * np.real(np.poly(np.linalg.eigvals(dyn.matrix)))      # descending powers
        mine = np.polymul([1, -1], example1_characteristic_poly(mu)[::-1])
        np.testing.assert_allclose(mine, ref, rtol=1e-6, atol=1e-6 * np.max(np.abs(ref)))


@pytest.mark.parametrize("mu", [0.01, 0.1, 1.0])
def test_D_at_one(mu):
    assert example1_characteristic_poly(mu).sum() == pytest.approx(25 * mu, rel=1e-9)


@pytest.mark.parametrize("mu,holds", [(0.12, True), (0.13, False), (3.0, False), (3.1, True)])
def test_condition_two(mu, holds):
    assert (jury_margins(example1_characteristic_poly(mu))[1] > 0) == holds


@pytest.mark.parametrize("mu,holds", [(1.6, True), (1.7, False)])
def test_condition_three(mu, holds):
    assert (jury_margins(example1_characteristic_poly(mu))[2] > 0) == holds


@pytest.mark.parametrize("mu", [0.05, 0.08, 0.5, 2.0])
def test_example1_unstable(mu):
    v = jury_stability_test(example1_characteristic_poly(mu))
    assert not v.stable
    assert not roots_oracle(example1_characteristic_poly(mu))


def test_example1_jury_json():
    out = json.loads(jury_stability_test(example1_characteristic_poly(0.08)).to_json())
    assert out == {"stable": False, "failing_condition": 8}


@pytest.mark.parametrize("which", [1, 2])
def test_unit_eigenvector(which):
    A, p, D = example(which)
    dyn = build_error_dynamics(A, p, 0.05, D)
    ones = np.ones(dyn.matrix.shape[0])
    np.testing.assert_allclose(dyn.matrix @ ones, ones, atol=1e-14)


def test_zero_step_structure():
    A, p, D = example(2)
    dyn = build_error_dynamics(A, p, 0.0, D)
    np.testing.assert_array_equal(dyn.G, 0)
    Ab = (np.eye(5) + A) / 2
    np.testing.assert_allclose(dyn.F[:5, :5], 2 * Ab.T)
    np.testing.assert_allclose(dyn.F[:5, 5:], -Ab.T)


def test_rho_F_example2():
    assert rho_F(example(2)[0]) == pytest.approx(0.9923, abs=5e-4)
    A, p, D = example(2)
    rho = spectral_radius_excluding_one(build_error_dynamics(A, p, 1e-9, D), exclude=2,
                                        unit_tol=1e-6)
    assert rho == pytest.approx(rho_F(A), abs=1e-6)


def test_spot_values():
    A1, p1, D1 = example(1)
    assert spectral_radius_excluding_one(build_error_dynamics(A1, p1, 0.01, D1)) > 1
    A2, p2, D2 = example(2)
    assert spectral_radius_excluding_one(build_error_dynamics(A2, p2, 0.001, D2)) < 1


def test_sweep_consistency():
    A, p, D = example(2)
    grid = mu_grid(1e-3, 0.3, 40, "linear")
    rep = sweep_rho(A, p, D, grid)
    for j in (0, 17, 39):
        single = spectral_radius_excluding_one(build_error_dynamics(A, p, grid[j], D))
        assert rep.rho[j] == single
    assert np.all(rep.stable == (rep.rho < 1))


def test_growth_matches_rho():
    A, p, D = example(2)
    dyn = build_error_dynamics(A, p, 0.25, D)
    rho = spectral_radius_excluding_one(dyn)
    assert linear_recursion_growth(dyn, n_iter=400) == pytest.approx(rho, rel=0.02)


def test_report_csv():
    A, p, D = example(1)
    rep = sweep_rho(A, p, D, mu_grid(1e-6, 3, 5))
    buf = io.StringIO()
    rep.to_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "mu,rho,stable" and len(lines) == 6
    assert all(line.endswith(",false") for line in lines[1:])


def test_errors():
    A, p, D = example(2)
    with pytest.raises(StabilityError):
        build_error_dynamics(A, p[:4], 0.1, D)
    with pytest.raises(StabilityError):
        build_error_dynamics(A.T, p, 0.1, D)
    with pytest.raises(StabilityError):
        sweep_rho(A, p, D, [0.0])
    with pytest.raises(StabilityError):
        example(3)
    assert EXAMPLE_1_D.tolist() == [20, 1, 1, 1]
