import numpy as np
import pytest
from scipy.integrate import quad

from sphbench import physics
from sphbench.model import SimParams


def params_for(h=0.01, dp=0.005, c0=20.0, alpha=0.25):
    return SimParams(h=h, dp=dp, rho0=1000.0, c0=c0, gamma=7.0, alpha=alpha,
                     g=np.array([0.0, 0.0, -9.81]), cfl=0.3,
                     domain_min=np.zeros(3), domain_max=np.ones(3))


# ------------------------------------------------------------------ kernel

def test_kernel_support_boundary():
    assert physics.kernel_w(2.0, 1.0) == 0.0
    assert physics.kernel_w(3.0, 1.0) == 0.0
    assert physics.kernel_w(0.0, 1.0) == pytest.approx(1.0 / np.pi, rel=1e-12)


@pytest.mark.parametrize("h", [0.5, 1.0, 2.0])
def test_kernel_normalization_by_quadrature(h):
    total, _ = quad(lambda r: 4.0 * np.pi * r * r * physics.kernel_w(r, h),
                    0.0, 2.0 * h, limit=200)
    assert total == pytest.approx(1.0, abs=1e-3)


def test_kernel_nonnegative_and_compact():
    h = 0.7
    r = np.linspace(0.0, 3.0 * h, 1000)
    w = physics.kernel_w(r, h)
    assert np.all(w >= 0.0)
    assert np.all(w[r >= 2.0 * h] == 0.0)
    assert np.all(w[r < 2.0 * h] > 0.0)


def test_grad_zero_cases():
    assert np.array_equal(physics.kernel_grad_w(np.zeros(3), 1.0), np.zeros(3))
    assert np.array_equal(physics.kernel_grad_w(np.array([2.0, 0, 0]), 1.0),
                          np.zeros(3))


def test_grad_points_against_separation():
    g = physics.kernel_grad_w(np.array([0.5, 0.0, 0.0]), 1.0)
    assert g[0] < 0.0 and g[1] == 0.0 and g[2] == 0.0


def test_grad_matches_finite_differences_example():
    h, step = 1.0, 1e-4
    r_ab = np.array([0.5, 0.0, 0.0])
    g = physics.kernel_grad_w(r_ab, h)
    fd = (physics.kernel_w(0.5 + step, h) - physics.kernel_w(0.5 - step, h)) / (2 * step)
    assert g[0] == pytest.approx(fd, rel=1e-4)


def test_grad_matches_finite_differences_sampled():
    h = 0.8
    rng = np.random.default_rng(42)
    radii = rng.uniform(0.02 * h, 1.98 * h, size=100)
    for r in radii:
        g = physics.kernel_grad_w(np.array([r, 0.0, 0.0]), h)
        step = 1e-4 * h
        fd = (physics.kernel_w(r + step, h) - physics.kernel_w(r - step, h)) / (2 * step)
        assert g[0] == pytest.approx(fd, rel=1e-4, abs=1e-12)


# ------------------------------------------------------------------ EOS

def test_eos_reference_state():
    p = params_for()
    press, cs = physics.eos(p.rho0, p)
    assert press == 0.0
    assert cs == pytest.approx(p.c0, rel=1e-12)


def test_eos_against_direct_power_evaluation():
    p = params_for(c0=40.0)
    b = 40.0 ** 2 * 1000.0 / 7.0
    press, _ = physics.eos(1001.0, p)
    assert press == pytest.approx(b * (1.001 ** 7 - 1.0), rel=1e-12)


def test_eos_stiffness_slope_is_c0_squared():
    p = params_for(c0=25.0)
    eps = 1e-3
    p_hi, _ = physics.eos(p.rho0 + eps, p)
    p_lo, _ = physics.eos(p.rho0 - eps, p)
    slope = (p_hi - p_lo) / (2 * eps)
    assert slope == pytest.approx(p.c0 ** 2, rel=1e-3)


def test_eos_monotone_near_reference():
    p = params_for()
    rho = np.linspace(0.9 * p.rho0, 1.1 * p.rho0, 512)
    press, cs = physics.eos(rho, p)
    assert np.all(np.diff(press) > 0.0)
    assert np.all(cs > 0.0)


# ------------------------------------------------------------------ tensile

def test_tensile_zero_cases():
    assert physics.tensile_term(0.0, 1000.0, 0.0, 1000.0, 0.5, 1.0) == 0.0
    assert physics.tensile_term(100.0, 1000.0, 100.0, 1000.0, 0.0, 1.0) == 0.0


def test_tensile_hand_value():
    # R = 0.01*100/1e6 each side, kernel ratio 1.
    val = physics.tensile_term(100.0, 1000.0, 100.0, 1000.0, 0.7, 0.7)
    assert val == pytest.approx(2e-6, rel=1e-12)


def test_tensile_negative_pressure_branch():
    val = physics.tensile_term(-50.0, 1000.0, 0.0, 1000.0, 0.7, 0.7)
    assert val == pytest.approx(0.2 * 50.0 / 1e6, rel=1e-12)
    with pytest.raises(ValueError):
        physics.tensile_term(1.0, 1.0, 1.0, 1.0, 1.0, 0.0)


# ------------------------------------------------------------------ derived

def test_derived_recompute_is_bit_stable():
    p = params_for()
    rho = np.random.default_rng(3).uniform(950, 1050, 4096).astype(np.float32)
    d1 = physics.compute_derived(rho, p)
    d2 = physics.compute_derived(rho, p)
    for name in ("press", "csound", "prrho", "tensil"):
        assert np.array_equal(getattr(d1, name), getattr(d2, name))
    assert np.all(d1.csound > 0)


def test_prrho_matches_press_over_rho2_within_ulp():
    p = params_for()
    rho = np.random.default_rng(4).uniform(900, 1100, 4096).astype(np.float32)
    d = physics.compute_derived(rho, p)
    expect = (d.press.astype(np.float64) / rho.astype(np.float64) ** 2
              ).astype(np.float32)
    ulp = np.spacing(np.abs(expect).astype(np.float32))
    assert np.all(np.abs(d.prrho - expect) <= ulp)


# ------------------------------------------------------------------ pairs

def random_pair_args(rng, p):
    pos_a = rng.uniform(0, 1, 3)
    pos_b = pos_a + rng.uniform(-1.5 * p.h, 1.5 * p.h, 3)
    vel_a = rng.normal(0, 1, 3)
    vel_b = rng.normal(0, 1, 3)
    rho_a, rho_b = rng.uniform(950, 1050, 2)
    return (pos_a, vel_a, rho_a, 1e-3, pos_b, vel_b, rho_b, 1e-3)


def test_pair_coincident_limit_is_zero():
    p = params_for()
    out = physics.pair_interaction(np.zeros(3), np.zeros(3), 1000.0, 1e-3,
                                   np.zeros(3), np.zeros(3), 1000.0, 1e-3, p)
    assert np.all(out.accel_on_a == 0.0) and out.drho_dt_on_a == 0.0
    assert np.all(out.accel_on_b == 0.0) and out.drho_dt_on_b == 0.0


def test_pair_separating_has_no_viscosity():
    p = params_for(alpha=0.25)
    p0 = params_for(alpha=0.0)
    pos_a, pos_b = np.zeros(3), np.array([0.008, 0.0, 0.0])
    vel_a, vel_b = np.array([-1.0, 0, 0]), np.array([1.0, 0, 0])  # separating
    a = physics.pair_interaction(pos_a, vel_a, 1000.0, 1e-3,
                                 pos_b, vel_b, 1000.0, 1e-3, p)
    b = physics.pair_interaction(pos_a, vel_a, 1000.0, 1e-3,
                                 pos_b, vel_b, 1000.0, 1e-3, p0)
    assert np.array_equal(a.accel_on_a, b.accel_on_a)


def test_pair_approaching_feels_viscosity():
    p = params_for(alpha=0.25)
    p0 = params_for(alpha=0.0)
    pos_a, pos_b = np.zeros(3), np.array([0.008, 0.0, 0.0])
    vel_a, vel_b = np.array([1.0, 0, 0]), np.array([-1.0, 0, 0])  # approaching
    a = physics.pair_interaction(pos_a, vel_a, 1000.0, 1e-3,
                                 pos_b, vel_b, 1000.0, 1e-3, p)
    b = physics.pair_interaction(pos_a, vel_a, 1000.0, 1e-3,
                                 pos_b, vel_b, 1000.0, 1e-3, p0)
    assert not np.array_equal(a.accel_on_a, b.accel_on_a)


def test_pair_antisymmetry_equal_masses_exact():
    p = params_for()
    rng = np.random.default_rng(11)
    for _ in range(200):
        args = random_pair_args(rng, p)
        out = physics.pair_interaction(*args, p)
        assert np.array_equal(out.accel_on_b, -out.accel_on_a)


def test_pair_momentum_exchange_unequal_masses():
    p = params_for()
    rng = np.random.default_rng(12)
    for _ in range(200):
        pos_a, vel_a, rho_a, _, pos_b, vel_b, rho_b, _ = random_pair_args(rng, p)
        m_a, m_b = 1e-3, 2.5e-3
        out = physics.pair_interaction(pos_a, vel_a, rho_a, m_a,
                                       pos_b, vel_b, rho_b, m_b, p)
        np.testing.assert_allclose(m_b * out.accel_on_b,
                                   -m_a * out.accel_on_a, rtol=1e-15, atol=0)


def test_pair_modes_agree_bitwise():
    p = params_for()
    rng = np.random.default_rng(13)
    for _ in range(10_000):
        args = random_pair_args(rng, p)
        pre = physics.pair_interaction(*args, p, mode="precomputed")
        rec = physics.pair_interaction(*args, p, mode="recomputed")
        assert np.array_equal(pre.accel_on_a, rec.accel_on_a)
        assert pre.drho_dt_on_a == rec.drho_dt_on_a
    with pytest.raises(ValueError):
        physics.pair_interaction(*random_pair_args(rng, p), p, mode="bogus")
