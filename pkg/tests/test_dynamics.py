"""Geodesics, path functionals, energy functional, and the gradient flow.

Anchors and expectations:

* Zero initial velocity integrates to a bit-constant curve with zero speed.
* For n = 1 the acceleration vanishes identically (dimension-one flatness),
  so geodesics are straight lines in the potential: phi(T) = phi(0) + T psi
  up to a constant gauge shift.
* On a constant curve the Dirichlet equation residual vanishes while the
  Calabi residual is exactly 1 (the two equations differ by the inhomogeneous
  term); on an actual Dirichlet geodesic the Calabi residual stays O(1).
* At the flat potential: S = 0, nu = 0, the flow is exactly stationary, and
  the second derivative of nu along t -> t cos(2 pi x_1) is 4 pi^4.
"""

import numpy as np
import pytest

from kgeo.torus import build_spec, random_field
from kgeo.state import (
    PositivityViolation,
    make_potential,
    project_tangent,
)
from kgeo.metrics import MetricKind, inner
from kgeo.dynamics import (
    Curve,
    geodesic_residual,
    geodesic_rhs,
    integrate_geodesic,
    kenergy,
    kenergy_second_derivative,
    path_energy,
    path_length,
    pseudo_calabi_flow,
    scalar_curvature,
)


@pytest.fixture(scope="module")
def spec1():
    return build_spec(1, 16)


@pytest.fixture(scope="module")
def spec2():
    return build_spec(2, 16)


@pytest.fixture(scope="module")
def pot2(spec2):
    return make_potential(spec2, 0.004 * random_field(spec2, seed=61))


@pytest.fixture(scope="module")
def flat2(spec2):
    return make_potential(spec2, np.zeros(spec2.shape))


@pytest.fixture(scope="module")
def short_geodesic(pot2):
    tv = project_tangent(pot2, 0.02 * random_field(pot2.spec, seed=64))
    return integrate_geodesic(pot2, tv, 0.05, 5e-3)


def _zero_tv(pot):
    return project_tangent(pot, np.zeros(pot.spec.shape))


# ---------------------------------------------------------------------------
# Curve container


def test_curve_validation(spec2):
    z = np.zeros(spec2.shape)
    with pytest.raises(ValueError):
        Curve(spec2, [], [], [])
    with pytest.raises(ValueError):
        Curve(spec2, [0.0, 0.1, 0.15], [z] * 3, [z] * 3)  # nonuniform
    with pytest.raises(ValueError):
        Curve(spec2, [0.0, -0.1], [z] * 2, [z] * 2)  # decreasing
    with pytest.raises(ValueError):
        Curve(spec2, [0.0, 0.1], [z] * 2, [z] * 3)  # length mismatch


def test_curve_accessors(short_geodesic):
    cur = short_geodesic
    assert cur.dt == pytest.approx(5e-3)
    pot = cur.potential(0)
    assert pot is cur.potential(0)  # memoized
    tv = cur.velocity(3)
    assert abs(pot.spec.n) == 2
    assert abs(cur.potential(3).eu_mean(tv.psi)) <= 1e-14


# ---------------------------------------------------------------------------
# Path functionals


def test_path_energy_length_constant_speed(pot2):
    psi = project_tangent(pot2, 0.02 * random_field(pot2.spec, seed=65)).psi
    cur = Curve(pot2.spec, [0.0, 0.1, 0.2],
                [pot2.phi] * 3, [psi] * 3)
    T = 0.2
    e = path_energy(MetricKind.DIRICHLET, cur)
    ln = path_length(MetricKind.DIRICHLET, cur)
    assert e > 0.0
    assert T * e == pytest.approx(ln ** 2, rel=1e-12)  # equality: const speed


def test_path_energy_zero_curve(pot2):
    cur = Curve(pot2.spec, [0.0, 0.1], [pot2.phi] * 2,
                [np.zeros(pot2.spec.shape)] * 2)
    assert path_energy(MetricKind.DIRICHLET, cur) == 0.0
    assert path_length(MetricKind.DIRICHLET, cur) == 0.0


def test_cauchy_schwarz_on_geodesic(short_geodesic):
    T = float(short_geodesic.times[-1])
    e = path_energy(MetricKind.DIRICHLET, short_geodesic)
    ln = path_length(MetricKind.DIRICHLET, short_geodesic)
    assert ln ** 2 <= T * e * (1.0 + 1e-12)


# ---------------------------------------------------------------------------
# Geodesic right-hand side


def test_geodesic_rhs_zero_velocity(pot2):
    acc = geodesic_rhs(pot2, _zero_tv(pot2))
    assert np.all(acc.psi == 0.0)


def test_geodesic_rhs_dim1_vanishes(spec1):
    pot = make_potential(spec1, 0.01 * random_field(spec1, seed=62))
    tv = project_tangent(pot, 0.02 * random_field(spec1, seed=63))
    acc = geodesic_rhs(pot, tv)
    assert np.max(np.abs(acc.psi)) <= 1e-10


def test_geodesic_rhs_gauge(pot2):
    tv = project_tangent(pot2, 0.02 * random_field(pot2.spec, seed=66))
    acc = geodesic_rhs(pot2, tv)
    assert abs(pot2.eu_mean(acc.psi)) <= 1e-12


# ---------------------------------------------------------------------------
# Integrator


def test_integrate_zero_velocity_is_constant(pot2):
    cur = integrate_geodesic(pot2, _zero_tv(pot2), 0.05, 0.01)
    assert np.max(np.abs(cur.phis[-1] - cur.phis[0])) <= 1e-15
    assert np.max(cur.meta["speeds"]) == 0.0


def test_integrate_dim1_linear_motion(spec1):
    pot = make_potential(spec1, 0.01 * random_field(spec1, seed=62))
    tv = project_tangent(pot, 0.02 * random_field(spec1, seed=63))
    cur = integrate_geodesic(pot, tv, 0.1, 0.01)
    r = cur.phis[-1] - cur.phis[0] - 0.1 * tv.psi
    r = r - np.mean(r)  # constant gauge shift is free
    assert np.max(np.abs(r)) <= 1e-12


def test_integrate_validation(pot2):
    tv = _zero_tv(pot2)
    with pytest.raises(ValueError):
        integrate_geodesic(pot2, tv, 0.05, -0.01)
    with pytest.raises(ValueError):
        integrate_geodesic(pot2, tv, 0.01, 0.05)
    with pytest.raises(ValueError):
        integrate_geodesic(pot2, tv, 0.05, 0.01, store_every=0)
    with pytest.raises(ValueError):
        # 5 steps, store_every 3 would make nonuniform samples
        integrate_geodesic(pot2, tv, 0.05, 0.01, store_every=3)
    foreign = make_potential(pot2.spec, np.zeros(pot2.spec.shape))
    with pytest.raises(ValueError):
        integrate_geodesic(foreign, _zero_tv(pot2), 0.05, 0.01)


def test_integrate_store_every(pot2):
    tv = project_tangent(pot2, 0.01 * random_field(pot2.spec, seed=67, kmax=2))
    cur = integrate_geodesic(pot2, tv, 0.04, 0.01, store_every=2)
    assert np.allclose(cur.times, [0.0, 0.02, 0.04])
    endpoints = integrate_geodesic(pot2, tv, 0.04, 0.01, store_every=10 ** 9)
    assert np.allclose(endpoints.times, [0.0, 0.04])
    assert np.array_equal(endpoints.phis[-1], cur.phis[-1])


def test_integrate_speed_drift_short(short_geodesic):
    sp = short_geodesic.meta["speeds"]
    assert np.max(np.abs(sp - sp[0])) / sp[0] <= 2e-4


def test_integrate_positivity_exit(pot2):
    tv = project_tangent(pot2, 5.0 * random_field(pot2.spec, seed=68))
    with pytest.raises(PositivityViolation) as info:
        integrate_geodesic(pot2, tv, 0.5, 0.01)
    assert getattr(info.value, "time", None) is not None
    assert info.value.time > 0.0


# ---------------------------------------------------------------------------
# Equation residuals


def test_residual_constant_curve(pot2):
    cur = integrate_geodesic(pot2, _zero_tv(pot2), 0.05, 0.01)
    rd = geodesic_residual(MetricKind.DIRICHLET, cur)
    rc = geodesic_residual(MetricKind.CALABI, cur)
    assert rd.shape == (len(cur) - 4,)
    assert np.max(rd) <= 1e-9
    # the Calabi equation has an inhomogeneous term the constant curve misses
    assert np.allclose(rc, 1.0, atol=1e-9)


def test_residual_on_dirichlet_geodesic(short_geodesic):
    rd = geodesic_residual(MetricKind.DIRICHLET, short_geodesic)
    rc = geodesic_residual(MetricKind.CALABI, short_geodesic)
    assert np.max(rd) <= 5e-3  # second order in dt = 5e-3
    assert np.min(rc) >= 0.5   # a Dirichlet geodesic is not a Calabi one


def test_residual_needs_enough_samples(pot2):
    tv = _zero_tv(pot2)
    cur = integrate_geodesic(pot2, tv, 0.02, 0.01)
    with pytest.raises(ValueError):
        geodesic_residual(MetricKind.DIRICHLET, cur)
    with pytest.raises(ValueError):
        geodesic_residual(MetricKind.MABUCHI, cur)


# ---------------------------------------------------------------------------
# Scalar curvature and the energy functional


def test_scalar_curvature_flat_zero(flat2):
    assert np.max(np.abs(scalar_curvature(flat2))) == 0.0


def test_scalar_curvature_integrates_to_zero(pot2):
    s = scalar_curvature(pot2)
    assert abs(pot2.eu_mean(s)) <= 1e-13 * np.max(np.abs(s))


def test_kenergy_flat_zero(flat2):
    assert kenergy(flat2) == 0.0


def test_kenergy_positive_off_flat(pot2):
    assert kenergy(pot2) > 1e-4


def test_kenergy_segment_additivity(pot2):
    whole = kenergy(pot2)
    half = make_potential(pot2.spec, 0.5 * pot2.phi)
    # nu along t*phi: value at t=1 equals value at t=1/2 plus the remaining
    # segment, evaluated by the same quadrature on [1/2, 1] via rescaling
    seg1 = kenergy(half)
    seg2 = _kenergy_segment(pot2, 0.5, 1.0)
    assert abs(seg1 + seg2 - whole) <= 1e-12 * max(1.0, abs(whole))


def _kenergy_segment(pot, t0, t1, steps=12):
    nodes, weights = np.polynomial.legendre.leggauss(steps)
    nodes = 0.5 * (t1 - t0) * (nodes + 1.0) + t0
    weights = 0.5 * (t1 - t0) * weights
    total = 0.0
    for t, w in zip(nodes, weights):
        p = make_potential(pot.spec, t * pot.phi)
        s = scalar_curvature(p)
        total += w * (-2.0) * p.eu_mean(pot.phi * s)
    return total


def test_kenergy_rejects_raw_arrays(spec2):
    with pytest.raises(TypeError):
        kenergy(np.zeros(spec2.shape))


def test_kenergy_second_derivative_flat_anchor(flat2):
    x1 = flat2.spec.coordinates()[0]
    tv = project_tangent(flat2, np.cos(2.0 * np.pi * x1))
    val = kenergy_second_derivative(flat2, tv)
    assert val == pytest.approx(4.0 * np.pi ** 4, rel=1e-10)


def test_kenergy_second_derivative_zero_tangent(pot2):
    assert kenergy_second_derivative(pot2, _zero_tv(pot2)) == 0.0


def test_kenergy_second_derivative_twin(spec2):
    pot = make_potential(spec2, 0.004 * random_field(spec2, seed=42, kmax=3))
    tv = project_tangent(pot, 0.02 * random_field(spec2, seed=43, kmax=3))
    closed = kenergy_second_derivative(pot, tv)
    h = 2e-3
    curve = integrate_geodesic(pot, tv, 2 * h, h)
    nus = [kenergy(curve.potential(i)) for i in range(3)]
    fd = (nus[2] - 2.0 * nus[1] + nus[0]) / h ** 2
    assert abs(fd - closed) / abs(closed) <= 2e-2


# ---------------------------------------------------------------------------
# Gradient flow


def test_flow_flat_is_stationary(flat2):
    trace = pseudo_calabi_flow(flat2, 0.01, 5e-3)
    assert np.all(trace.nu == 0.0)
    assert np.all(trace.grad_norm == 0.0)


def test_flow_monotone_short(pot2):
    trace = pseudo_calabi_flow(pot2, 0.01, 5e-4, sample_every=4)
    inc = np.diff(trace.nu)
    assert np.all(inc <= 1e-10)
    assert trace.nu[-1] < trace.nu[0]
    assert trace.grad_norm[-1] < trace.grad_norm[0]


def test_flow_validation(pot2):
    with pytest.raises(ValueError):
        pseudo_calabi_flow(pot2, 0.01, -1e-3)
    with pytest.raises(ValueError):
        pseudo_calabi_flow(pot2, 1e-4, 1e-3)
