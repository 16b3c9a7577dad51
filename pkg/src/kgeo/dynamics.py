"""Paths, geodesics, scalar curvature and the energy functional.

A path of potentials phi(t) carries the conformal factor u(t) = MA(phi(t));
its velocity phi_t is a tangent field. Geodesics of the Dirichlet pairing
satisfy

    2 lap_phi(phi_tt) = H phi_t * H phi_t - (lap_phi phi_t)^2,

integrated here with the classical fourth-order one-step scheme at fixed
step. In complex dimension one the right-hand side vanishes identically and
geodesics are straight lines in potential space.

The energy functional nu is the path integral of (d phi_t, d f)_g e^u along
t -> t phi from the flat base (nu(0) = 0), where f is the mean-zero solution
of lap_phi f = S and S = -lap_phi u is the scalar curvature of the evolved
metric (the background is Ricci-flat, so the mean of S vanishes). Its
Dirichlet gradient is f itself; the downhill flow phi_t = -f is stepped
explicitly. All time-dependent diagnostics (conservation drift, equation
residuals) are reported per time sample so refinement studies can read off
convergence orders.
"""

import numpy as np

from .torus import gradient_z, complex_hessian, holomorphic_hessian
from .state import (KahlerPotential, TangentVector, PositivityViolation,
                    make_potential, _potential_raw, check_anchor, laplacian,
                    ma_cross, green_solve)
from .metrics import MetricKind, inner

__all__ = [
    "Curve",
    "FlowTrace",
    "path_energy",
    "path_length",
    "geodesic_rhs",
    "integrate_geodesic",
    "geodesic_residual",
    "scalar_curvature",
    "kenergy_gradient",
    "kenergy",
    "kenergy_second_derivative",
    "pseudo_calabi_flow",
]


class Curve:
    """A uniformly sampled path of potentials with velocities.

    Stores the raw potential and velocity fields; KahlerPotential states are
    rebuilt on demand (and memoized) because the derived tensors are an order
    of magnitude larger than the fields themselves. The rebuild keeps the
    stored fields bit-exact (no dealiasing): integrated trajectories live in
    the full grid space, and residual studies must difference exactly the
    states the integrator produced. meta carries integrator diagnostics
    (per-step speeds, re-gauge drift).
    """

    def __init__(self, spec, times, phis, psis, meta=None):
        times = np.asarray(times, dtype=float)
        if times.ndim != 1 or times.size < 1:
            raise ValueError("times must be a nonempty 1-d sequence")
        if times.size > 1:
            steps = np.diff(times)
            if np.min(steps) <= 0.0:
                raise ValueError("times must increase")
            if not np.allclose(steps, steps[0], rtol=1e-9, atol=1e-12):
                raise ValueError("times must be uniformly spaced")
        if not (len(phis) == len(psis) == times.size):
            raise ValueError("times, phis, psis must have equal length")
        self.spec = spec
        self.times = times
        self.phis = [np.asarray(p, dtype=float) for p in phis]
        self.psis = [np.asarray(p, dtype=float) for p in psis]
        self.meta = dict(meta or {})
        self._memo = {}

    def __len__(self):
        return self.times.size

    @property
    def dt(self):
        return float(self.times[1] - self.times[0]) if len(self) > 1 else 0.0

    def potential(self, i):
        """KahlerPotential at sample i (memoized, bounded cache)."""
        i = int(i)
        if i not in self._memo:
            if len(self._memo) >= 8:
                self._memo.pop(next(iter(self._memo)))
            self._memo[i] = _potential_raw(self.spec, self.phis[i])
        return self._memo[i]

    def velocity(self, i):
        """Velocity TangentVector at sample i."""
        pot = self.potential(i)
        psi = self.psis[int(i)]
        return TangentVector(pot, psi - pot.eu_mean(psi))


class FlowTrace:
    """Record of a gradient-descent run: times, energy values, grad norms."""

    def __init__(self, times, nu, grad_norm, meta=None):
        self.times = np.asarray(times, dtype=float)
        self.nu = np.asarray(nu, dtype=float)
        self.grad_norm = np.asarray(grad_norm, dtype=float)
        self.meta = dict(meta or {})
        if not (self.times.size == self.nu.size == self.grad_norm.size):
            raise ValueError("trace columns must have equal length")
        if self.times.size > 1 and np.min(np.diff(self.times)) <= 0.0:
            raise ValueError("times must increase")
        for col in (self.nu, self.grad_norm):
            if not np.all(np.isfinite(col)):
                raise ValueError("trace contains non-finite entries")


def _speeds(kind, curve):
    out = np.empty(len(curve))
    for i in range(len(curve)):
        tv = curve.velocity(i)
        out[i] = inner(kind, curve.potential(i), tv, tv)
    return out


def path_energy(kind, curve):
    """Integral of the squared speed (composite trapezoid in time)."""
    if len(curve) < 2:
        return 0.0
    return float(np.trapezoid(_speeds(kind, curve), curve.times))


def path_length(kind, curve):
    """Integral of the speed; length^2 <= elapsed * energy (Cauchy-Schwarz)."""
    if len(curve) < 2:
        return 0.0
    v = np.sqrt(np.maximum(_speeds(kind, curve), 0.0))
    return float(np.trapezoid(v, curve.times))


def geodesic_rhs(pot, tv, x0=None):
    """Acceleration phi_tt of the Dirichlet geodesic equation at (phi, phi_t).

    Solves 2 lap(phi_tt) = H phi_t * H phi_t - (lap phi_t)^2; the source is
    the negated Monge-Ampere cross term of phi_t with itself, whose e^u-mean
    vanishes identically, so a MeanNotZero here flags a discretization bug
    rather than bad input. x0 warm-starts the solver.
    """
    check_anchor(pot, tv)
    rhs = -0.5 * ma_cross(pot, tv.psi, tv.psi)
    acc = green_solve(pot, rhs, x0=x0)
    return TangentVector(pot, acc)


def integrate_geodesic(pot0, tv0, T, dt, store_every=1):
    """Integrate the geodesic through (pot0, tv0) over [0, T] at fixed dt.

    Classical fourth-order stages; each stage state is rebuilt as a full
    potential (positivity enforced — a PositivityViolation is re-raised with
    the exit time attached). The state evolves in the full grid space: stage
    potentials are assembled without dealiasing, because the acceleration
    carries energy beyond the two-thirds band and chopping it off again every
    step would plant tail-sized kinks in the trajectory, wrecking speed
    conservation and the time differencing behind the equation residual.
    After every accepted step the potential is recentred and the velocity
    re-projected to zero e^u-mean; the size of those corrections and the
    Dirichlet speed are recorded per step in Curve.meta. store_every thins
    the stored samples (the last sample is always kept).
    """
    check_anchor(pot0, tv0)
    if dt <= 0.0 or T < dt:
        raise ValueError("need 0 < dt <= T")
    spec = pot0.spec
    nsteps = int(round(T / dt))
    store_every = int(store_every)
    if store_every < 1:
        raise ValueError("store_every must be a positive integer")
    if store_every <= nsteps and nsteps % store_every != 0:
        # stored times must stay uniformly spaced (Curve requires it, and
        # the time differencing in the residual study depends on it); any
        # store_every beyond nsteps means "endpoints only"
        raise ValueError("store_every must divide round(T/dt) "
                         "(or exceed it to keep endpoints only)")

    def accel(phi_arr, psi_arr, warm, t):
        try:
            pot = _potential_raw(spec, phi_arr)
        except PositivityViolation as exc:
            raise PositivityViolation(
                "geodesic left the space at t=%.6g (%s)" % (t, exc),
                margin=exc.margin, time=t) from exc
        psi = psi_arr - pot.eu_mean(psi_arr)
        acc = geodesic_rhs(pot, TangentVector(pot, psi), x0=warm)
        return acc.psi

    phi = pot0.phi.copy()
    psi = tv0.psi.copy()
    times = [0.0]
    phis = [phi.copy()]
    psis = [psi.copy()]
    speeds = np.empty(nsteps + 1)
    drift_phi = np.zeros(nsteps + 1)
    drift_psi = np.zeros(nsteps + 1)
    speeds[0] = inner(MetricKind.DIRICHLET, pot0, tv0, tv0)
    warm = None

    for step in range(nsteps):
        t = step * dt
        k1 = accel(phi, psi, warm, t)
        warm = k1
        k2 = accel(phi + 0.5 * dt * psi, psi + 0.5 * dt * k1, warm, t + 0.5 * dt)
        k3 = accel(phi + 0.5 * dt * (psi + 0.5 * dt * k1),
                   psi + 0.5 * dt * k2, k2, t + 0.5 * dt)
        k4 = accel(phi + dt * (psi + 0.5 * dt * k2), psi + dt * k3, k3, t + dt)
        phi = phi + dt * (psi + (dt / 6.0) * (k1 + k2 + k3))
        psi = psi + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        warm = k4

        drift_phi[step + 1] = abs(float(np.sum(phi)) / spec.nodes)
        try:
            pot = _potential_raw(spec, phi)
        except PositivityViolation as exc:
            raise PositivityViolation(
                "geodesic left the space at t=%.6g (%s)" % (t + dt, exc),
                margin=exc.margin, time=t + dt) from exc
        phi = pot.phi
        mu = pot.eu_mean(psi)
        drift_psi[step + 1] = abs(mu)
        psi = psi - mu
        speeds[step + 1] = inner(MetricKind.DIRICHLET, pot,
                                 TangentVector(pot, psi), TangentVector(pot, psi))
        if (step + 1) % store_every == 0 or step + 1 == nsteps:
            times.append((step + 1) * dt)
            phis.append(phi.copy())
            psis.append(psi.copy())

    meta = {
        "dt": dt,
        "store_every": store_every,
        "speeds": speeds,
        "drift_phi": drift_phi,
        "drift_psi": drift_psi,
    }
    return Curve(spec, times, phis, psis, meta=meta)


def _geodesic_residual_dirichlet(curve):
    """Sup-norm residual of the conformal-factor form of the geodesic equation.

    At each interior time: F = 4 e^{-u/2} d^2/dt^2 e^{u/2} (central), plus
    the Laplacian of the time derivative of w = G[Pi u_t] (Green solves at
    the two neighbors, centrally differenced), minus Pi u_tt. The combination
    is constant in space on exact geodesics once the operator derivative is
    expanded, so each entry is the sup norm after removing the e^u-mean.
    Needs two sample layers on each side: entries cover indices 2..len-3.
    """
    M = len(curve)
    if M < 5:
        raise ValueError("need at least five samples for the residual")
    dt = curve.dt
    us = [curve.potential(i).u for i in range(M)]

    w_cache = {}

    def w_at(j):
        # w(j) = G[Pi u_t(j)] with u_t by central difference
        if j not in w_cache:
            pot = curve.potential(j)
            ut = (us[j + 1] - us[j - 1]) / (2.0 * dt)
            ut = ut - pot.eu_mean(ut)
            w_cache[j] = green_solve(pot, ut)
        return w_cache[j]

    out = np.empty(M - 4)
    for i in range(2, M - 2):
        pot = curve.potential(i)
        half = np.exp(0.5 * us[i])
        F = 4.0 / half * (np.exp(0.5 * us[i + 1]) - 2.0 * half
                          + np.exp(0.5 * us[i - 1])) / dt ** 2
        dtw = (w_at(i + 1) - w_at(i - 1)) / (2.0 * dt)
        utt = (us[i + 1] - 2.0 * us[i] + us[i - 1]) / dt ** 2
        r = F + laplacian(pot, dtw) - (utt - pot.eu_mean(utt))
        r = r - pot.eu_mean(r)
        out[i - 2] = float(np.max(np.abs(r)))
    return out


def _geodesic_residual_calabi(curve):
    # 4 e^{-u/2} (e^{u/2})_tt + 1, sup norm per interior time
    M = len(curve)
    if M < 3:
        raise ValueError("need at least three samples for the residual")
    dt = curve.dt
    us = [curve.potential(i).u for i in range(M)]
    out = np.empty(M - 2)
    for i in range(1, M - 1):
        half = np.exp(0.5 * us[i])
        F = 4.0 / half * (np.exp(0.5 * us[i + 1]) - 2.0 * half
                          + np.exp(0.5 * us[i - 1])) / dt ** 2
        out[i - 1] = float(np.max(np.abs(F + 1.0)))
    return out


def geodesic_residual(kind, curve):
    """Per-time residual of the kind's geodesic equation along a curve."""
    if kind is MetricKind.DIRICHLET:
        return _geodesic_residual_dirichlet(curve)
    if kind is MetricKind.CALABI:
        return _geodesic_residual_calabi(curve)
    raise ValueError("no geodesic residual for kind %r" % (kind,))


def scalar_curvature(pot):
    """Scalar curvature S = -lap_phi u of the evolved metric (flat background)."""
    return -laplacian(pot, pot.u)


def kenergy_gradient(pot):
    """Dirichlet gradient of the energy functional: f with lap f = S, mean zero."""
    s = scalar_curvature(pot)
    f = green_solve(pot, s - pot.eu_mean(s))
    return TangentVector(pot, f)


def kenergy(phi_or_pot, steps=12):
    """Energy functional by Gauss-Legendre quadrature along t -> t*phi.

    The integrand at t is (d phi, d f)_g e^u integrated over the torus at
    the potential t*phi, which after integrating by parts is
    -2 * mean(phi * S * e^u) — no Green solves. Straight segments from the
    flat base stay positive (the space is convex), but each node is rebuilt
    through the positivity check anyway. The value at the flat base is 0.
    """
    if isinstance(phi_or_pot, KahlerPotential):
        spec, phi = phi_or_pot.spec, phi_or_pot.phi
    else:
        raise TypeError("kenergy expects a KahlerPotential")
    nodes, weights = np.polynomial.legendre.leggauss(int(steps))
    # map [-1, 1] -> [0, 1]
    nodes = 0.5 * (nodes + 1.0)
    weights = 0.5 * weights
    total = 0.0
    for t, wq in zip(nodes, weights):
        pt = make_potential(spec, t * phi)
        s = scalar_curvature(pt)
        total += wq * (-2.0) * pt.eu_mean(phi * s)
    return float(total)


def kenergy_second_derivative(pot, tv):
    """Second derivative of the energy along the geodesic with velocity tv.

    Closed form: mean of {2 |D2 phi_t|^2 + [f_{ij} + S g_{ij}] phi_t^i
    phi_t^jbar} e^u, with D2 the pure (2,0) Hessian contracted twice with the
    inverse metric and f the gradient potential. At a constant-scalar-curvature
    point (S = 0, f = 0) this is 2 * mean(|D2 phi_t|^2 e^u) >= 0.
    """
    check_anchor(pot, tv)
    spec = pot.spec
    psi = tv.psi
    g_inv = pot.g_inv

    P = holomorphic_hessian(spec, psi)
    d2 = np.einsum("...ki,...lj,...ij,...kl->...",
                   g_inv, g_inv, P, np.conj(P)).real

    f = kenergy_gradient(pot).psi
    s = scalar_curvature(pot)
    T = complex_hessian(spec, f) + s[..., None, None] * pot.g
    gpsi = np.stack(gradient_z(spec, psi), axis=-1)
    raised = np.conj(np.einsum("...ij,...j->...i", g_inv, gpsi))
    quad = np.einsum("...ij,...i,...j->...", T, raised, np.conj(raised)).real

    return pot.eu_mean(2.0 * d2 + quad)


def pseudo_calabi_flow(pot0, T, dt, nu_steps=12, sample_every=1):
    """Downhill flow of the energy functional: phi <- phi - dt * f.

    Explicit stepping with re-gauging through make_potential each step; the
    trace records the energy value and the Dirichlet norm of the gradient at
    every sample_every-th step (plus the initial and final states). The
    energy is evaluated by fresh quadrature (kenergy), not from the flow's
    own increments, so monotonicity checks are independent of the stepper.
    """
    if dt <= 0.0 or T < dt:
        raise ValueError("need 0 < dt <= T")
    spec = pot0.spec
    nsteps = int(round(T / dt))
    pot = pot0
    times = [0.0]
    nus = [kenergy(pot, steps=nu_steps)]
    grad = kenergy_gradient(pot)
    norms = [np.sqrt(max(inner(MetricKind.DIRICHLET, pot, grad, grad), 0.0))]
    warm = grad.psi
    for step in range(nsteps):
        t = (step + 1) * dt
        try:
            pot = make_potential(spec, pot.phi - dt * grad.psi)
        except PositivityViolation as exc:
            raise PositivityViolation(
                "flow left the space at t=%.6g (%s)" % (t, exc),
                margin=exc.margin, time=t) from exc
        s = scalar_curvature(pot)
        f = green_solve(pot, s - pot.eu_mean(s), x0=warm)
        warm = f
        grad = TangentVector(pot, f)
        if (step + 1) % sample_every == 0 or step + 1 == nsteps:
            times.append(t)
            nus.append(kenergy(pot, steps=nu_steps))
            norms.append(np.sqrt(max(
                inner(MetricKind.DIRICHLET, pot, grad, grad), 0.0)))
    meta = {"dt": dt, "nu_steps": nu_steps, "sample_every": sample_every}
    return FlowTrace(times, nus, norms, meta=meta)
