"""Interaction-Morawetz machinery.

Weight construction from the smooth bump Gamma (correlation weights phi,
phi1, their radial average psi, and the potential a with grad a(z) =
psi(|z|/R) z), the momentum-killing boost parameter xi, the Morawetz
functional M(t), the Galilean-invariant window pairing that isolates the
positive bulk term, the Cauchy-Schwarz sign condition on the cross terms,
and the time-and-scale averaged interaction accumulator.

All radial weight tables are built in the scaled variable q = r/R, which
makes them R-independent; physical evaluations rescale on the fly.  The
tables' defining identities (Lap a = phi + (d-1) psi via r psi' = phi -
psi, the ordering 0 <= phi1 <= phi <= psi <= 1, support in q <= 2) are
machine-checked from the tables themselves.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import roots_jacobi

from . import fields as fields_mod
from .fields import FieldPair, galilean_boost
from .grid import UniformGrid, unit_ball_volume


def bump_gamma(r, eps: float):
    """C-infinity radial bump: 1 for r <= 1-eps, 0 for r >= 1, monotone between.

    The transition uses the standard exp(-1/t) glue, so all derivatives
    vanish at both ends of (1-eps, 1).
    """
    if not 0 < eps <= 0.5:
        raise ValueError(f"smoothing width must lie in (0, 1/2], got {eps}")
    r = np.asarray(r, dtype=float)
    scalar = r.ndim == 0
    r = np.atleast_1d(r)
    out = np.zeros_like(r)
    out[r <= 1.0 - eps] = 1.0
    trans = (r > 1.0 - eps) & (r < 1.0)
    if np.any(trans):
        t = (r[trans] - (1.0 - eps)) / eps
        g1 = np.exp(-1.0 / t)
        g2 = np.exp(-1.0 / (1.0 - t))
        out[trans] = g2 / (g1 + g2)   # equals 1 - smoothstep(t)
    return float(out[0]) if scalar else out


def _sphere_area(n: int) -> float:
    """Surface area of S^n."""
    from math import gamma, pi

    return 2.0 * pi ** ((n + 1) / 2.0) / gamma((n + 1) / 2.0)


def _radial_correlation(d: int, f, g, q: np.ndarray, n_rho: int, n_ang: int) -> np.ndarray:
    """Correlation int f(|z|) g(|z - q e|) dz of radial profiles in R^d.

    f, g are callables supported in [0, 1]; evaluated at the scaled radii
    ``q``.  d = 1 integrates directly; d >= 2 reduces to a (rho, angle)
    quadrature with Gauss-Jacobi nodes for the sin^(d-2) weight.
    """
    if d == 1:
        s = np.linspace(-1.0, 1.0, 2 * n_rho, endpoint=False)
        s = s + (s[1] - s[0]) / 2.0
        ds = s[1] - s[0]
        fs = f(np.abs(s))
        out = np.empty_like(q)
        for i in range(0, q.size, 256):
            qi = q[i : i + 256, None]
            out[i : i + 256] = np.sum(fs[None, :] * g(np.abs(s[None, :] - qi)), axis=1) * ds
        return out

    a = (d - 3) / 2.0
    u, wu = roots_jacobi(n_ang, a, a)
    rho = (np.arange(n_rho) + 0.5) / n_rho
    drho = 1.0 / n_rho
    base = f(rho) * rho ** (d - 1) * drho          # (n_rho,)
    sigma = _sphere_area(d - 2)
    out = np.empty_like(q)
    for i in range(0, q.size, 64):
        qi = q[i : i + 64, None, None]
        dist = np.sqrt(
            np.maximum(qi**2 + rho[None, :, None] ** 2 - 2.0 * qi * rho[None, :, None] * u[None, None, :], 0.0)
        )
        inner = np.sum(g(dist) * wu[None, None, :], axis=2)      # angle quadrature
        out[i : i + 64] = sigma * np.sum(base[None, :] * inner, axis=1)
    return out


@dataclass(frozen=True)
class MorawetzWeights:
    """Tabulated radial weights for one (d, R, eps).

    Tables live in q = r/R on [0, q_max]; phi and phi1 vanish for q >= 2,
    and psi, a continue analytically as psi = I2/q, a' = I2 beyond the
    table (I2 = int_0^2 phi dq).
    """

    d: int
    R: float
    eps: float
    q: np.ndarray
    gamma: np.ndarray
    gamma2: np.ndarray
    gamma3: np.ndarray
    phi: np.ndarray
    phi1: np.ndarray
    psi: np.ndarray
    a: np.ndarray
    dphi: np.ndarray
    dpsi: np.ndarray
    i2: float
    ball_volume: float

    def gamma_of(self, q):
        return bump_gamma(q, self.eps)

    def phi_of(self, q):
        q = np.asarray(q, dtype=float)
        return np.where(q >= self.q[-1], 0.0, np.interp(q, self.q, self.phi))

    def phi1_of(self, q):
        q = np.asarray(q, dtype=float)
        return np.where(q >= self.q[-1], 0.0, np.interp(q, self.q, self.phi1))

    def psi_of(self, q):
        q = np.asarray(q, dtype=float)
        inside = np.interp(q, self.q, self.psi)
        tail = self.i2 / np.maximum(q, 1e-300)
        return np.where(q <= self.q[-1], inside, tail)

    def a_of(self, q):
        q = np.asarray(q, dtype=float)
        inside = np.interp(q, self.q, self.a)
        tail = self.a[-1] + self.i2 * (q - self.q[-1])
        return np.where(q <= self.q[-1], inside, tail)


_TABLE_CACHE: dict = {}


def build_weights(
    d: int,
    R: float,
    eps: float,
    table_size: int = 4096,
    q_max: float = 2.5,
    n_rho: int = 512,
    n_ang: int = 96,
) -> MorawetzWeights:
    """Build the weight tables for dimension d, window radius R, smoothing eps.

    phi is the normalized radial self-correlation of Gamma^2, phi1 the
    correlation of Gamma^3 with Gamma^2; psi and a follow by cumulative
    quadrature, derivative tables by centered differences.  The scaled
    tables are cached per (d, eps, sizes) since they do not depend on R.
    """
    if d not in (1, 2, 5):
        raise ValueError(f"weights are built for d in {{1, 2, 5}}, got {d}")
    if not R > 0:
        raise ValueError("window radius must be positive")
    key = (d, float(eps), table_size, q_max, n_rho, n_ang)
    if key not in _TABLE_CACHE:
        _TABLE_CACHE[key] = _build_scaled_tables(*key)
    tables = _TABLE_CACHE[key]
    return MorawetzWeights(d=d, R=float(R), eps=float(eps), **tables)


def _build_scaled_tables(d, eps, table_size, q_max, n_rho, n_ang) -> dict:
    q = np.linspace(0.0, q_max, table_size)
    dq = q[1] - q[0]
    omega = unit_ball_volume(d)

    def gam2(r):
        return bump_gamma(r, eps) ** 2

    def gam3(r):
        return bump_gamma(r, eps) ** 3

    phi = _radial_correlation(d, gam2, gam2, q, n_rho, n_ang) / omega
    phi1 = _radial_correlation(d, gam3, gam2, q, n_rho, n_ang) / omega

    # psi(q) = (1/q) int_0^q phi;  a(q) = int_0^q psi q' dq'.  Cumulative
    # integrals via spline antiderivatives: smooth in q, so the table
    # identity Lap a = phi + (d-1) psi survives later differentiation.
    cum_phi = CubicSpline(q, phi).antiderivative()(q)
    psi = np.empty_like(phi)
    psi[0] = phi[0]
    psi[1:] = cum_phi[1:] / q[1:]
    a = CubicSpline(q, psi * q).antiderivative()(q)

    dphi = np.gradient(phi, dq)
    dpsi = np.gradient(psi, dq)

    return dict(
        q=q,
        gamma=bump_gamma(q, eps),
        gamma2=gam2(q),
        gamma3=gam3(q),
        phi=phi,
        phi1=phi1,
        psi=psi,
        a=a,
        dphi=dphi,
        dpsi=dpsi,
        i2=float(cum_phi[-1]),
        ball_volume=omega,
    )


def weight_identity_check(w: MorawetzWeights) -> dict:
    """Measure every tabulated weight identity and bound constant.

    Returns a report with the minimum of psi - phi (sign condition), the
    ordering margins, the max interior error of Lap a = phi + (d-1) psi,
    and the measured constants of |phi'| <= C/R and |phi - phi1| <= C eps.
    """
    q = w.q
    dq = q[1] - q[0]
    interior = slice(2, -2)

    # Lap a from the a-table alone: a'' + (d-1)/q * a', 4th-order stencils
    a = w.a
    da = (a[:-4] - 8.0 * a[1:-3] + 8.0 * a[3:-1] - a[4:]) / (12.0 * dq)
    d2a = (-a[:-4] + 16.0 * a[1:-3] - 30.0 * a[2:-2] + 16.0 * a[3:-1] - a[4:]) / (
        12.0 * dq**2
    )
    lap_a = d2a + (w.d - 1) * da / q[interior]
    target = w.phi[interior] + (w.d - 1) * w.psi[interior]
    lap_a_err = float(np.max(np.abs(lap_a - target)))

    ratio = np.minimum(q[1:], 1.0 / q[1:])
    psi_minus_phi = w.psi - w.phi
    report = {
        "min_psi_minus_phi": float(np.min(psi_minus_phi)),
        "min_phi_minus_phi1": float(np.min(w.phi - w.phi1)),
        "min_phi1": float(np.min(w.phi1)),
        "max_psi": float(np.max(w.psi)),
        "lap_a_identity_error": lap_a_err,
        "sup_dphi_times_R": float(np.max(np.abs(w.dphi))),   # |phi'(r)| R = |dphi/dq|
        "sup_psi_minus_phi_over_min": float(np.max(psi_minus_phi[1:] / ratio)),
        "sup_phi_minus_phi1_over_eps": float(np.max(np.abs(w.phi - w.phi1)) / w.eps),
        "phi_at_zero": float(w.phi[0]),
        "support_bound": float(np.max(np.abs(w.phi[q >= 2.0]))) if np.any(q >= 2.0) else 0.0,
    }
    return report


@dataclass(frozen=True)
class BoostChoice:
    """Boost parameter for one window; degenerate means xi was forced to 0."""

    xi: np.ndarray
    denominator: float
    degenerate: bool


def _window(grid: UniformGrid, s, R: float, eps: float) -> np.ndarray:
    """Gamma^2(|x - s| / R) on the torus (min-image metric)."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    disp2 = np.zeros(grid.shape)
    ax = grid.axis()
    for j in range(grid.d):
        dz = ax - s[j]
        dz = (dz + grid.L / 2.0) % grid.L - grid.L / 2.0
        shape = [1] * grid.d
        shape[j] = grid.n
        disp2 = disp2 + dz.reshape(shape) ** 2
    return bump_gamma(np.sqrt(disp2) / R, eps) ** 2


def _densities(p: FieldPair):
    """Pointwise densities used across the module.

    Returns (L, A, B, nu): L = 2|grad u|^2 + kappa |grad v|^2 (per-component
    array of shape (d, ...) summed on request), A_j = Im(2 u d_j conj(u) +
    v d_j conj(v)), B_j = Im(2 kappa u d_j conj(u) + kappa v d_j conj(v)),
    nu = 2 kappa |u|^2 + |v|^2.
    """
    grid = p.grid
    kappa = p.kappa
    u, v = p.u.values, p.v.values
    du = grid.gradient(u)
    dv = grid.gradient(v)
    l_comp = np.array([2.0 * np.abs(du[j]) ** 2 + kappa * np.abs(dv[j]) ** 2 for j in range(grid.d)])
    a_comp = np.array(
        [np.imag(2.0 * u * np.conj(du[j]) + v * np.conj(dv[j])) for j in range(grid.d)]
    )
    b_comp = np.array(
        [
            np.imag(2.0 * kappa * u * np.conj(du[j]) + kappa * v * np.conj(dv[j]))
            for j in range(grid.d)
        ]
    )
    nu = 2.0 * kappa * np.abs(u) ** 2 + np.abs(v) ** 2
    return l_comp, a_comp, b_comp, nu


def boost_xi(p: FieldPair, s, R: float, w: MorawetzWeights) -> BoostChoice:
    """Momentum-killing boost parameter for the window centered at s.

    Chosen so the Gamma^2-weighted momentum density Im(2 u grad conj(u) +
    v grad conj(v)) integrates to zero after the boost:

        xi = int Im(2 u grad conj(u) + v grad conj(v)) Gamma^2 dx
             / int (2 kappa |u|^2 + |v|^2) Gamma^2 dx,

    with xi = 0 (flagged) when the denominator vanishes.  This vanishing
    condition is the normative contract; the boosted weighted momentum is
    zero by the exact algebra  A^xi = A - xi * nu  pointwise.
    """
    grid = p.grid
    if not isinstance(grid, UniformGrid):
        raise TypeError("boost_xi requires a uniform grid")
    win = _window(grid, s, R, w.eps)
    _, a_comp, _, nu = _densities(p)
    den = float(grid.integrate(nu * win))
    if den <= 0.0:
        return BoostChoice(xi=np.zeros(grid.d), denominator=den, degenerate=True)
    num = np.array([float(grid.integrate(a_comp[j] * win)) for j in range(grid.d)])
    return BoostChoice(xi=num / den, denominator=den, degenerate=False)


def weighted_momentum(p: FieldPair, s, R: float, w: MorawetzWeights) -> np.ndarray:
    """int Im(2 u grad conj(u) + v grad conj(v)) Gamma^2(|x-s|/R) dx."""
    grid = p.grid
    win = _window(grid, s, R, w.eps)
    _, a_comp, _, _ = _densities(p)
    return np.array([float(grid.integrate(a_comp[j] * win)) for j in range(grid.d)])


def morawetz_action(p: FieldPair, w: MorawetzWeights) -> float:
    """M(t) = 2 int int Im(2 conj(u) grad u + conj(v) grad v)(x)
    . grad a(x-y) (2 kappa |u(y)|^2 + |v(y)|^2) dx dy.

    The y-integral is a convolution with grad a(z) = psi(|z|/R) z, done
    spectrally on the torus with the min-image displacement kernel.
    """
    grid = p.grid
    if not isinstance(grid, UniformGrid) or grid.d > 2:
        raise TypeError("the Morawetz action is evaluated in d = 1 or 2")
    u, v = p.u.values, p.v.values
    du = grid.gradient(u)
    dv = grid.gradient(v)
    nu = 2.0 * p.kappa * np.abs(u) ** 2 + np.abs(v) ** 2
    disp = grid.min_image()
    dist = np.sqrt(sum(z**2 for z in disp))
    psi_vals = w.psi_of(dist / w.R)
    nu_hat = np.fft.fftn(nu)
    total = 0.0
    for j in range(grid.d):
        a_mom = np.imag(2.0 * np.conj(u) * du[j] + np.conj(v) * dv[j])
        kernel = psi_vals * disp[j]
        conv = np.real(np.fft.ifftn(np.fft.fftn(kernel) * nu_hat)) * grid.h**grid.d
        total += float(grid.integrate(a_mom * conv))
    return 2.0 * total


def galilean_pairing(p: FieldPair, s, R: float, w: MorawetzWeights) -> float:
    """The window-paired combination whose boost invariance isolates the bulk term:

    int int [L(x) nu(y) - A(x).B(y)] Gamma^2(|x-s|/R) Gamma^2(|y-s|/R) dx dy

    which factorizes per window into (int L G^2)(int nu G^2) -
    (int A G^2).(int B G^2).
    """
    grid = p.grid
    win = _window(grid, s, R, w.eps)
    l_comp, a_comp, b_comp, nu = _densities(p)
    l_tot = float(grid.integrate(np.sum(l_comp, axis=0) * win))
    n_tot = float(grid.integrate(nu * win))
    a_vec = np.array([float(grid.integrate(a_comp[j] * win)) for j in range(grid.d)])
    b_vec = np.array([float(grid.integrate(b_comp[j] * win)) for j in range(grid.d)])
    return l_tot * n_tot - float(np.dot(a_vec, b_vec))


def galilean_invariance_check(p: FieldPair, xi, s, R: float, w: MorawetzWeights) -> float:
    """Relative change of the paired combination under the boost by xi.

    Zero for any kappa > 0 and any xi in exact arithmetic; the numerical
    deviation is pure roundoff provided the boosted pair is torus-smooth
    (lattice xi, or fields vanishing at the box edge).
    """
    base = galilean_pairing(p, s, R, w)
    boosted = galilean_pairing(galilean_boost(p, xi), s, R, w)
    scale = max(abs(base), 1e-300)
    return abs(boosted - base) / scale


def cauchy_schwarz_margin(
    p: FieldPair, n_pairs: int = 10_000, rng: np.random.Generator | None = None
) -> float:
    """Minimum symmetrized two-point margin of the cross-term sign inequality.

    For sampled point pairs (x, y) and each component j, measures

        (1/2)[L_j(x) nu(y) + L_j(y) nu(x)] - (1/2)[A_j(x) B_j(y) + A_j(y) B_j(x)]

    with L_j = 2|d_j u|^2 + kappa |d_j v|^2.  The x<->y symmetrization is
    the form in which the double integrals are actually compared (the
    cross terms enter under a change of variables that swaps the two
    points); per pair it follows from the pointwise Cauchy-Schwarz bound
    and AM-GM, so the returned minimum is nonnegative up to roundoff for
    any state.  Plane-wave pairs with gradient parallel to the phase
    saturate it.
    """
    grid = p.grid
    if rng is None:
        rng = np.random.default_rng(0)
    l_comp, a_comp, b_comp, nu = _densities(p)
    l_flat = l_comp.reshape(grid.d, -1)
    a_flat = a_comp.reshape(grid.d, -1)
    b_flat = b_comp.reshape(grid.d, -1)
    nu_flat = nu.reshape(-1)
    npts = nu_flat.size
    ix = rng.integers(0, npts, size=n_pairs)
    iy = rng.integers(0, npts, size=n_pairs)
    margin = np.inf
    for j in range(grid.d):
        lhs = 0.5 * (a_flat[j, ix] * b_flat[j, iy] + a_flat[j, iy] * b_flat[j, ix])
        rhs = 0.5 * (l_flat[j, ix] * nu_flat[iy] + l_flat[j, iy] * nu_flat[ix])
        margin = min(margin, float(np.min(rhs - lhs)))
    return margin


@dataclass(frozen=True)
class InteractionParams:
    """Knobs of the averaged interaction estimate (d = 1 evaluation)."""

    R0: float
    J: float
    T0: float
    eps: float
    n_R: int = 12
    s_stride: int = 4
    cadence: int = 25

    @property
    def nu(self) -> float:
        return self.R0 * np.exp(self.J) / (self.J * self.T0) + self.eps


@dataclass(frozen=True)
class InteractionResult:
    accumulator: float
    nu: float
    e0: float
    mass0: float
    ratio: float            # accumulator / (nu * E0^2)
    per_radius: np.ndarray  # accumulator share per R shell
    radii: np.ndarray
    per_time: np.ndarray    # accumulator share per time sample
    times: np.ndarray
    n_time_samples: int
    outcome: str


def interaction_lhs(p0: FieldPair, dt: float, params: InteractionParams) -> InteractionResult:
    """Time-and-scale averaged interaction accumulator in d = 1.

    Evolves the data over [0, T0] by Strang stepping and accumulates

        (1/(J T0)) int_0^{T0} int_{R0}^{R0 e^J} (1/R)
            int [ (int L^xi G_s^2 dx) (int nu G_s^2 dy) ] ds  dR/R dt,

    where G_s = Gamma((. - s)/R) and xi = xi(t, s, R) is the
    momentum-killing boost of :func:`boost_xi`.  With that xi the window
    integrals collapse algebraically to l n - kappa a^2 >= 0 per center s
    (l, n, a the Gamma^2-weighted moments of L, nu, A), so the x and y
    integrals become three spectral correlations per shell and the
    integrand is nonnegative by construction; degenerate windows contribute
    zero without special-casing.  The s integral runs over every
    ``s_stride``-th grid point, R over a logarithmic grid, t over samples
    every ``cadence`` steps.  The suppressed positive constant of the
    estimate is not modeled; ratio stability under parameter doubling is
    what the result is for.
    """
    grid = p0.grid
    if not isinstance(grid, UniformGrid) or grid.d != 1:
        raise TypeError("the interaction accumulator is evaluated in d = 1")
    kappa = p0.kappa

    radii = params.R0 * np.exp(np.linspace(0.0, params.J, params.n_R))
    ln_w = np.full(params.n_R, params.J / (params.n_R - 1))
    ln_w[0] *= 0.5
    ln_w[-1] *= 0.5

    # window kernels per shell, sampled on min-image displacement
    z = grid.min_image()[0]
    kern_hats = [
        np.fft.fft(bump_gamma(np.abs(z) / R, params.eps) ** 2) for R in radii
    ]

    nsteps = int(round(params.T0 / dt))
    sample_steps = list(range(0, nsteps + 1, params.cadence))
    if sample_steps[-1] != nsteps:
        sample_steps.append(nsteps)
    t_samples = np.array(sample_steps, dtype=float) * dt
    t_w = np.zeros_like(t_samples)
    t_w[1:] += 0.5 * np.diff(t_samples)
    t_w[:-1] += 0.5 * np.diff(t_samples)

    from .evolution import _linear_phases, nonlinear_step  # local to avoid cycle

    mu, mv = _linear_phases(grid, kappa, 0.5 * dt)
    u = p0.u.values.astype(complex)
    v = p0.v.values.astype(complex)
    pair = p0.with_values(u, v)

    stride_w = grid.h * params.s_stride
    per_r = np.zeros(params.n_R)
    per_t = np.zeros(len(sample_steps))
    outcome = "completed"

    def accumulate(idx: int) -> None:
        weight = t_w[idx]
        l_comp, a_comp, _, nu = _densities(pair.with_values(u, v))
        l_hat = np.fft.fft(l_comp[0])
        a_hat = np.fft.fft(a_comp[0])
        n_hat = np.fft.fft(nu)
        for k, (R, kh) in enumerate(zip(radii, kern_hats)):
            l_w = np.real(np.fft.ifft(l_hat * kh)) * grid.h
            a_w = np.real(np.fft.ifft(a_hat * kh)) * grid.h
            n_w = np.real(np.fft.ifft(n_hat * kh)) * grid.h
            cells = np.maximum(l_w * n_w - kappa * a_w**2, 0.0)
            inner = float(np.sum(cells[:: params.s_stride])) * stride_w
            per_r[k] += weight * ln_w[k] * inner / R
            per_t[idx] += weight * ln_w[k] * inner / R

    sample_iter = 0
    accumulate(0)
    sample_iter = 1
    for step in range(1, nsteps + 1):
        u = grid.ifft(mu * grid.fft(u))
        v = grid.ifft(mv * grid.fft(v))
        stepped = nonlinear_step(pair.with_values(u, v), dt)
        u = grid.ifft(mu * grid.fft(stepped.u.values))
        v = grid.ifft(mv * grid.fft(stepped.v.values))
        if not (np.all(np.isfinite(u.real)) and np.all(np.isfinite(v.real))):
            outcome = "blow-up"
            break
        if sample_iter < len(sample_steps) and step == sample_steps[sample_iter]:
            accumulate(sample_iter)
            sample_iter += 1

    total = float(np.sum(per_r)) / (params.J * params.T0)
    e0 = fields_mod.energy(p0)
    m0 = fields_mod.mass(p0)
    nu_param = params.nu
    ratio = total / (nu_param * e0**2) if e0 != 0 else np.inf
    return InteractionResult(
        accumulator=total,
        nu=nu_param,
        e0=e0,
        mass0=m0,
        ratio=ratio,
        per_radius=per_r / (params.J * params.T0),
        radii=radii,
        per_time=per_t / (params.J * params.T0),
        times=t_samples,
        n_time_samples=sample_iter,
        outcome=outcome,
    )
