"""Ground state of the stationary system.

Solves  phi - Lap phi = phi * vphi,   2 vphi - kappa Lap vphi = phi^2
radially in R^5 by a normalized fixed-point iteration and extracts the
derived constants: the ground-state mass M_gs, the sharp
Gagliardo-Nirenberg constant C_GN = 4 * 5^(-5/4) * M_gs^(-1/2), and the
threshold products M(Q)E(Q), M(Q)H(Q).  The exact proportions
M : H : R = 1 : 5 : 4 are the primary correctness oracle.

Solver notes.  The plain normalized update

    S = (<L1 phi, phi> + <L2 vphi, vphi>) / (2 int vphi phi^2),
    phi <- S^2 L1^{-1}(phi vphi),  vphi <- S^2 L2^{-1}(phi^2)

is structurally marginal for this two-component system: the amplitude map
(a, b) -> (S^2 ab, S^2 a^2) has eigenvalue -1 along (1, -2) and the
iteration stalls in a period-2 cycle.  Each sweep therefore ends with a
moment balance (p, q) that enforces both Nehari identities
<L1 phi, phi> = <L2 vphi, vphi> = int vphi phi^2 exactly; the balanced
iterate is contraction-stable and S = 1 at every subsequent step.

The profile at the working resolution must carry the 1:5:4 identity to
1e-3, which a second-order discretization cannot deliver at m = 2048, so
the solver discretizes the radial Laplacian to fourth order internally
(five-point apply, defect-corrected tridiagonal solves).  The public
``radial_laplacian_apply`` stencil stays second order.

A deliberately independent coarse solver (dense second-order matrices,
damped held-mass Picard) cross-checks M_gs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import fields
from .fields import FieldPair, pair_from_arrays
from .grid import RadialGrid, UniformGrid, radial_ghosts, radial_helmholtz_solve

#: stabilizing exponent of the normalization factor; p/(p-1) = 2 for the
#: quadratic nonlinearity
PETVIASHVILI_GAMMA = 2.0

#: amplitude of the Gaussian initial guess a * exp(-r^2)
INITIAL_AMPLITUDE = 3.0


class ConvergenceError(RuntimeError):
    """Solver failed to reach the requested residual."""


@dataclass(frozen=True)
class GroundState:
    """Converged profile pair with residuals and derived constants."""

    pair: FieldPair
    residual_norm: float
    iterations: int
    residual_history: tuple[float, ...]
    ratios: tuple[float, float, float]   # (1, H/M, R/M); exactly (1, 5, 4) in theory
    mass: float                          # M_gs
    kinetic: float
    potential: float
    energy: float
    gn_constant: float                   # C_GN
    threshold_me: float                  # M(Q) E(Q)
    threshold_mh: float                  # M(Q) H(Q)

    @property
    def grid(self):
        return self.pair.grid

    @property
    def kappa(self) -> float:
        return self.pair.kappa

    @property
    def phi(self) -> np.ndarray:
        return np.real(self.pair.u.values)

    @property
    def vphi(self) -> np.ndarray:
        return np.real(self.pair.v.values)


def _lap4_apply(grid: RadialGrid, f: np.ndarray) -> np.ndarray:
    """Fourth-order radial Laplacian d^2/dr^2 + (4/r) d/dr (solver-internal)."""
    dr = grid.dr
    r = grid.nodes()
    g = radial_ghosts(f)
    d2 = (-g[4:] + 16.0 * g[3:-1] - 30.0 * g[2:-2] + 16.0 * g[1:-3] - g[:-4]) / (
        12.0 * dr**2
    )
    d1 = (g[:-4] - 8.0 * g[1:-3] + 8.0 * g[3:-1] - g[4:]) / (12.0 * dr)
    return d2 + (4.0 / r) * d1


def _helmholtz_solve4(
    grid: RadialGrid, alpha: float, beta: float, rhs: np.ndarray, sweeps: int = 14
) -> np.ndarray:
    """Solve (alpha - beta Lap4) x = rhs by defect-corrected tridiagonal solves.

    The second-order tridiagonal factor preconditions the fourth-order
    operator; the defect iteration contracts at ~1/3 per sweep.
    """
    x = radial_helmholtz_solve(grid, alpha, beta, rhs)
    for _ in range(sweeps):
        defect = rhs - (alpha * x - beta * _lap4_apply(grid, x))
        x = x + radial_helmholtz_solve(grid, alpha, beta, defect)
    return x


def petviashvili_normalization(pair: FieldPair) -> float:
    """S = (<L1 phi, phi> + <L2 vphi, vphi>) / (2 int vphi phi^2).

    Equals 1 at any exact solution of the stationary system; evaluated with
    the solver's internal discretization.
    """
    grid = pair.grid
    if not isinstance(grid, RadialGrid):
        raise TypeError("normalization diagnostic is defined on the radial grid")
    phi = np.real(pair.u.values)
    vphi = np.real(pair.v.values)
    kappa = pair.kappa
    rterm = float(grid.integrate(vphi * phi**2))
    e1 = float(grid.integrate((phi - _lap4_apply(grid, phi)) * phi))
    e2 = float(grid.integrate((2.0 * vphi - kappa * _lap4_apply(grid, vphi)) * vphi))
    return (e1 + e2) / (2.0 * rterm)


def _populate(
    pair: FieldPair, residual: float, iterations: int, history: tuple[float, ...]
) -> GroundState:
    m = fields.mass(pair)
    h = fields.kinetic(pair)
    r = fields.potential(pair)
    e = h - r
    c_gn = 4.0 * 5.0 ** (-1.25) * m ** (-0.5)
    return GroundState(
        pair=pair,
        residual_norm=residual,
        iterations=iterations,
        residual_history=history,
        ratios=(1.0, h / m, r / m),
        mass=m,
        kinetic=h,
        potential=r,
        energy=e,
        gn_constant=c_gn,
        threshold_me=m * e,
        threshold_mh=m * h,
    )


def petviashvili_solve(
    grid: RadialGrid,
    kappa: float = 0.5,
    tol: float = 1e-10,
    max_iter: int = 500,
    amplitude: float = INITIAL_AMPLITUDE,
) -> GroundState:
    """Normalized fixed-point iteration for the radial ground state.

    Starts from phi = vphi = amplitude * exp(-r^2); each sweep applies the
    S^gamma-normalized inverse-operator update followed by the moment
    balance described in the module docstring, and stops once both equation
    residuals drop below ``tol`` in max-norm.
    """
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    r = grid.nodes()
    phi = amplitude * np.exp(-(r**2))
    vphi = phi.copy()

    def moments(f, g):
        e1 = float(grid.integrate((f - _lap4_apply(grid, f)) * f))
        e2 = float(grid.integrate((2.0 * g - kappa * _lap4_apply(grid, g)) * g))
        rho = float(grid.integrate(g * f**2))
        return e1, e2, rho

    residual = np.inf
    history: list[float] = []
    for it in range(1, max_iter + 1):
        e1, e2, rho = moments(phi, vphi)
        if not np.isfinite(rho) or rho <= 0:
            raise ConvergenceError(
                f"iteration collapsed: int vphi phi^2 = {rho} at step {it}"
            )
        s = (e1 + e2) / (2.0 * rho)
        if not np.isfinite(s) or s <= 0:
            raise ConvergenceError(f"normalization factor degenerated: S = {s}")
        factor = s**PETVIASHVILI_GAMMA
        phi_t = factor * _helmholtz_solve4(grid, 1.0, 1.0, phi * vphi)
        vphi_t = factor * _helmholtz_solve4(grid, 2.0, kappa, phi**2)

        # moment balance: pin both Nehari identities of the new iterate
        e1, e2, rho = moments(phi_t, vphi_t)
        if not np.isfinite(rho) or rho == 0 or e1 <= 0 or e2 <= 0:
            raise ConvergenceError(f"balance moments degenerated at step {it}")
        phi = (np.sqrt(e1 * e2) / rho) * phi_t
        vphi = (e1 / rho) * vphi_t

        res1 = phi - _lap4_apply(grid, phi) - phi * vphi
        res2 = 2.0 * vphi - kappa * _lap4_apply(grid, vphi) - phi**2
        residual = max(float(np.max(np.abs(res1))), float(np.max(np.abs(res2))))
        history.append(residual)
        if residual < tol:
            break
    else:
        raise ConvergenceError(
            f"no convergence after {max_iter} iterations (residual {residual:.3e})"
        )

    if float(np.min(phi)) < -1e-10 or float(np.min(vphi)) < -1e-10:
        raise ConvergenceError("converged to a sign-changing profile")
    pair = pair_from_arrays(grid, phi.astype(complex), vphi.astype(complex), kappa)
    return _populate(pair, residual, it, tuple(history))


def _dense_radial_laplacian(grid: RadialGrid) -> np.ndarray:
    """Dense second-order radial Laplacian, assembled independently.

    No code shared with the banded/defect path used by
    :func:`petviashvili_solve`.
    """
    m = grid.m
    r = grid.nodes()
    dr = grid.dr
    mat = np.zeros((m, m))
    for j in range(m):
        c_dn = 1.0 / dr**2 - 2.0 / (r[j] * dr)
        c_md = -2.0 / dr**2
        c_up = 1.0 / dr**2 + 2.0 / (r[j] * dr)
        if j > 0:
            mat[j, j - 1] += c_dn
        else:
            mat[j, j] += c_dn          # even reflection at r = 0
        mat[j, j] += c_md
        if j < m - 1:
            mat[j, j + 1] += c_up
        else:
            mat[j, j] -= c_up          # Dirichlet ghost at r_max
    return mat


def oracle_coarse_solve(
    m: int = 512,
    r_max: float = 16.0,
    kappa: float = 0.5,
    tol: float = 1e-9,
    max_iter: int = 6000,
    damping: float = 0.5,
) -> GroundState:
    """Independent coarse verification solver.

    Damped Picard iteration on the integral form phi = L1^{-1}(phi vphi),
    vphi = L2^{-1}(phi^2), with the pair rescaled after every sweep so that
    int phi^2 is held at its running value.  The held-mass fixed point is a
    common rescaling (c phi*, c vphi*) of the true solution, so the measured
    factor c recovers it; the final profile is checked directly against the
    stationary equations.  Dense second-order linear algebra throughout.
    """
    if m > 512:
        raise ValueError("the oracle is a coarse solver; use m <= 512")
    grid = RadialGrid(m, r_max)
    r = grid.nodes()
    lap = _dense_radial_laplacian(grid)
    eye = np.eye(m)
    inv_l1 = np.linalg.inv(eye - lap)
    inv_l2 = np.linalg.inv(2.0 * eye - kappa * lap)

    phi = INITIAL_AMPLITUDE * np.exp(-(r**2))
    vphi = phi.copy()
    held = float(grid.integrate(phi**2))

    c = 1.0
    for it in range(1, max_iter + 1):
        phi_t = inv_l1 @ (phi * vphi)
        vphi_t = inv_l2 @ (phi**2)
        raw = float(grid.integrate(phi_t**2))
        if not np.isfinite(raw) or raw <= 0:
            raise ConvergenceError(f"oracle iterate degenerated at step {it}")
        c = np.sqrt(held / raw)
        phi_n = (1.0 - damping) * phi + damping * c * phi_t
        vphi_n = (1.0 - damping) * vphi + damping * c * vphi_t
        delta = max(
            float(np.max(np.abs(phi_n - phi))), float(np.max(np.abs(vphi_n - vphi)))
        )
        phi, vphi = phi_n, vphi_n
        if delta < tol:
            break
    else:
        raise ConvergenceError(f"oracle did not converge in {max_iter} sweeps")

    # undo the held-mass normalization: (c phi, c vphi) solves the system
    phi = c * phi
    vphi = c * vphi
    res1 = phi - lap @ phi - phi * vphi
    res2 = 2.0 * vphi - kappa * (lap @ vphi) - phi**2
    residual = max(float(np.max(np.abs(res1))), float(np.max(np.abs(res2))))
    pair = pair_from_arrays(grid, phi.astype(complex), vphi.astype(complex), kappa)
    return _populate(pair, residual, it, (residual,))


def pohozaev_ratios(gs: GroundState) -> tuple[float, float, float]:
    """(1, H/M, R/M); equals (1, 5, 4) for the exact 5-D ground state."""
    return gs.ratios


def sharp_gn_constant(gs: GroundState) -> float:
    """C_GN = 4 * 5^(-5/4) * M_gs^(-1/2), cross-checked against J(Q)^(-1/2)."""
    c_formula = 4.0 * 5.0 ** (-1.25) * gs.mass ** (-0.5)
    c_direct = fields.gn_functional(gs.pair) ** (-0.5)
    rel = abs(c_formula - c_direct) / c_formula
    if rel > 1e-2:
        raise ConvergenceError(
            f"C_GN formula and J(Q)^(-1/2) disagree by {rel:.2e}; state not converged"
        )
    return c_formula


def solve_periodic_profile(
    grid: UniformGrid,
    kappa: float = 0.5,
    tol: float = 1e-12,
    max_iter: int = 2000,
    amplitude: float = INITIAL_AMPLITUDE,
    width: float = 1.0,
) -> FieldPair:
    """Torus analog of the ground-state solve for dynamics experiments.

    Same normalized-and-balanced iteration as :func:`petviashvili_solve`,
    but on a periodic box in d <= 3 where L1 and L2 invert diagonally in
    Fourier space, so the converged pair is a stationary state of the
    semi-discrete flow to the requested residual.  The exact evolution of
    the returned data is (e^{it} phi, e^{2it} vphi).
    """
    k2 = grid.k2()
    inv_l1 = 1.0 / (1.0 + k2)
    inv_l2 = 1.0 / (2.0 + kappa * k2)
    center = grid.L / 2.0
    rho2 = sum((c - center) ** 2 for c in grid.coords())
    phi = amplitude * np.exp(-rho2 / (2.0 * width**2))
    vphi = phi.copy()

    def apply_inv(mult, f):
        return np.real(grid.ifft(mult * grid.fft(f)))

    def lap(f):
        return np.real(grid.ifft(-k2 * grid.fft(f)))

    def moments(f, g):
        e1 = float(grid.integrate((f - lap(f)) * f))
        e2 = float(grid.integrate((2.0 * g - kappa * lap(g)) * g))
        rho = float(grid.integrate(g * f**2))
        return e1, e2, rho

    residual = np.inf
    history: list[float] = []
    for it in range(1, max_iter + 1):
        e1, e2, rho = moments(phi, vphi)
        if not np.isfinite(rho) or rho <= 0:
            raise ConvergenceError(f"torus iteration collapsed at step {it}")
        s = (e1 + e2) / (2.0 * rho)
        if not np.isfinite(s) or s <= 0:
            raise ConvergenceError(f"normalization factor degenerated: S = {s}")
        factor = s**PETVIASHVILI_GAMMA
        phi_t = factor * apply_inv(inv_l1, phi * vphi)
        vphi_t = factor * apply_inv(inv_l2, phi**2)

        e1, e2, rho = moments(phi_t, vphi_t)
        if not np.isfinite(rho) or rho == 0 or e1 <= 0 or e2 <= 0:
            raise ConvergenceError(f"balance moments degenerated at step {it}")
        phi = (np.sqrt(e1 * e2) / rho) * phi_t
        vphi = (e1 / rho) * vphi_t

        r1 = phi - lap(phi) - phi * vphi
        r2 = 2.0 * vphi - kappa * lap(vphi) - phi**2
        residual = max(float(np.max(np.abs(r1))), float(np.max(np.abs(r2))))
        if residual < tol:
            break
    else:
        raise ConvergenceError(
            f"torus profile did not converge in {max_iter} sweeps "
            f"(residual {residual:.3e})"
        )
    return pair_from_arrays(grid, phi.astype(complex), vphi.astype(complex), kappa)
