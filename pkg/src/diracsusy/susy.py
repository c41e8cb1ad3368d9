"""Energy-dependent factorization engine: case detection, shape invariance,
spectrum accumulation, self-consistent level solving and eigenfunction chains.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterable, Optional

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import brentq, minimize_scalar

from .factorize import (
    FactorizationData,
    MixingMatrix,
    PartnerPotentials,
    apply_ladder,
)
from .model import (
    AmbiguousCaseError,
    BrokenSusyError,
    Constants,
    Eigenpair,
    Level,
    NoRootError,
    NotShapeInvariantError,
    Profile,
    ZeroDivisorError,
)


class SusyCase(Enum):
    """Which ladder operator annihilates the normalizable ground state."""

    CASE_I = "A annihilates the H- ground state"
    CASE_II = "A-dagger annihilates the H+ ground state"


# ---------------------------------------------------------------------------
# Case detection
# ---------------------------------------------------------------------------

def detect_case(w: Profile, grid: np.ndarray, constants: Constants = Constants(),
                half_line: bool = False, sigma: float = 1.0,
                edge_tol: float = 1e-3) -> SusyCase:
    """Decide which candidate zero mode exp(-/+ integral W / chbar) is normalizable.

    The candidates are sampled on the grid; a candidate passes when its
    amplitude at the domain edges is below edge_tol relative to its peak.  On
    a half line the singular endpoint is instead tested through the local
    power-law exponent (square-integrability needs exponent > -1/2).  sigma is
    the derivative sign of A, so the annihilated function is
    exp(-integral W / (sigma*chbar)).
    """
    x = np.asarray(grid, dtype=float)
    integral = _w_integral(w, x) / (sigma * constants.chbar)
    verdicts = []
    for sign in (-1.0, +1.0):
        expo = sign * integral
        expo -= expo.max()  # peak at 1 after exponentiation
        g = np.exp(expo)
        ok_right = abs(g[-1]) < edge_tol
        if half_line:
            # local exponent p: g ~ x^p near the singular end
            p = (np.log(g[2] + 1e-300) - np.log(g[0] + 1e-300)) / (np.log(x[2]) - np.log(x[0]))
            ok_left = p > -0.5 + 1e-9
        else:
            ok_left = abs(g[0]) < edge_tol
        verdicts.append(ok_left and ok_right)
    minus_ok, plus_ok = verdicts
    if minus_ok and plus_ok:
        raise AmbiguousCaseError("both candidate ground states look normalizable")
    if minus_ok:
        return SusyCase.CASE_I
    if plus_ok:
        return SusyCase.CASE_II
    raise BrokenSusyError("neither candidate ground state is normalizable")


# ---------------------------------------------------------------------------
# Shape invariance
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ShapeInvarianceData:
    """Parameter map a1 -> a2, constant remainder R(a1) and the residual
    max |V_+(a1, x) - V_-(a2, x) - R| over the probe grid."""

    a1: float
    a2: float
    remainder: float
    residual: float


def verify_shape_invariance(family: Callable[[float], PartnerPotentials],
                            a1: float, probe: np.ndarray,
                            candidate: Optional[tuple[float, float]] = None,
                            scan_halfwidth: Optional[float] = None,
                            tol: float = 1e-10) -> ShapeInvarianceData:
    """Check V_+(a1, x) = V_-(a2, x) + R on the probe grid.

    When (a2, R) is supplied it is verified directly.  Otherwise a2 is scanned
    by 1-D minimization of the non-constancy of V_+(a1, x) - V_-(a2, x), with
    R taken as the mean offset; candidates with non-positive remainder are
    rejected (unbroken supersymmetry puts the first excited level at R > 0).
    """
    probe = np.asarray(probe, dtype=float)
    vplus = np.asarray(family(a1).v_plus(probe), dtype=float)
    scale = max(1.0, float(np.max(np.abs(vplus))))

    def residual_for(a2: float) -> tuple[float, float]:
        try:
            diff = vplus - np.asarray(family(a2).v_minus(probe), dtype=float)
        except (ZeroDivisionError, FloatingPointError, ValueError):
            return np.inf, 0.0
        if not np.all(np.isfinite(diff)):
            return np.inf, 0.0
        r = float(np.mean(diff))
        return float(np.max(np.abs(diff - r))), r

    if candidate is not None:
        a2, r = candidate
        diff = vplus - np.asarray(family(a2).v_minus(probe), dtype=float)
        resid = float(np.max(np.abs(diff - r)))
        if resid > tol * scale:
            raise NotShapeInvariantError(
                f"residual {resid:.3g} exceeds {tol * scale:.3g} for supplied (a2, R)"
            )
        return ShapeInvarianceData(a1=a1, a2=a2, remainder=r, residual=resid)

    halfwidth = scan_halfwidth if scan_halfwidth is not None else 2.0 * abs(a1) + 2.0
    grid = a1 + np.linspace(-halfwidth, halfwidth, 801)
    best = None
    for a2 in grid:
        resid, r = residual_for(float(a2))
        if r <= tol * scale:
            continue
        if best is None or resid < best[0]:
            best = (resid, float(a2), r)
    if best is not None:
        # refine around the best grid point
        lo = best[1] - halfwidth / 400.0
        hi = best[1] + halfwidth / 400.0
        res = minimize_scalar(lambda a: residual_for(a)[0], bounds=(lo, hi),
                              method="bounded",
                              options={"xatol": 1e-12 * max(1.0, abs(a1))})
        resid, r = residual_for(float(res.x))
        if r > tol * scale and resid <= best[0]:
            best = (resid, float(res.x), r)
    if best is None or best[0] > 1e-8 * scale:
        raise NotShapeInvariantError(
            "no parameter map with a constant positive remainder found "
            f"(best residual {best[0]:.3g} at a2 = {best[1]:.6g})" if best
            else "no parameter map with a constant positive remainder found"
        )
    return ShapeInvarianceData(a1=a1, a2=best[1], remainder=best[2], residual=best[0])


def si_spectrum(remainders: Iterable[float], n: int) -> float:
    """w_n as the partial sum of the first n remainders (w_0 = 0)."""
    if n < 0:
        raise ValueError("level index must be nonnegative")
    if n == 0:
        return 0.0
    taken = []
    for r in remainders:
        taken.append(float(r))
        if len(taken) == n:
            break
    if len(taken) < n:
        raise ValueError(f"need {n} remainders, got {len(taken)}")
    return float(sum(taken))


# ---------------------------------------------------------------------------
# Self-consistent level solving
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EnergyDependentProblem:
    """Self-consistent spectral problem: find E with kg(E) = wn(E, n).

    kg is the Klein-Gordon eigenvalue of the factorized pair; wn the n-th
    partner eigenvalue from shape invariance (may depend on E through the
    superpotential offset); w1/w2 the ladder coefficients (the zero mode
    solves w2 = 0 in case I, w1 = 0 in case II).  g_coeffs, when available,
    returns (c2, c1, c0) of the exactly quadratic g(E) = kg(E) - wn(E, n).
    """

    kg: Callable[[float], float]
    wn: Callable[[float, int], float]
    w1: Callable[[float], float]
    w2: Callable[[float], float]
    case: SusyCase
    mass_scale: float
    g_coeffs: Optional[Callable[[int], tuple[float, float, float]]] = None
    window: Optional[tuple[float, float]] = None


def _scalar_root(f: Callable[[float], float], lo: float, hi: float) -> float:
    return float(brentq(f, lo, hi, xtol=1e-14, rtol=8.9e-16, maxiter=200))


def _affine_root(f: Callable[[float], float], scale: float) -> Optional[float]:
    """Root of an affine function from two samples; None when degenerate."""
    f0 = f(0.0)
    f1 = f(scale)
    slope = (f1 - f0) / scale
    if slope == 0.0:
        return None
    root = -f0 / slope
    # guard against non-affine input: one Newton-style polish and a check
    fr = f(root)
    if abs(fr) > 1e-9 * (abs(f0) + abs(f1) + 1e-30):
        return None
    return root


def _newton_polish(g: Callable[[float], float], e: float, scale: float) -> float:
    for _ in range(40):
        ge = g(e)
        if abs(ge) <= 1e-13 * scale:
            return e
        h = 1e-7 * (1.0 + abs(e))
        dg = (g(e + h) - g(e - h)) / (2.0 * h)
        if dg == 0.0:
            break
        step = ge / dg
        e -= step
        if abs(step) < 1e-15 * (1.0 + abs(e)):
            break
    return e


def solve_level(problem: EnergyDependentProblem, n: int,
                window: Optional[tuple[float, float]] = None) -> list[Level]:
    """All real energies of level n, refined to |kg(E) - wn(E)| < 1e-12*scale.

    n = 0 is the zero mode: its energy makes the appropriate ladder
    coefficient vanish (w2 for case I, w1 for case II) and is reported once
    with multiplicity 1.  For n >= 1 the two real roots of the (generically
    quadratic) condition are tagged '-' and '+'.
    """
    if n < 0:
        raise ValueError("level index must be nonnegative")
    scale_ref = 1.0 + abs(problem.mass_scale)
    if n == 0:
        coeff = problem.w2 if problem.case is SusyCase.CASE_I else problem.w1
        root = _affine_root(coeff, scale_ref)
        if root is None:
            raise NoRootError("no zero-mode energy: ladder coefficient has no root")
        root = _newton_polish(coeff, root, scale_ref)
        return [Level(n=0, E=root, branch="single", multiplicity=1)]

    def g(E: float) -> float:
        return problem.kg(E) - problem.wn(E, n)

    gscale = 1.0 + abs(problem.wn(0.0, n))

    if problem.g_coeffs is not None:
        c2, c1, c0 = problem.g_coeffs(n)
        roots = _quadratic_roots(c2, c1, c0)
        if roots is None:
            raise NoRootError(f"level {n}: quadratic condition has no real root")
        roots = sorted(_newton_polish(g, e, gscale) for e in roots)
        if len(roots) == 1:
            return [Level(n=n, E=roots[0], branch="single", multiplicity=1)]
        return [Level(n=n, E=roots[0], branch="-"),
                Level(n=n, E=roots[1], branch="+")]

    win = window or problem.window
    if win is None:
        w_ref = max(problem.wn(0.0, n), 0.0)
        half = 10.0 * (abs(problem.mass_scale) + np.sqrt(w_ref) + 1.0)
        win = (-half, half)
    roots = _scan_roots(g, win, n_mesh=1001)
    if not roots:
        raise NoRootError(f"level {n}: no root of the spectral condition in {win}")
    roots = sorted(_newton_polish(g, e, gscale) for e in roots)
    levels = []
    for i, e in enumerate(roots):
        branch = "-" if i == 0 and len(roots) > 1 else "+"
        if len(roots) == 1:
            branch = "+" if e >= 0 else "-"
        levels.append(Level(n=n, E=e, branch=branch))
    return levels


def _quadratic_roots(c2: float, c1: float, c0: float) -> Optional[list[float]]:
    if c2 == 0.0:
        if c1 == 0.0:
            return None
        return [-c0 / c1]
    disc = c1 * c1 - 4.0 * c2 * c0
    tiny = 1e-14 * (c1 * c1 + abs(4.0 * c2 * c0))
    if disc < -tiny:
        return None
    if disc <= tiny:
        return [-c1 / (2.0 * c2)]
    sq = np.sqrt(disc)
    # numerically stable pair
    q = -0.5 * (c1 + np.copysign(sq, c1)) if c1 != 0.0 else 0.5 * sq
    if c1 == 0.0:
        return sorted([sq / (2.0 * c2), -sq / (2.0 * c2)])
    return sorted([q / c2, c0 / q])


def _scan_roots(g: Callable[[float], float], window: tuple[float, float],
                n_mesh: int) -> list[float]:
    lo, hi = window
    mesh = np.linspace(lo, hi, n_mesh)
    vals = np.array([g(e) for e in mesh])
    roots = []
    for i in range(len(mesh) - 1):
        a, b = vals[i], vals[i + 1]
        if a == 0.0:
            roots.append(float(mesh[i]))
        elif a * b < 0.0:
            roots.append(_scalar_root(g, float(mesh[i]), float(mesh[i + 1])))
    if vals[-1] == 0.0:
        roots.append(float(mesh[-1]))
    # drop duplicates from touching brackets
    out: list[float] = []
    for r in roots:
        if not out or abs(r - out[-1]) > 1e-10 * (1.0 + abs(r)):
            out.append(r)
    return out


def solve_levels(problem: EnergyDependentProblem, n_max: int) -> list[Level]:
    """Levels 0..n_max, flattened and ordered by (n, branch)."""
    out: list[Level] = []
    for n in range(n_max + 1):
        out.extend(solve_level(problem, n))
    return out


# ---------------------------------------------------------------------------
# Eigenfunctions
# ---------------------------------------------------------------------------

def _w_integral(w: Profile, x: np.ndarray) -> np.ndarray:
    """Integral of W from x[0], analytic when the profile carries an
    antiderivative, composite trapezoid otherwise."""
    if w.antiderivative is not None:
        anti = np.asarray(w.antiderivative(x), dtype=float)
        return anti - anti[0]
    return cumulative_trapezoid(w.f(x), x, initial=0.0)


def ground_state(w: Profile, case: SusyCase, grid: np.ndarray,
                 constants: Constants = Constants(),
                 sigma: float = 1.0) -> Eigenpair:
    """Zero-mode profile exp(-/+ integral W / chbar) in the diagonalized basis,
    normalized on the grid (energy left at nan for the caller to set)."""
    x = np.asarray(grid, dtype=float)
    integral = _w_integral(w, x) / (sigma * constants.chbar)
    sign = -1.0 if case is SusyCase.CASE_I else +1.0
    expo = sign * integral
    expo -= expo.max()
    psi = np.exp(expo)
    psi /= _grid_norm(psi, x)
    zero = np.zeros_like(psi)
    t1, t2 = (psi, zero) if case is SusyCase.CASE_I else (zero, psi)
    return Eigenpair(E=np.nan, x1=x, psi1=t1.copy(), x2=x, psi2=t2.copy(),
                     tilde1=t1, tilde2=t2, norm=None)


def _grid_norm(psi: np.ndarray, x: np.ndarray) -> float:
    return float(np.sqrt(np.trapezoid(psi**2, x)))


@dataclass(frozen=True)
class SiChain:
    """Fixed-energy shape-invariant family for eigenfunction construction.

    w_of(a) is the superpotential at family parameter a (energy already
    frozen); next_param iterates the reparametrization map.  coordinate_map
    converts the output grid to the coordinates the chain operates in (the
    inverse-linear family works in rho = f*taut*x).
    """

    w_of: Callable[[float], Profile]
    next_param: Callable[[float], float]
    a1: float
    sigma: float = 1.0
    coordinate_map: Callable[[np.ndarray], np.ndarray] = staticmethod(
        lambda x: np.asarray(x, dtype=float))


def excited_state(chain: SiChain, case: SusyCase, n: int, grid: np.ndarray,
                  constants: Constants = Constants()) -> Eigenpair:
    """n-th eigenfunction of the frozen-energy partner Hamiltonian.

    Built per the shape-invariance chain: the ground state of the n-times
    remapped parameter, hit by n creation operators with parameters
    a_n, ..., a_1.  n = 0 reduces to the ground state.
    """
    x_out = np.asarray(grid, dtype=float)
    y = chain.coordinate_map(x_out)
    params = [chain.a1]
    for _ in range(n):
        params.append(chain.next_param(params[-1]))
    gs = ground_state(chain.w_of(params[n]), case, y, constants, sigma=chain.sigma)
    psi = gs.tilde1 if case is SusyCase.CASE_I else gs.tilde2
    adjoint = case is SusyCase.CASE_I  # creation operator for the '-' tower
    for k in range(n - 1, -1, -1):
        psi = apply_ladder(chain.w_of(params[k]), constants, psi, y,
                           adjoint=adjoint, sigma=chain.sigma)
        psi /= _grid_norm(psi, y)
    psi = psi / _grid_norm(psi, x_out)
    zero = np.zeros_like(psi)
    t1, t2 = (psi, zero) if case is SusyCase.CASE_I else (zero, psi)
    return Eigenpair(E=np.nan, x1=x_out, psi1=t1.copy(), x2=x_out, psi2=t2.copy(),
                     tilde1=t1, tilde2=t2, norm=None)


def assemble_spinor(eig: Eigenpair, fd: FactorizationData, mixing: MixingMatrix,
                    constants: Constants = Constants(),
                    case: SusyCase = SusyCase.CASE_I) -> Eigenpair:
    """Fill the partner component through the ladder map and rotate to the
    original basis, normalized by trapezoidal quadrature.

    Case I: psi~_2 = A psi~_1 / w1 (zero when w1 is the vanishing zero-mode
    coefficient is not allowed: that is the ZeroDivisor error).  Case II uses
    psi~_1 = A^dag psi~_2 / w2.
    """
    x = np.asarray(eig.x1, dtype=float)
    e = float(eig.E)
    w = fd.w_profile(e)
    if case is SusyCase.CASE_I:
        t1 = np.asarray(eig.tilde1, dtype=float)
        w1 = fd.w1(e)
        if _is_zero_mode(fd, e, case):
            t2 = np.zeros_like(t1)
        else:
            if w1 == 0.0:
                raise ZeroDivisorError("w1 = 0 but a nonzero partner component "
                                       "was requested")
            t2 = apply_ladder(w, constants, t1, x, adjoint=False,
                              sigma=fd.sigma) / w1
    else:
        t2 = np.asarray(eig.tilde2, dtype=float)
        w2 = fd.w2(e)
        if _is_zero_mode(fd, e, case):
            t1 = np.zeros_like(t2)
        else:
            if w2 == 0.0:
                raise ZeroDivisorError("w2 = 0 but a nonzero partner component "
                                       "was requested")
            t1 = apply_ladder(w, constants, t2, x, adjoint=True,
                              sigma=fd.sigma) / w2
    tilde = np.vstack([t1, t2])
    original = mixing.d_inv @ tilde
    psi1, psi2 = original[0], original[1]
    norm = np.sqrt(np.trapezoid(psi1**2 + psi2**2, x))
    psi1, psi2 = psi1 / norm, psi2 / norm
    t1, t2 = t1 / norm, t2 / norm
    achieved = float(np.trapezoid(psi1**2 + psi2**2, x))
    return Eigenpair(E=e, x1=x, psi1=psi1, x2=x, psi2=psi2,
                     tilde1=t1, tilde2=t2, norm=achieved)


def _is_zero_mode(fd: FactorizationData, e: float, case: SusyCase) -> bool:
    """A level is the zero mode when the product w1*w2 vanishes through the
    coefficient consistent with the case orientation."""
    w1, w2 = fd.w1(e), fd.w2(e)
    scale = 1.0 + abs(w1) + abs(w2)
    if case is SusyCase.CASE_I:
        return abs(w2) < 1e-10 * scale
    return abs(w1) < 1e-10 * scale


# ---------------------------------------------------------------------------
# Fixed-energy partner spectra (grid discretization of H-/H+)
# ---------------------------------------------------------------------------

def partner_spectra(pp: PartnerPotentials, grid: np.ndarray,
                    constants: Constants = Constants(),
                    count: Optional[int] = None) -> tuple[np.ndarray, np.ndarray]:
    """Lowest eigenvalues of the discretized partner Hamiltonians
    -(chbar)^2 d^2/dx^2 + V_-+(x) with Dirichlet walls at the grid ends."""
    x = np.asarray(grid, dtype=float)
    h = x[1] - x[0]
    xin = x[1:-1]
    kin = (constants.chbar) ** 2 / h**2
    out = []
    for v in (pp.v_minus, pp.v_plus):
        diag = 2.0 * kin + np.asarray(v(xin), dtype=float)
        off = -kin * np.ones(len(xin) - 1)
        if count is None:
            vals = eigh_tridiagonal(diag, off, eigvals_only=True)
        else:
            vals = eigh_tridiagonal(diag, off, eigvals_only=True,
                                    select="i", select_range=(0, count - 1))
        out.append(vals)
    return out[0], out[1]
