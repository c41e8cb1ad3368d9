"""Independent numerical eigensolver for the first-order two-component system.

Two routes: a symmetric tridiagonal matrix built on a staggered grid
(component 1 on integer sites, component 2 on interior midpoints -- the
staggering removes fermion doublers and keeps the matrix exactly symmetric),
and a two-sided RK4 shooting solver with a matching determinant.  Both see
only the raw potentials, never the factorization, so they verify it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .model import (
    Constants,
    DiracSusyError,
    Eigenpair,
    FirstOrderSystem,
    OutOfDomainError,
    SolverFailureError,
    ZeroDivisorError,
)
from .factorize import FactorizationData, MixingMatrix, apply_ladder


# ---------------------------------------------------------------------------
# Grid and boundary
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Grid:
    """Uniform solution box: component 1 on the n_points integer sites,
    component 2 staggered onto the interior midpoints."""

    xmin: float
    xmax: float
    n_points: int = 4001
    staggered: bool = True

    def __post_init__(self):
        if self.n_points < 16:
            raise DiracSusyError("grid needs at least 16 points")
        if not self.xmax > self.xmin:
            raise DiracSusyError("grid needs xmax > xmin")
        if not self.staggered:
            raise DiracSusyError("only the staggered layout is implemented")

    @property
    def h(self) -> float:
        return (self.xmax - self.xmin) / (self.n_points - 1)

    def sites(self) -> np.ndarray:
        return np.linspace(self.xmin, self.xmax, self.n_points)

    def midpoints(self) -> np.ndarray:
        x = self.sites()
        return 0.5 * (x[:-1] + x[1:])


@dataclass(frozen=True)
class Boundary:
    """BoxDirichlet clamps the staggered component at ghost midpoints beyond
    the walls; HalfLineRegular drops the singular x = 0 site and starts
    shooting from the regular power-law solution x**frobenius_exponent."""

    kind: str  # 'box_dirichlet' | 'half_line_regular'
    frobenius_exponent: Optional[float] = None


BOX_DIRICHLET = Boundary(kind="box_dirichlet")
HALF_LINE_REGULAR = Boundary(kind="half_line_regular")


def default_boundary(system: FirstOrderSystem) -> Boundary:
    if system.domain[0] == 0.0 and np.isinf(system.domain[1]):
        return HALF_LINE_REGULAR
    return BOX_DIRICHLET


# ---------------------------------------------------------------------------
# Discrete Hamiltonian
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DiscreteHamiltonian:
    """Symmetric tridiagonal representation in interleaved site ordering."""

    diag: np.ndarray
    off: np.ndarray
    pos: np.ndarray       # position of every retained degree of freedom
    comp: np.ndarray      # 1 or 2: which spinor component lives there
    h: float
    boundary: Boundary
    constants: Constants

    @property
    def dim(self) -> int:
        return len(self.diag)

    def matrix(self) -> np.ndarray:
        m = np.diag(self.diag)
        idx = np.arange(self.dim - 1)
        m[idx, idx + 1] = self.off
        m[idx + 1, idx] = self.off
        return m


def build_hamiltonian(system: FirstOrderSystem, constants: Constants,
                      grid: Grid, boundary: Optional[Boundary] = None) -> DiscreteHamiltonian:
    """Assemble the staggered-grid matrix for H psi = E psi.

    The derivative couples the two components between adjacent staggered
    sites with a two-point centered difference; the local coupling between
    them is averaged onto the two midpoints, which keeps the matrix symmetric
    and the scheme second-order accurate without fermion doubling.
    """
    if boundary is None:
        boundary = default_boundary(system)
    x = grid.sites()
    mid = grid.midpoints()
    h = grid.h
    ch = constants.chbar
    sigma = system.sigma

    if boundary.kind == "half_line_regular":
        if grid.xmin < 0.0:
            raise OutOfDomainError("half-line problem with box crossing x <= 0")
        x1 = x[1:] if grid.xmin == 0.0 else x
    else:
        lo, hi = system.domain
        if (lo > -np.inf and grid.xmin < lo) or (hi < np.inf and grid.xmax > hi):
            raise OutOfDomainError(
                f"box [{grid.xmin}, {grid.xmax}] leaves the domain ({lo}, {hi})"
            )
        if lo == 0.0 and grid.xmin <= 0.0:
            raise OutOfDomainError("half-line problem with box crossing x <= 0")
        x1 = x

    n1, n2 = len(x1), len(mid)
    dim = n1 + n2
    pos = np.empty(dim)
    comp = np.empty(dim, dtype=int)
    # interleave by position
    order = np.argsort(np.concatenate([x1, mid]), kind="stable")
    allpos = np.concatenate([x1, mid])
    allcomp = np.concatenate([np.ones(n1, dtype=int), 2 * np.ones(n2, dtype=int)])
    pos = allpos[order]
    comp = allcomp[order]

    d1v = np.asarray(system.d1.f(x1), dtype=float)
    d2v = np.asarray(system.d2.f(mid), dtype=float)
    mv = np.asarray(system.m_coupling.f(mid), dtype=float)

    diag = np.empty(dim)
    diag[comp == 1] = d1v
    diag[comp == 2] = d2v

    off = np.empty(dim - 1)
    for i in range(dim - 1):
        if comp[i] == 1:          # psi1 then its right midpoint
            j = np.searchsorted(mid, pos[i + 1])
            off[i] = sigma * ch / h + 0.5 * mv[j]
        else:                     # psi2 then the next integer site
            j = np.searchsorted(mid, pos[i])
            off[i] = -sigma * ch / h + 0.5 * mv[j]
    return DiscreteHamiltonian(diag=diag, off=off, pos=pos, comp=comp, h=h,
                               boundary=boundary, constants=constants)


def eigenvalues(ham: DiscreteHamiltonian,
                window: tuple[float, float]) -> np.ndarray:
    """All eigenvalues in the energy window, ascending."""
    lo, hi = window
    if not hi > lo:
        raise DiracSusyError("window must be a nonempty interval")
    try:
        vals = eigh_tridiagonal(ham.diag, ham.off, eigvals_only=True,
                                select="v", select_range=(lo, hi))
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise SolverFailureError(str(exc)) from exc
    return vals


def eigen_solve(ham: DiscreteHamiltonian, window: tuple[float, float],
                count: Optional[int] = None) -> list[Eigenpair]:
    """Eigenpairs with E in the window, sorted by E, at most `count` of them
    (kept by smallest |E|), normalized by the staggered quadrature."""
    lo, hi = window
    if not hi > lo:
        raise DiracSusyError("window must be a nonempty interval")
    try:
        vals, vecs = eigh_tridiagonal(ham.diag, ham.off, select="v",
                                      select_range=(lo, hi))
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise SolverFailureError(str(exc)) from exc
    order = np.argsort(vals)
    vals, vecs = vals[order], vecs[:, order]
    if count is not None and len(vals) > count:
        keep = np.argsort(np.abs(vals), kind="stable")[:count]
        keep.sort()
        vals, vecs = vals[keep], vecs[:, keep]
    pairs = []
    m1 = ham.comp == 1
    m2 = ham.comp == 2
    x1, x2 = ham.pos[m1], ham.pos[m2]
    for e, v in zip(vals, vecs.T):
        psi1, psi2 = v[m1], v[m2]
        norm2 = np.trapezoid(psi1**2, x1) + np.trapezoid(psi2**2, x2)
        psi1 = psi1 / np.sqrt(norm2)
        psi2 = psi2 / np.sqrt(norm2)
        anchor = psi1 if np.max(np.abs(psi1)) >= np.max(np.abs(psi2)) else psi2
        if anchor[int(np.argmax(np.abs(anchor)))] < 0:
            psi1, psi2 = -psi1, -psi2
        achieved = float(np.trapezoid(psi1**2, x1) + np.trapezoid(psi2**2, x2))
        pairs.append(Eigenpair(E=float(e), x1=x1, psi1=psi1, x2=x2, psi2=psi2,
                               norm=achieved))
    return pairs


# ---------------------------------------------------------------------------
# Shooting solver
# ---------------------------------------------------------------------------

def _rk4_integrate(system: FirstOrderSystem, constants: Constants,
                   Es: np.ndarray, xs: np.ndarray, psi0: np.ndarray) -> np.ndarray:
    """RK4 along xs (either direction), renormalizing each step.

    Potentials are sampled once on the nodes and midpoints; the energy axis is
    fully vectorized.
    """
    inv = 1.0 / (system.sigma * constants.chbar)
    xm = 0.5 * (xs[:-1] + xs[1:])
    a_n = np.asarray(system.m_coupling.f(xs), dtype=float)
    a_m = np.asarray(system.m_coupling.f(xm), dtype=float)
    d1_n = np.asarray(system.d1.f(xs), dtype=float)
    d1_m = np.asarray(system.d1.f(xm), dtype=float)
    d2_n = np.asarray(system.d2.f(xs), dtype=float)
    d2_m = np.asarray(system.d2.f(xm), dtype=float)

    u, v = np.array(psi0[0], dtype=float), np.array(psi0[1], dtype=float)
    for i in range(len(xs) - 1):
        h = xs[i + 1] - xs[i]
        b0, c0 = d2_n[i] - Es, Es - d1_n[i]
        bm, cm = d2_m[i] - Es, Es - d1_m[i]
        b1, c1 = d2_n[i + 1] - Es, Es - d1_n[i + 1]
        a0, am, a1 = a_n[i], a_m[i], a_n[i + 1]

        k1u = inv * (a0 * u + b0 * v)
        k1v = inv * (c0 * u - a0 * v)
        tu, tv = u + 0.5 * h * k1u, v + 0.5 * h * k1v
        k2u = inv * (am * tu + bm * tv)
        k2v = inv * (cm * tu - am * tv)
        tu, tv = u + 0.5 * h * k2u, v + 0.5 * h * k2v
        k3u = inv * (am * tu + bm * tv)
        k3v = inv * (cm * tu - am * tv)
        tu, tv = u + h * k3u, v + h * k3v
        k4u = inv * (a1 * tu + b1 * tv)
        k4v = inv * (c1 * tu - a1 * tv)
        u = u + (h / 6.0) * (k1u + 2.0 * k2u + 2.0 * k3u + k4u)
        v = v + (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        amp = np.maximum(np.maximum(np.abs(u), np.abs(v)), 1e-280)
        u /= amp
        v /= amp
    return np.vstack([u, v])


def _frobenius_start(system: FirstOrderSystem, constants: Constants,
                     Es: np.ndarray, x0: float) -> tuple[np.ndarray, float]:
    """Regular power-law start psi ~ x^s (v + x u1(E)) for a 1/x singular end.

    The coefficient matrix K(x, E) = (sigma chbar) * dpsi/dx is exactly
    K1/x + K0(E) for the potential forms used here; K1 is extracted from two
    sample points and the energy enters only through the constant part.
    """
    sch = system.sigma * constants.chbar

    def K(x: float, E: float) -> np.ndarray:
        a = float(system.m_coupling.f(x))
        return np.array([[a, float(system.d2.f(x)) - E],
                         [E - float(system.d1.f(x)), -a]])

    xa, xb = 0.5, 1.0
    k_a, k_b = K(xa, 0.0), K(xb, 0.0)
    K1 = (k_a - k_b) / (1.0 / xa - 1.0 / xb)
    K0 = k_a - K1 / xa
    A1 = K1 / sch
    vals, vecs = np.linalg.eig(A1)
    if np.any(np.abs(vals.imag) > 1e-12):
        raise SolverFailureError("no real regular exponent at the singular end")
    i = int(np.argmax(vals.real))
    s = float(vals.real[i])
    if s <= -0.5:
        raise SolverFailureError(
            f"regular exponent {s:.4g} <= -1/2: no normalizable solution at 0"
        )
    v = vecs[:, i].real
    v = v / np.max(np.abs(v))
    J = np.array([[0.0, -1.0], [1.0, 0.0]])
    P = np.linalg.inv((s + 1.0) * np.eye(2) - A1)
    b0 = P @ ((K0 / sch) @ v)
    b1 = P @ ((J / sch) @ v)
    psi0 = np.empty((2, len(Es)))
    for j, E in enumerate(Es):
        u1 = b0 + E * b1
        psi0[:, j] = v + x0 * u1
    # the overall x0^s factor is a common positive scale; drop it
    return psi0, s


def _match_index(system: FirstOrderSystem, xs: np.ndarray) -> int:
    n = len(xs)
    lo, hi = n // 8, 7 * n // 8
    seg = xs[lo:hi]
    m = np.abs(np.asarray(system.m_coupling.f(seg), dtype=float))
    m = m + 1e-12 * np.abs(seg - xs[n // 2])  # tie-break toward the center
    return lo + int(np.argmin(m))


def shoot_many(system: FirstOrderSystem, constants: Constants, Es,
               grid: Grid, boundary: Optional[Boundary] = None) -> np.ndarray:
    """Normalized matching determinants at the given energies.

    Both half-solutions are integrated with RK4 toward an interior matching
    point; the determinant of the two 2-vectors vanishes exactly at an
    eigenvalue.  Renormalization every step guards against overflow.
    """
    if boundary is None:
        boundary = default_boundary(system)
    Es = np.atleast_1d(np.asarray(Es, dtype=float))
    xs = grid.sites()
    if boundary.kind == "half_line_regular":
        if grid.xmin < 0.0:
            raise OutOfDomainError("half-line problem with box crossing x <= 0")
        if grid.xmin == 0.0:
            xs = xs[1:]
    i_match = _match_index(system, xs)

    if boundary.kind == "half_line_regular":
        psi_left, _ = _frobenius_start(system, constants, Es, xs[0])
    else:
        psi_left = np.tile(np.array([[1.0], [0.0]]), (1, len(Es)))
    psi_l = _rk4_integrate(system, constants, Es, xs[: i_match + 1], psi_left)

    psi_right = np.tile(np.array([[1.0], [0.0]]), (1, len(Es)))
    psi_r = _rk4_integrate(system, constants, Es, xs[i_match:][::-1], psi_right)

    det = psi_l[0] * psi_r[1] - psi_l[1] * psi_r[0]
    norm = (np.sqrt(psi_l[0] ** 2 + psi_l[1] ** 2)
            * np.sqrt(psi_r[0] ** 2 + psi_r[1] ** 2))
    return det / np.maximum(norm, 1e-280)


def shoot(system: FirstOrderSystem, constants: Constants, E: float,
          grid: Grid, boundary: Optional[Boundary] = None) -> float:
    """Matching determinant at one energy (zero iff E is an eigenvalue)."""
    return float(shoot_many(system, constants, [E], grid, boundary)[0])


def find_levels_shooting(system: FirstOrderSystem, constants: Constants,
                         window: tuple[float, float], grid: Grid,
                         boundary: Optional[Boundary] = None,
                         n_mesh: int = 400, tol: float = 1e-10) -> list[float]:
    """Scan the matching determinant for sign changes and bisect each bracket.

    A second pass at doubled density covers any gap much wider than the
    median level spacing (suspected missed pairs of close roots).
    """
    roots = _scan_shooting(system, constants, window, grid, boundary, n_mesh, tol)
    if len(roots) >= 3:
        gaps = np.diff(roots)
        med = float(np.median(gaps))
        wide = [i for i, g in enumerate(gaps) if g > 2.5 * med]
        for i in wide:
            extra = _scan_shooting(system, constants,
                                   (roots[i] + 10 * tol, roots[i + 1] - 10 * tol),
                                   grid, boundary, max(n_mesh // 2, 100), tol)
            roots.extend(extra)
        merged: list[float] = []
        for r in sorted(roots):
            if not merged or r - merged[-1] > 5.0 * tol:
                merged.append(r)
        roots = merged
    return list(roots)


def _scan_shooting(system, constants, window, grid, boundary, n_mesh, tol):
    lo, hi = window
    if not hi > lo:
        return []
    mesh = np.linspace(lo, hi, n_mesh)
    dets = shoot_many(system, constants, mesh, grid, boundary)
    bl, bh = [], []
    for i in range(n_mesh - 1):
        if dets[i] == 0.0:
            bl.append(mesh[i]); bh.append(mesh[i])
        elif dets[i] * dets[i + 1] < 0.0:
            bl.append(mesh[i]); bh.append(mesh[i + 1])
    lo_arr = np.array(bl)
    hi_arr = np.array(bh)
    if len(lo_arr) == 0:
        return []
    f_lo = shoot_many(system, constants, lo_arr, grid, boundary)
    while np.max(hi_arr - lo_arr) > tol:
        mid = 0.5 * (lo_arr + hi_arr)
        f_mid = shoot_many(system, constants, mid, grid, boundary)
        left = f_lo * f_mid <= 0.0
        hi_arr = np.where(left, mid, hi_arr)
        lo_arr = np.where(left, lo_arr, mid)
        f_lo = np.where(left, f_lo, f_mid)
    return [float(r) for r in 0.5 * (lo_arr + hi_arr)]


# ---------------------------------------------------------------------------
# Convergence probe
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConvergenceReport:
    """Relative drift of the lowest-|E| levels under box doubling (fixed h)
    and grid refinement (fixed box)."""

    drift_box: float
    drift_grid: float
    verdict: str  # 'Converged' | 'NotConverged'


def _lowest_abs_eigenvalues(ham: DiscreteHamiltonian, n: int,
                            seed: float) -> np.ndarray:
    w = max(abs(seed), 1e-6)
    for _ in range(40):
        vals = eigenvalues(ham, (-w, w))
        if len(vals) >= n:
            order = np.argsort(np.abs(vals), kind="stable")
            return np.sort(vals[order[:n]])
        w *= 2.0
    raise SolverFailureError(f"could not find {n} eigenvalues near zero")


def convergence_probe(system: FirstOrderSystem, constants: Constants,
                      grid: Grid, boundary: Optional[Boundary] = None,
                      n_levels: int = 3, threshold: float = 1e-3) -> ConvergenceReport:
    """Bound states stay put under box doubling and grid refinement;
    continuum or Klein-unstable pseudo-levels drift."""
    if boundary is None:
        boundary = default_boundary(system)
    seed = 2.0 * (constants.mc2 + 1.0)
    base = _lowest_abs_eigenvalues(
        build_hamiltonian(system, constants, grid, boundary), n_levels, seed)

    center = 0.5 * (grid.xmin + grid.xmax)
    half = 0.5 * (grid.xmax - grid.xmin)
    if boundary.kind == "half_line_regular":
        big = Grid(xmin=grid.xmin, xmax=grid.xmax + 2.0 * half,
                   n_points=2 * grid.n_points - 1)
    else:
        big = Grid(xmin=center - 2.0 * half, xmax=center + 2.0 * half,
                   n_points=2 * grid.n_points - 1)
    doubled = _lowest_abs_eigenvalues(
        build_hamiltonian(system, constants, big, boundary), n_levels, seed)

    fine = Grid(xmin=grid.xmin, xmax=grid.xmax, n_points=2 * grid.n_points - 1)
    refined = _lowest_abs_eigenvalues(
        build_hamiltonian(system, constants, fine, boundary), n_levels, seed)

    def drift(a: np.ndarray, b: np.ndarray) -> float:
        a = np.sort(np.abs(a))
        b = np.sort(np.abs(b))
        return float(np.max(np.abs(a - b) / np.maximum.reduce(
            [np.abs(a), np.abs(b), 1e-9 * np.ones_like(a)])))

    d_box = drift(base, doubled)
    d_grid = drift(base, refined)
    verdict = "Converged" if (d_box < threshold and d_grid < threshold) else "NotConverged"
    return ConvergenceReport(drift_box=d_box, drift_grid=d_grid, verdict=verdict)


# ---------------------------------------------------------------------------
# Intertwining check
# ---------------------------------------------------------------------------

def intertwine_check(eig: Eigenpair, fd: FactorizationData, mixing: MixingMatrix,
                     constants: Constants = Constants(),
                     collar: float = 0.05) -> tuple[Optional[float], Optional[float]]:
    """Residuals of A psi~_1 = w1 psi~_2 and A^dag psi~_2 = w2 psi~_1 on an
    eigenpair, in relative L2 norms.

    The staggered component is interpolated onto the component-1 sites before
    rotating with the mixing matrix.  For a zero mode (one tilde component
    vanishing) the surviving side returns the annihilation residual and the
    other side is None.  The norms exclude two boundary points plus, on a
    half line, a collar below `collar` times the peak position (the power-law
    endpoint is not an O(h^2) region).
    """
    x = np.asarray(eig.x1, dtype=float)
    psi1 = np.asarray(eig.psi1, dtype=float)
    psi2 = np.interp(x, np.asarray(eig.x2, dtype=float),
                     np.asarray(eig.psi2, dtype=float))
    tilde = mixing.d @ np.vstack([psi1, psi2])
    t1, t2 = tilde[0], tilde[1]
    e = float(eig.E)
    w = fd.w_profile(e)
    w1, w2 = fd.w1(e), fd.w2(e)

    keep = np.ones(len(x), dtype=bool)
    keep[:2] = keep[-2:] = False
    if x[0] > 0.0:
        peak = x[int(np.argmax(psi1**2 + psi2**2))]
        keep &= x > collar * peak

    def l2(v):
        return float(np.sqrt(np.sum(v[keep] ** 2)))

    n1, n2 = l2(t1), l2(t2)
    nmax = max(n1, n2)
    if nmax == 0.0:
        raise ZeroDivisorError("both diagonalized components vanish")
    zero1 = n1 < 1e-8 * nmax
    zero2 = n2 < 1e-8 * nmax
    if zero1 and zero2:
        raise ZeroDivisorError("both diagonalized components vanish")
    if zero2:
        # zero mode hosted by the first component: annihilation residual only
        a_t1 = apply_ladder(w, constants, t1, x, adjoint=False, sigma=fd.sigma)
        return l2(a_t1) / n1, None
    if zero1:
        at_t2 = apply_ladder(w, constants, t2, x, adjoint=True, sigma=fd.sigma)
        return None, l2(at_t2) / n2
    a_t1 = apply_ladder(w, constants, t1, x, adjoint=False, sigma=fd.sigma)
    at_t2 = apply_ladder(w, constants, t2, x, adjoint=True, sigma=fd.sigma)
    return l2(a_t1 - w1 * t2) / n2, l2(at_t2 - w2 * t1) / n1
