"""Diagonalization of the coupled first-order Dirac system and construction of
the ladder operators, superpotential and partner potentials.

Conventions: on the general branch the diagonalized coupling term is
diag(-tau, +tau) times the stored scalar profile, the superpotential is
W(x, E) = tau*f(x) + (E*ell + mc^2 + zeta*eps)/tau, and the ladder operators
are A = sigma*chbar*d/dx + W, A^dag = -sigma*chbar*d/dx + W with sigma = +1
for 1+1-D problems (sigma = s for the reduced 2+1-D branch, whose coupling
term is diag(+tau, -tau) times the magnetic profile).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .model import (
    Branch,
    Constants,
    Couplings,
    DiracSusyError,
    FirstOrderSystem,
    Mode2p1,
    NotDiagonalizableError,
    Profile,
    Shape,
    UnstableRegimeError,
    UnsupportedBranchError,
    validate,
)

_PSEUDOSCALAR_D = np.array([[1.0, 1.0], [-1.0, 1.0]])


# ---------------------------------------------------------------------------
# Mixing matrix
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MixingMatrix:
    """Similarity transform whose rows are left eigenvectors of the coupling
    matrix, ordered so conjugation yields diag(-sqrt(delta), +sqrt(delta))."""

    d: np.ndarray
    d_inv: np.ndarray
    eigvals: tuple[float, float]


def coupling_matrix(couplings: Couplings) -> np.ndarray:
    """The unnormalized 2x2 matrix multiplying the shared profile f(x)."""
    c = couplings
    return np.array([[-c.zeta1, -c.zeta3 - c.zeta2],
                     [c.zeta3 - c.zeta2, c.zeta1]])


def mixing_matrix(couplings: Couplings) -> MixingMatrix:
    """Diagonalize the coupling matrix with the (-, +) eigenvalue ordering.

    On the pure-pseudoscalar branch the fixed matrix [[1, 1], [-1, 1]] is
    used.  Elsewhere the closed form (rows (1+tau, zeta+ell) and
    (ell-zeta, 1+tau), scaled by 1/(2 tau (1+tau))) applies whenever it is
    consistent with the (-, +) ordering of the unnormalized matrix; the
    remaining cases (zeta1 <= 0) fall back to a direct eigendecomposition.
    """
    rep = validate(couplings)
    m = coupling_matrix(couplings)
    if rep.branch is Branch.PURE_PSEUDOSCALAR:
        d = _PSEUDOSCALAR_D.copy()
        d_inv = np.linalg.inv(d)
        conj = d @ m @ d_inv
        return MixingMatrix(d=d, d_inv=d_inv, eigvals=(conj[0, 0], conj[1, 1]))
    if rep.delta == 0.0:
        raise NotDiagonalizableError(
            "coupling matrix is defective: delta = 0 with nonzero couplings"
        )
    if rep.delta > 0.0 and couplings.zeta1 > 0.0:
        zeta, ell, tau = couplings.zeta, couplings.ell, couplings.tau
        d = np.array([[1.0 + tau, zeta + ell],
                      [ell - zeta, 1.0 + tau]]) / (2.0 * tau * (1.0 + tau))
    else:
        d = _direct_left_eigenvectors(m)
    d_inv = np.linalg.inv(d)
    conj = d @ m @ d_inv
    return MixingMatrix(d=d, d_inv=d_inv, eigvals=(conj[0, 0], conj[1, 1]))


def _direct_left_eigenvectors(m: np.ndarray) -> np.ndarray:
    """Rows = left eigenvectors of m, ordered by ascending eigenvalue."""
    vals, vecs = np.linalg.eig(m.T)
    if np.any(np.abs(vals.imag) > 1e-14 * (1.0 + np.abs(vals.real).max())):
        raise NotDiagonalizableError("coupling matrix has complex eigenvalues")
    vals = vals.real
    vecs = vecs.real
    order = np.argsort(vals)
    d = vecs[:, order].T
    # deterministic row orientation
    for i in range(2):
        j = int(np.argmax(np.abs(d[i])))
        if d[i, j] < 0:
            d[i] = -d[i]
    return d


# ---------------------------------------------------------------------------
# Ladder coefficients and the Klein-Gordon eigenvalue
# ---------------------------------------------------------------------------

def ladder_coefficients(couplings: Couplings, constants: Constants,
                        E: float) -> tuple[float, float, float]:
    """(w1, w2, offset) of the diagonalized system at energy E.

    A psi~_1 = w1 psi~_2 and A^dag psi~_2 = w2 psi~_1, with the offset being
    the constant part of the superpotential.  The pure pseudoscalar branch
    returns (E + mc^2, E - mc^2, 0) up to the mass/energy shifts.
    """
    rep = validate(couplings)
    mc2 = constants.mc2 + couplings.m_shift
    e_eff = E - couplings.e_shift
    if rep.branch is Branch.PURE_PSEUDOSCALAR:
        return e_eff + mc2, e_eff - mc2, 0.0
    if rep.branch is Branch.DEGENERATE_ELECTRIC:
        raise UnsupportedBranchError(
            "ladder coefficients are undefined for a purely electric coupling"
        )
    if rep.delta <= 0.0:
        raise UnstableRegimeError(
            "ladder operators are not mutually adjoint: delta = "
            f"{rep.delta:.6g} <= 0"
        )
    zeta, ell, tau = couplings.zeta, couplings.ell, couplings.tau
    eps = couplings.eps
    a = zeta + ell
    b = zeta - ell
    denom = tau * (tau + 1.0)
    w1 = (a * (1.0 + tau) * mc2 - eps * (1.0 - ell * a + tau)
          + e_eff * (1.0 + zeta * a + tau)) / denom
    w2 = (-b * (1.0 + tau) * mc2 + eps * (1.0 + ell * b + tau)
          + e_eff * (1.0 + zeta * b + tau)) / denom
    offset = (e_eff * ell + mc2 + zeta * eps) / tau
    return w1, w2, offset


def kg_eigenvalue(couplings: Couplings, constants: Constants, E: float) -> float:
    """Eigenvalue w of both partner Klein-Gordon equations at energy E.

    The product w1*w2 is the authoritative value; kg_eigenvalue_expanded gives
    an independently coded algebraic form used for cross-checking.
    """
    w1, w2, _ = ladder_coefficients(couplings, constants, E)
    return w1 * w2


def kg_eigenvalue_expanded(couplings: Couplings, constants: Constants,
                           E: float) -> float:
    """w(E) written out as a single rational expression in the couplings."""
    rep = validate(couplings)
    mc2 = constants.mc2 + couplings.m_shift
    e = E - couplings.e_shift
    if rep.branch is Branch.PURE_PSEUDOSCALAR:
        return e**2 - mc2**2
    if rep.branch is Branch.DEGENERATE_ELECTRIC:
        raise UnsupportedBranchError(
            "kg eigenvalue is undefined for a purely electric coupling"
        )
    if rep.delta <= 0.0:
        raise UnstableRegimeError(f"delta = {rep.delta:.6g} <= 0")
    zeta, ell, eps = couplings.zeta, couplings.ell, couplings.eps
    tau2 = 1.0 + zeta**2 - ell**2
    return ((e**2 - mc2**2) * zeta**2 + (e + ell * mc2) ** 2
            + eps**2 * (ell**2 - 1.0)
            + 2.0 * eps * (e * ell + mc2) * zeta) / tau2


def kg_quadratic_coefficients(couplings: Couplings,
                              constants: Constants) -> tuple[float, float, float]:
    """(c2, c1, c0) with w(E) = c2*(E-e_shift)^2 + c1*(E-e_shift) + c0."""
    rep = validate(couplings)
    mc2 = constants.mc2 + couplings.m_shift
    if rep.branch is Branch.PURE_PSEUDOSCALAR:
        return 1.0, 0.0, -mc2**2
    if rep.branch is Branch.DEGENERATE_ELECTRIC:
        raise UnsupportedBranchError(
            "kg eigenvalue is undefined for a purely electric coupling"
        )
    if rep.delta <= 0.0:
        raise UnstableRegimeError(f"delta = {rep.delta:.6g} <= 0")
    zeta, ell, eps = couplings.zeta, couplings.ell, couplings.eps
    tau2 = 1.0 + zeta**2 - ell**2
    c2 = (1.0 + zeta**2) / tau2
    c1 = 2.0 * ell * (mc2 + eps * zeta) / tau2
    c0 = (ell**2 * (mc2**2 + eps**2) - (mc2 * zeta - eps) ** 2) / tau2
    return c2, c1, c0


# ---------------------------------------------------------------------------
# Superpotential and partner potentials
# ---------------------------------------------------------------------------

def superpotential(couplings: Couplings, constants: Constants, shape: Shape,
                   E: float) -> Profile:
    """W(x) at energy E: tau*f(x) + offset on the general branch, P(x) when
    purely pseudoscalar (f the stored profile)."""
    rep = validate(couplings)
    base = shape.profile()

    def scaled(ratio: float, offset: float) -> Profile:
        anti = None
        if base.antiderivative is not None:
            anti = lambda x: (ratio * base.antiderivative(x)  # noqa: E731
                              + offset * np.asarray(x, dtype=float))
        return Profile(f=lambda x: ratio * base.f(x) + offset,
                       df=lambda x: ratio * base.df(x),
                       antiderivative=anti)

    if rep.branch is Branch.PURE_PSEUDOSCALAR:
        return scaled(1.0 if couplings.zeta2 != 0.0 else 0.0, couplings.eps)
    if rep.branch is Branch.DEGENERATE_ELECTRIC:
        raise UnsupportedBranchError(
            "superpotential is undefined for a purely electric coupling"
        )
    if rep.delta <= 0.0:
        raise UnstableRegimeError(f"delta = {rep.delta:.6g} <= 0")
    tau = couplings.tau
    _, _, offset = ladder_coefficients(couplings, constants, E)
    return scaled(tau, offset)


@dataclass(frozen=True)
class PartnerPotentials:
    """V_-(x) = W^2 - chbar*W' and V_+(x) = W^2 + chbar*W'."""

    v_minus: Callable[[np.ndarray], np.ndarray]
    v_plus: Callable[[np.ndarray], np.ndarray]


def partner_potentials(w: Profile, constants: Constants) -> PartnerPotentials:
    ch = constants.chbar

    def v_minus(x):
        return w.f(x) ** 2 - ch * w.df(x)

    def v_plus(x):
        return w.f(x) ** 2 + ch * w.df(x)

    return PartnerPotentials(v_minus=v_minus, v_plus=v_plus)


def apply_ladder(w: Profile, constants: Constants, psi: np.ndarray,
                 x: np.ndarray, adjoint: bool = False,
                 sigma: float = 1.0) -> np.ndarray:
    """Apply A = sigma*chbar*d/dx + W (or its adjoint) on a uniform grid.

    Centered differences in the interior, one-sided second-order stencils at
    the boundaries.
    """
    psi = np.asarray(psi, dtype=float)
    x = np.asarray(x, dtype=float)
    h = x[1] - x[0]
    dpsi = np.empty_like(psi)
    dpsi[1:-1] = (psi[2:] - psi[:-2]) / (2.0 * h)
    dpsi[0] = (-3.0 * psi[0] + 4.0 * psi[1] - psi[2]) / (2.0 * h)
    dpsi[-1] = (3.0 * psi[-1] - 4.0 * psi[-2] + psi[-3]) / (2.0 * h)
    sign = -sigma if adjoint else sigma
    return sign * constants.chbar * dpsi + w.f(x) * psi


@dataclass(frozen=True)
class FactorizationData:
    """Energy-parametrized ladder data for one problem.

    tau is the rescaling of the shared profile; offset(E) the constant part of
    the superpotential; w1/w2 the ladder coefficients; superpotential(x, E)
    the full W and w_profile(E) the same W with its spatial derivative.
    sigma is the sign of the derivative in A (s for the reduced 2+1-D branch,
    +1 otherwise).
    """

    tau: float
    offset: Callable[[float], float]
    w1: Callable[[float], float]
    w2: Callable[[float], float]
    superpotential: Callable[[np.ndarray, float], np.ndarray]
    w_profile: Callable[[float], Profile]
    sigma: float = 1.0


def factorization_data(couplings: Couplings, constants: Constants,
                       shape: Shape) -> FactorizationData:
    """Package ladder coefficients and the superpotential as callables of E."""
    validate(couplings)

    def offset(E):
        return ladder_coefficients(couplings, constants, E)[2]

    def w1(E):
        return ladder_coefficients(couplings, constants, E)[0]

    def w2(E):
        return ladder_coefficients(couplings, constants, E)[1]

    def w_xy(x, E):
        return superpotential(couplings, constants, shape, E).f(x)

    return FactorizationData(
        tau=_tau_or_one(couplings), offset=offset, w1=w1, w2=w2,
        superpotential=w_xy,
        w_profile=lambda E: superpotential(couplings, constants, shape, E),
        sigma=1.0,
    )


def _tau_or_one(couplings: Couplings) -> float:
    rep = validate(couplings)
    if rep.branch is Branch.GENERAL and rep.tau is not None:
        return rep.tau
    return 1.0


# ---------------------------------------------------------------------------
# 2+1-D reduction
# ---------------------------------------------------------------------------

def mixing_matrix_2p1(mode: Mode2p1) -> MixingMatrix:
    """Similarity transform for the reduced 2+1-D coupling matrix
    [[1, nu-lam], [-nu-lam, -1]], ordered (+tau, -tau)."""
    tau = mode.tau
    lam, nu = mode.lam, mode.nu
    d = np.array([[1.0 + tau, nu - lam],
                  [nu + lam, 1.0 + tau]])
    d_inv = np.linalg.inv(d)
    m = np.array([[1.0, nu - lam], [-nu - lam, -1.0]])
    conj = d @ m @ d_inv
    return MixingMatrix(d=d, d_inv=d_inv, eigvals=(conj[0, 0], conj[1, 1]))


def ladder_coefficients_2p1(mode: Mode2p1, constants: Constants,
                            E: float) -> tuple[float, float, float]:
    """(w1, w2, offset) for the reduced 2+1-D system at energy E."""
    if mode.delta2 <= 0.0:
        raise UnstableRegimeError(
            f"2+1-D ladder operators are not mutually adjoint: delta2 = "
            f"{mode.delta2:.6g} <= 0"
        )
    tau = mode.tau
    lam, nu = mode.lam, mode.nu
    mc2 = constants.mc2
    ck = constants.c * mode.k
    p = 1.0 + tau
    pb = nu + lam
    mb = nu - lam
    det = 2.0 * tau * p
    w1 = -(2.0 * p * mb * ck - mb**2 * (mc2 - E) + p**2 * (E + mc2)) / det
    w2 = (-2.0 * p * pb * ck + p**2 * (mc2 - E) - pb**2 * (E + mc2)) / det
    offset = (E * nu + lam * mc2 + ck) / tau
    return w1, w2, offset


def kg_eigenvalue_2p1(mode: Mode2p1, constants: Constants, E: float) -> float:
    w1, w2, _ = ladder_coefficients_2p1(mode, constants, E)
    return w1 * w2


def kg_eigenvalue_2p1_expanded(mode: Mode2p1, constants: Constants,
                               E: float) -> float:
    """The 2+1-D eigenvalue written as a single rational expression."""
    if mode.delta2 <= 0.0:
        raise UnstableRegimeError(f"delta2 = {mode.delta2:.6g} <= 0")
    lam, nu = mode.lam, mode.nu
    mc2 = constants.mc2
    ck = constants.c * mode.k
    tau2 = 1.0 + lam**2 - nu**2
    return (E**2 * (1.0 + lam**2) - (mc2 - ck * lam) ** 2
            + 2.0 * E * (ck + lam * mc2) * nu
            + (ck**2 + mc2**2) * nu**2) / tau2


def kg_quadratic_coefficients_2p1(mode: Mode2p1,
                                  constants: Constants) -> tuple[float, float, float]:
    """(c2, c1, c0) with the 2+1-D eigenvalue = c2*E^2 + c1*E + c0."""
    if mode.delta2 <= 0.0:
        raise UnstableRegimeError(f"delta2 = {mode.delta2:.6g} <= 0")
    lam, nu = mode.lam, mode.nu
    mc2 = constants.mc2
    ck = constants.c * mode.k
    tau2 = 1.0 + lam**2 - nu**2
    c2 = (1.0 + lam**2) / tau2
    c1 = 2.0 * nu * (ck + lam * mc2) / tau2
    c0 = ((ck**2 + mc2**2) * nu**2 - (mc2 - ck * lam) ** 2) / tau2
    return c2, c1, c0


def reduce_2plus1(mode: Mode2p1, constants: Constants,
                  shape: Shape) -> tuple[FactorizationData, FirstOrderSystem]:
    """Reduce the 2+1-D problem to ladder data plus an effective 1+1-D system.

    The shape stores the magnetic profile ay(x) = lambda1 * g(x); the scalar
    and electric channels scale by lambda2/lambda1 and lambda3/lambda1.  The
    superpotential is W(x, E) = -tau*ay(x) - offset(E) and the ladder operators
    carry sigma = s (for s = -1 the annihilation/creation roles swap).
    """
    if mode.lambda1 == 0.0:
        raise UnsupportedBranchError("the reduction requires lambda1 != 0")
    if mode.delta2 <= 0.0:
        raise UnstableRegimeError(
            f"2+1-D problem is not factorizable: delta2 = {mode.delta2:.6g} <= 0"
        )
    tau = mode.tau
    lam, nu = mode.lam, mode.nu
    ay = shape.profile()
    mc2 = constants.mc2
    ck = constants.c * mode.k
    s = float(mode.s)

    def offset(E):
        return ladder_coefficients_2p1(mode, constants, E)[2]

    def w1(E):
        return ladder_coefficients_2p1(mode, constants, E)[0]

    def w2(E):
        return ladder_coefficients_2p1(mode, constants, E)[1]

    def w_xy(x, E):
        return -tau * ay.f(x) - offset(E)

    def w_profile(E):
        off = offset(E)
        anti = None
        if ay.antiderivative is not None:
            anti = lambda x: (-tau * ay.antiderivative(x)  # noqa: E731
                              - off * np.asarray(x, dtype=float))
        return Profile(f=lambda x: -tau * ay.f(x) - off,
                       df=lambda x: -tau * ay.df(x),
                       antiderivative=anti)

    fd = FactorizationData(tau=tau, offset=offset, w1=w1, w2=w2,
                           superpotential=w_xy, w_profile=w_profile, sigma=s)

    def d1(x):
        return nu * ay.f(x) + mc2 + lam * ay.f(x)

    def d2(x):
        return nu * ay.f(x) - mc2 - lam * ay.f(x)

    def coupling(x):
        return ck + ay.f(x)

    system = FirstOrderSystem(
        d1=Profile(d1, lambda x: (nu + lam) * ay.df(x)),
        d2=Profile(d2, lambda x: (nu - lam) * ay.df(x)),
        m_coupling=Profile(coupling, ay.df),
        sigma=s,
        domain=getattr(shape, "domain", (-np.inf, np.inf)),
    )
    return fd, system
