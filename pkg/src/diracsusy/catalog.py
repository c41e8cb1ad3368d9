"""Closed-form spectra for the solvable shared-shape systems, numerical
shape-invariance spectra for tabulated profiles, and the Dirac-sea stability
predicates."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Union

import numpy as np

from . import factorize, susy
from .model import (
    Branch,
    Constants,
    Couplings,
    DiracSusyError,
    Eigenpair,
    FirstOrderSystem,
    InverseLinearShape,
    Level,
    LinearShape,
    Mode2p1,
    NonpositiveStepError,
    NoSuchLevelError,
    NotShapeInvariantError,
    Profile,
    Shape,
    TabulatedShape,
    UnstableRegimeError,
    UnsupportedBranchError,
    first_order_system,
    validate,
)
from .oracle import Grid
from .susy import EnergyDependentProblem, SiChain, SusyCase


# ---------------------------------------------------------------------------
# Stability predicates
# ---------------------------------------------------------------------------

class Verdict(Enum):
    STABLE = "Stable"
    UNSTABLE = "Unstable"
    INDETERMINATE = "Indeterminate"


NECESSARY_NOT_SUFFICIENT = "NECESSARY_NOT_SUFFICIENT"


@dataclass(frozen=True)
class StabilityVerdict:
    verdict: Verdict
    delta: float
    detail: str = ""


def stability(obj: Union[Couplings, Mode2p1]) -> StabilityVerdict:
    """Dirac-sea stability from the coupling discriminant.

    Stable iff the discriminant is positive (the partner Hamiltonians exist
    and positive/negative energy states do not mix).  A non-positive
    discriminant is tagged Unstable with the caveat that the criterion is
    necessary but not sufficient for the Klein paradox itself.  A coupling
    set with no interaction at all is Indeterminate.
    """
    if isinstance(obj, Mode2p1):
        delta = obj.delta2
        if obj.lambda1 == 0.0 and obj.lambda2 == 0.0 and obj.lambda3 == 0.0:
            return StabilityVerdict(Verdict.INDETERMINATE, delta, "no interaction")
    else:
        delta = obj.delta
        if obj.zeta1 == 0.0 and obj.zeta2 == 0.0 and obj.zeta3 == 0.0 and obj.eps == 0.0:
            return StabilityVerdict(Verdict.INDETERMINATE, delta, "no interaction")
    if delta > 0.0:
        return StabilityVerdict(Verdict.STABLE, delta)
    return StabilityVerdict(Verdict.UNSTABLE, delta, NECESSARY_NOT_SUFFICIENT)


class StepVerdict(Enum):
    PAIR_PRODUCTION = "PairProduction"
    NO_PAIR_PRODUCTION = "NoPairProduction"
    INDETERMINATE_WINDOW = "IndeterminateWindow"


def step_pair_production(l: float, m: float, V: float,
                         constants: Constants = Constants()) -> StepVerdict:
    """Klein threshold for a mixed scalar-electric step of height V.

    Spontaneous pair production is certain for l > 1 + 2mc^2/V; for
    1 < l <= 1 + 2mc^2/V the discriminant criterion cannot decide; l <= 1
    admits no pair production.
    """
    if not V > 0.0:
        raise NonpositiveStepError(f"step height must be positive, got {V}")
    threshold = 1.0 + 2.0 * m * constants.c**2 / V
    if l > threshold:
        return StepVerdict.PAIR_PRODUCTION
    if l > 1.0:
        return StepVerdict.INDETERMINATE_WINDOW
    return StepVerdict.NO_PAIR_PRODUCTION


# ---------------------------------------------------------------------------
# Shared machinery
# ---------------------------------------------------------------------------

def _shift_poly(c2: float, c1: float, c0: float, e0: float) -> tuple[float, float, float]:
    """Coefficients of p(E - e0) as a polynomial in E."""
    return c2, c1 - 2.0 * c2 * e0, c2 * e0**2 - c1 * e0 + c0


def _levels_from_engine(engine: EnergyDependentProblem, n: int) -> list[Level]:
    return susy.solve_level(engine, n)


class _ProblemBase:
    """Common spectrum/eigenfunction plumbing for the solvable problems."""

    constants: Constants
    case: SusyCase

    def engine(self) -> EnergyDependentProblem:
        raise NotImplementedError

    def fd(self) -> factorize.FactorizationData:
        raise NotImplementedError

    def mixing(self) -> factorize.MixingMatrix:
        raise NotImplementedError

    def system(self) -> FirstOrderSystem:
        raise NotImplementedError

    def chain(self, E: float) -> SiChain:
        raise NotImplementedError

    def levels(self, n: int) -> list[Level]:
        return _levels_from_engine(self.engine(), n)

    def levels_up_to(self, n_max: int) -> list[Level]:
        out: list[Level] = []
        for n in range(n_max + 1):
            out.extend(self.levels(n))
        return out

    def n0_discarded_value(self) -> Optional[float]:
        """The second root of w(E) = 0 when the printed closed form would give
        two n = 0 values; None when the roots coincide (the usual case)."""
        eng = self.engine()
        other = eng.w1 if self.case is SusyCase.CASE_I else eng.w2
        scale = 1.0 + abs(eng.mass_scale)
        root = susy._affine_root(other, scale)
        if root is None:
            return None
        kept = self.levels(0)[0].E
        if abs(root - kept) <= 1e-10 * (1.0 + abs(kept)):
            return None
        return root

    def eigenfunction(self, n: int, branch: str = "+",
                      grid: Optional[np.ndarray] = None) -> Eigenpair:
        """Normalized two-component eigenfunction of level (n, branch)."""
        levels = self.levels(n)
        matches = [lv for lv in levels if lv.branch == branch]
        if not matches:
            have = ", ".join(lv.branch for lv in levels)
            raise NoSuchLevelError(
                f"level n={n} has no branch '{branch}' (available: {have})"
            )
        e = matches[0].E
        if grid is None:
            g = self.default_grid(max(n, 1))
            grid = g.sites()
            if grid[0] == 0.0:
                grid = grid[1:]
        chain = self.chain(e)
        eig = susy.excited_state(chain, self.case, n, grid, self.constants)
        eig.E = e
        return susy.assemble_spinor(eig, self.fd(), self.mixing(),
                                    self.constants, self.case)

    def default_grid(self, n_max: int) -> Grid:
        raise NotImplementedError


# ---------------------------------------------------------------------------
# Linear potential (full line)
# ---------------------------------------------------------------------------

class LinearProblem(_ProblemBase):
    """All three channels proportional to x, with superpotential slope `a`.

    The stored scalar profile is (a/tau) x, so the superpotential is
    W(x, E) = a x + (E ell + mc^2 + zeta eps)/tau.  Level spacing uses |a|;
    a < 0 swaps the roles of the partner Hamiltonians (case II).
    """

    def __init__(self, a: float, couplings: Couplings = Couplings(zeta1=1.0),
                 constants: Constants = Constants()):
        rep = validate(couplings)
        if rep.branch is not Branch.GENERAL:
            raise UnsupportedBranchError(
                "LinearProblem needs a scalar coupling (zeta1 != 0); use "
                "PseudoscalarProblem for the pure pseudoscalar branch"
            )
        if rep.delta <= 0.0:
            raise UnstableRegimeError(
                f"no bound spectrum: delta = {rep.delta:.6g} <= 0"
            )
        if a == 0.0:
            raise DiracSusyError("slope must be nonzero")
        self.a = a
        self.couplings = couplings
        self.constants = constants
        self.tau = couplings.tau
        self.shape: Shape = LinearShape(a / self.tau)
        self.case = SusyCase.CASE_I if a > 0 else SusyCase.CASE_II
        self._fd = factorize.factorization_data(couplings, constants, self.shape)

    def fd(self) -> factorize.FactorizationData:
        return self._fd

    def mixing(self) -> factorize.MixingMatrix:
        return factorize.mixing_matrix(self.couplings)

    def system(self) -> FirstOrderSystem:
        return first_order_system(self.couplings, self.shape, self.constants)

    def wn(self, E: float, n: int) -> float:
        return 2.0 * n * self.constants.chbar * abs(self.a)

    def engine(self) -> EnergyDependentProblem:
        cst, cpl = self.constants, self.couplings
        c2, c1, c0 = factorize.kg_quadratic_coefficients(cpl, cst)

        def g_coeffs(n: int):
            a2, a1, a0 = _shift_poly(c2, c1, c0, cpl.e_shift)
            return a2, a1, a0 - self.wn(0.0, n)

        return EnergyDependentProblem(
            kg=lambda E: factorize.kg_eigenvalue(cpl, cst, E),
            wn=self.wn,
            w1=self._fd.w1, w2=self._fd.w2,
            case=self.case,
            mass_scale=cst.mc2 + abs(cpl.m_shift) + abs(cpl.e_shift),
            g_coeffs=g_coeffs,
        )

    def chain(self, E: float) -> SiChain:
        off = self._fd.offset(E)
        a = self.a

        def w_of(param: float) -> Profile:
            return Profile(
                f=lambda x: param * np.asarray(x, dtype=float) + off,
                df=lambda x: param * np.ones_like(np.asarray(x, dtype=float)),
                antiderivative=lambda x: (0.5 * param * np.asarray(x, dtype=float) ** 2
                                          + off * np.asarray(x, dtype=float)))

        return SiChain(w_of=w_of, next_param=lambda p: p, a1=a)

    def default_grid(self, n_max: int) -> Grid:
        ch = self.constants.chbar
        centers = []
        for lv in self.levels_up_to(n_max):
            centers.append(-self._fd.offset(lv.E) / self.a)
        wmax = self.wn(0.0, max(n_max, 1))
        half = np.sqrt(wmax) / abs(self.a) + 10.0 * np.sqrt(ch / abs(self.a))
        return Grid(xmin=min(centers) - half, xmax=max(centers) + half)


def linear_spectrum(p: LinearProblem, n: int) -> list[Level]:
    """Levels of the linear problem: the zero mode once, then +/- pairs with
    |E +/- ...| built from the quadratic spectral condition."""
    return p.levels(n)


# ---------------------------------------------------------------------------
# Inversely linear potential (half line)
# ---------------------------------------------------------------------------

class InverseLinearProblem(_ProblemBase):
    """All channels proportional to -q/x on x > 0 (q > 0).

    The superpotential is W(x, E) = -q tau / x + f(E) with
    f(E) = (E ell + mc^2 + zeta eps)/tau; the shape-invariant ladder runs in
    the scaled coordinate rho = f tau~ x with tau~ = q tau.
    """

    def __init__(self, q: float, couplings: Couplings = Couplings(zeta1=1.0),
                 constants: Constants = Constants()):
        rep = validate(couplings)
        if rep.branch is not Branch.GENERAL:
            raise UnsupportedBranchError(
                "InverseLinearProblem needs a scalar coupling (zeta1 != 0)"
            )
        if rep.delta <= 0.0:
            raise UnstableRegimeError(
                f"no bound spectrum: delta = {rep.delta:.6g} <= 0"
            )
        if not q > 0.0:
            raise DiracSusyError(f"strength q must be positive, got {q}")
        self.q = q
        self.couplings = couplings
        self.constants = constants
        self.tau = couplings.tau
        self.taut = q * self.tau
        self.shape: Shape = InverseLinearShape(q)
        self.case = SusyCase.CASE_I
        self._fd = factorize.factorization_data(couplings, constants, self.shape)

    def fd(self) -> factorize.FactorizationData:
        return self._fd

    def mixing(self) -> factorize.MixingMatrix:
        return factorize.mixing_matrix(self.couplings)

    def system(self) -> FirstOrderSystem:
        return first_order_system(self.couplings, self.shape, self.constants)

    def f_of(self, E: float) -> float:
        return self._fd.offset(E)

    def _sn(self, n: int) -> float:
        ch = self.constants.chbar
        return 1.0 - self.taut**2 / (self.taut + n * ch) ** 2

    def wn(self, E: float, n: int) -> float:
        return self.f_of(E) ** 2 * self._sn(n)

    def engine(self) -> EnergyDependentProblem:
        cst, cpl = self.constants, self.couplings
        c2, c1, c0 = factorize.kg_quadratic_coefficients(cpl, cst)
        tau = self.tau
        ell = cpl.ell
        const = (cst.mc2 + cpl.m_shift + cpl.zeta * cpl.eps) / tau

        def g_coeffs(n: int):
            sn = self._sn(n)
            # f(E)^2 = (ell/tau)^2 Eeff^2 + 2 (ell/tau) const Eeff + const^2
            f2 = (ell / tau) ** 2
            f1 = 2.0 * (ell / tau) * const
            f0 = const**2
            a2, a1, a0 = c2 - sn * f2, c1 - sn * f1, c0 - sn * f0
            return _shift_poly(a2, a1, a0, cpl.e_shift)

        return EnergyDependentProblem(
            kg=lambda E: factorize.kg_eigenvalue(cpl, cst, E),
            wn=self.wn,
            w1=self._fd.w1, w2=self._fd.w2,
            case=self.case,
            mass_scale=cst.mc2 + abs(cpl.m_shift) + abs(cpl.e_shift),
            g_coeffs=g_coeffs,
        )

    def chain(self, E: float) -> SiChain:
        gamma = self.f_of(E) * self.taut
        if gamma <= 0.0:
            raise DiracSusyError(
                "no normalizable ground state: the superpotential offset is "
                f"not positive at E = {E:.6g}"
            )

        def w_of(param: float) -> Profile:
            return Profile(
                f=lambda r: -param / np.asarray(r, dtype=float) + 1.0 / param,
                df=lambda r: param / np.asarray(r, dtype=float) ** 2,
                antiderivative=lambda r: (-param * np.log(np.asarray(r, dtype=float))
                                          + np.asarray(r, dtype=float) / param))

        ch = self.constants.chbar
        return SiChain(w_of=w_of, next_param=lambda p: p + ch, a1=self.taut,
                       coordinate_map=lambda x: gamma * np.asarray(x, dtype=float))

    def default_grid(self, n_max: int) -> Grid:
        ch = self.constants.chbar
        alpha = self.taut + n_max * ch
        fmin = min(self.f_of(lv.E) for lv in self.levels_up_to(n_max))
        if fmin <= 0.0:
            raise DiracSusyError("levels with non-positive offset are unbound")
        rho_max = alpha * (alpha + 30.0 * ch)
        xmax = rho_max / (fmin * self.taut)
        return Grid(xmin=0.0, xmax=xmax)


def inverse_linear_spectrum(p: InverseLinearProblem, n: int) -> list[Level]:
    """Levels of the inverse-linear problem from the quadratic spectral
    condition w(E) = f(E)^2 (1 - tau~^2/(tau~ + n chbar)^2)."""
    return p.levels(n)


# ---------------------------------------------------------------------------
# Crossed constant fields, 2+1 dimensions
# ---------------------------------------------------------------------------

class CrossedFieldProblem(_ProblemBase):
    """Uniform magnetic field (via eB), in-plane electric field (via eE) and a
    linear scalar potential C x, reduced to an effective 1+1-D problem at
    conserved transverse momentum k and spin label s."""

    def __init__(self, B: float, Efield: float = 0.0, C: float = 0.0,
                 k: float = 0.0, s: int = +1,
                 constants: Constants = Constants()):
        if B == 0.0:
            raise UnsupportedBranchError("the reduction requires a magnetic field")
        self.mode = Mode2p1(k=k, s=s, lambda1=-B, lambda2=C, lambda3=-Efield)
        if self.mode.delta2 <= 0.0:
            raise UnstableRegimeError(
                "no bound Landau levels: 1 + lambda^2 <= nu^2 "
                f"(delta2 = {self.mode.delta2:.6g})"
            )
        self.B = B
        self.Efield = Efield
        self.C = C
        self.k = k
        self.s = s
        self.constants = constants
        self.shape: Shape = LinearShape(-B)  # stored magnetic profile eA_y
        self._fd, self._system = factorize.reduce_2plus1(self.mode, constants,
                                                         self.shape)
        self.tau = self.mode.tau
        # W slope is tau*B; s = -1 swaps annihilation and creation
        slope_positive = self.tau * B > 0
        if (slope_positive and s == +1) or (not slope_positive and s == -1):
            self.case = SusyCase.CASE_I
        else:
            self.case = SusyCase.CASE_II

    @property
    def lam(self) -> float:
        return self.mode.lam

    @property
    def nu(self) -> float:
        return self.mode.nu

    def fd(self) -> factorize.FactorizationData:
        return self._fd

    def mixing(self) -> factorize.MixingMatrix:
        return factorize.mixing_matrix_2p1(self.mode)

    def system(self) -> FirstOrderSystem:
        return self._system

    def wn(self, E: float, n: int) -> float:
        return 2.0 * n * self.constants.chbar * self.tau * abs(self.B)

    def engine(self) -> EnergyDependentProblem:
        cst = self.constants
        c2, c1, c0 = factorize.kg_quadratic_coefficients_2p1(self.mode, cst)

        def g_coeffs(n: int):
            return c2, c1, c0 - self.wn(0.0, n)

        return EnergyDependentProblem(
            kg=lambda E: factorize.kg_eigenvalue_2p1(self.mode, cst, E),
            wn=self.wn,
            w1=self._fd.w1, w2=self._fd.w2,
            case=self.case,
            mass_scale=cst.mc2 + cst.c * abs(self.k),
            g_coeffs=g_coeffs,
        )

    def chain(self, E: float) -> SiChain:
        off = self._fd.offset(E)
        slope = self.tau * self.B

        def w_of(param: float) -> Profile:
            return Profile(
                f=lambda x: param * np.asarray(x, dtype=float) - off,
                df=lambda x: param * np.ones_like(np.asarray(x, dtype=float)),
                antiderivative=lambda x: (0.5 * param * np.asarray(x, dtype=float) ** 2
                                          - off * np.asarray(x, dtype=float)))

        return SiChain(w_of=w_of, next_param=lambda p: p, a1=slope,
                       sigma=float(self.s))

    def default_grid(self, n_max: int) -> Grid:
        ch = self.constants.chbar
        slope = self.tau * abs(self.B)
        centers = [self._fd.offset(lv.E) / (self.tau * self.B)
                   for lv in self.levels_up_to(n_max)]
        half = np.sqrt(self.wn(0.0, max(n_max, 1))) / slope + 10.0 * np.sqrt(ch / slope)
        return Grid(xmin=min(centers) - half, xmax=max(centers) + half)


def crossed_field_spectrum(p: CrossedFieldProblem, n: int) -> list[Level]:
    """Relativistic Landau levels in crossed fields, collapsing by
    (1 - nu^2)^(3/4) as the electric field grows."""
    return p.levels(n)


# ---------------------------------------------------------------------------
# Pure pseudoscalar problems
# ---------------------------------------------------------------------------

class PseudoscalarProblem(_ProblemBase):
    """Purely pseudoscalar coupling: the superpotential is P(x) itself and the
    partner eigenvalue relation is E^2 - (mc^2)^2 = w_n, energy independent."""

    def __init__(self, shape: Shape, eps: float = 0.0,
                 constants: Constants = Constants(),
                 m_shift: float = 0.0, e_shift: float = 0.0):
        self.shape = shape
        self.constants = constants
        self.couplings = Couplings(zeta2=1.0, eps=eps, m_shift=m_shift,
                                   e_shift=e_shift)
        self._fd = factorize.factorization_data(self.couplings, constants, shape)
        if isinstance(shape, LinearShape):
            if shape.a == 0.0:
                raise DiracSusyError("pseudoscalar slope must be nonzero")
            self.case = SusyCase.CASE_I if shape.a > 0 else SusyCase.CASE_II
        elif isinstance(shape, InverseLinearShape):
            if not eps > 0.0:
                raise DiracSusyError(
                    "the inverse-linear pseudoscalar problem binds only for eps > 0"
                )
            self.case = SusyCase.CASE_I
        else:
            raise UnsupportedBranchError(
                "use TabulatedProblem for tabulated pseudoscalar shapes"
            )

    def fd(self) -> factorize.FactorizationData:
        return self._fd

    def mixing(self) -> factorize.MixingMatrix:
        return factorize.mixing_matrix(self.couplings)

    def system(self) -> FirstOrderSystem:
        return first_order_system(self.couplings, self.shape, self.constants)

    def wn(self, E: float, n: int) -> float:
        ch = self.constants.chbar
        if isinstance(self.shape, LinearShape):
            return 2.0 * n * ch * abs(self.shape.a)
        taut = self.shape.q
        eps = self.couplings.eps
        return eps**2 * (1.0 - taut**2 / (taut + n * ch) ** 2)

    def engine(self) -> EnergyDependentProblem:
        cst, cpl = self.constants, self.couplings
        c2, c1, c0 = factorize.kg_quadratic_coefficients(cpl, cst)

        def g_coeffs(n: int):
            a2, a1, a0 = _shift_poly(c2, c1, c0, cpl.e_shift)
            return a2, a1, a0 - self.wn(0.0, n)

        return EnergyDependentProblem(
            kg=lambda E: factorize.kg_eigenvalue(cpl, cst, E),
            wn=self.wn,
            w1=self._fd.w1, w2=self._fd.w2,
            case=self.case,
            mass_scale=cst.mc2 + abs(cpl.m_shift) + abs(cpl.e_shift),
            g_coeffs=g_coeffs,
        )

    def chain(self, E: float) -> SiChain:
        eps = self.couplings.eps
        if isinstance(self.shape, LinearShape):
            a = self.shape.a

            def w_of(param: float) -> Profile:
                return Profile(
                    f=lambda x: param * np.asarray(x, dtype=float) + eps,
                    df=lambda x: param * np.ones_like(np.asarray(x, dtype=float)),
                    antiderivative=lambda x: (0.5 * param * np.asarray(x, dtype=float) ** 2
                                              + eps * np.asarray(x, dtype=float)))

            return SiChain(w_of=w_of, next_param=lambda p: p, a1=a)
        gamma = eps * self.shape.q

        def w_of(param: float) -> Profile:
            return Profile(
                f=lambda r: -param / np.asarray(r, dtype=float) + 1.0 / param,
                df=lambda r: param / np.asarray(r, dtype=float) ** 2,
                antiderivative=lambda r: (-param * np.log(np.asarray(r, dtype=float))
                                          + np.asarray(r, dtype=float) / param))

        ch = self.constants.chbar
        return SiChain(w_of=w_of, next_param=lambda p: p + ch, a1=self.shape.q,
                       coordinate_map=lambda x: gamma * np.asarray(x, dtype=float))

    def default_grid(self, n_max: int) -> Grid:
        ch = self.constants.chbar
        eps = self.couplings.eps
        if isinstance(self.shape, LinearShape):
            a = self.shape.a
            center = -eps / a
            half = np.sqrt(self.wn(0.0, max(n_max, 1))) / abs(a) + 10.0 * np.sqrt(ch / abs(a))
            return Grid(xmin=center - half, xmax=center + half)
        alpha = self.shape.q + n_max * ch
        rho_max = alpha * (alpha + 30.0 * ch)
        return Grid(xmin=0.0, xmax=rho_max / (eps * self.shape.q))


# ---------------------------------------------------------------------------
# Tabulated shapes: numerical shape-invariance engine
# ---------------------------------------------------------------------------

class TabulatedProblem(_ProblemBase):
    """Spectra for a tabulated profile via the numerical shape-invariance scan.

    The one-parameter partner family is indexed by the superpotential offset;
    the reparametrization map and remainders are found by scanning, rung by
    rung, up to n_max.  Only energy-independent remainders are supported: for
    an electric admixture the scan is repeated at a second energy and any
    drift in the remainders raises NotShapeInvariantError.
    """

    def __init__(self, shape: TabulatedShape, couplings: Couplings,
                 constants: Constants = Constants(), n_max: int = 4):
        rep = validate(couplings)
        if rep.branch is Branch.DEGENERATE_ELECTRIC:
            raise UnsupportedBranchError(
                "no factorization for a purely electric coupling"
            )
        if rep.branch is Branch.GENERAL and rep.delta <= 0.0:
            raise UnstableRegimeError(f"delta = {rep.delta:.6g} <= 0")
        self.shape = shape
        self.couplings = couplings
        self.constants = constants
        self.n_max = n_max
        self._fd = factorize.factorization_data(couplings, constants, shape)
        lo, hi = shape.domain
        span = hi - lo
        self._probe = np.linspace(lo + 0.05 * span, hi - 0.05 * span, 301)
        self._grid_x = np.linspace(lo + 1e-9 * span, hi - 1e-9 * span, 2001)
        e_ref = 0.0
        self._offsets, self._remainders = self._scan_tower(e_ref)
        ell = couplings.ell if rep.branch is Branch.GENERAL else 0.0
        if ell != 0.0:
            e_alt = 0.37 * (constants.mc2 + 1.0)
            _, alt = self._scan_tower(e_alt)
            drift = max(abs(a - b) for a, b in zip(self._remainders, alt))
            if drift > 1e-8 * (1.0 + max(abs(r) for r in self._remainders)):
                raise NotShapeInvariantError(
                    "the shape-invariance remainder depends on energy "
                    f"(drift {drift:.3g}); only energy-independent remainders "
                    "are supported"
                )
        w0 = self._fd.w_profile(e_ref)
        self.case = susy.detect_case(w0, self._grid_x, constants)

    def _w_base(self) -> Profile:
        """Zero-offset part of the superpotential (energy independent)."""
        w0 = self._fd.w_profile(0.0)
        off0 = self._fd.offset(0.0)
        anti = None
        if w0.antiderivative is not None:
            anti = lambda x: (w0.antiderivative(x)  # noqa: E731
                              - off0 * np.asarray(x, dtype=float))
        return Profile(f=lambda x: w0.f(x) - off0, df=w0.df, antiderivative=anti)

    def _family(self, offset: float):
        base = self._w_base()
        anti = None
        if base.antiderivative is not None:
            anti = lambda x: (base.antiderivative(x)  # noqa: E731
                              + offset * np.asarray(x, dtype=float))
        prof = Profile(f=lambda x: base.f(x) + offset, df=base.df,
                       antiderivative=anti)
        return factorize.partner_potentials(prof, self.constants)

    def _scan_tower(self, E: float) -> tuple[list[float], list[float]]:
        offsets = [self._fd.offset(E)]
        remainders = []
        for _ in range(self.n_max):
            data = susy.verify_shape_invariance(self._family, offsets[-1],
                                                self._probe)
            offsets.append(data.a2)
            remainders.append(data.remainder)
        return offsets, remainders

    def fd(self) -> factorize.FactorizationData:
        return self._fd

    def mixing(self) -> factorize.MixingMatrix:
        return factorize.mixing_matrix(self.couplings)

    def system(self) -> FirstOrderSystem:
        return first_order_system(self.couplings, self.shape, self.constants)

    def wn(self, E: float, n: int) -> float:
        if n > self.n_max:
            raise NoSuchLevelError(f"scan covered n <= {self.n_max}")
        return susy.si_spectrum(self._remainders, n)

    def engine(self) -> EnergyDependentProblem:
        cst, cpl = self.constants, self.couplings
        c2, c1, c0 = factorize.kg_quadratic_coefficients(cpl, cst)

        def g_coeffs(n: int):
            a2, a1, a0 = _shift_poly(c2, c1, c0, cpl.e_shift)
            return a2, a1, a0 - self.wn(0.0, n)

        return EnergyDependentProblem(
            kg=lambda E: factorize.kg_eigenvalue(cpl, cst, E),
            wn=self.wn,
            w1=self._fd.w1, w2=self._fd.w2,
            case=self.case,
            mass_scale=cst.mc2 + abs(cpl.m_shift) + abs(cpl.e_shift),
            g_coeffs=g_coeffs,
        )

    def chain(self, E: float) -> SiChain:
        base = self._w_base()

        def w_of(param: float) -> Profile:
            anti = None
            if base.antiderivative is not None:
                anti = lambda x: (base.antiderivative(x)  # noqa: E731
                                  + param * np.asarray(x, dtype=float))
            return Profile(f=lambda x: base.f(x) + param, df=base.df,
                           antiderivative=anti)

        def next_param(p: float) -> float:
            return susy.verify_shape_invariance(self._family, p, self._probe).a2

        return SiChain(w_of=w_of, next_param=next_param,
                       a1=self._fd.offset(E))

    def default_grid(self, n_max: int) -> Grid:
        lo, hi = self.shape.domain
        eps = 1e-9 * (hi - lo)
        return Grid(xmin=lo + eps, xmax=hi - eps, n_points=2001)


# ---------------------------------------------------------------------------
# Problem dispatch
# ---------------------------------------------------------------------------

def build_problem(couplings: Couplings, shape: Shape,
                  constants: Constants = Constants(),
                  mode: Optional[dict] = None,
                  n_max: int = 5) -> _ProblemBase:
    """Pick the solvable problem type for a coupling set and shape.

    mode, when given, holds the 2+1-D parameters {B, Efield, C, k, s} and the
    shape must be linear (the crossed-field configuration).
    """
    if mode is not None:
        if not isinstance(shape, LinearShape):
            raise UnsupportedBranchError(
                "the 2+1-D reduction is implemented for linear profiles only"
            )
        return CrossedFieldProblem(B=mode["B"], Efield=mode.get("Efield", 0.0),
                                   C=mode.get("C", 0.0), k=mode.get("k", 0.0),
                                   s=mode.get("s", +1), constants=constants)
    rep = validate(couplings)
    if rep.branch is Branch.DEGENERATE_ELECTRIC:
        raise UnsupportedBranchError(
            "bound-state machinery is unavailable for a purely electric "
            "coupling (no factorization)"
        )
    if rep.branch is Branch.PURE_PSEUDOSCALAR:
        if isinstance(shape, TabulatedShape):
            return TabulatedProblem(shape, couplings, constants, n_max=n_max)
        return PseudoscalarProblem(shape, eps=couplings.eps, constants=constants,
                                   m_shift=couplings.m_shift,
                                   e_shift=couplings.e_shift)
    if isinstance(shape, LinearShape):
        # shape stores the physical scalar slope; the worked problem is
        # parameterized by the superpotential slope tau * that
        return LinearProblem(a=couplings.tau * shape.a, couplings=couplings,
                             constants=constants)
    if isinstance(shape, InverseLinearShape):
        return InverseLinearProblem(q=shape.q, couplings=couplings,
                                    constants=constants)
    return TabulatedProblem(shape, couplings, constants, n_max=n_max)
