"""Shared domain types: units, couplings, potential shapes, levels, spinors.

All quantities are real; natural units (m = c = hbar = 1) are the default.
Positions and profiles are numpy-vectorized: every callable here accepts a
float or an ndarray and returns the same kind.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import CubicSpline


# ---------------------------------------------------------------------------
# Errors
# ---------------------------------------------------------------------------

class DiracSusyError(Exception):
    """Base class for all library errors."""


class AllZeroCouplingsError(DiracSusyError):
    """No interaction at all: every coupling and the pseudoscalar offset are zero."""


class OutOfDomainError(DiracSusyError):
    """Position outside the shape's domain (e.g. x <= 0 on the half line)."""


class UnstableRegimeError(DiracSusyError):
    """The coupling discriminant is non-positive: the ladder operators are not
    mutually adjoint and no bound-state machinery applies."""


class NotDiagonalizableError(DiracSusyError):
    """Coupling matrix is defective (discriminant exactly zero, couplings nonzero)."""


class UnsupportedBranchError(DiracSusyError):
    """The requested operation is undefined on this coupling branch."""


class BrokenSusyError(DiracSusyError):
    """Neither candidate ground state is normalizable."""


class AmbiguousCaseError(DiracSusyError):
    """Both candidate ground states appear normalizable."""


class NotShapeInvariantError(DiracSusyError):
    """No parameter map with a constant positive remainder within tolerance."""


class NoRootError(DiracSusyError):
    """No level energy found in the search window."""


class ZeroDivisorError(DiracSusyError):
    """A ladder coefficient vanishes where a nonzero partner component is needed."""


class SolverFailureError(DiracSusyError):
    """The underlying numerical eigensolver did not converge."""


class NoSuchLevelError(DiracSusyError):
    """The requested (n, branch) level does not exist."""


class NonpositiveStepError(DiracSusyError):
    """Step height must be positive."""


class ConfigError(DiracSusyError):
    """Configuration text is invalid; carries a 1-based line number when known."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


# ---------------------------------------------------------------------------
# Constants and couplings
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Constants:
    """Rest mass, speed of light and reduced Planck constant (defaults: natural units)."""

    m: float = 1.0
    c: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        if not (self.m > 0 and self.c > 0 and self.hbar > 0):
            raise DiracSusyError("m, c and hbar must all be strictly positive")

    @property
    def mc2(self) -> float:
        return self.m * self.c**2

    @property
    def chbar(self) -> float:
        return self.c * self.hbar


class Branch(Enum):
    GENERAL = "general"
    PURE_PSEUDOSCALAR = "pure_pseudoscalar"
    DEGENERATE_ELECTRIC = "degenerate_electric"


@dataclass(frozen=True)
class Couplings:
    """Interaction constants for the shared-shape potentials.

    The three channels share one profile: V = zeta1*f + m_shift (scalar),
    P = zeta2*f + eps (pseudoscalar), eA_t = zeta3*f + e_shift (electric).
    The electron charge is absorbed into zeta3/e_shift.  Only the ratios
    zeta2/zeta1 and zeta3/zeta1 enter the factorization; the stored profile
    (see Shape) is the physical scalar part zeta1*f.
    """

    zeta1: float = 0.0
    zeta2: float = 0.0
    zeta3: float = 0.0
    eps: float = 0.0
    m_shift: float = 0.0
    e_shift: float = 0.0

    @property
    def delta(self) -> float:
        """Discriminant zeta1^2 + zeta2^2 - zeta3^2 of the coupling matrix."""
        return self.zeta1**2 + self.zeta2**2 - self.zeta3**2

    @property
    def zeta(self) -> float:
        if self.zeta1 == 0.0:
            raise UnsupportedBranchError("zeta = zeta2/zeta1 requires zeta1 != 0")
        return self.zeta2 / self.zeta1

    @property
    def ell(self) -> float:
        if self.zeta1 == 0.0:
            raise UnsupportedBranchError("ell = zeta3/zeta1 requires zeta1 != 0")
        return self.zeta3 / self.zeta1

    @property
    def tau(self) -> float:
        """sqrt(1 + zeta^2 - ell^2); real only in the stable regime."""
        if self.zeta1 == 0.0:
            raise UnsupportedBranchError("tau requires zeta1 != 0")
        if self.delta <= 0.0:
            raise UnstableRegimeError(
                f"tau is imaginary: delta = {self.delta:.6g} <= 0"
            )
        return np.sqrt(self.delta) / abs(self.zeta1)


@dataclass(frozen=True)
class ValidationReport:
    branch: Branch
    delta: float
    tau_is_real: bool
    tau: Optional[float]


def validate(couplings: Couplings) -> ValidationReport:
    """Classify a coupling set and report the discriminant.

    Raises AllZeroCouplingsError for the free particle (all couplings and the
    pseudoscalar offset zero) -- that case is left to the numerical oracle.
    """
    c = couplings
    if c.zeta1 == 0.0 and c.zeta2 == 0.0 and c.zeta3 == 0.0 and c.eps == 0.0:
        raise AllZeroCouplingsError("free particle: no interaction to factorize")
    delta = c.delta
    tau_is_real = delta > 0.0
    if c.zeta1 != 0.0:
        branch = Branch.GENERAL
        tau = c.tau if tau_is_real else None
    elif c.zeta3 != 0.0:
        branch = Branch.DEGENERATE_ELECTRIC
        tau = None
    else:
        # zeta1 = zeta3 = 0: pure pseudoscalar, including the constant-offset
        # case zeta2 = 0, eps != 0 (the ladder machinery is insensitive).
        branch = Branch.PURE_PSEUDOSCALAR
        tau = None
    return ValidationReport(branch=branch, delta=delta, tau_is_real=tau_is_real, tau=tau)


# ---------------------------------------------------------------------------
# Potential shapes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Profile:
    """A scalar function of position together with its derivative.

    An analytic antiderivative, when available, lets zero-mode exponentials be
    built from exact integrals (important near singular endpoints where
    quadrature of 1/x-type tails degrades).
    """

    f: Callable[[np.ndarray], np.ndarray]
    df: Callable[[np.ndarray], np.ndarray]
    antiderivative: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __call__(self, x):
        return self.f(x)


def constant_profile(value: float) -> Profile:
    return Profile(f=lambda x: value + 0.0 * np.asarray(x, dtype=float),
                   df=lambda x: 0.0 * np.asarray(x, dtype=float),
                   antiderivative=lambda x: value * np.asarray(x, dtype=float))


@dataclass(frozen=True)
class LinearShape:
    """Stored profile a*x on the full real line."""

    a: float
    domain: tuple[float, float] = (-np.inf, np.inf)

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        return self.a * x, self.a * np.ones_like(x)

    def profile(self) -> Profile:
        return Profile(
            f=lambda x: self.a * np.asarray(x, dtype=float),
            df=lambda x: self.a * np.ones_like(np.asarray(x, dtype=float)),
            antiderivative=lambda x: 0.5 * self.a * np.asarray(x, dtype=float) ** 2,
        )


@dataclass(frozen=True)
class InverseLinearShape:
    """Stored profile -q/x on the positive half line (q > 0)."""

    q: float
    domain: tuple[float, float] = (0.0, np.inf)

    def __post_init__(self):
        if not self.q > 0:
            raise DiracSusyError(f"inverse-linear strength must be positive, got {self.q}")

    def _check(self, x):
        if np.any(np.asarray(x) <= 0.0):
            raise OutOfDomainError("inverse-linear shape is defined for x > 0 only")

    def evaluate(self, x):
        self._check(x)
        x = np.asarray(x, dtype=float)
        return -self.q / x, self.q / x**2

    def profile(self) -> Profile:
        def f(x):
            self._check(x)
            return -self.q / np.asarray(x, dtype=float)

        def df(x):
            self._check(x)
            return self.q / np.asarray(x, dtype=float) ** 2

        def anti(x):
            self._check(x)
            return -self.q * np.log(np.asarray(x, dtype=float))

        return Profile(f=f, df=df, antiderivative=anti)


class TabulatedShape:
    """Stored profile sampled on a strictly increasing abscissa table.

    Evaluation uses a cubic spline through the values; the derivative uses a
    spline through the supplied derivative table.  Construction checks that
    the derivative table is consistent with central differences of the value
    table (tolerance 1e-6 relative, with an allowance for the difference
    stencil's own truncation error).
    """

    def __init__(self, xs, fs, dfs):
        xs = np.asarray(xs, dtype=float)
        fs = np.asarray(fs, dtype=float)
        dfs = np.asarray(dfs, dtype=float)
        if xs.ndim != 1 or xs.size < 4 or fs.shape != xs.shape or dfs.shape != xs.shape:
            raise DiracSusyError("tabulated shape needs matching 1-D tables, >= 4 points")
        if np.any(np.diff(xs) <= 0.0):
            raise DiracSusyError("tabulated abscissae must be strictly increasing")
        self.xs, self.fs, self.dfs = xs, fs, dfs
        self.domain = (float(xs[0]), float(xs[-1]))
        self._check_derivative_consistency()
        self._spline_f = CubicSpline(xs, fs)
        self._spline_df = CubicSpline(xs, dfs)

    def _check_derivative_consistency(self):
        xs, fs, dfs = self.xs, self.fs, self.dfs
        fd = (fs[2:] - fs[:-2]) / (xs[2:] - xs[:-2])
        scale = max(1.0, float(np.max(np.abs(dfs))))
        # allowance for the check stencil's own truncation error, estimated
        # from differences of the derivative table: (h^2/6) f''' plus the
        # uneven-spacing term (|h+ - h-|/2) f''
        d3 = np.abs(dfs[2:] - 2.0 * dfs[1:-1] + dfs[:-2]) / 6.0
        f2 = np.abs(dfs[2:] - dfs[:-2]) / (xs[2:] - xs[:-2])
        uneven = 0.5 * np.abs((xs[2:] - xs[1:-1]) - (xs[1:-1] - xs[:-2])) * f2
        err = np.abs(fd - dfs[1:-1]) - (d3 + uneven)
        if float(np.max(err)) > 1e-6 * scale:
            raise DiracSusyError(
                "tabulated derivative inconsistent with values "
                f"(max excess {float(np.max(err)):.3g} > {1e-6 * scale:.3g})"
            )

    def _check(self, x):
        x = np.asarray(x)
        if np.any(x < self.domain[0]) or np.any(x > self.domain[1]):
            raise OutOfDomainError(
                f"position outside tabulated range [{self.domain[0]}, {self.domain[1]}]"
            )

    def evaluate(self, x):
        self._check(x)
        x = np.asarray(x, dtype=float)
        return self._spline_f(x), self._spline_df(x)

    def profile(self) -> Profile:
        anti_spline = self._spline_f.antiderivative()

        def f(x):
            self._check(x)
            return self._spline_f(np.asarray(x, dtype=float))

        def df(x):
            self._check(x)
            return self._spline_df(np.asarray(x, dtype=float))

        def anti(x):
            self._check(x)
            return anti_spline(np.asarray(x, dtype=float))

        return Profile(f=f, df=df, antiderivative=anti)


Shape = LinearShape | InverseLinearShape | TabulatedShape


def eval_shape(shape: Shape, x):
    """Evaluate (f(x), f'(x)) for the stored profile."""
    return shape.evaluate(x)


# ---------------------------------------------------------------------------
# Potentials and the first-order system
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PotentialSet:
    """The three physical potentials: scalar V, pseudoscalar P, electric eA_t."""

    v: Profile
    p: Profile
    at: Profile


def potentials(couplings: Couplings, shape: Shape) -> PotentialSet:
    """Build (V, P, eA_t) from the stored profile and the coupling ratios.

    The shape stores the profile of the dominant channel: the scalar part
    zeta1*f on the general branch, zeta2*f when purely pseudoscalar, zeta3*f
    when purely electric.  The other channels scale by coupling ratios, so
    branches with zeta1 = 0 never divide by zeta1.
    """
    rep = validate(couplings)
    base = shape.profile()
    c = couplings

    def scaled(ratio: float, offset: float) -> Profile:
        if ratio == 0.0 and offset == 0.0:
            return constant_profile(0.0)
        anti = None
        if base.antiderivative is not None:
            anti = lambda x: (ratio * base.antiderivative(x)  # noqa: E731
                              + offset * np.asarray(x, dtype=float))
        return Profile(f=lambda x: ratio * base.f(x) + offset,
                       df=lambda x: ratio * base.df(x),
                       antiderivative=anti)

    if rep.branch is Branch.GENERAL:
        return PotentialSet(
            v=scaled(1.0, c.m_shift),
            p=scaled(c.zeta, c.eps),
            at=scaled(c.ell, c.e_shift),
        )
    if rep.branch is Branch.PURE_PSEUDOSCALAR:
        ratio = 1.0 if c.zeta2 != 0.0 else 0.0
        return PotentialSet(
            v=constant_profile(c.m_shift),
            p=scaled(ratio, c.eps),
            at=constant_profile(c.e_shift),
        )
    # degenerate electric: profile stores zeta3*f
    return PotentialSet(
        v=constant_profile(c.m_shift),
        p=scaled(c.zeta2 / c.zeta3, c.eps),
        at=scaled(1.0, c.e_shift),
    )


@dataclass(frozen=True)
class FirstOrderSystem:
    """Coefficients of the two-component first-order eigenproblem.

    The operator is H = [[d1, sigma*chbar*d/dx + m_coupling],
                         [-sigma*chbar*d/dx + m_coupling, d2]],
    symmetric for any real profiles.  The 1+1-D Dirac system has
    d1 = eA_t - P, d2 = eA_t + P, m_coupling = mc^2 + V, sigma = -1; the
    reduced 2+1-D system has d1 = eA_t + mc^2 + V, d2 = eA_t - mc^2 - V,
    m_coupling = ck + eA_y, sigma = s.
    """

    d1: Profile
    d2: Profile
    m_coupling: Profile
    sigma: float
    domain: tuple[float, float] = (-np.inf, np.inf)


def first_order_system(couplings: Couplings, shape: Shape,
                       constants: Constants) -> FirstOrderSystem:
    """The 1+1-D Dirac equation as a FirstOrderSystem."""
    pots = potentials(couplings, shape)
    mc2 = constants.mc2

    def d1(x):
        return pots.at.f(x) - pots.p.f(x)

    def d2(x):
        return pots.at.f(x) + pots.p.f(x)

    def m_coupling(x):
        return mc2 + pots.v.f(x)

    def d1p(x):
        return pots.at.df(x) - pots.p.df(x)

    def d2p(x):
        return pots.at.df(x) + pots.p.df(x)

    return FirstOrderSystem(
        d1=Profile(d1, d1p),
        d2=Profile(d2, d2p),
        m_coupling=Profile(m_coupling, pots.v.df),
        sigma=-1.0,
        domain=getattr(shape, "domain", (-np.inf, np.inf)),
    )


# ---------------------------------------------------------------------------
# 2+1-D mode data
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Mode2p1:
    """Conserved transverse momentum, spin label and couplings of the reduced
    2+1-D problem, sharing one profile g(x): eA_y = lambda1*g, V = lambda2*g,
    eA_t = lambda3*g."""

    k: float
    s: int
    lambda1: float
    lambda2: float
    lambda3: float

    def __post_init__(self):
        if self.s not in (+1, -1):
            raise DiracSusyError(f"spin label must be +1 or -1, got {self.s}")

    @property
    def lam(self) -> float:
        if self.lambda1 == 0.0:
            raise UnsupportedBranchError("lambda = lambda2/lambda1 requires lambda1 != 0")
        return self.lambda2 / self.lambda1

    @property
    def nu(self) -> float:
        if self.lambda1 == 0.0:
            raise UnsupportedBranchError("nu = lambda3/lambda1 requires lambda1 != 0")
        return self.lambda3 / self.lambda1

    @property
    def delta2(self) -> float:
        return self.lambda1**2 + self.lambda2**2 - self.lambda3**2

    @property
    def tau(self) -> float:
        if self.delta2 <= 0.0:
            raise UnstableRegimeError(
                f"tau is imaginary: delta2 = {self.delta2:.6g} <= 0"
            )
        return np.sqrt(1.0 + self.lam**2 - self.nu**2)


# ---------------------------------------------------------------------------
# Spectral output types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Level:
    """One bound level: quantum number, energy, sign branch and multiplicity.

    multiplicity is 1 exactly for the zero mode of the factorized problem
    (branch tag 'single'); paired +/- levels have multiplicity 2.
    """

    n: int
    E: float
    branch: str  # '+', '-' or 'single'
    multiplicity: int = 2


@dataclass
class Eigenpair:
    """Energy plus the sampled two-component spinor.

    psi1/psi2 live on x1/x2 (which coincide for engine-built states and are
    staggered for oracle eigenvectors); tilde1/tilde2 are the components in
    the diagonalized basis when available.  norm is the value of the original
    basis quadrature integral after normalization.
    """

    E: float
    x1: np.ndarray
    psi1: np.ndarray
    x2: np.ndarray
    psi2: np.ndarray
    tilde1: Optional[np.ndarray] = None
    tilde2: Optional[np.ndarray] = None
    norm: Optional[float] = None
