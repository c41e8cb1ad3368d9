import numpy as np
import pytest

from diracsusy import (
    Constants,
    Couplings,
    LinearShape,
    InverseLinearShape,
    Mode2p1,
    NotDiagonalizableError,
    Profile,
    UnstableRegimeError,
    factorize,
)
from diracsusy.factorize import (
    apply_ladder,
    coupling_matrix,
    kg_eigenvalue,
    kg_eigenvalue_2p1,
    kg_eigenvalue_2p1_expanded,
    kg_eigenvalue_expanded,
    ladder_coefficients,
    ladder_coefficients_2p1,
    mixing_matrix,
    mixing_matrix_2p1,
    partner_potentials,
    reduce_2plus1,
    superpotential,
)

CST = Constants()


def random_stable_couplings(rng, require_zeta1=True):
    while True:
        z1, z2, z3 = rng.uniform(-3, 3, size=3)
        if require_zeta1 and abs(z1) < 1e-3:
            continue
        c = Couplings(zeta1=z1, zeta2=z2, zeta3=z3,
                      eps=rng.uniform(-1, 1))
        if c.delta > 1e-6:
            return c


class TestMixingMatrix:
    def test_pure_scalar_is_diagonal_already(self):
        mm = mixing_matrix(Couplings(zeta1=1.0))
        conj = mm.d @ coupling_matrix(Couplings(zeta1=1.0)) @ mm.d_inv
        assert np.allclose(conj, np.diag([-1.0, 1.0]), atol=1e-14)

    def test_scalar_electric_example(self):
        c = Couplings(zeta1=1.0, zeta3=0.6)
        mm = mixing_matrix(c)
        conj = mm.d @ coupling_matrix(c) @ mm.d_inv
        # independent 2x2 eigendecomposition oracle
        ref = np.sort(np.linalg.eigvals(coupling_matrix(c)).real)
        assert conj[0, 0] == pytest.approx(ref[0], abs=1e-12)
        assert conj[1, 1] == pytest.approx(ref[1], abs=1e-12)
        assert conj[0, 0] == pytest.approx(-0.8, abs=1e-12)
        assert abs(conj[0, 1]) < 1e-12 and abs(conj[1, 0]) < 1e-12

    def test_pseudoscalar_fixed_matrix(self):
        mm = mixing_matrix(Couplings(zeta2=1.0))
        assert np.array_equal(mm.d, np.array([[1.0, 1.0], [-1.0, 1.0]]))

    def test_identity_product(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            c = random_stable_couplings(rng)
            mm = mixing_matrix(c)
            assert np.allclose(mm.d @ mm.d_inv, np.eye(2), atol=1e-12)

    def test_defective_matrix_rejected(self):
        with pytest.raises(NotDiagonalizableError):
            mixing_matrix(Couplings(zeta1=1.0, zeta3=np.sqrt(2.0), zeta2=1.0))

    def test_diagonalization_property_10k(self):
        rng = np.random.default_rng(42)
        for _ in range(10_000):
            c = random_stable_couplings(rng)
            mm = mixing_matrix(c)
            m = coupling_matrix(c)
            conj = mm.d @ m @ mm.d_inv
            scale = np.max(np.abs(m))
            assert abs(conj[0, 1]) < 1e-12 * scale
            assert abs(conj[1, 0]) < 1e-12 * scale
            assert conj[0, 0] <= conj[1, 1]

    def test_negative_zeta1_keeps_ordering(self):
        c = Couplings(zeta1=-1.0, zeta3=0.6)
        mm = mixing_matrix(c)
        conj = mm.d @ coupling_matrix(c) @ mm.d_inv
        assert conj[0, 0] < 0 < conj[1, 1]


class TestLadderCoefficients:
    def test_trivial_collapse(self):
        w1, w2, off = ladder_coefficients(Couplings(zeta1=1.0), CST, 5.0)
        assert w1 == pytest.approx(5.0)
        assert w2 == pytest.approx(5.0)
        assert off == pytest.approx(1.0)

    def test_pseudoscalar_branch(self):
        w1, w2, off = ladder_coefficients(Couplings(zeta2=1.0), CST, 2.0)
        assert (w1, w2, off) == (3.0, 1.0, 0.0)

    def test_hand_evaluated_mixed_scalar_pseudoscalar(self):
        w1, w2, _ = ladder_coefficients(Couplings(zeta1=1.0, zeta2=1.0), CST, 2.0)
        assert w1 == pytest.approx(2.0 + np.sqrt(2.0) / 2.0, abs=1e-12)
        assert w2 == pytest.approx(2.0 - np.sqrt(2.0) / 2.0, abs=1e-12)

    def test_unstable_regime_raises(self):
        with pytest.raises(UnstableRegimeError):
            ladder_coefficients(Couplings(zeta1=1.0, zeta3=2.0), CST, 1.0)


class TestKgEigenvalue:
    def test_trivial_square(self):
        for e in (-2.3, 0.0, 0.7, 4.1):
            assert kg_eigenvalue(Couplings(zeta1=1.0), CST, e) == pytest.approx(e * e)

    def test_derived_product_value(self):
        assert kg_eigenvalue(Couplings(zeta1=1.0, zeta2=1.0), CST, 2.0) == \
            pytest.approx(3.5, abs=1e-13)

    def test_pseudoscalar_square_minus_mass(self):
        for e in (-1.5, 0.3, 2.0):
            assert kg_eigenvalue(Couplings(zeta2=1.0), CST, e) == \
                pytest.approx(e * e - 1.0, abs=1e-13)

    def test_product_identity_10k(self):
        rng = np.random.default_rng(313)
        for _ in range(10_000):
            c = random_stable_couplings(rng)
            e = rng.uniform(-5, 5)
            w = kg_eigenvalue(c, CST, e)
            w_direct = kg_eigenvalue_expanded(c, CST, e)
            assert abs(w - w_direct) < 1e-12 * (1.0 + abs(w))

    def test_quadratic_coefficients_match(self):
        rng = np.random.default_rng(99)
        for _ in range(200):
            c = random_stable_couplings(rng)
            c2, c1, c0 = factorize.kg_quadratic_coefficients(c, CST)
            e = rng.uniform(-4, 4)
            assert c2 * e**2 + c1 * e + c0 == pytest.approx(
                kg_eigenvalue(c, CST, e), abs=1e-11, rel=1e-11)


class TestSuperpotential:
    def test_linear_scalar(self):
        w = superpotential(Couplings(zeta1=1.0), CST, LinearShape(1.0), 0.0)
        x = np.linspace(-2, 2, 9)
        assert np.allclose(w.f(x), x + 1.0)
        assert np.allclose(w.df(x), 1.0)

    def test_inverse_linear(self):
        w = superpotential(Couplings(zeta1=1.0), CST, InverseLinearShape(1.0), 0.0)
        x = np.linspace(0.3, 4.0, 11)
        assert np.allclose(w.f(x), -1.0 / x + 1.0)

    def test_pseudoscalar_is_p_itself(self):
        xs = np.linspace(-2.0, 2.0, 1001)
        shape = __import__("diracsusy").TabulatedShape(xs, xs**2, 2 * xs)
        w = superpotential(Couplings(zeta2=1.0), CST, shape, 3.3)
        assert np.allclose(w.f(xs[100:-100]), xs[100:-100] ** 2, atol=1e-10)

    def test_pseudoscalar_limit_of_general_branch(self):
        # same physical P(x) = 2x + 0.3, scalar coupling -> 0+
        x = np.linspace(-3, 3, 101)
        w_ps = superpotential(Couplings(zeta2=1.0, eps=0.3), CST,
                              LinearShape(2.0), 1.7)
        z1 = 1e-9
        w_gen = superpotential(Couplings(zeta1=z1, zeta2=1.0, eps=0.3), CST,
                               LinearShape(2.0 * z1), 1.7)
        assert np.max(np.abs(w_gen.f(x) - w_ps.f(x))) < 1e-8


class TestPartnerPotentials:
    def test_linear_shifted_oscillator(self):
        w = Profile(lambda x: np.asarray(x, float) + 1.0,
                    lambda x: np.ones_like(np.asarray(x, float)))
        pp = partner_potentials(w, CST)
        x = np.linspace(-3, 3, 13)
        assert np.allclose(pp.v_minus(x), x**2 + 2 * x + 1 - 1)
        assert np.allclose(pp.v_plus(x), x**2 + 2 * x + 1 + 1)

    def test_inverse_linear_forms(self):
        w = Profile(lambda x: -1.0 / np.asarray(x, float) + 1.0,
                    lambda x: 1.0 / np.asarray(x, float) ** 2)
        pp = partner_potentials(w, CST)
        x = np.linspace(0.2, 5.0, 17)
        assert np.allclose(pp.v_minus(x), -2.0 / x + 1.0)
        assert np.allclose(pp.v_plus(x), 2.0 / x**2 - 2.0 / x + 1.0)

    def test_constant_superpotential(self):
        w = Profile(lambda x: 7.0 + 0.0 * np.asarray(x, float),
                    lambda x: 0.0 * np.asarray(x, float))
        pp = partner_potentials(w, CST)
        assert pp.v_minus(0.3) == 49.0 and pp.v_plus(-2.0) == 49.0

    def test_difference_is_twice_derivative(self):
        rng = np.random.default_rng(17)
        x = np.linspace(-4, 4, 101)
        for _ in range(50):
            a, b = rng.uniform(-2, 2, size=2)
            w = Profile(lambda t, a=a, b=b: a * np.asarray(t, float) ** 3 + b,
                        lambda t, a=a: 3 * a * np.asarray(t, float) ** 2)
            pp = partner_potentials(w, CST)
            diff = pp.v_plus(x) - pp.v_minus(x)
            assert np.max(np.abs(diff - 2.0 * CST.chbar * w.df(x))) < 1e-12 * (
                1.0 + np.max(np.abs(diff)))


class TestMutualAdjointness:
    def test_compact_support_inner_products(self):
        xg = np.linspace(-10, 10, 2001)
        h = xg[1] - xg[0]

        def bump(c, s):
            out = np.exp(-((xg - c) / s) ** 2)
            out[np.abs(xg - c) > 4 * s] = 0.0
            return out

        phi, chi = bump(-1.0, 1.2), bump(0.7, 0.9)
        w = superpotential(Couplings(zeta1=1.0, zeta3=0.5), CST,
                           LinearShape(1.0), 0.3)
        lhs = np.sum(apply_ladder(w, CST, phi, xg) * chi) * h
        rhs = np.sum(phi * apply_ladder(w, CST, chi, xg, adjoint=True)) * h
        assert abs(lhs - rhs) < h * h


class TestReduce2p1:
    def test_landau_superpotential(self):
        # eA_y = -B x with B = 1, massless, k = 0: W(x) = x, offset 0
        mode = Mode2p1(k=0.0, s=+1, lambda1=-1.0, lambda2=0.0, lambda3=0.0)
        cst = Constants(m=1e-300)
        fd, system = reduce_2plus1(mode, cst, LinearShape(-1.0))
        x = np.linspace(-2, 2, 9)
        assert np.allclose(fd.superpotential(x, 0.0), x, atol=1e-299)
        assert fd.sigma == 1.0

    def test_spin_flip_swaps_ladder_roles(self):
        mode = Mode2p1(k=0.0, s=-1, lambda1=-1.0, lambda2=0.0, lambda3=0.0)
        fd, system = reduce_2plus1(mode, CST, LinearShape(-1.0))
        assert fd.sigma == -1.0
        assert system.sigma == -1.0

    def test_electric_dominated_unstable(self):
        mode = Mode2p1(k=0.0, s=+1, lambda1=1.0, lambda2=0.0, lambda3=2.0)
        with pytest.raises(UnstableRegimeError):
            reduce_2plus1(mode, CST, LinearShape(1.0))

    def test_product_identity_2p1(self):
        rng = np.random.default_rng(23)
        count = 0
        while count < 2000:
            l1, l2, l3 = rng.uniform(-2, 2, size=3)
            if abs(l1) < 1e-3:
                continue
            mode = Mode2p1(k=rng.uniform(-1, 1), s=1, lambda1=l1, lambda2=l2,
                           lambda3=l3)
            if mode.delta2 <= 1e-6:
                continue
            e = rng.uniform(-4, 4)
            w = kg_eigenvalue_2p1(mode, CST, e)
            w_direct = kg_eigenvalue_2p1_expanded(mode, CST, e)
            assert abs(w - w_direct) < 1e-11 * (1.0 + abs(w))
            count += 1

    def test_mixing_2p1_diagonalizes(self):
        mode = Mode2p1(k=0.3, s=1, lambda1=-1.0, lambda2=0.4, lambda3=-0.3)
        mm = mixing_matrix_2p1(mode)
        m = np.array([[1.0, mode.nu - mode.lam],
                      [-mode.nu - mode.lam, -1.0]])
        conj = mm.d @ m @ mm.d_inv
        assert abs(conj[0, 1]) < 1e-12 and abs(conj[1, 0]) < 1e-12
        assert conj[0, 0] == pytest.approx(mode.tau, abs=1e-12)
        assert conj[1, 1] == pytest.approx(-mode.tau, abs=1e-12)
