import numpy as np
import pytest

from diracsusy import (
    Constants,
    Couplings,
    FirstOrderSystem,
    LinearShape,
    OutOfDomainError,
    Profile,
    catalog,
    first_order_system,
    oracle,
)

from conftest import nearest

CST = Constants()


def _const(v):
    return Profile(lambda x: v + 0.0 * np.asarray(x, float),
                   lambda x: 0.0 * np.asarray(x, float))


def free_particle(mass=1.0):
    return FirstOrderSystem(d1=_const(0.0), d2=_const(0.0),
                            m_coupling=_const(mass), sigma=-1.0)


def electric_linear(k=1.0):
    return first_order_system(Couplings(zeta3=k), LinearShape(1.0), CST)


class TestBuildHamiltonian:
    def test_structure_symmetric_tridiagonal(self):
        g = oracle.Grid(-1.0, 1.0, 16)
        ham = oracle.build_hamiltonian(free_particle(), CST, g)
        assert ham.dim == 2 * 16 - 1
        m = ham.matrix()
        assert np.max(np.abs(m - m.T)) == 0.0
        # tridiagonal in the interleaved ordering: bandwidth 1
        assert np.max(np.abs(np.triu(m, 2))) == 0.0

    def test_hermiticity_random_potentials(self):
        rng = np.random.default_rng(4)
        xs = np.linspace(-3.0, 3.0, 501)
        for _ in range(5):
            coeffs = rng.uniform(-1, 1, size=3)
            sys = first_order_system(
                Couplings(zeta1=coeffs[0] + 1.5, zeta2=coeffs[1],
                          zeta3=coeffs[2], eps=0.1),
                LinearShape(1.0), CST)
            ham = oracle.build_hamiltonian(sys, CST, oracle.Grid(-3, 3, 101))
            m = ham.matrix()
            assert np.max(np.abs(m - m.T)) < 1e-12

    def test_half_line_excludes_origin(self, inverse_scalar):
        g = oracle.Grid(0.0, 30.0, 301)
        ham = oracle.build_hamiltonian(inverse_scalar.system(),
                                       CST, g)
        assert ham.dim == 2 * 301 - 2 - 2
        assert np.min(ham.pos) > 0.0

    def test_out_of_domain_box(self, inverse_scalar):
        with pytest.raises(OutOfDomainError):
            oracle.build_hamiltonian(inverse_scalar.system(), CST,
                                     oracle.Grid(-1.0, 10.0, 101))

    def test_free_particle_box_dispersion(self):
        g = oracle.Grid(-20.0, 20.0, 4000)
        ham = oracle.build_hamiltonian(free_particle(), CST, g,
                                       oracle.BOX_DIRICHLET)
        vals = oracle.eigenvalues(ham, (0.9, 1.2))
        for j in range(1, 7):
            k = j * np.pi / 40.0
            ref = np.sqrt(1.0 + k * k)
            assert abs(vals[j - 1] - ref) / ref < 1e-3

    def test_no_fermion_doubling(self):
        # eigenvalue count in [-L, L] equals the staggered-dispersion count up
        # to half the lattice cutoff; a doubled scheme would give ~2x
        g = oracle.Grid(-20.0, 20.0, 801)
        h = g.h
        ham = oracle.build_hamiltonian(free_particle(), CST, g)
        lam = 1.0 / h
        count = len(oracle.eigenvalues(ham, (-lam, lam)))
        l_eff = 40.0 + h

        def e_lat(k):
            return np.sqrt(np.cos(k * h / 2) ** 2
                           + (2 / h) ** 2 * np.sin(k * h / 2) ** 2)

        ks = np.arange(1, 4000) * np.pi / l_eff
        ks = ks[ks <= np.pi / h]
        predicted = 1 + 2 * int(np.sum(e_lat(ks) <= lam))
        assert abs(count - predicted) <= 2
        # small window agrees with the continuum count exactly
        count_small = len(oracle.eigenvalues(ham, (-3.0, 3.0)))
        cont = 1 + 2 * int(np.sum(
            np.sqrt(1 + (np.arange(1, 200) * np.pi / l_eff) ** 2) <= 3.0))
        assert count_small == cont


class TestEigenSolve:
    def test_symmetric_spectrum_pure_scalar(self, linear_scalar_oracle):
        vals, _ = linear_scalar_oracle
        for v in vals:
            assert np.min(np.abs(vals + v)) < 1e-10

    def test_exactly_one_zero_mode(self, linear_scalar_oracle):
        vals, _ = linear_scalar_oracle
        assert int(np.sum(np.abs(vals) < 1e-4)) == 1

    def test_count_respected(self, linear_scalar, linear_scalar_oracle):
        _, grid = linear_scalar_oracle
        ham = oracle.build_hamiltonian(linear_scalar.system(), CST, grid)
        pairs = oracle.eigen_solve(ham, (-4.0, 4.0), count=6)
        assert len(pairs) <= 6

    def test_eigenvectors_normalized(self, linear_scalar, linear_scalar_oracle):
        _, grid = linear_scalar_oracle
        ham = oracle.build_hamiltonian(linear_scalar.system(), CST, grid)
        pairs = oracle.eigen_solve(ham, (-0.1, 1.5))
        for ep in pairs:
            assert ep.norm == pytest.approx(1.0, abs=1e-10)

    def test_charge_conjugation_violated_with_electric(self, linear_mixed):
        grid = linear_mixed.default_grid(3)
        ham = oracle.build_hamiltonian(linear_mixed.system(), CST, grid)
        vals = oracle.eigenvalues(ham, (-3.0, 2.5))
        unpaired = [v for v in vals if np.min(np.abs(vals + v)) > 1e-6]
        assert unpaired


class TestShoot:
    def test_det_small_at_eigenvalue(self, linear_scalar):
        grid = oracle.Grid(-14.0, 12.0, 1501)
        roots = oracle.find_levels_shooting(linear_scalar.system(), CST,
                                            (1.2, 1.6), grid)
        e = nearest(roots, np.sqrt(2.0))
        assert abs(e - np.sqrt(2.0)) < 1e-6
        assert abs(oracle.shoot(linear_scalar.system(), CST, e, grid)) < 1e-6

    def test_det_bounded_between_levels(self, linear_scalar):
        grid = oracle.Grid(-14.0, 12.0, 1501)
        midway = 0.5 * (np.sqrt(2.0) + 2.0)
        assert abs(oracle.shoot(linear_scalar.system(), CST, midway, grid)) > 1e-3

    def test_half_line_root(self, inverse_scalar):
        grid = oracle.Grid(0.0, 60.0, 2001)
        roots = oracle.find_levels_shooting(inverse_scalar.system(), CST,
                                            (0.5, 0.95), grid)
        assert abs(nearest(roots, np.sqrt(3.0) / 2.0) - np.sqrt(3.0) / 2.0) < 1e-5


class TestFindLevels:
    def test_mixed_linear_level_set(self, linear_mixed):
        grid = oracle.Grid(-16.0, 13.0, 1501)
        roots = oracle.find_levels_shooting(linear_mixed.system(), CST,
                                            (-3.0, 2.0), grid)
        for n in (0, 1, 2):
            for lv in linear_mixed.levels(n):
                assert abs(nearest(roots, lv.E) - lv.E) < 1e-6

    def test_empty_window(self, linear_scalar):
        grid = oracle.Grid(-14.0, 12.0, 301)
        assert oracle.find_levels_shooting(linear_scalar.system(), CST,
                                           (0.2, 0.9), grid) == []

    def test_unstable_electric_pseudo_levels_flagged(self):
        # the scan does produce mesh-dependent roots, but the probe reports
        # non-convergence
        sys = electric_linear(1.0)
        grid = oracle.Grid(-12.0, 12.0, 801)
        report = oracle.convergence_probe(sys, CST, grid)
        assert report.verdict == "NotConverged"
        assert report.drift_box > 0.1


class TestConvergenceProbe:
    def test_stable_linear_converged(self, linear_scalar):
        grid = oracle.Grid(-14.0, 12.0, 1501)
        report = oracle.convergence_probe(linear_scalar.system(), CST, grid)
        assert report.verdict == "Converged"
        assert report.drift_box < 1e-3 and report.drift_grid < 1e-3

    def test_free_particle_box_states_drift(self):
        report = oracle.convergence_probe(free_particle(), CST,
                                          oracle.Grid(-20.0, 20.0, 801),
                                          oracle.BOX_DIRICHLET)
        assert report.verdict == "NotConverged"
        assert report.drift_box > 1e-3


class TestIntertwineCheck:
    def test_residuals_small_on_eigenpair(self, linear_scalar):
        grid = oracle.Grid(-14.0, 12.0, 2601)  # h = 0.01
        ham = oracle.build_hamiltonian(linear_scalar.system(), CST, grid)
        pairs = oracle.eigen_solve(ham, (1.3, 1.5))
        r1, r2 = oracle.intertwine_check(pairs[0], linear_scalar.fd(),
                                         linear_scalar.mixing())
        assert r1 < 1e-2 and r2 < 1e-2

    def test_zero_mode_one_sided(self, linear_scalar):
        grid = oracle.Grid(-14.0, 12.0, 2601)
        ham = oracle.build_hamiltonian(linear_scalar.system(), CST, grid)
        pairs = oracle.eigen_solve(ham, (-0.1, 0.1))
        assert len(pairs) == 1
        r1, r2 = oracle.intertwine_check(pairs[0], linear_scalar.fd(),
                                         linear_scalar.mixing())
        assert r1 is not None and r1 < 1e-2
        assert r2 is None

    def test_random_function_is_negative_control(self, linear_scalar):
        rng = np.random.default_rng(8)
        grid = oracle.Grid(-14.0, 12.0, 2601)
        ham = oracle.build_hamiltonian(linear_scalar.system(), CST, grid)
        pairs = oracle.eigen_solve(ham, (1.3, 1.5))
        ep = pairs[0]
        env = np.exp(-((ep.x1 + 1.0) / 3.0) ** 2)
        fake_psi1 = env * np.cos(3.1 * ep.x1) + 0.2 * rng.standard_normal(len(ep.x1)) * env
        fake = type(ep)(E=ep.E, x1=ep.x1, psi1=fake_psi1, x2=ep.x2,
                        psi2=ep.psi2.copy())
        r1, r2 = oracle.intertwine_check(fake, linear_scalar.fd(),
                                         linear_scalar.mixing())
        assert r1 > 0.1 or r2 > 0.1


class TestConvergenceOrder:
    def test_second_order_eigenvalues(self, linear_scalar):
        target = np.sqrt(2.0)
        errs = []
        hs = (0.04, 0.02, 0.01)
        for h in hs:
            n = int(round(26.0 / h)) + 1
            grid = oracle.Grid(-14.0, 12.0, n)
            ham = oracle.build_hamiltonian(linear_scalar.system(), CST, grid)
            vals = oracle.eigenvalues(ham, (1.3, 1.5))
            errs.append(abs(vals[0] - target))
        slope = np.polyfit(np.log(hs), np.log(errs), 1)[0]
        assert 1.7 < slope < 2.3


class TestShootingDiagonalizationAgreement:
    def test_linear_problems(self, linear_scalar, linear_mixed):
        for problem in (linear_scalar, linear_mixed):
            grid = problem.default_grid(5)
            fine = oracle.Grid(grid.xmin, grid.xmax, 2 * grid.n_points - 1)
            ham = oracle.build_hamiltonian(problem.system(), CST, grid)
            ham_f = oracle.build_hamiltonian(problem.system(), CST, fine)
            levels = problem.levels_up_to(5)
            lo = min(lv.E for lv in levels) - 0.3
            hi = max(lv.E for lv in levels) + 0.3
            coarse_vals = oracle.eigenvalues(ham, (lo, hi))
            fine_vals = oracle.eigenvalues(ham_f, (lo, hi))
            sgrid = oracle.Grid(grid.xmin, grid.xmax, 3001)
            roots = oracle.find_levels_shooting(problem.system(), CST,
                                                (lo, hi), sgrid)
            for lv in levels:
                rich = (4.0 * nearest(fine_vals, lv.E)
                        - nearest(coarse_vals, lv.E)) / 3.0
                shot = nearest(roots, lv.E)
                assert abs(rich - shot) < 1e-6

    def test_inverse_linear_problem(self, inverse_scalar):
        grid = inverse_scalar.default_grid(5)
        n1 = 8001
        ham = oracle.build_hamiltonian(
            inverse_scalar.system(), CST, oracle.Grid(0.0, grid.xmax, n1))
        ham_f = oracle.build_hamiltonian(
            inverse_scalar.system(), CST, oracle.Grid(0.0, grid.xmax, 2 * n1 - 1))
        levels = inverse_scalar.levels_up_to(5)
        coarse_vals = oracle.eigenvalues(ham, (-0.995, 0.995))
        fine_vals = oracle.eigenvalues(ham_f, (-0.995, 0.995))
        roots = oracle.find_levels_shooting(
            inverse_scalar.system(), CST, (-0.995, 0.995),
            oracle.Grid(0.0, grid.xmax, 6001))
        for lv in levels:
            rich = (4.0 * nearest(fine_vals, lv.E)
                    - nearest(coarse_vals, lv.E)) / 3.0
            shot = nearest(roots, lv.E)
            assert abs(rich - shot) < 1e-6
