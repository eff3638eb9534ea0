import math

import numpy as np
import pytest

from hybrid_gkp import analysis as an
from hybrid_gkp import coherent as ca
from hybrid_gkp import fock
from hybrid_gkp import protocols as pr
from hybrid_gkp.errors import ConvergenceError, DegenerateState, NotSingleMode, WindowExceedsDomain


@pytest.fixture(scope="module")
def model():
    return an.TradeoffModel(an.optimal_alpha()[0])


class TestQuadrature:
    def test_polynomial_exact(self):
        val, panels = an.gauss_legendre(lambda x: x ** 5 - 3 * x ** 2, -1, 2)
        assert val == pytest.approx(2 ** 6 / 6 - 1 / 6 - 9, rel=1e-14)
        assert panels == 2

    def test_gaussian(self):
        val, _ = an.gauss_legendre(lambda x: np.exp(-x * x), -8, 8)
        assert val == pytest.approx(math.sqrt(math.pi), rel=1e-12)

    def test_empty_interval(self):
        assert an.gauss_legendre(np.sin, 1.0, 1.0) == (0.0, 0)

    def test_divergence(self):
        with pytest.raises(ConvergenceError):
            an.gauss_legendre(lambda x: np.sign(x - 0.123456789), -1, 1, rtol=1e-15, max_panels=8)


class TestFidelityCurve:
    @pytest.mark.parametrize("alpha", [0.05, 0.455, 1.0])
    def test_single_photon_methods(self, alpha):
        assert an.single_photon_fidelity(alpha) == pytest.approx(an.single_photon_fidelity(alpha, "projection"))

    def test_single_photon_limits(self):
        assert an.single_photon_fidelity(1e-4) == pytest.approx(1.0, abs=1e-7)
        assert an.single_photon_fidelity(-0.7) == an.single_photon_fidelity(0.7)
        with pytest.raises(DegenerateState):
            an.single_photon_fidelity(0.0)

    def test_small_alpha_limit(self):
        assert an.closed_form_fidelity(1e-12) == pytest.approx(0.4, abs=1e-11)
        # 60-digit reference evaluation
        assert an.closed_form_fidelity(0.001) == pytest.approx(0.402401104112251, rel=1e-13)

    def test_no_cancellation_near_zero(self):
        a = np.logspace(-8, -1, 50)
        assert np.all(np.diff(an.closed_form_fidelity(a)) > 0)

    def test_series_switch_continuous(self):
        x = math.sqrt(an._SERIES_BELOW)
        lo, hi = an.closed_form_fidelity(x * (1 - 1e-12)), an.closed_form_fidelity(x)
        assert hi == pytest.approx(lo, abs=1e-13)

    def test_large_alpha_decays(self):
        assert an.closed_form_fidelity(3.0) < an.closed_form_fidelity(1.5) < an.closed_form_fidelity(0.455)

    def test_vectorized(self):
        a = np.array([0.1, 0.5, 1.2])
        assert np.allclose(an.closed_form_fidelity(a), [an.closed_form_fidelity(x) for x in a])

    @pytest.mark.parametrize("alpha", [0.1, 0.3, 0.455, 0.7, 1.0, 1.4])
    def test_closed_form_matches_engines(self, alpha):
        cf = an.closed_form_fidelity(alpha)
        assert an.numeric_fidelity(alpha) == pytest.approx(cf, abs=1e-10)
        assert an.numeric_fidelity(alpha, "fock", cutoff=45) == pytest.approx(cf, abs=1e-8)

    def test_sweep_records(self):
        recs = an.fidelity_sweep([0.2, 0.4])
        assert [r.parameter for r in recs] == [0.2, 0.4]
        assert recs[1].fidelity == an.closed_form_fidelity(0.4)


class TestOptimum:
    def test_value(self):
        a, f = an.optimal_alpha()
        assert a == pytest.approx(0.455, abs=0.01)
        assert f == pytest.approx(0.964, abs=0.002)

    def test_is_grid_maximum(self):
        a, f = an.optimal_alpha()
        grid = np.arange(0.05, 1.5, 1e-3)
        assert f >= an.closed_form_fidelity(grid).max() - 1e-12

    def test_step_halving_stable(self):
        a1, _ = an.optimal_alpha(step=1e-3)
        a2, _ = an.optimal_alpha(step=5e-4)
        assert abs(a1 - a2) < 1e-5

    def test_single_point_interval(self):
        assert an.optimal_alpha((0.3, 0.3)) == (0.3, an.closed_form_fidelity(0.3))

    def test_edge_maximum(self):
        a, _ = an.optimal_alpha((0.8, 1.2))
        assert a == pytest.approx(0.8)

    def test_bad_interval(self):
        with pytest.raises(ValueError):
            an.optimal_alpha((0.0, 1.0))


class TestTradeoff:
    def test_monotone(self, model):
        v = np.linspace(0.06, 3.0, 50)
        f = [model.fidelity(x) for x in v]
        p = [model.probability(x) for x in v]
        assert np.all(np.diff(f) < 0)
        assert np.all(np.diff(p) > 0)

    def test_full_window(self, model):
        assert model.probability(model.p_max) == pytest.approx(1.0, abs=1e-12)

    def test_domain_invariance(self, model):
        wide = an.TradeoffModel(model.alpha, 16.0)
        assert wide.probability(0.5) == pytest.approx(model.probability(0.5), abs=1e-10)
        assert wide.fidelity(0.5) == pytest.approx(model.fidelity(0.5), abs=1e-10)

    def test_weighted_equivalence(self, model):
        for v in (0.2, 0.7, 2.0):
            assert model.fidelity_weighted(v) == pytest.approx(model.fidelity(v), abs=1e-10)

    def test_narrow_window_limit(self, model):
        assert model.fidelity(1e-3) == pytest.approx(1.0, abs=1e-6)

    def test_window_errors(self, model):
        with pytest.raises(WindowExceedsDomain):
            model.fidelity(9.0)
        with pytest.raises(ValueError):
            model.probability(0.0)

    def test_inversion(self, model):
        v = model.window_for_fidelity(0.99)
        assert model.fidelity(v) == pytest.approx(0.99, abs=1e-9)
        v = model.window_for_probability(0.1)
        assert model.probability(v) == pytest.approx(0.1, abs=1e-9)

    def test_unbracketed(self, model):
        with pytest.raises(ConvergenceError):
            model.window_for_fidelity(0.3)

    def test_engines_agree(self, model):
        fm = an.TradeoffModel(model.alpha, engine="fock")
        for v in (0.3, 1.0):
            assert fm.fidelity(v) == pytest.approx(model.fidelity(v), abs=1e-8)
            assert fm.probability(v) == pytest.approx(model.probability(v), abs=1e-8)

    def test_record_diagnostics(self, model):
        rec = model.record(0.5)
        assert rec.diagnostics["panels_density"] >= 1
        assert rec.diagnostics["p_max"] == an.P_MAX

    def test_exact_ancilla_model(self):
        m = an.TradeoffModel(0.455, approximate_ancilla=False)
        assert 0 < m.probability(0.5) < 1
        assert m.fidelity(1e-3) == pytest.approx(1.0, abs=1e-6)


class TestApproximation:
    def test_monotone_decreasing(self):
        v = [an.approximation_validity(a) for a in np.linspace(0.02, 1.5, 30)]
        assert np.all(np.diff(v) < 0)
        assert v[0] == pytest.approx(1.0, abs=1e-3)

    def test_engines_agree(self):
        assert an.approximation_validity(0.455, "fock") == pytest.approx(an.approximation_validity(0.455), abs=1e-10)

    def test_neglected_population_scaling(self):
        a = np.linspace(0.05, 0.3, 10)
        norm = an.loglog_slope(a, [an.neglected_population(x) for x in a])
        bare = an.loglog_slope(a, [an.neglected_population(x, normalized=False) for x in a])
        assert norm == pytest.approx(4.0, abs=0.1)
        assert bare == pytest.approx(6.0, abs=0.2)

    def test_loglog_slope(self):
        x = np.array([1.0, 2.0, 4.0])
        assert an.loglog_slope(x, 3 * x ** 2.5) == pytest.approx(2.5)


class TestParity:
    @pytest.mark.parametrize("b", [0.2, 0.35, 0.5])
    def test_logical_one_odd(self, b):
        assert an.parity_spectrum(pr.logical_one(b), -b).even_weight < 1e-10

    @pytest.mark.parametrize("b", [0.2, 0.35, 0.5])
    def test_logical_zero_even(self, b):
        assert an.parity_spectrum(pr.logical_zero(b), -b).odd_weight < 1e-10

    def test_cat(self):
        spec = an.parity_spectrum(ca.make_cat(0.8, "even"))
        assert spec.odd_weight < 1e-14 and spec.weights[0] > 0.5

    def test_fock_input(self):
        b = 0.35
        spec = an.parity_spectrum(ca.to_fock(pr.logical_one(b), 50), -b)
        assert spec.even_weight < 1e-10

    def test_single_mode_only(self):
        with pytest.raises(NotSingleMode):
            an.parity_spectrum(ca.vacuum(2))
        with pytest.raises(NotSingleMode):
            an.parity_spectrum(fock.vacuum([3, 3]))
