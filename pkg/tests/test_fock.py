import math

import numpy as np
import pytest

from hybrid_gkp import coherent as ca
from hybrid_gkp import fock
from hybrid_gkp import protocols as pr
from hybrid_gkp.errors import CutoffTooSmall, InvalidTransmittance, ModeMismatch, NotSingleMode


def random_fock(rng, cutoffs):
    amps = rng.normal(size=cutoffs) + 1j * rng.normal(size=cutoffs)
    return fock.FockState(amps / np.linalg.norm(amps))


class TestDisplacement:
    def test_zero_is_identity(self):
        s = random_fock(np.random.default_rng(0), (12,))
        assert np.allclose(fock.apply_displacement(s, 0, 0.0).amplitudes, s.amplitudes)

    def test_coherent_coefficients(self):
        n = np.arange(30)
        expected = np.exp(-0.245) * 0.7 ** n / np.sqrt([float(math.factorial(k)) for k in n])
        out = fock.apply_displacement(fock.vacuum([30]), 0, 0.7).amplitudes
        assert np.allclose(out, expected, atol=1e-12)

    def test_logical_zero_parity(self):
        b = 0.35
        z = fock.apply_displacement(ca.to_fock(pr.logical_zero(b), 40), 0, -b).normalized()
        assert np.sum(np.abs(z.amplitudes[1::2]) ** 2) < 1e-8

    def test_norm_loss_bound(self):
        with pytest.raises(CutoffTooSmall):
            fock.apply_displacement(fock.basis([6], [5]), 0, 2.0, max_norm_loss=1e-6)

    def test_unitary_at_adequate_cutoff(self):
        s = ca.to_fock(ca.coherent(0.5), 30)
        out = fock.apply_displacement(s, 0, 0.9 - 0.4j)
        assert out.norm2() == pytest.approx(1.0, abs=1e-8)


class TestBeamSplitter:
    def test_single_photon(self):
        out = fock.apply_beam_splitter(fock.basis([4, 4], [1, 0]), 0, 1, 0.5).amplitudes
        assert out[1, 0] == pytest.approx(1 / math.sqrt(2))
        assert out[0, 1] == pytest.approx(-1 / math.sqrt(2))
        assert np.sum(np.abs(out) ** 2) == pytest.approx(1.0)

    def test_coherent_split(self):
        g = 0.8
        out = fock.apply_beam_splitter(ca.to_fock(ca.coherent([0, g]), 30), 0, 1, 0.5)
        ref = ca.to_fock(ca.coherent([g / math.sqrt(2), g / math.sqrt(2)]), 30)
        assert fock.fidelity(out, ref) == pytest.approx(1.0, abs=1e-8)

    def test_block_conservation(self):
        s = random_fock(np.random.default_rng(1), (8, 8))
        out = fock.apply_beam_splitter(s, 0, 1, 0.3)
        n = np.add.outer(np.arange(8), np.arange(8))
        for total in range(8):
            before = np.sum(np.abs(s.amplitudes[n == total]) ** 2)
            after = np.sum(np.abs(out.amplitudes[n == total]) ** 2)
            assert after == pytest.approx(before, abs=1e-12)

    def test_structural_zeros(self):
        u = fock.beam_splitter_tensor(6, 0.4)
        m, k, a, b = np.indices(u.shape)
        assert np.all(u[(m + k) != (a + b)] == 0)

    def test_unequal_cutoffs(self):
        with pytest.raises(ModeMismatch):
            fock.apply_beam_splitter(fock.vacuum([3, 4]), 0, 1, 0.5)

    def test_transmittance(self):
        with pytest.raises(InvalidTransmittance):
            fock.apply_beam_splitter(fock.vacuum([3, 3]), 0, 1, 1.0)


class TestKernel:
    def test_ground_state(self):
        p = 0.6
        assert fock.homodyne_kernel(p, 1)[0] == pytest.approx(np.pi ** -0.25 * math.exp(-p * p / 2))

    @pytest.mark.parametrize("g", [0.0, 0.7, -1.5, 1.5])
    @pytest.mark.parametrize("p", [-4.0, -0.3, 2.5, 4.0])
    def test_coherent_identity(self, g, p):
        lhs = fock.homodyne_kernel(p, 60) @ fock.coherent_coefficients(g, 60)
        rhs = np.pi ** -0.25 * math.exp(-p * p / 2) * np.exp(-1j * math.sqrt(2) * p * g)
        assert abs(lhs - rhs) < 1e-8

    def test_orthonormality(self):
        x, w = np.polynomial.hermite.hermgauss(80)
        k = fock.homodyne_kernel(x, 20) * np.exp(x * x / 2)
        gram = (k.conj() * w) @ k.T
        assert np.allclose(gram, np.eye(20), atol=1e-6)

    def test_bounded(self):
        p = np.linspace(-10, 10, 401)
        assert np.abs(fock.homodyne_kernel(p, 201)).max() <= np.pi ** -0.25 + 1e-12


class TestProjection:
    def test_odd_cat_at_zero(self):
        _, d = fock.project_quadrature(ca.to_fock(ca.make_cat(0.6, "odd"), 40), 0, 0.0)
        assert d < 1e-10

    def test_matches_coherent_engine(self):
        rng = np.random.default_rng(2)
        s = ca.SuperposedState(2, rng.normal(size=3), rng.uniform(-1, 1, size=(3, 2)))
        for p in (-0.8, 0.0, 1.3):
            out, d = fock.project_quadrature(ca.to_fock(s, 40), 1, p)
            ref = ca.homodyne_project(s, 1, p)
            assert d == pytest.approx(ref.density_amplitude_norm2, rel=1e-8)
            assert fock.fidelity(out, ca.to_fock(ref.state, 40)) == pytest.approx(1.0, abs=1e-8)

    def test_vectorized_density(self):
        s = random_fock(np.random.default_rng(3), (10, 10))
        ps = np.array([-1.0, 0.2, 2.0])
        assert np.allclose(fock.homodyne_density(s, 0, ps), [fock.project_quadrature(s, 0, p)[1] for p in ps])

    def test_number_projection(self):
        s = fock.basis([3, 3], [1, 2])
        out, prob = fock.project_number(s, 0, 1)
        assert prob == 1 and out.amplitudes[2] == 1


class TestWigner:
    def test_vacuum_origin(self):
        w = fock.wigner(fock.vacuum([10]), np.array([0.0]), np.array([0.0]), normalize=False)
        assert w.values[0, 0] == pytest.approx(1 / np.pi, abs=1e-12)

    def test_photon_origin(self):
        w = fock.wigner(fock.basis([10], [1]), np.array([0.0]), np.array([0.0]), normalize=False)
        assert w.values[0, 0] == pytest.approx(-1 / np.pi, abs=1e-12)

    def test_normalization_and_bound(self):
        w = fock.wigner(ca.to_fock(ca.make_cat(1.0, "odd"), 30))
        assert abs(w.integral() - 1) < 1e-3
        assert w.min() >= -1 / np.pi - 1e-9

    def test_bred_state_negative(self):
        z2 = pr.bred_input(2, 0.6)
        assert fock.wigner(ca.to_fock(z2, 40)).min() < -0.01

    def test_marginal(self):
        psi = ca.to_fock(ca.make_cat(1.0, "even"), 30)
        w = fock.wigner(psi)
        dens = np.abs(fock.position_wavefunction(psi, w.x_axis)) ** 2
        assert np.abs(w.x_marginal() - dens).max() < 1e-3

    def test_displaced_coherent_peak(self):
        g = 0.5 + 0.25j
        w = fock.wigner(ca.to_fock(ca.coherent(g), 30))
        i, j = np.unravel_index(np.argmax(w.values), w.values.shape)
        assert w.x_axis[i] == pytest.approx(math.sqrt(2) * g.real, abs=0.06)
        assert w.p_axis[j] == pytest.approx(math.sqrt(2) * g.imag, abs=0.06)

    def test_multimode_rejected(self):
        with pytest.raises(NotSingleMode):
            fock.wigner(fock.vacuum([3, 3]))


class TestFidelity:
    def test_self(self):
        s = random_fock(np.random.default_rng(4), (9,))
        assert fock.fidelity(s, s) == pytest.approx(1.0)

    def test_orthogonal(self):
        assert fock.fidelity(fock.basis([4], [0]), fock.basis([4], [1])) == 0

    def test_mismatch(self):
        with pytest.raises(ModeMismatch):
            fock.fidelity(fock.vacuum([3]), fock.vacuum([4]))

    def test_generator_fidelity(self):
        from hybrid_gkp import branched as br
        from hybrid_gkp.circuit import run_fock
        a = 0.455
        out = run_fock(pr.hybrid_circuit(a, 0.0, approximate_ancilla=False), 30).state
        f = fock.fidelity(br.to_fock(pr.hybrid_target(a), out.cutoffs), out)
        assert f == pytest.approx(0.964, abs=0.002)


def test_cutoff_convergence():
    from hybrid_gkp import branched as br
    from hybrid_gkp.circuit import run_fock
    a = 0.7
    c = pr.hybrid_circuit(a, 0.0, approximate_ancilla=False)
    fids = []
    for n in (25, 50):
        out = run_fock(c, n).state
        fids.append(fock.fidelity(br.to_fock(pr.hybrid_target(a), out.cutoffs), out))
    assert abs(fids[0] - fids[1]) < 1e-8
