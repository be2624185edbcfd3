import pytest
import numpy as np
import pandas as pd
from scipy import integrate

from spectral_dynamics import (
    HermiticityViolation,
    InvalidQuantumNumber,
    InvalidTimeSeries,
    NormalizationViolation,
    TimeSeries,
    WavePacket,
    WellConfig,
    WellConfigError,
    _paired_double_sum,
    beat_frequency,
    beta,
    eigenfunction_value,
    eigenvalue,
    ehrenfest_residual,
    force_expectation,
    force_matrix_element,
    momentum_expectation,
    momentum_matrix_element,
    momentum_rate,
    packet_value,
    position_expectation,
    position_matrix_element,
    sample_series,
    time_grid,
)


class TestWellConfig:
    """Parametros del pozo y espectro"""

    def test_defaults_are_natural_units(self):
        assert WellConfig() == WellConfig.natural()

    @pytest.mark.parametrize("kwargs", [{"L": 0.0}, {"m": -1.0}, {"hbar": float("nan")}, {"L": float("inf")}])
    def test_invalid_parameters(self, kwargs):
        with pytest.raises(WellConfigError):
            WellConfig(**kwargs)

    def test_ground_state_energy(self, natural):
        """E_1 = pi^2/2 en unidades naturales"""
        assert eigenvalue(1, natural) == pytest.approx(np.pi**2 / 2, rel=1e-15)

    def test_doubling_width_quarters_energies(self, natural):
        wide = WellConfig(L=2.0)
        for n in range(1, 10):
            assert eigenvalue(n, wide) == pytest.approx(eigenvalue(n, natural) / 4, rel=1e-15)

    @pytest.mark.parametrize("n", [0, -3, 1.5, True, "2"])
    def test_invalid_quantum_numbers(self, natural, n):
        with pytest.raises(InvalidQuantumNumber):
            eigenvalue(n, natural)

    def test_numpy_integers_are_accepted(self, natural):
        assert eigenvalue(np.int64(2), natural) == pytest.approx(2 * np.pi**2)

    def test_eigenfunction_vanishes_at_and_outside_walls(self, natural):
        x = np.array([-0.5, 0.0, 1.0, 1.5])
        assert np.all(eigenfunction_value(3, x, natural) == 0.0)

    def test_eigenfunctions_are_orthonormal(self):
        cfg = WellConfig(L=1.7)
        for n in range(1, 5):
            for j in range(1, 5):
                value, _ = integrate.quad(
                    lambda x: eigenfunction_value(n, x, cfg) * eigenfunction_value(j, x, cfg), 0.0, cfg.L, limit=200
                )
                assert value == pytest.approx(1.0 if n == j else 0.0, abs=1e-12)


class TestMatrixElements:
    """Factores de paridad y elementos de matriz en la base de la caja"""

    def test_beta_parity(self):
        assert beta(1, 2) == 2
        assert beta(2, 4) == 0
        assert beta(3, 3) == 0

    def test_force_element_known_values(self, natural):
        assert force_matrix_element(1, 2, natural) == pytest.approx(-4 * np.pi**2, rel=1e-15)
        assert force_matrix_element(1, 1, natural) == 0
        assert force_matrix_element(2, 3, WellConfig(L=2.0)) == pytest.approx(-3 * np.pi**2 / 2, rel=1e-15)

    def test_same_parity_force_element_is_positive_zero(self, natural):
        """beta_nj = 0 da +0.0: las tablas muestran 0 y no -0"""
        for n, j in [(1, 1), (1, 3), (2, 4), (5, 7)]:
            value = force_matrix_element(n, j, natural)
            assert value == 0.0
            assert not np.signbit(value)

    def test_force_element_symmetry(self, natural):
        for n in range(1, 8):
            for j in range(1, 8):
                assert force_matrix_element(n, j, natural) == force_matrix_element(j, n, natural)

    def test_momentum_element_is_hermitian(self, natural):
        for n in range(1, 8):
            for j in range(1, 8):
                assert momentum_matrix_element(n, j, natural) == pytest.approx(
                    np.conj(momentum_matrix_element(j, n, natural)), abs=1e-15
                )

    def test_momentum_element_against_quadrature(self):
        cfg = WellConfig(L=1.3, hbar=0.7)
        for n, j in [(1, 2), (2, 5), (3, 4), (1, 3)]:
            k = cfg.wavenumber(j)
            value, _ = integrate.quad(
                lambda x: eigenfunction_value(n, x, cfg) * np.sqrt(2 / cfg.L) * k * np.cos(k * x), 0.0, cfg.L, limit=200
            )
            assert momentum_matrix_element(n, j, cfg) == pytest.approx(-1j * cfg.hbar * value, abs=1e-12)

    def test_position_element_against_quadrature(self):
        cfg = WellConfig(L=2.5)
        for n in range(1, 5):
            for j in range(1, 5):
                value, _ = integrate.quad(
                    lambda x: x * eigenfunction_value(n, x, cfg) * eigenfunction_value(j, x, cfg), 0.0, cfg.L, limit=200
                )
                assert position_matrix_element(n, j, cfg) == pytest.approx(value, abs=1e-12)

    def test_beat_frequency(self, natural):
        """omega_12 = 3 pi^2 / 2"""
        assert beat_frequency(1, 2, natural) == pytest.approx(1.5 * np.pi**2, rel=1e-15)


class TestWavePacket:
    """Construccion, normalizacion y serializacion de paquetes"""

    def test_unnormalized_packet_is_rejected(self, natural):
        packet = WavePacket([1.0, 1.0])
        with pytest.raises(NormalizationViolation):
            force_expectation(packet, 0.0, natural)

    def test_explicit_normalization(self):
        packet = WavePacket([3.0, 4.0j]).normalized()
        assert packet.is_normalized()
        np.testing.assert_allclose(packet.coeffs, [0.6, 0.8j])

    def test_zero_packet_cannot_be_normalized(self):
        with pytest.raises(NormalizationViolation):
            WavePacket([0.0, 0.0]).normalized()

    def test_empty_packet(self):
        with pytest.raises(NormalizationViolation):
            WavePacket([])

    def test_from_text(self):
        text = "# two states\n1 0.6 0\n3 0 0.8  # odd\n\n"
        packet = WavePacket.from_text(text)
        np.testing.assert_allclose(packet.coeffs, [0.6, 0.0, 0.8j])
        assert packet.to_triples() == [(1, 0.6, 0.0), (3, 0.0, 0.8)]

    def test_from_text_reports_line(self):
        with pytest.raises(ValueError, match="line 2"):
            WavePacket.from_text("1 1 0\n2 abc 0\n")

    def test_duplicate_state(self):
        with pytest.raises(ValueError):
            WavePacket.from_triples([(1, 1, 0), (1, 0, 0)])

    def test_coefficients_are_read_only(self, two_state):
        with pytest.raises(ValueError):
            two_state.coeffs[0] = 1.0

    def test_digest_is_stable(self, two_state):
        assert two_state.digest() == WavePacket(np.array([1.0, 1.0]) / np.sqrt(2.0)).digest()
        assert two_state.digest() != WavePacket.eigenstate(1).digest()


class TestExpectationValues:
    """Valores esperados en forma cerrada y residuo de Ehrenfest"""

    def test_two_state_force(self, natural, two_state):
        """<dV/dx> = -(8 E_1 / L) cos(omega_12 t)"""
        omega = beat_frequency(1, 2, natural)
        E1 = eigenvalue(1, natural)
        for t in np.linspace(0.0, 1.0, 1000):
            expected = -(8 * E1 / natural.L) * np.cos(omega * t)
            assert force_expectation(two_state, t, natural) == pytest.approx(expected, abs=1e-12)

    def test_two_state_momentum(self, natural, two_state):
        """<p> = (8 hbar / 3 L) sin(omega_12 t), nulo en t = 0"""
        omega = beat_frequency(1, 2, natural)
        assert momentum_expectation(two_state, 0.0, natural) == 0.0
        for t in np.linspace(0.0, 1.0, 17):
            assert momentum_expectation(two_state, t, natural) == pytest.approx(8 / 3 * np.sin(omega * t), abs=1e-12)

    def test_two_state_position(self, natural, two_state):
        """<x>(0) = L/2 - 16 L / (9 pi^2)"""
        expected = 0.5 - 16 / (9 * np.pi**2)
        assert position_expectation(two_state, 0.0, natural) == pytest.approx(expected, abs=1e-14)

    def test_single_eigenstate_is_stationary(self, natural):
        packet = WavePacket.eigenstate(3)
        for t in (0.0, 0.3, 2.0):
            assert force_expectation(packet, t, natural) == 0.0
            assert momentum_rate(packet, t, natural) == 0.0
            assert momentum_expectation(packet, t, natural) == 0.0
            assert position_expectation(packet, t, natural) == pytest.approx(0.5, abs=1e-15)

    def test_same_parity_states_feel_no_force(self, natural):
        """a_1 = a_3 = 1/sqrt(2): beta_13 = 0"""
        packet = WavePacket.from_triples([(1, 2**-0.5, 0), (3, 2**-0.5, 0)])
        for t in np.linspace(0.0, 1.0, 9):
            assert force_expectation(packet, t, natural) == 0.0

    def test_ehrenfest_residual_vanishes(self, random_packet, rng):
        cfg = WellConfig(L=1.4, m=0.8, hbar=1.1)
        for _ in range(100):
            packet = random_packet(int(rng.integers(1, 16)))
            for t in rng.uniform(0.0, 3.0, size=100):
                assert abs(ehrenfest_residual(packet, t, cfg)) <= 1e-9

    def test_rate_is_exact_negative_of_force(self, random_packet, rng):
        cfg = WellConfig(L=0.9, m=1.3, hbar=0.7)
        for _ in range(20):
            packet = random_packet(int(rng.integers(1, 12)))
            for t in rng.uniform(0.0, 2.0, size=10):
                assert momentum_rate(packet, t, cfg) == -force_expectation(packet, t, cfg)

    def test_time_reversal_for_real_packets(self, rng):
        """Coeficientes reales: <p> impar en t, <dV/dx> y <x> pares"""
        cfg = WellConfig(L=1.3, m=0.7, hbar=1.1)
        for modes in (2, 5, 9):
            packet = WavePacket(rng.normal(size=modes)).normalized()
            for t in rng.uniform(0.0, 2.0, size=10):
                assert momentum_expectation(packet, -t, cfg) == pytest.approx(-momentum_expectation(packet, t, cfg), abs=1e-12)
                assert force_expectation(packet, -t, cfg) == pytest.approx(force_expectation(packet, t, cfg), abs=1e-10)
                assert position_expectation(packet, -t, cfg) == pytest.approx(position_expectation(packet, t, cfg), abs=1e-12)

    def test_only_opposite_parity_pairs_contribute(self, random_packet, rng):
        """Las sumas completas coinciden con las restringidas a n + j impar"""
        cfg = WellConfig(L=1.2, m=0.8, hbar=1.0)
        packet = random_packet(8)
        a = packet.coeffs
        modes = range(1, packet.truncation + 1)
        for t in rng.uniform(0.0, 1.0, size=5):
            force = 0j
            momentum = 0j
            for n in modes:
                for j in modes:
                    if (n + j) % 2 == 0:
                        continue
                    phase = np.exp(1j * (eigenvalue(n, cfg) - eigenvalue(j, cfg)) * t / cfg.hbar)
                    weight = np.conj(a[n - 1]) * a[j - 1] * phase
                    force += weight * force_matrix_element(n, j, cfg)
                    momentum += weight * momentum_matrix_element(n, j, cfg)
            assert force.imag == pytest.approx(0.0, abs=1e-9)
            assert force_expectation(packet, t, cfg) == pytest.approx(force.real, rel=1e-12, abs=1e-9)
            assert momentum_expectation(packet, t, cfg) == pytest.approx(momentum.real, rel=1e-12, abs=1e-9)

    def test_truncation_padding_is_invisible(self, natural, random_packet):
        packet = random_packet(6)
        padded = packet.padded(15)
        for observable in (force_expectation, momentum_expectation, position_expectation):
            assert observable(padded, 0.37, natural) == pytest.approx(observable(packet, 0.37, natural), abs=1e-13)

    def test_non_hermitian_weights_are_caught(self, natural, two_state):
        weights = np.array([[0.0, 1j], [1j, 0.0]])
        with pytest.raises(HermiticityViolation):
            _paired_double_sum(two_state, 0.0, natural, weights, "bad")

    def test_packet_value_is_normalized(self, natural, random_packet):
        packet = random_packet(5)
        x = np.linspace(0.0, 1.0, 4001)
        density = np.abs(packet_value(packet, x, 0.42, natural)) ** 2
        assert integrate.simpson(density, x=x) == pytest.approx(1.0, abs=1e-10)
        assert packet_value(packet, 0.0, 0.42, natural) == 0
        assert packet_value(packet, 1.0, 0.42, natural) == 0


class TestTimeSeries:
    """Mallas temporales, series muestreadas y exportacion"""

    def test_time_grid(self):
        np.testing.assert_allclose(time_grid(0.0, 1.0, 5), [0.0, 0.25, 0.5, 0.75, 1.0])
        assert time_grid(0.3, 0.3, 1).tolist() == [0.3]

    @pytest.mark.parametrize("args", [(0.0, 1.0, 0), (1.0, 0.0, 5), (0.0, 0.0, 3)])
    def test_invalid_time_grid(self, args):
        with pytest.raises(InvalidTimeSeries):
            time_grid(*args)

    def test_series_validation(self):
        with pytest.raises(InvalidTimeSeries):
            TimeSeries([0.0, 0.0], [1.0, 2.0], "x")
        with pytest.raises(InvalidTimeSeries):
            TimeSeries([0.0, 1.0], [1.0], "x")

    def test_position_mean_over_beat_period(self, natural, two_state):
        """La media de <x> en un periodo de batido es L/2"""
        period = 2 * np.pi / beat_frequency(1, 2, natural)
        times = np.linspace(0.0, period, 2001)
        series = sample_series("position", two_state, times, natural)
        mean = integrate.simpson(series.values, x=times) / period
        assert mean == pytest.approx(0.5, abs=1e-8)

    def test_threaded_sampling_matches_serial(self, natural, random_packet):
        packet = random_packet(4)
        times = time_grid(0.0, 1.0, 33)
        serial = sample_series("momentum", packet, times, natural)
        threaded = sample_series("momentum", packet, times, natural, workers=4)
        np.testing.assert_array_equal(serial.values, threaded.values)

    def test_unknown_observable(self, natural, two_state):
        with pytest.raises(ValueError):
            sample_series("energy", two_state, [0.0], natural)

    def test_export_is_deterministic(self, natural, two_state, tmp_path):
        series = sample_series("force", two_state, time_grid(0.0, 1.0, 11), natural)
        first = series.export(tmp_path / "a.csv")
        second = series.export(tmp_path / "b.csv")
        assert first.read_bytes() == second.read_bytes()
        df = pd.read_csv(first, float_precision="round_trip")
        assert list(df.columns) == ["t", "value"]
        np.testing.assert_array_equal(df["value"].to_numpy(), series.values)

    def test_json_export_carries_metadata(self, natural, two_state, tmp_path):
        import json

        series = sample_series("momentum", two_state, time_grid(0.0, 1.0, 5), natural)
        path = series.export(tmp_path / "p.json", fmt="json")
        document = json.loads(path.read_text())
        assert document["metadata"]["label"] == "momentum"
        assert document["metadata"]["packet"] == two_state.digest()
        assert document["columns"] == ["t", "value"]
