import math

import numpy as np
import pytest

from acoustic_microgen.exceptions import DomainError, NumericalError
from acoustic_microgen.response import (
    SampledForcing,
    acoustic_force,
    array_series,
    drive_amplitude,
    drive_force,
    emf_pp,
    frequency_sweep,
    load_power,
    pp_to_rms,
    response_at,
    sinusoid,
    spl_to_pressure,
    steady_amplitude,
    time_simulate,
)
from acoustic_microgen.types import DriveKind, DriveSpec, Grid, LoadCircuit, OscillatorParams


@pytest.fixture
def osc():
    return OscillatorParams(mass=1.87128e-5, stiffness=750, damping_ratio=0.05)


def settled_amplitude(osc, force, frequency):
    f1 = osc.natural_frequency
    dt = 1 / (200 * max(frequency, f1))
    settle = 20 / (osc.damping_ratio * osc.angular_frequency)
    duration = settle + 2 / frequency
    trace = time_simulate(osc, None, None, sinusoid(force, frequency), dt, duration)
    tail = trace.time >= settle
    return float(np.abs(trace.displacement[tail]).max())


class TestPressure:
    def test_reference_level(self):
        assert spl_to_pressure(94) == pytest.approx(1.002, abs=1e-3)

    def test_zero_db(self):
        assert spl_to_pressure(0) == pytest.approx(20e-6)

    def test_twenty_db(self):
        assert spl_to_pressure(80) == pytest.approx(10 * spl_to_pressure(60))

    def test_non_finite(self):
        with pytest.raises(DomainError):
            spl_to_pressure(math.inf)

    def test_force_on_plate(self, plate):
        assert acoustic_force(1.0, plate) == pytest.approx(4e-6)
        assert acoustic_force(0.0, plate) == 0

    def test_force_on_area(self):
        assert acoustic_force(2.0, area=8e-6) == pytest.approx(2 * acoustic_force(2.0, area=4e-6))

    def test_force_needs_area(self):
        with pytest.raises(DomainError):
            acoustic_force(1.0)

    def test_negative_pressure(self, plate):
        with pytest.raises(DomainError):
            acoustic_force(-1.0, plate)


class TestSteadyAmplitude:
    def test_static_limit(self, osc):
        assert steady_amplitude(osc, 1e-3, 1e-3) == pytest.approx(1e-3 / 750, rel=1e-6)

    def test_resonance(self, osc):
        f1 = osc.natural_frequency
        assert steady_amplitude(osc, 1e-3, f1) == pytest.approx(1e-3 / (750 * 2 * 0.05))

    def test_undamped_resonance(self, osc):
        undamped = osc.model_copy(update={"damping_ratio": 0.0})
        assert steady_amplitude(undamped, 1e-3, undamped.natural_frequency) == math.inf
        assert steady_amplitude(undamped, 0.0, undamped.natural_frequency) == 0

    def test_bad_frequency(self, osc):
        with pytest.raises(DomainError):
            steady_amplitude(osc, 1e-3, 0)

    @pytest.mark.parametrize("zeta", (0.01, 0.05, 0.2))
    @pytest.mark.parametrize("ratio", (0.5, 1.0, 2.0))
    def test_matches_time_integration(self, osc, zeta, ratio):
        damped = osc.model_copy(update={"damping_ratio": zeta})
        frequency = ratio * damped.natural_frequency
        expected = steady_amplitude(damped, 1e-3, frequency)
        assert settled_amplitude(damped, 1e-3, frequency) == pytest.approx(expected, rel=0.01)


class TestEmf:
    def test_zero_amplitude(self):
        assert emf_pp(-0.03, 0, 1000) == 0

    def test_linearity(self):
        base = emf_pp(-0.03, 1e-6, 500)
        assert emf_pp(-0.06, 1e-6, 500) == pytest.approx(2 * base, rel=1e-15)
        assert emf_pp(-0.03, 2e-6, 500) == pytest.approx(2 * base, rel=1e-15)
        assert emf_pp(-0.03, 1e-6, 1000) == pytest.approx(2 * base, rel=1e-15)

    def test_sign_of_gradient(self):
        assert emf_pp(-0.03, 1e-6, 500) == emf_pp(0.03, 1e-6, 500)

    def test_value(self):
        assert emf_pp(0.01, 50e-6, 1000) == pytest.approx(2 * 0.01 * 50e-6 * 2 * math.pi * 1000)

    def test_negative_amplitude(self):
        with pytest.raises(DomainError):
            emf_pp(0.01, -1e-6, 1000)

    def test_rms(self):
        assert pp_to_rms(2 * math.sqrt(2)) == pytest.approx(1)


class TestLoadPower:
    def test_matched_load_is_best(self):
        loads = np.linspace(1, 200, 1000)
        powers = [
            load_power(1e-3, LoadCircuit(coil_resistance=53.7, load_resistance=r)) for r in loads
        ]
        assert loads[int(np.argmax(powers))] == loads[np.abs(loads - 53.7).argmin()]

    def test_shorted(self):
        assert load_power(1e-3, LoadCircuit(coil_resistance=53.7, load_resistance=0)) == 0

    def test_no_voltage(self):
        assert load_power(0, LoadCircuit(coil_resistance=53.7, load_resistance=53.7)) == 0

    def test_matched_value(self):
        circuit = LoadCircuit(coil_resistance=50, load_resistance=50)
        assert load_power(1.0, circuit) == pytest.approx(1 / 200)


class TestArraySeries:
    def test_single(self):
        assert array_series(1e-3, 53.7, 1) == (1e-3, 53.7)

    def test_four(self):
        emf, resistance = array_series(1e-3, 53.7, 4)
        assert emf == pytest.approx(4e-3)
        assert resistance == pytest.approx(4 * 53.7)

    @pytest.mark.parametrize("n", (2, 5, 10))
    def test_matched_power_adds_up(self, n):
        unit = load_power(1e-3, LoadCircuit(coil_resistance=53.7, load_resistance=53.7))
        emf, resistance = array_series(1e-3, 53.7, n)
        circuit = LoadCircuit(coil_resistance=resistance, load_resistance=resistance)
        assert load_power(emf, circuit) == pytest.approx(n * unit)

    @pytest.mark.parametrize("n", (0, -1, 2.5, True))
    def test_invalid_count(self, n):
        with pytest.raises(DomainError):
            array_series(1e-3, 53.7, n)


class TestDrive:
    def test_displacement(self, device):
        drive = device.drive
        assert drive_amplitude(device, drive) == 50e-6
        force = drive_force(device, drive)
        assert steady_amplitude(device.oscillator, force, drive.frequency) == pytest.approx(50e-6)

    def test_spl(self, spl_device):
        force = drive_force(spl_device, spl_device.drive)
        assert force == pytest.approx(spl_to_pressure(94) * 4e-6)

    def test_pressure_matches_spl(self, device):
        spl = DriveSpec(kind=DriveKind.SPL, value=94, frequency=800)
        pressure = DriveSpec(kind=DriveKind.PRESSURE, value=spl_to_pressure(94), frequency=800)
        assert drive_amplitude(device, pressure) == pytest.approx(drive_amplitude(device, spl))

    def test_effective_area_override(self, spl_device):
        doubled = spl_device.replace(effective_area=8e-6)
        assert drive_force(doubled, doubled.drive) == pytest.approx(
            2 * drive_force(spl_device, spl_device.drive)
        )

    def test_response_at(self, device):
        point = response_at(device)
        assert point.frequency == 1000
        assert point.amplitude == 50e-6
        assert point.velocity_peak == pytest.approx(2 * math.pi * 1000 * 50e-6)
        assert point.emf_pp == pytest.approx(emf_pp(device.flux_gradient, 50e-6, 1000))
        expected_power = pp_to_rms(point.emf_pp) ** 2 / (4 * device.coil_resistance)
        assert point.load_power == pytest.approx(expected_power)

    def test_response_without_drive(self, device):
        with pytest.raises(DomainError):
            response_at(device.replace(drive=None))


class TestFrequencySweep:
    def test_peak_location(self, spl_device):
        lightly_damped = spl_device.replace(damping_ratio=0.01)
        f1 = lightly_damped.natural_frequency
        curve = frequency_sweep(lightly_damped, None, 100, 2000, 191)
        expected = f1 * math.sqrt(1 - 2 * 0.01**2)
        assert abs(curve.peak.frequency - expected) <= 10

    def test_static_regime(self, spl_device):
        f1 = spl_device.natural_frequency
        curve = frequency_sweep(spl_device, None, f1 / 10, f1, 10)
        static = drive_force(spl_device, spl_device.drive) / spl_device.stiffness
        assert curve.points[0].amplitude == pytest.approx(static, rel=0.02)

    def test_monotone_below_resonance(self, spl_device):
        f1 = spl_device.natural_frequency
        curve = frequency_sweep(spl_device, None, 10, 0.95 * f1, 60)
        assert np.all(np.diff(curve.amplitudes) > 0)

    def test_grid_reversal(self, spl_device):
        curve = frequency_sweep(spl_device, None, 200, 1500, 15)
        reversed_points = [
            response_at(spl_device, spl_device.drive.at_frequency(f))
            for f in curve.frequencies[::-1]
        ]
        assert [p.amplitude for p in reversed_points] == list(curve.amplitudes[::-1])

    def test_log_grid(self, spl_device):
        curve = frequency_sweep(spl_device, None, 100, 10000, 3, grid=Grid.LOG)
        np.testing.assert_allclose(curve.frequencies, [100, 1000, 10000])

    def test_displacement_emf_grows_linearly(self, device):
        curve = frequency_sweep(device, None, 100, 400, 4)
        np.testing.assert_allclose(curve.emf / curve.frequencies, curve.emf[0] / 100, rtol=1e-12)

    def test_bad_range(self, spl_device):
        with pytest.raises(DomainError):
            frequency_sweep(spl_device, None, 2000, 100, 10)

    def test_too_few_points(self, spl_device):
        with pytest.raises(DomainError):
            frequency_sweep(spl_device, None, 100, 2000, 1)


class TestTimeSimulate:
    def test_energy_conserved(self, osc):
        undamped = osc.model_copy(update={"damping_ratio": 0.0})
        f1 = undamped.natural_frequency
        cycles = 10
        trace = time_simulate(
            undamped, None, None, sinusoid(0.0, f1), 1 / (200 * f1), cycles / f1, z0=1e-6
        )
        energy = trace.energy(undamped)
        assert abs(energy[-1] - energy[0]) / energy[0] / cycles < 1e-6

    def test_at_rest(self, osc):
        trace = time_simulate(osc, None, None, sinusoid(0.0, 100), 1e-5, 1e-3)
        assert not trace.displacement.any()
        assert not trace.velocity.any()
        assert not trace.emf.any()

    def test_step_too_large(self, osc):
        with pytest.raises(DomainError):
            time_simulate(osc, None, None, sinusoid(0.0, 100), 1e-4, 1e-2)

    def test_non_finite_forcing(self, osc):
        with pytest.raises(DomainError):
            time_simulate(osc, None, None, lambda t: np.full_like(t, np.nan), 1e-5, 1e-3)

    def test_emf_matches_linear_model(self, device):
        osc = device.oscillator.model_copy(update={"damping_ratio": 0.0})
        f1 = osc.natural_frequency
        z0 = 0.5e-6
        trace = time_simulate(
            osc,
            device.magnet,
            device.coil,
            sinusoid(0.0, f1),
            1 / (200 * f1),
            2 / f1,
            z0=z0,
            profile_points=41,
        )
        expected = emf_pp(device.flux_gradient, z0, f1)
        assert trace.emf_pp == pytest.approx(expected, rel=0.01)

    def test_stroke_reaches_coil(self, device):
        osc = device.oscillator
        f1 = osc.natural_frequency
        with pytest.raises(DomainError):
            time_simulate(
                osc, device.magnet, device.coil, sinusoid(0.0, f1), 1 / (200 * f1), 1 / f1, z0=10e-6
            )

    def test_stroke_just_inside_gap(self, device):
        coil = device.coil.model_copy(update={"plane_height": 100e-6})
        osc = device.oscillator.model_copy(update={"damping_ratio": 0.0})
        f1 = osc.natural_frequency
        trace = time_simulate(
            osc, device.magnet, coil, sinusoid(0.0, f1), 1 / (200 * f1), 1 / f1, z0=95e-6
        )
        assert np.all(np.isfinite(trace.emf))
        assert trace.emf_pp > 0

    def test_large_stroke_distortion(self, device):
        osc = device.oscillator.model_copy(update={"damping_ratio": 0.0})
        f1 = osc.natural_frequency
        gap = device.coil.plane_height

        def asymmetry(z0):
            trace = time_simulate(
                osc, device.magnet, device.coil, sinusoid(0.0, f1), 1 / (200 * f1), 2 / f1, z0=z0
            )
            # Half a period apart the motion mirrors, so a linear coupling cancels.
            residual = trace.emf[:200] + trace.emf[100:300]
            return float(np.abs(residual).max() / np.abs(trace.emf).max())

        large = asymmetry(0.8 * gap)
        small = asymmetry(0.05 * gap)
        assert large > 0.05
        assert large > 4 * small

    def test_energy_growth(self, osc, mocker):
        mocker.patch("acoustic_microgen.response.STEPS_PER_PERIOD_MIN", 1)
        undamped = osc.model_copy(update={"damping_ratio": 0.0})
        f1 = undamped.natural_frequency
        with pytest.raises(NumericalError, match="Energy grew") as err:
            time_simulate(undamped, None, None, sinusoid(0.0, f1), 0.5 / f1, 5 / f1, z0=1e-6)

        assert err.value.estimate > 1


class TestSampledForcing:
    def test_interpolates_samples(self):
        forcing = SampledForcing(values=[0.0, 1.0, 0.0, -1.0, 0.0], sample_rate=1000)
        np.testing.assert_allclose(forcing(np.arange(5) / 1000), [0, 1, 0, -1, 0], atol=1e-12)
        assert forcing.duration == pytest.approx(4e-3)
        assert forcing.peak == 1

    def test_zero_outside_recording(self):
        forcing = SampledForcing(values=[1.0, 1.0, 1.0], sample_rate=100)
        assert forcing(np.array([-0.01, 0.05])).tolist() == [0.0, 0.0]

    def test_drives_simulation(self, osc):
        f1 = osc.natural_frequency
        rate = 100 * f1
        samples = 1e-3 * np.sin(2 * np.pi * f1 * np.arange(200) / rate)
        forcing = SampledForcing(values=samples, sample_rate=rate)
        trace = time_simulate(osc, None, None, forcing, 1 / rate, 4 / f1)
        assert np.abs(trace.displacement).max() > 0

    def test_too_short(self):
        with pytest.raises(DomainError):
            SampledForcing(values=[1.0], sample_rate=100)
