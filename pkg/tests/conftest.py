import tempfile
from pathlib import Path

import pytest

from acoustic_microgen._base import Device
from acoustic_microgen.devicefile import bundled_path, load_bundled
from acoustic_microgen.types import (
    BeamSpec,
    CoilSpec,
    DriveKind,
    DriveSpec,
    MagnetSpec,
    MaterialParams,
    PlateSpec,
)


@pytest.fixture
def temp_path():
    with tempfile.TemporaryDirectory() as temp:
        yield Path(temp).resolve()


@pytest.fixture(scope="session")
def material():
    return MaterialParams(
        youngs_modulus=2e11,
        structure_density=8910,
        magnet_density=9000,
        yield_low=660e6,
        yield_high=1120e6,
    )


@pytest.fixture(scope="session")
def beam():
    return BeamSpec(length=800e-6, width=60e-6, thickness=20e-6, count=4)


@pytest.fixture(scope="session")
def plate():
    return PlateSpec(length=2e-3, width=2e-3, thickness=20e-6)


@pytest.fixture(scope="session")
def magnet():
    return MagnetSpec(length_x=2e-3, width_y=2e-3, thickness_z=500e-6, remanence=1.2)


@pytest.fixture(scope="session")
def coil():
    return CoilSpec(
        turns=15,
        trace_width=20e-6,
        gap=20e-6,
        trace_thickness=10e-6,
        inner_side=2e-3,
        resistivity=6.99e-8,
        plane_height=10e-6,
    )


@pytest.fixture(scope="session")
def device(material, beam, plate, magnet, coil):
    return Device(
        material=material,
        beam=beam,
        plate=plate,
        magnet=magnet,
        coil=coil,
        drive=DriveSpec(kind=DriveKind.DISPLACEMENT, value=50e-6, frequency=1000),
    )


@pytest.fixture
def spl_device(device):
    return device.replace(drive=DriveSpec(kind=DriveKind.SPL, value=94, frequency=1000))


@pytest.fixture(scope="session")
def nominal():
    return load_bundled()


@pytest.fixture(scope="session")
def nominal_text():
    return bundled_path("nominal").read_text()
