"""
Device and measurement files, and the tabular results commands produce.

A device file is TOML with one table per subsystem and SI values without
unit suffixes::

    [material]
    youngs_modulus = 2e11
    ...

Unknown tables or keys are rejected, and every error names the key and
its line.
"""

import io
import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Union

import pandas as pd
import tomli
import tomli_w
from pydantic import ValidationError

from acoustic_microgen._base import DEFAULT_DAMPING_RATIO, Device
from acoustic_microgen._utils import DATA_PATH, find_line
from acoustic_microgen.coil import CoilMaterial
from acoustic_microgen.exceptions import DeviceFileError, DomainError
from acoustic_microgen.types import (
    BeamSpec,
    CoilSpec,
    DriveKind,
    DriveSpec,
    MagnetSpec,
    MaterialParams,
    MeasuredReference,
    PlateSpec,
    describe_validation_error,
)

logger = logging.getLogger(__name__)

DEFAULT_COIL_GAP = 10e-6

# Key kinds.
POSITIVE = "positive"
COUNT = "count"
REAL = "real"
FRACTION = "fraction"
NON_NEGATIVE = "non-negative"

# section -> key -> (kind, required)
DEVICE_SCHEMA: dict[str, dict[str, tuple[str, bool]]] = {
    "material": {
        "youngs_modulus": (POSITIVE, True),
        "structure_density": (POSITIVE, True),
        "magnet_density": (POSITIVE, True),
        "yield_low": (POSITIVE, True),
        "yield_high": (POSITIVE, True),
        "modulus_low": (POSITIVE, False),
        "modulus_high": (POSITIVE, False),
    },
    "beam": {
        "length": (POSITIVE, True),
        "width": (POSITIVE, True),
        "thickness": (POSITIVE, True),
        "count": (COUNT, True),
    },
    "plate": {
        "length": (POSITIVE, True),
        "width": (POSITIVE, True),
        "thickness": (POSITIVE, True),
    },
    "magnet": {
        "length": (POSITIVE, True),
        "width": (POSITIVE, True),
        "thickness": (POSITIVE, True),
        "remanence": (POSITIVE, True),
    },
    "coil": {
        "turns": (COUNT, True),
        "trace_width": (POSITIVE, True),
        "gap": (POSITIVE, True),
        "trace_thickness": (POSITIVE, True),
        "inner_side": (POSITIVE, True),
        "resistivity": (POSITIVE, False),
    },
    "assembly": {
        "coil_gap": (POSITIVE, False),
        "effective_area": (POSITIVE, False),
        "load_resistance": (NON_NEGATIVE, False),
    },
    "drive": {
        "damping_ratio": (FRACTION, False),
        "spl": (REAL, False),
        "pressure": (NON_NEGATIVE, False),
        "displacement": (NON_NEGATIVE, False),
        "frequency": (POSITIVE, True),
    },
}
OPTIONAL_SECTIONS = ("assembly",)
MEASURED_SCHEMA = {
    "measured": {
        "resonance": (NON_NEGATIVE, False),
        "thickness": (NON_NEGATIVE, False),
        "amplitude": (NON_NEGATIVE, False),
        "emf_pp": (NON_NEGATIVE, False),
        "coil_resistance": (NON_NEGATIVE, False),
    }
}
DRIVE_KEYS = tuple(kind.value for kind in DriveKind)


class _Reader:
    """
    Validates a parsed TOML document against a schema, keeping the raw
    text around to report line numbers.
    """

    def __init__(self, text: str, source: str):
        self.text = text
        self.source = source
        try:
            self.data = tomli.loads(text)
        except tomli.TOMLDecodeError as err:
            raise DeviceFileError(
                f"{source}: invalid TOML: {err}", line=getattr(err, "lineno", None)
            ) from err

    def error(self, message: str, section: str, key: Optional[str] = None) -> DeviceFileError:
        name = f"{section}.{key}" if key else section
        return DeviceFileError(
            f"{self.source}: {message}", key=name, line=find_line(self.text, section, key)
        )

    def validate(
        self, schema: dict[str, dict[str, tuple[str, bool]]], optional_sections: Sequence[str] = ()
    ) -> dict[str, dict[str, Any]]:
        for section, table in self.data.items():
            if section not in schema:
                raise self.error(f"Unknown section [{section}]", section)
            elif not isinstance(table, dict):
                raise self.error(f"'{section}' must be a [{section}] table", section)

            for key in table:
                if key not in schema[section]:
                    raise self.error(f"Unknown key '{key}' in [{section}]", section, key)

        values: dict[str, dict[str, Any]] = {}
        for section, keys in schema.items():
            if section not in self.data:
                if section in optional_sections or not any(r for _, r in keys.values()):
                    values[section] = {}
                    continue

                raise self.error(f"Missing section [{section}]", section)

            table = self.data[section]
            values[section] = {}
            for key, (kind, required) in keys.items():
                if key not in table:
                    if required:
                        raise self.error(f"Missing key '{key}' in [{section}]", section, key)

                    continue

                values[section][key] = self._check(section, key, kind, table[key])

        return values

    def _check(self, section: str, key: str, kind: str, value: Any) -> Union[int, float]:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise self.error(f"'{key}' must be a number (got {value!r})", section, key)

        elif kind == COUNT:
            if not isinstance(value, int) or value < 1:
                raise self.error(
                    f"'{key}' must be a positive integer (got {value!r})", section, key
                )

            return value

        value = float(value)
        if value != value or value in (float("inf"), float("-inf")):
            raise self.error(f"'{key}' must be finite", section, key)
        elif kind == POSITIVE and value <= 0:
            raise self.error(f"'{key}' must be positive (got {value!r})", section, key)
        elif kind == NON_NEGATIVE and value < 0:
            raise self.error(f"'{key}' must be non-negative (got {value!r})", section, key)
        elif kind == FRACTION and not 0 <= value < 1:
            raise self.error(f"'{key}' must be in [0, 1) (got {value!r})", section, key)

        return value


def _read_text(path: Union[Path, str]) -> str:
    path = Path(path)
    try:
        return path.read_text(encoding="utf-8")
    except OSError as err:
        raise DeviceFileError(f"Cannot read '{path}': {err.strerror or err}") from err


def parse_device_text(text: str, source: str = "<device>") -> Device:
    """
    Parse and validate the contents of a device file.

    Raises:
        :class:`~acoustic_microgen.exceptions.DeviceFileError`: On a TOML
          error, an unknown or missing key, or an invalid value.

    Returns:
        :class:`~acoustic_microgen.Device`
    """
    reader = _Reader(text, source)
    values = reader.validate(DEVICE_SCHEMA, optional_sections=OPTIONAL_SECTIONS)
    drive = values["drive"]
    if len(kinds := [k for k in DRIVE_KEYS if k in drive]) != 1:
        raise reader.error(
            f"[drive] needs exactly one of {', '.join(DRIVE_KEYS)} (got {len(kinds)})", "drive"
        )

    material, beam, plate = values["material"], values["beam"], values["plate"]
    magnet, coil, assembly = values["magnet"], values["coil"], values["assembly"]
    specs = {
        "material": lambda: MaterialParams(**material),
        "beam": lambda: BeamSpec(**beam),
        "plate": lambda: PlateSpec(**plate),
        "magnet": lambda: MagnetSpec(
            length_x=magnet["length"],
            width_y=magnet["width"],
            thickness_z=magnet["thickness"],
            remanence=magnet["remanence"],
        ),
        "coil": lambda: CoilSpec(
            resistivity=coil.get("resistivity", CoilMaterial.NICKEL.resistivity),
            plane_height=assembly.get("coil_gap", DEFAULT_COIL_GAP),
            **{k: v for k, v in coil.items() if k != "resistivity"},
        ),
        "drive": lambda: DriveSpec(
            kind=DriveKind.init(kinds[0]), value=drive[kinds[0]], frequency=drive["frequency"]
        ),
    }
    built = {}
    for section, build in specs.items():
        try:
            built[section] = build()
        except ValidationError as err:
            raise reader.error(
                f"Invalid [{section}]: {describe_validation_error(err)}", section
            ) from err

    try:
        return Device(
            **built,
            damping_ratio=drive.get("damping_ratio", DEFAULT_DAMPING_RATIO),
            effective_area=assembly.get("effective_area"),
            load_resistance=assembly.get("load_resistance"),
        )
    except DomainError as err:
        raise reader.error(str(err), "assembly") from err


def parse_device(path: Union[Path, str]) -> Device:
    """
    Parse and validate a device file.

    Args:
        path (Union[Path, str]): The file.

    Raises:
        :class:`~acoustic_microgen.exceptions.DeviceFileError`: When the file
          cannot be read or is invalid.

    Returns:
        :class:`~acoustic_microgen.Device`
    """
    logger.debug("Reading device file '%s'.", path)
    return parse_device_text(_read_text(path), source=str(path))


def parse_measured(path: Union[Path, str]) -> MeasuredReference:
    """
    Parse a measurement file with a single ``[measured]`` table.
    """
    reader = _Reader(_read_text(path), str(path))
    values = reader.validate(MEASURED_SCHEMA)
    return MeasuredReference(**values["measured"])


def bundled_path(name: str) -> Path:
    path = DATA_PATH / f"{name.removesuffix('.toml')}.toml"
    if not path.is_file():
        available = ", ".join(sorted(p.stem for p in DATA_PATH.glob("*.toml")))
        raise DeviceFileError(f"No bundled file '{name}'. Available: {available}.")

    return path


def load_bundled(name: str = "nominal") -> Device:
    return parse_device(bundled_path(name))


def device_to_dict(device: Device) -> dict[str, dict[str, Any]]:
    material = device.material.model_dump()
    magnet = device.magnet
    coil = device.coil
    assembly: dict[str, Any] = {"coil_gap": coil.plane_height}
    if device.effective_area_override is not None:
        assembly["effective_area"] = device.effective_area_override
    if device.load_resistance_override is not None:
        assembly["load_resistance"] = device.load_resistance_override

    drive: dict[str, Any] = {"damping_ratio": device.damping_ratio}
    if device.drive is not None:
        drive[device.drive.kind.value] = device.drive.value
        drive["frequency"] = device.drive.frequency

    return {
        "material": material,
        "beam": device.beam.model_dump(),
        "plate": device.plate.model_dump(),
        "magnet": {
            "length": magnet.length_x,
            "width": magnet.width_y,
            "thickness": magnet.thickness_z,
            "remanence": magnet.remanence,
        },
        "coil": coil.model_dump(exclude={"plane_height"}),
        "assembly": assembly,
        "drive": drive,
    }


def dump_device(device: Device) -> str:
    """
    Serialize a device back to device-file TOML. Parsing the output gives
    an identical device.
    """
    if device.drive is None:
        raise DomainError("Only devices with a drive can be written to a device file.")

    return tomli_w.dumps(device_to_dict(device))


@dataclass
class ResultTable:
    """
    A rectangular table of command results with one unit per column.
    """

    columns: tuple[str, ...]
    units: tuple[str, ...]
    rows: list[tuple] = field(default_factory=list)

    def __post_init__(self):
        self.columns = tuple(self.columns)
        self.units = tuple(self.units)
        if len(self.units) != len(self.columns):
            raise DomainError("Every column needs a unit.")

        for row in self.rows:
            if len(row) != len(self.columns):
                raise DomainError(f"Row {row!r} does not match columns {self.columns}.")

    def __len__(self) -> int:
        return len(self.rows)

    def append(self, *row):
        if len(row) != len(self.columns):
            raise DomainError(f"Row {row!r} does not match columns {self.columns}.")

        self.rows.append(tuple(row))

    def column(self, name: str) -> list:
        index = self.columns.index(name)
        return [row[index] for row in self.rows]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=list(self.columns))

    def to_csv(self) -> str:
        """
        CSV text, starting with a ``# units:`` comment line.
        """
        buffer = io.StringIO()
        buffer.write(f"# units: {','.join(self.units)}\n")
        self.to_frame().to_csv(buffer, index=False, float_format="%.12g", lineterminator="\n")
        return buffer.getvalue()

    def write(self, path: Union[Path, str]):
        Path(path).write_text(self.to_csv(), encoding="utf-8")
