"""Material property table and the RGB-label -> material dictionary.

The database is a TOML file with one table per material; see
``data/materials.toml`` for the shipped twelve-material set and the README
for the exact grammar. The table is immutable after load and safe to share
across threads.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass
from importlib import resources
from typing import Iterator

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import MaterialDbError, UnknownColorError, UnknownMaterialError

__all__ = [
    "MaterialProperties",
    "MaterialTable",
    "load_material_db",
    "default_table",
    "parse_color",
    "format_color",
]

_REQUIRED_KEYS = (
    "name",
    "color",
    "density",
    "young_modulus",
    "poisson",
    "damping_const",
    "damping_freq",
    "thickness",
)


@dataclass(frozen=True)
class MaterialProperties:
    """Physical, damping, and labelling parameters of one material.

    Units: density kg/m3, young_modulus N/m2, poisson_ratio dimensionless,
    damping_const 1/s (constant loss), damping_freq dimensionless per Hz
    (frequency loss: multiplied by a mode frequency it yields 1/s),
    default_thickness m. label_color is the 8-bit RGB of this material's
    segmentation class.
    """

    name: str
    density: float
    young_modulus: float
    poisson_ratio: float
    damping_const: float
    damping_freq: float
    label_color: tuple[int, int, int]
    default_thickness: float

    def validate(self) -> None:
        def bad(field, why):
            raise MaterialDbError(f"material '{self.name}': {field} {why}")

        if not self.name:
            raise MaterialDbError("material with empty name")
        if not (self.density > 0):
            bad("density", "must be > 0")
        if not (self.young_modulus > 0):
            bad("young_modulus", "must be > 0")
        # nu = 0.5 is accepted (incompressible limit, e.g. rubber); 1 - nu^2
        # stays positive over the whole accepted range.
        if not (0.0 <= self.poisson_ratio <= 0.5):
            bad("poisson", "must be in [0, 0.5]")
        if self.damping_const < 0:
            bad("damping_const", "must be >= 0")
        if self.damping_freq < 0:
            bad("damping_freq", "must be >= 0")
        if self.damping_const == 0 and self.damping_freq == 0:
            bad("damping", "constant and frequency loss are both zero (would ring forever)")
        if not (self.default_thickness > 0):
            bad("thickness", "must be > 0")
        if len(self.label_color) != 3 or any(
            not isinstance(c, int) or not 0 <= c <= 255 for c in self.label_color
        ):
            bad("color", "must be an RGB triple with components 0-255")

    @property
    def specific_stiffness(self) -> float:
        """sqrt(E / (rho (1 - nu^2))): the factor that ranks plate pitch."""
        return math.sqrt(
            self.young_modulus / (self.density * (1.0 - self.poisson_ratio**2))
        )


class MaterialTable:
    """Validated, immutable collection of materials with name/color indexes."""

    def __init__(self, entries: list[MaterialProperties]):
        if not entries:
            raise MaterialDbError("no materials defined")
        by_name: dict[str, MaterialProperties] = {}
        by_color: dict[tuple[int, int, int], MaterialProperties] = {}
        for entry in entries:
            entry.validate()
            key = entry.name.lower()
            if key in by_name:
                raise MaterialDbError(f"duplicate material name '{entry.name}'")
            if entry.label_color in by_color:
                other = by_color[entry.label_color]
                raise MaterialDbError(
                    f"materials '{other.name}' and '{entry.name}' share label color "
                    f"{format_color(entry.label_color)}"
                )
            by_name[key] = entry
            by_color[entry.label_color] = entry
        self._entries = tuple(entries)
        self._by_name = by_name
        self._by_color = by_color

    @property
    def entries(self) -> tuple[MaterialProperties, ...]:
        return self._entries

    def names(self) -> list[str]:
        return [e.name for e in self._entries]

    def lookup_by_name(self, name: str) -> MaterialProperties:
        try:
            return self._by_name[name.lower()]
        except KeyError:
            available = ", ".join(sorted(self.names()))
            raise UnknownMaterialError(
                f"unknown material '{name}' (available: {available})"
            ) from None

    def lookup_by_color(self, rgb) -> MaterialProperties:
        key = (int(rgb[0]), int(rgb[1]), int(rgb[2]))
        try:
            return self._by_color[key]
        except KeyError:
            raise UnknownColorError(key) from None

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self) -> Iterator[MaterialProperties]:
        return iter(self._entries)

    def __contains__(self, name: str) -> bool:
        return name.lower() in self._by_name


def parse_color(text: str) -> tuple[int, int, int]:
    """Parse a '#RRGGBB' hex color into an RGB triple."""
    if not isinstance(text, str) or len(text) != 7 or not text.startswith("#"):
        raise MaterialDbError(f"color must look like '#RRGGBB', got {text!r}")
    try:
        value = int(text[1:], 16)
    except ValueError:
        raise MaterialDbError(f"color must look like '#RRGGBB', got {text!r}") from None
    return (value >> 16 & 0xFF, value >> 8 & 0xFF, value & 0xFF)


def format_color(rgb: tuple[int, int, int]) -> str:
    return "#{:02X}{:02X}{:02X}".format(*rgb)


def _entry_from_toml(table_key: str, raw: dict) -> MaterialProperties:
    if not isinstance(raw, dict):
        raise MaterialDbError(f"'{table_key}' is not a material table")
    missing = [k for k in _REQUIRED_KEYS if k not in raw]
    if missing:
        raise MaterialDbError(f"material '{table_key}': missing keys {', '.join(missing)}")
    unknown = [k for k in raw if k not in _REQUIRED_KEYS]
    if unknown:
        raise MaterialDbError(f"material '{table_key}': unknown keys {', '.join(unknown)}")

    def number(key):
        v = raw[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise MaterialDbError(f"material '{table_key}': {key} must be a number")
        return float(v)

    if not isinstance(raw["name"], str):
        raise MaterialDbError(f"material '{table_key}': name must be a string")
    return MaterialProperties(
        name=raw["name"],
        density=number("density"),
        young_modulus=number("young_modulus"),
        poisson_ratio=number("poisson"),
        damping_const=number("damping_const"),
        damping_freq=number("damping_freq"),
        label_color=parse_color(raw["color"]),
        default_thickness=number("thickness"),
    )


def loads_material_db(text: str) -> MaterialTable:
    """Parse a material database from TOML text."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:  # message carries line/column
        raise MaterialDbError(f"parse error: {exc}") from exc
    entries = [_entry_from_toml(key, raw) for key, raw in doc.items()]
    return MaterialTable(entries)


def load_material_db(path) -> MaterialTable:
    """Load and validate a material database file."""
    with open(path, "r", encoding="utf-8") as fh:
        return loads_material_db(fh.read())


def default_table() -> MaterialTable:
    """The shipped twelve-material database."""
    text = resources.files("sonomat.data").joinpath("materials.toml").read_text("utf-8")
    return loads_material_db(text)
