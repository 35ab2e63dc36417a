"""Atomic line data and trap laser parameters, loaded from configuration.

Every physical constant of the probed transition lives here so the rest of
the package is constant-free.  The packaged defaults describe the 87Rb D2
line (F=1 -> F' manifold) and the dipole trap laser; they are taken from the
standard published line-data tables (Steck, "Rubidium 87 D Line Data"):
vacuum wavelength 780.241209686 nm, natural linewidth 6.0666 MHz, excited
state hyperfine intervals 72.218 MHz (F'=0 to F'=1) and 156.947 MHz (F'=1 to
F'=2), atomic mass 1.44316060e-25 kg.  Any JSON document with the same keys
can replace them.

All frequencies are linear frequencies in Hz.  The light-atom coupling only
ever uses the ratio of the linewidth to a detuning, so no 2*pi bookkeeping
enters as long as both use the same convention.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from typing import Any, Mapping

from .errors import ValidationError

ATOM_KEYS = (
    "wavelength_m",
    "linewidth_hz",
    "hf_splitting_f1_hz",
    "hf_splitting_f2_hz",
    "mass_kg",
)
TRAP_KEYS = ("wavelength_m", "power_w", "waist_m")


def _require_positive_number(value: Any, name: str) -> float:
    # bool is an int subclass; reject it explicitly
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"{name} must be a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value) or value <= 0.0:
        raise ValidationError(f"{name} must be positive and finite, got {value!r}")
    return value


def _require_nonnegative_number(value: Any, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"{name} must be a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value) or value < 0.0:
        raise ValidationError(f"{name} must be >= 0 and finite, got {value!r}")
    return value


@dataclass(frozen=True)
class AtomSpec:
    """Line data for one F=1 -> F' in {0,1,2} probe transition manifold.

    hyperfine_splittings maps F' to the offset (Hz) of that excited level
    above F'=0, so entry 0 is always 0.  cross_section_m2 is the summed
    on-resonance scattering cross section lambda^2/pi, computed once here
    and reused everywhere.
    """

    wavelength_m: float
    linewidth_hz: float
    hyperfine_splittings: Mapping[int, float]
    mass_kg: float
    cross_section_m2: float = field(init=False)

    def __post_init__(self):
        _require_positive_number(self.wavelength_m, "wavelength_m")
        _require_positive_number(self.linewidth_hz, "linewidth_hz")
        _require_positive_number(self.mass_kg, "mass_kg")
        splittings = dict(self.hyperfine_splittings)
        if set(splittings) != {0, 1, 2}:
            raise ValidationError(
                "hyperfine_splittings must map exactly F'=0,1,2, got keys "
                f"{sorted(splittings)}"
            )
        if splittings[0] != 0.0:
            raise ValidationError(
                f"hyperfine_splittings[0] must be 0, got {splittings[0]!r}"
            )
        if not (0.0 <= splittings[1] < splittings[2]):
            raise ValidationError(
                "hyperfine splittings must satisfy 0 <= F'=1 < F'=2, got "
                f"{splittings[1]!r} and {splittings[2]!r}"
            )
        object.__setattr__(self, "hyperfine_splittings", splittings)
        object.__setattr__(
            self, "cross_section_m2", self.wavelength_m**2 / math.pi
        )


@dataclass(frozen=True)
class TrapSpec:
    """Dipole trap laser parameters.

    waist_m is the 1/e^2 intensity radius.  depth_k (temperature-equivalent
    trap depth in K) is a derived quantity; loaders leave it None and the
    ensemble-dynamics trap depth function computes it, since it also needs
    the atomic line data.
    """

    wavelength_m: float
    power_w: float
    waist_m: float
    depth_k: float | None = None

    def __post_init__(self):
        _require_positive_number(self.wavelength_m, "trap.wavelength_m")
        # power 0 is legal: a switched-off trap has zero depth
        _require_nonnegative_number(self.power_w, "trap.power_w")
        _require_positive_number(self.waist_m, "trap.waist_m")
        if self.depth_k is not None:
            _require_positive_number(self.depth_k, "trap.depth_k")


def load_atom_spec(document: Mapping[str, Any]) -> AtomSpec:
    """Build a validated AtomSpec from a parsed JSON document.

    The document must contain all of ATOM_KEYS with positive numeric values;
    a nested "trap" section is permitted (see load_trap_spec) and any other
    key is rejected so typos fail loudly.
    """
    if not isinstance(document, Mapping):
        raise ValidationError(
            f"atom data document must be a JSON object, got {type(document).__name__}"
        )
    for key in ATOM_KEYS:
        if key not in document:
            raise ValidationError(f"atom data document is missing key {key!r}")
    unknown = set(document) - set(ATOM_KEYS) - {"trap"}
    if unknown:
        raise ValidationError(
            f"atom data document has unknown key {sorted(unknown)[0]!r}"
        )
    values = {key: _require_positive_number(document[key], key) for key in ATOM_KEYS}
    if values["hf_splitting_f1_hz"] >= values["hf_splitting_f2_hz"]:
        raise ValidationError(
            "hf_splitting_f1_hz must be smaller than hf_splitting_f2_hz, got "
            f"{values['hf_splitting_f1_hz']!r} >= {values['hf_splitting_f2_hz']!r}"
        )
    return AtomSpec(
        wavelength_m=values["wavelength_m"],
        linewidth_hz=values["linewidth_hz"],
        hyperfine_splittings={
            0: 0.0,
            1: values["hf_splitting_f1_hz"],
            2: values["hf_splitting_f2_hz"],
        },
        mass_kg=values["mass_kg"],
    )


def load_trap_spec(document: Mapping[str, Any]) -> TrapSpec:
    """Build a validated TrapSpec from the "trap" section of a document."""
    if not isinstance(document, Mapping):
        raise ValidationError(
            f"trap section must be a JSON object, got {type(document).__name__}"
        )
    for key in TRAP_KEYS:
        if key not in document:
            raise ValidationError(f"trap section is missing key {key!r}")
    unknown = set(document) - set(TRAP_KEYS)
    if unknown:
        raise ValidationError(f"trap section has unknown key {sorted(unknown)[0]!r}")
    return TrapSpec(
        wavelength_m=_require_positive_number(document["wavelength_m"], "trap.wavelength_m"),
        power_w=_require_nonnegative_number(document["power_w"], "trap.power_w"),
        waist_m=_require_positive_number(document["waist_m"], "trap.waist_m"),
    )


def load_atom_file(path) -> AtomSpec:
    """Load an AtomSpec from a JSON file path."""
    try:
        with open(path, "r", encoding="utf-8") as handle:
            document = json.load(handle)
    except OSError as exc:
        raise ValidationError(f"cannot read atom data file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(
            f"atom data file {path} is not valid JSON (line {exc.lineno}): {exc.msg}"
        ) from exc
    return load_atom_spec(document)


def load_trap_file(path) -> TrapSpec:
    """Load the TrapSpec from the "trap" section of a JSON file."""
    try:
        with open(path, "r", encoding="utf-8") as handle:
            document = json.load(handle)
    except OSError as exc:
        raise ValidationError(f"cannot read atom data file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(
            f"atom data file {path} is not valid JSON (line {exc.lineno}): {exc.msg}"
        ) from exc
    if "trap" not in document:
        raise ValidationError(f"atom data file {path} has no trap section")
    return load_trap_spec(document["trap"])


def default_atom_document() -> dict:
    """Return the packaged 87Rb D2 document as a plain dict."""
    text = resources.files("coldspin.data").joinpath("rb87_d2.json").read_text("utf-8")
    return json.loads(text)


def default_atom_spec() -> AtomSpec:
    """Packaged 87Rb D2 line data (sources in the module docstring)."""
    return load_atom_spec(default_atom_document())


def default_trap_spec() -> TrapSpec:
    """Packaged trap laser defaults: 1030 nm, 7 W, 50 um waist."""
    return load_trap_spec(default_atom_document()["trap"])


def resonant_cross_section(spec: AtomSpec) -> float:
    """Summed on-resonance scattering cross section sigma_0 = lambda^2/pi."""
    return spec.cross_section_m2
