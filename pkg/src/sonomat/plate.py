"""Modal description of a thin, simply supported rectangular plate.

Kirchhoff-Love bending with all four edges simply supported admits exact
closed-form modes, which keeps every number here checkable against an
independent eigensolver:

    D     = E h^3 / (12 (1 - nu^2))
    f_mn  = (pi/2) sqrt(D / (rho h)) ((m/Lx)^2 + (n/Ly)^2)
    Phi_mn(x, y) = sin(m pi x / Lx) sin(n pi y / Ly)

Per-mode losses follow alpha = alpha0 + alpha1 * f, the constant-plus-
frequency loss model. All functions are pure; ModalModel is immutable and
safe to share across threads.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from .errors import EmptyModelError
from .materials import MaterialProperties

__all__ = [
    "PlateGeometry",
    "Mode",
    "ModalModel",
    "flexural_rigidity",
    "modal_frequencies",
    "modal_damping",
    "mode_shape",
    "build_modal_model",
    "DEFAULT_LISTENING_FRACTION",
]

# Off every low-order nodal line, so no low mode is structurally silent.
DEFAULT_LISTENING_FRACTION = (0.53, 0.47)

# Resonator peaks are kept under 0.45 * sample_rate: below Nyquist with a
# guard band against aliasing the upper skirt of the highest mode.
TRUNCATION_FRACTION = 0.45

# 60 dB of amplitude decay as an e-folding count: T60 = _LOG_1E3 / alpha
# (20 log10(e^(alpha t)) = 60  =>  alpha t = ln 1000 = 6.908).
_LOG_1E3 = math.log(1e3)


@dataclass(frozen=True)
class PlateGeometry:
    """Rectangular plate footprint and thickness, in meters."""

    length_x: float
    length_y: float
    thickness: float

    def __post_init__(self):
        if not (self.length_x > 0 and self.length_y > 0 and self.thickness > 0):
            raise ValueError("plate dimensions must all be positive")
        if self.thickness > 0.2 * min(self.length_x, self.length_y):
            warnings.warn(
                f"thickness {self.thickness} m is large for a "
                f"{self.length_x} x {self.length_y} m plate; "
                "thin-plate assumptions degrade",
                stacklevel=2,
            )

    def contains(self, point) -> bool:
        x, y = point
        return 0.0 <= x <= self.length_x and 0.0 <= y <= self.length_y


@dataclass(frozen=True)
class Mode:
    """One plate mode: indices, frequency (Hz), decay rate (1/s), gain."""

    m: int
    n: int
    frequency: float
    decay_rate: float
    gain: float


@dataclass(frozen=True)
class ModalModel:
    """Bank of modes for one plate/material/excitation configuration.

    Modes are sorted by (frequency, m, n) and truncated below Nyquist.
    excitation_point/listening_point are kept so gains can be recomputed
    when an excitation lands somewhere else on the plate.
    """

    modes: tuple[Mode, ...]
    flexural_rigidity: float
    material_name: str
    geometry: PlateGeometry
    sample_rate: float
    excitation_point: tuple[float, float]
    listening_point: tuple[float, float]

    def __post_init__(self):
        if not self.modes:
            raise EmptyModelError("modal model with no modes")
        nyquist = self.sample_rate / 2.0
        seen = set()
        prev = None
        for mode in self.modes:
            if not (0.0 < mode.frequency < nyquist):
                raise ValueError(f"mode {(mode.m, mode.n)} at {mode.frequency} Hz "
                                 f"violates 0 < f < {nyquist}")
            if mode.decay_rate <= 0:
                raise ValueError(f"mode {(mode.m, mode.n)} has non-positive decay")
            if abs(mode.gain) > 1.0:
                raise ValueError(f"mode {(mode.m, mode.n)} gain outside [-1, 1]")
            if (mode.m, mode.n) in seen:
                raise ValueError(f"duplicate mode {(mode.m, mode.n)}")
            seen.add((mode.m, mode.n))
            key = (mode.frequency, mode.m, mode.n)
            if prev is not None and key <= prev:
                raise ValueError("modes not strictly sorted by (frequency, m, n)")
            prev = key

    def __len__(self) -> int:
        return len(self.modes)

    @property
    def fundamental(self) -> Mode:
        return self.modes[0]

    def t60_estimate(self) -> float:
        """Decay time (s) of the least-damped audible mode.

        Audible means |gain| > 1e-6 and 20 Hz <= f <= 20 kHz; if nothing
        qualifies, falls back to the least-damped mode overall.
        """
        audible = [
            m.decay_rate
            for m in self.modes
            if abs(m.gain) > 1e-6 and 20.0 <= m.frequency <= 20_000.0
        ]
        alpha = min(audible) if audible else min(m.decay_rate for m in self.modes)
        return _LOG_1E3 / alpha

    def dump(self) -> str:
        """Mode table as text (m, n, frequency, decay, gain), one per line."""
        lines = [
            f"# material={self.material_name} "
            f"plate={self.geometry.length_x}x{self.geometry.length_y}"
            f"x{self.geometry.thickness} D={self.flexural_rigidity!r} "
            f"sr={self.sample_rate} modes={len(self.modes)}",
            "# m n frequency_hz decay_per_s gain",
        ]
        for mode in self.modes:
            lines.append(
                f"{mode.m} {mode.n} {mode.frequency!r} {mode.decay_rate!r} {mode.gain!r}"
            )
        return "\n".join(lines) + "\n"


def flexural_rigidity(young_modulus: float, thickness: float, poisson_ratio: float) -> float:
    """Bending stiffness D = E h^3 / (12 (1 - nu^2)), in N*m."""
    if young_modulus <= 0:
        raise ValueError("young_modulus must be > 0")
    if thickness <= 0:
        raise ValueError("thickness must be > 0")
    if not (0.0 <= poisson_ratio < 1.0):
        raise ValueError("poisson_ratio must be in [0, 1)")
    return young_modulus * thickness**3 / (12.0 * (1.0 - poisson_ratio**2))


def modal_frequencies(
    geometry: PlateGeometry,
    material: MaterialProperties,
    max_frequency: float,
) -> list[tuple[int, int, float]]:
    """All (m, n, f_mn) with f_mn <= max_frequency, sorted by (f, m, n).

    Complete by construction: index bounds come from inverting the
    dispersion relation per axis.
    """
    D = flexural_rigidity(material.young_modulus, geometry.thickness, material.poisson_ratio)
    coeff = 0.5 * math.pi * math.sqrt(D / (material.density * geometry.thickness))
    # f = coeff ((m/Lx)^2 + (n/Ly)^2)  =>  m <= Lx sqrt(f/coeff)
    budget = max_frequency / coeff
    m_max = int(math.floor(geometry.length_x * math.sqrt(budget)))
    n_max = int(math.floor(geometry.length_y * math.sqrt(budget)))
    out = []
    for m in range(1, m_max + 1):
        km = (m / geometry.length_x) ** 2
        for n in range(1, n_max + 1):
            f = coeff * (km + (n / geometry.length_y) ** 2)
            if f <= max_frequency:
                out.append((f, m, n))
    if not out:
        f11 = coeff * ((1 / geometry.length_x) ** 2 + (1 / geometry.length_y) ** 2)
        raise EmptyModelError(
            f"fundamental at {f11:.1f} Hz exceeds the {max_frequency:.1f} Hz ceiling"
        )
    out.sort()
    return [(m, n, f) for f, m, n in out]


def modal_damping(frequency: float, material: MaterialProperties) -> float:
    """Per-mode decay rate alpha = alpha0 + alpha1 * f, in 1/s."""
    if frequency <= 0:
        raise ValueError("frequency must be > 0")
    return material.damping_const + material.damping_freq * frequency


def mode_shape(geometry: PlateGeometry, m: int, n: int, point) -> float:
    """Simply supported mode shape sin(m pi x/Lx) sin(n pi y/Ly) at a point."""
    x, y = point
    if not geometry.contains(point):
        raise ValueError(
            f"point ({x}, {y}) outside plate "
            f"[0, {geometry.length_x}] x [0, {geometry.length_y}]"
        )
    return math.sin(m * math.pi * x / geometry.length_x) * math.sin(
        n * math.pi * y / geometry.length_y
    )


def build_modal_model(
    geometry: PlateGeometry,
    material: MaterialProperties,
    excitation_point=None,
    listening_point=None,
    sample_rate: float = 48_000.0,
) -> ModalModel:
    """Assemble the full modal model for one plate configuration.

    Modes are enumerated up to 0.45 * sample_rate; each gain is the product
    of the mode shape at the excitation and listening points. Modes landing
    on nodes keep their near-zero gains: silence there is physical.
    """
    if sample_rate < 8000:
        raise ValueError("sample_rate must be at least 8000 Hz")
    if excitation_point is None:
        excitation_point = (geometry.length_x / 2.0, geometry.length_y / 2.0)
    if listening_point is None:
        listening_point = (
            DEFAULT_LISTENING_FRACTION[0] * geometry.length_x,
            DEFAULT_LISTENING_FRACTION[1] * geometry.length_y,
        )
    for label, point in (("excitation", excitation_point), ("listening", listening_point)):
        if not geometry.contains(point):
            raise ValueError(f"{label} point {point} outside plate")

    D = flexural_rigidity(material.young_modulus, geometry.thickness, material.poisson_ratio)
    modes = []
    for m, n, f in modal_frequencies(geometry, material, TRUNCATION_FRACTION * sample_rate):
        gain = mode_shape(geometry, m, n, excitation_point) * mode_shape(
            geometry, m, n, listening_point
        )
        modes.append(Mode(m, n, f, modal_damping(f, material), gain))
    return ModalModel(
        modes=tuple(modes),
        flexural_rigidity=D,
        material_name=material.name,
        geometry=geometry,
        sample_rate=float(sample_rate),
        excitation_point=(float(excitation_point[0]), float(excitation_point[1])),
        listening_point=(float(listening_point[0]), float(listening_point[1])),
    )
