"""Three-phase phasor arithmetic and symmetrical-component decomposition.

Angles are degrees, normalized to (-180, 180]. Zero-magnitude phasors carry
angle 0 by convention, and phasor equality is complex-plane equality, so the
origin has a single representation.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

DEG = math.pi / 180.0

# unit rotation by +120 degrees
ALPHA = cmath.exp(1j * 120.0 * DEG)


def normalize_angle_deg(angle: float) -> float:
    """Fold an angle in degrees into (-180, 180]."""
    a = math.fmod(angle, 360.0)
    if a > 180.0:
        a -= 360.0
    elif a <= -180.0:
        a += 360.0
    return a + 0.0  # collapse -0.0


@dataclass(frozen=True)
class Phasor:
    """A single-phase quantity: magnitude >= 0, angle in (-180, 180] degrees."""

    magnitude: float
    angle_deg: float = 0.0

    def __post_init__(self) -> None:
        if not math.isfinite(self.magnitude) or not math.isfinite(self.angle_deg):
            raise ValueError(f"non-finite phasor ({self.magnitude}, {self.angle_deg})")
        if self.magnitude < 0.0:
            raise ValueError(f"negative phasor magnitude {self.magnitude}")
        angle = 0.0 if self.magnitude == 0.0 else normalize_angle_deg(self.angle_deg)
        object.__setattr__(self, "angle_deg", angle)
        object.__setattr__(self, "magnitude", self.magnitude + 0.0)

    @classmethod
    def from_complex(cls, value: complex) -> "Phasor":
        mag = abs(value)
        if mag == 0.0:
            return cls(0.0, 0.0)
        return cls(mag, math.degrees(cmath.phase(value)))

    def to_complex(self) -> complex:
        return self.magnitude * cmath.exp(1j * self.angle_deg * DEG)


@dataclass(frozen=True)
class ThreePhase:
    """Phase quantities a, b, c of one electrical node."""

    a: Phasor
    b: Phasor
    c: Phasor

    @classmethod
    def balanced(cls, magnitude: float, angle_deg: float = 0.0) -> "ThreePhase":
        """A positive-sequence balanced set: b lags a by 120, c leads by 120."""
        return cls(
            Phasor(magnitude, angle_deg),
            Phasor(magnitude, angle_deg - 120.0),
            Phasor(magnitude, angle_deg + 120.0),
        )

    def phasors(self) -> tuple[Phasor, Phasor, Phasor]:
        return (self.a, self.b, self.c)


@dataclass(frozen=True)
class SequenceComponents:
    """Positive-, negative-, and zero-sequence decomposition of a ThreePhase."""

    positive: Phasor
    negative: Phasor
    zero: Phasor


def to_sequence(three_phase: ThreePhase) -> SequenceComponents:
    """Decompose phase quantities into sequence components.

    zero     = (A + B + C) / 3
    positive = (A + ALPHA*B + ALPHA^2*C) / 3
    negative = (A + ALPHA^2*B + ALPHA*C) / 3
    """
    a = three_phase.a.to_complex()
    b = three_phase.b.to_complex()
    c = three_phase.c.to_complex()
    zero = (a + b + c) / 3.0
    positive = (a + ALPHA * b + ALPHA * ALPHA * c) / 3.0
    negative = (a + ALPHA * ALPHA * b + ALPHA * c) / 3.0
    return SequenceComponents(
        positive=Phasor.from_complex(positive),
        negative=Phasor.from_complex(negative),
        zero=Phasor.from_complex(zero),
    )


def from_sequence(seq: SequenceComponents) -> ThreePhase:
    """Exact inverse of to_sequence."""
    p = seq.positive.to_complex()
    n = seq.negative.to_complex()
    z = seq.zero.to_complex()
    a = z + p + n
    b = z + ALPHA * ALPHA * p + ALPHA * n
    c = z + ALPHA * p + ALPHA * ALPHA * n
    return ThreePhase(
        a=Phasor.from_complex(a),
        b=Phasor.from_complex(b),
        c=Phasor.from_complex(c),
    )


def quantize_phasor(p: Phasor, decimals: int = 5) -> Phasor:
    """Round magnitude and angle; a magnitude that rounds to 0 flushes the angle."""
    mag = round(p.magnitude, decimals) + 0.0
    if mag == 0.0:
        return Phasor(0.0, 0.0)
    return Phasor(mag, round(p.angle_deg, decimals) + 0.0)


def quantize_three_phase(tp: ThreePhase, decimals: int = 5) -> ThreePhase:
    return ThreePhase(
        quantize_phasor(tp.a, decimals),
        quantize_phasor(tp.b, decimals),
        quantize_phasor(tp.c, decimals),
    )


def quantize_sequence(seq: SequenceComponents, decimals: int = 5) -> SequenceComponents:
    return SequenceComponents(
        quantize_phasor(seq.positive, decimals),
        quantize_phasor(seq.negative, decimals),
        quantize_phasor(seq.zero, decimals),
    )
