"""Leg-kick motion laws and the six-pattern experiment set.

Both legs follow sinusoidal deflections sharing one kick frequency; the
style is fixed by the phase offset between the legs: synchronous legs
(zero offset) give a dolphin kick, a half-cycle offset gives a flutter
kick.
"""

from __future__ import annotations

import configparser
import enum
import io
import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi

#: Peak leg-tip deflection of the scaled leg model, metres.
DEFAULT_AMPLITUDE_M = 0.02

#: Tolerance used when matching a phase offset to a kick style.
PHASE_TOL = 1e-12

PATTERN_IDS = ("s1", "s2", "s3", "s4", "s5", "s6")


class KickStyle(enum.Enum):
    DOLPHIN = "dolphin"
    FLUTTER = "flutter"


@dataclass(frozen=True)
class KickPattern:
    """One entry of the six-pattern set: a (style, frequency) pair.

    ``phase_left``/``phase_right`` are the initial phases of the two
    legs in radians; their absolute difference must be 0 for a dolphin
    kick and pi for a flutter kick.
    """

    id: str
    frequency_hz: float
    phase_left: float
    phase_right: float
    style: KickStyle

    def __post_init__(self):
        if not (math.isfinite(self.frequency_hz) and self.frequency_hz > 0.0):
            raise ValueError(f"kick frequency must be positive, got {self.frequency_hz!r}")
        if not (math.isfinite(self.phase_left) and math.isfinite(self.phase_right)):
            raise ValueError("leg phases must be finite")
        dphi = abs(self.phase_left - self.phase_right)
        if self.style is KickStyle.DOLPHIN and dphi > PHASE_TOL:
            raise ValueError(f"dolphin kick requires equal leg phases, got |dphi|={dphi}")
        if self.style is KickStyle.FLUTTER and abs(dphi - math.pi) > PHASE_TOL:
            raise ValueError(f"flutter kick requires a half-cycle phase offset, got |dphi|={dphi}")

    @property
    def index(self) -> int:
        """Zero-based position of this pattern within ``PATTERN_IDS``."""
        return PATTERN_IDS.index(self.id)


@dataclass(frozen=True)
class LegState:
    """Instantaneous deflection of both legs at time ``t`` (metres)."""

    t: float
    a_left: float
    a_right: float


def leg_deflection(pattern: KickPattern, amplitude: float, t: float) -> LegState:
    """Evaluate the sinusoidal kick law for both legs at time ``t``.

    Raises ``ValueError`` for non-finite or non-positive amplitude and
    for non-finite or negative ``t``.
    """
    if not (math.isfinite(amplitude) and amplitude > 0.0):
        raise ValueError(f"amplitude must be a positive finite number, got {amplitude!r}")
    if not (math.isfinite(t) and t >= 0.0):
        raise ValueError(f"time must be finite and non-negative, got {t!r}")
    phase = TWO_PI * pattern.frequency_hz * t
    return LegState(
        t=t,
        a_left=amplitude * math.sin(phase + pattern.phase_left),
        a_right=amplitude * math.sin(phase + pattern.phase_right),
    )


def deflection_arrays(pattern: KickPattern, amplitude: float, t) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised kick law: deflections of (left, right) legs over ``t``."""
    t = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(t)):
        raise ValueError("time samples must be finite")
    phase = TWO_PI * pattern.frequency_hz * t
    return amplitude * np.sin(phase + pattern.phase_left), amplitude * np.sin(phase + pattern.phase_right)


def pattern_set() -> list[KickPattern]:
    """The canonical six-pattern set.

    Odd ids (s1, s3, s5) are dolphin kicks, even ids (s2, s4, s6) are
    flutter kicks, at 1, 1.5 and 2 Hz respectively. Phases are
    canonicalised to ``phase_left = 0``.
    """
    patterns = []
    for i, freq in enumerate((1.0, 1.0, 1.5, 1.5, 2.0, 2.0)):
        flutter = i % 2 == 1
        patterns.append(
            KickPattern(
                id=PATTERN_IDS[i],
                frequency_hz=freq,
                phase_left=0.0,
                phase_right=math.pi if flutter else 0.0,
                style=KickStyle.FLUTTER if flutter else KickStyle.DOLPHIN,
            )
        )
    return patterns


def pattern_by_id(pattern_id: str) -> KickPattern:
    for p in pattern_set():
        if p.id == pattern_id:
            return p
    raise KeyError(f"unknown pattern id {pattern_id!r}, expected one of {PATTERN_IDS}")


def patterns_to_config(patterns: list[KickPattern]) -> str:
    """Serialise patterns to an INI-style listing of (id, f, phases)."""
    cp = configparser.ConfigParser()
    for p in patterns:
        cp[p.id] = {
            "frequency_hz": repr(p.frequency_hz),
            "phase_left": repr(p.phase_left),
            "phase_right": repr(p.phase_right),
            "style": p.style.value,
        }
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def patterns_from_config(text: str) -> list[KickPattern]:
    """Parse a pattern listing produced by :func:`patterns_to_config`."""
    cp = configparser.ConfigParser()
    cp.read_string(text)
    patterns = []
    for section in cp.sections():
        sec = cp[section]
        patterns.append(
            KickPattern(
                id=section,
                frequency_hz=float(sec["frequency_hz"]),
                phase_left=float(sec["phase_left"]),
                phase_right=float(sec["phase_right"]),
                style=KickStyle(sec["style"]),
            )
        )
    return patterns
