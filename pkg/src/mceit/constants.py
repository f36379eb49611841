"""Physical constants and unit conventions.

Unit conventions used across the package:

* user-facing frequencies are ordinary frequencies in MHz (the values a
  spectrum analyser would show); time is in microseconds,
* dynamics internally use angular frequencies in rad/us, converted once at
  the module boundary via :func:`to_angular`,
* the device module works in SI plus GHz for circuit energies.
"""

import math

# flux quantum [Wb]
PHI0 = 2.067833848e-15

# reduced Planck constant [J s]
HBAR = 1.054571817e-34

TWO_PI = 2.0 * math.pi


def to_angular(freq_mhz: float) -> float:
    """Ordinary frequency in MHz -> angular frequency in rad/us."""
    return TWO_PI * freq_mhz


def from_angular(omega: float) -> float:
    """Angular frequency in rad/us -> ordinary frequency in MHz."""
    return omega / TWO_PI
