"""Physical constants (SI units)."""

SPEED_OF_LIGHT = 299_792_458.0  # m/s
ELECTRON_CHARGE = 1.602176634e-19  # C
BOLTZMANN = 1.380649e-23  # J/K
