"""Single-site addressing in optical lattices with a focused laser and
microwave pulses: focal optics, light shifts, Rabi dynamics, refocusing
sequences and error budgets."""

__version__ = "0.1.0"

from .errors import DomainError, NumericalError  # noqa: E402,F401
from .model import BlochVector, QubitState, UnitSystem, bloch, make_units  # noqa: E402,F401
