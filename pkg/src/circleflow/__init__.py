"""Numerical lab for u_t = u_xx + f(t, u, u_x) on the circle with f periodic in t."""
from .grid import CircleGrid, StateVector
from .stepper import Dissipativity, Nonlinearity, StepperConfig

__version__ = "0.1.0"

__all__ = ["CircleGrid", "StateVector", "Dissipativity", "Nonlinearity", "StepperConfig"]
