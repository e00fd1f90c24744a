"""Free liberation of two projections: moment flow, transforms, subordination,
free entropy and a random-matrix oracle."""

__version__ = "0.1.0"
