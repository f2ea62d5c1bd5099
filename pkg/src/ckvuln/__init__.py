"""Enumerate cyber-kinetic vulnerabilities of piecewise-affine control programs.

The pipeline extracts the paths of a small C-like controller, bounds each
path's control output exactly, and runs an abstraction-refinement loop over
STL falsification to find which sequences of code paths can drive a plant
into violating its safety requirement.
"""

__version__ = "0.1.0"
