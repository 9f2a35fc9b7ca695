"""C^r conforming finite element and C^r interpolation DOF sets on simplices."""

__version__ = "0.1.0"
