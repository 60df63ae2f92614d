"""Name-based access control (NAC and NAC-ABE) over a simulated NDN network."""

__version__ = "0.1.0"
