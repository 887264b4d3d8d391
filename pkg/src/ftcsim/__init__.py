"""Fault-tolerant flight control simulation: aircraft model, pseudospectral NMPC,
unscented-filter fault detection, and scenario tooling."""

__version__ = "0.1.0"
