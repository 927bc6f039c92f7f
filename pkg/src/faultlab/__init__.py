"""Deterministic fault-injection lab for an ACC + LKAS driving agent."""
__version__ = "0.1.0"
