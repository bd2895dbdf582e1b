"""Simulator for diffusive load balancing of loosely-synchronous jobs over churning P2P overlays."""

__version__ = "0.1.0"
