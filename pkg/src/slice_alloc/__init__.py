"""Network-slicing uplink resource allocation for two-tier cellular networks."""

__version__ = "0.1.0"
