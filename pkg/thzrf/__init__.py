"""thzrf - ASER analysis toolkit for dual-hop mixed THz-RF decode-and-forward links."""

__version__ = "0.3.0"
