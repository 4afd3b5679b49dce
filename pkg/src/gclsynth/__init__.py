"""Gate control list synthesis for 802.1Qbv networks with unsynchronized end systems."""

__version__ = "0.1.0"
