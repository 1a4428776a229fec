"""HAPS-assisted hybrid RF/FSO satellite downlink outage analysis."""

__version__ = "0.1.0"
