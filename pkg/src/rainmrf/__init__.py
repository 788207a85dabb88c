"""Spatio-temporal rainfall anomaly detection with a three-state Markov random field."""

__version__ = "0.1.0"
