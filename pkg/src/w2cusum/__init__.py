"""Wavelet-domain W2-CUSUM test for a change in the spectral density of a Gaussian series."""
__version__ = "0.1.0"
