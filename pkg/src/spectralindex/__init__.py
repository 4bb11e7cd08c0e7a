"""Index transforms, spectral heat kernels, Yor integrals and killed diffusions."""
__version__ = "0.1.0"
