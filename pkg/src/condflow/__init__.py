"""Conditioned Gaussian random field sampling and two-stage MCMC
Bayesian inversion for Darcy flow on the unit square."""

__version__ = "0.1.0"
