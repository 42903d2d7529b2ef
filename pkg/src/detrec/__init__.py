"""Detectable recoverable objects over a simulated NVM crash model, with
exhaustive and randomized checking of durable linearizability and
detectability."""

__version__ = "0.1.0"
