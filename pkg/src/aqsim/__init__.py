"""Simulator and Monte Carlo analysis of a GHZ-based arbitrated quantum
signature protocol, its ambiguous-step variants, and its forgery attacks."""

from . import attacks, cli, comparison, crypto, protocol, qsim, serialize  # noqa: F401
