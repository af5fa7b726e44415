"""Mutation-based robustness testing for Boogie programs and their verifiers."""

__version__ = "0.1.0"
