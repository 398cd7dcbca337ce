"""Concrete economies built on the generic solvers."""
