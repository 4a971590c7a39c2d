"""Sweeps, fits, plots and verification suites behind the ``tfres`` command."""
