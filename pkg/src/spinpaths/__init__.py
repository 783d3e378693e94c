"""Coloured random-path representation of the spin O(N) model."""
