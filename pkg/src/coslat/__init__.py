"""Cosine-expansion lattice scheme for expectations under characteristic functions."""
