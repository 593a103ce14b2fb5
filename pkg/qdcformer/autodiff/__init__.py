"""Reverse-mode automatic differentiation and the ADAM optimizer."""
