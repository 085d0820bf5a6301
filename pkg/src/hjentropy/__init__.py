"""Hopf-Lax solutions of convex Hamilton-Jacobi equations and constructive
epsilon-entropy estimates for the sets they reach."""

__version__ = "0.1.0"
