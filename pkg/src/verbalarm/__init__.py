"""Verbal robot programming: typed pick-and-place commands become Spatial
Description Clauses, joint trajectories for a simulated 7-DoF arm, and
diverse grasp menus for operator selection."""

__version__ = "0.1.0"
