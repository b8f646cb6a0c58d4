"""Continual character motion synthesis from sparse action keypoints."""

__version__ = "0.1.0"
