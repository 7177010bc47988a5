"""Shear flow resolvent laboratory."""
