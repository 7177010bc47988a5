"""Tests for the shearlab application."""
