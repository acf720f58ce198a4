"""Test package for opalg."""
