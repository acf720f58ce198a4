"""Integration tests for opalg."""
