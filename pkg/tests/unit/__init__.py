"""Unit tests for opalg."""
