"""Tests for the cdd package."""
