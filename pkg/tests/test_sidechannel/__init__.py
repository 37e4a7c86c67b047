"""Tests for side-channel analysis."""
