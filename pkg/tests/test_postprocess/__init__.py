"""Tests for post-processing."""
