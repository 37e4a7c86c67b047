"""Tests for lumenqkd package."""
