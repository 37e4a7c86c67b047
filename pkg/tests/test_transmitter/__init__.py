"""Tests for the transmitter simulation."""
