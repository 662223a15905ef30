"""Test suite for isp-dir."""
