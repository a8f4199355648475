"""Test package for the Massive MIMO random access simulator.

This package contains unit tests for the channel, protocol and rate models,
plus integration tests for the experiment runner and its CSV output.
"""
