"""
Test fixtures for the AoI toolkit.
"""
