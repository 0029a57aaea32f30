"""
Test suite for the AoI toolkit.
Analytic oracles for every simulated quantity.
"""
