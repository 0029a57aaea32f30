"""
Read-only HTTP API over the AoI analysis functions and sweep result CSVs.
"""
