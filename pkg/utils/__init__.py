"""AoI analysis and simulation library."""
