"""Simulation logic: partitioning, training, merging and reporting."""
