"""Command-line sub-applications."""
