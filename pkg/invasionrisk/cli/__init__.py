"""Command-line interface for the invasion risk pipeline."""
