"""Scripts package: CLI entry points."""
