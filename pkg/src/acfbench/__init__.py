"""acfbench: numerical workbench for two-phase free boundaries on convex domains."""

__version__ = "0.1.0"
