"""Super Characters: text plus tabular attributes rendered as images for a CNN."""

__version__ = "0.1.0"
