"""Architecture-suggesting network: regress MLP widths from accuracy vectors and search with it."""

__version__ = "0.1.0"
