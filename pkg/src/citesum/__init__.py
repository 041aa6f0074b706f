"""Citation-aggregated abstractive summarisation at desk scale."""

__version__ = "0.1.0"
