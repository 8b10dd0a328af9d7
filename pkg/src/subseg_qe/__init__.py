"""Word-, gap- and sentence-level MT quality estimation from phrase-table sub-segment matches."""

__version__ = "0.1.0"
