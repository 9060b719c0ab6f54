"""Reference scoring service for the claim-verification wire protocol."""

__version__ = "0.1.0"
