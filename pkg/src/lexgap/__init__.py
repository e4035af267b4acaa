"""Crowdsourced discovery of cross-lingual lexical gaps and equivalent terms."""

__version__ = "0.1.0"
