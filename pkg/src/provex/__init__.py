"""provex: interpretable provenance-graph features and decision-tree surrogates
for black-box graph classifiers."""

__version__ = "0.1.0"
