"""Bi-level traffic incident duration prediction toolkit.

Duration classification with varying thresholds, scenario-driven regression,
anomaly-based record removal and joint model/outlier hyper-parameter search,
all reproducible from a single seed.
"""

__version__ = "0.1.0"
