"""Price sentiment indices from survey comments.

Pipeline stages: filter price-related comments, classify price direction
with one or more chat-model judges, integrate the judgments, aggregate
monthly into segmented indices, and evaluate against reference series.
"""

__version__ = "0.1.0"
