"""Semantic topic time series from labeled traffic-camera images.

Pipeline: label records -> Bag-of-Label-Words -> tf-idf image-label matrix ->
LDA topics -> binned per-camera topic series.
"""

__version__ = "0.1.0"
