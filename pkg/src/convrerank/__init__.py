"""Contextual N-best reranking with graph-learned conversational history.

The toolkit covers the full loop: chunking a conversational corpus, building
a heterogeneous chunk-word graph with NPMI word-word edges, training a
two-layer graph convolution on TF-IDF/K-means pseudo-classes, composing
decayed cross-utterance history vectors, and training an oracle-prediction
reranker over ASR N-best lists.
"""

__version__ = "0.1.0"

__all__ = ["__version__"]
