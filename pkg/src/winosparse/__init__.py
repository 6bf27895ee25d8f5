"""Train small CNNs to be jointly sparse in the spatial and Winograd domains,
compress them with dithered uniform quantization and LZW coding, and deploy
one compressed model through sparse convolution engines in either domain."""

__version__ = "0.1.0"
