"""Contrail ensemble post-processing: detection, shape characterization,
similarity indexing, group tracking, volume rasterization, and a read-only
HTTP service over the precomputed artifacts."""

__version__ = "0.1.0"
