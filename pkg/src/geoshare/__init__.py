"""geoshare: sparse 3D reconstruction, LOD tilesets, and federated tile streaming."""

__version__ = "0.1.0"
