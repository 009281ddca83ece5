"""Latent geometry in random graphs: samplers, exact moments, divergences and couplings."""

from .graph_core import Graph, edge_count, signed_triangle_stat, triangle_count
from .latent_models import Ensemble, ModelSpec, delta_from_p, sample_er, sample_rig

__all__ = [
    "Ensemble",
    "Graph",
    "ModelSpec",
    "delta_from_p",
    "edge_count",
    "sample_er",
    "sample_rig",
    "signed_triangle_stat",
    "triangle_count",
]
