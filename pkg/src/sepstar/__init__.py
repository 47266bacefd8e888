"""Separator logic, star-free expressions, and pathwidth algebra on graphs with ports."""

from .graphs import (
    GraphError,
    PortGraph,
    add_port,
    canonical_cert,
    canonical_rename,
    connected_components,
    encode_word,
    forget,
    fuse,
    graph_from_json,
    graph_to_json,
    isomorphic,
    permute,
    prime_factors,
    separator_holds,
)

__version__ = "0.1.0"

__all__ = [
    "GraphError",
    "PortGraph",
    "add_port",
    "canonical_cert",
    "canonical_rename",
    "connected_components",
    "encode_word",
    "forget",
    "fuse",
    "graph_from_json",
    "graph_to_json",
    "isomorphic",
    "permute",
    "prime_factors",
    "separator_holds",
]
