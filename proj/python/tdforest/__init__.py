"""Tree-decomposition derivation forests for labeled digraphs.

Thin wrappers over the C++ core: graphs go in as dicts (or pre-serialized
JSON strings), results come back as plain dicts.
"""

import json as _json

from tdforest import _core

__all__ = [
    "treewidth",
    "stats",
    "decompose",
    "count_trees",
    "encode",
    "verify",
    "dump_motifs",
]


def _text(graph):
    if isinstance(graph, str):
        return graph
    return _json.dumps(graph)


def treewidth(graph, max_width=8):
    """Exact treewidth of the graph's undirected skeleton, or None if above max_width."""
    return _core.treewidth(_text(graph), max_width)


def stats(graph, max_width=8):
    """Vertex/edge counts, reentrancies, diameter, and treewidth (when <= max_width)."""
    return _json.loads(_core.run("stats", _text(graph), width=max_width))


def decompose(graph, width=3, root_constrained=False, min_bags=False, small_first=False,
              binarized=False):
    """Packed forest of every rooted tree decomposition of width <= width."""
    return _json.loads(
        _core.run(
            "decompose",
            _text(graph),
            width=width,
            root_constrained=root_constrained,
            min_bags=min_bags,
            small_first=small_first,
            binarized=binarized,
        )
    )


def count_trees(graph, width=3, root_constrained=False, min_bags=False, small_first=False):
    """Number of decomposition trees in the packed forest (exact, arbitrary size)."""
    doc = decompose(graph, width=width, root_constrained=root_constrained, min_bags=min_bags,
                    small_first=small_first)
    return int(doc["tree_count"])


def encode(graph, width=3, seed=0, root_constrained=False, min_bags=False, small_first=False):
    """Expected per-edge feature vectors from the inside-outside encoder."""
    return _json.loads(
        _core.run(
            "encode",
            _text(graph),
            width=width,
            seed=seed,
            root_constrained=root_constrained,
            min_bags=min_bags,
            small_first=small_first,
        )
    )


def verify(graph, forest=None, width=3, root_constrained=False, min_bags=False,
           small_first=False, limit_trees=1000):
    """Enumerate decomposition trees (of `forest`, or a freshly built one) and validate them."""
    return _json.loads(
        _core.run(
            "verify",
            _text(graph),
            width=width,
            root_constrained=root_constrained,
            min_bags=min_bags,
            small_first=small_first,
            limit_trees=limit_trees,
            forest_json="" if forest is None else _text(forest),
        )
    )


def dump_motifs(graph, width=3, root_constrained=False, min_bags=False, small_first=False):
    """Canonical bag motifs appearing in the graph's forest."""
    return _json.loads(
        _core.run(
            "dump-motifs",
            _text(graph),
            width=width,
            root_constrained=root_constrained,
            min_bags=min_bags,
            small_first=small_first,
        )
    )
