#pragma once

#include <json.hpp>

#include <string>

#include "tdforest/forest.hpp"
#include "tdforest/graph.hpp"
#include "tdforest/recognizer.hpp"

namespace tdforest {

// Insertion-ordered so emitted documents are byte-stable and readable.
using Json = nlohmann::ordered_json;

// Strict graph reader.  Schema:
//   {"vertices": [{"id": int, "label": str}, ...],
//    "edges":    [{"src": int, "dst": int, "label": str}, ...],
//    "root":     int | null}          (root may also be absent)
// Unknown fields, duplicate ids, dangling endpoints, and type mismatches are
// ParseErrors carrying a location.  Vertex ids may be sparse; they are
// re-densified in ascending order and the originals kept for output.
Graph parse_graph(const std::string& text);
Graph graph_from_json(const Json& doc);

Json graph_to_json(const Graph& g);

// Bags and vertices in these documents use the graph's original ids.
Json td_to_json(const TreeDecomposition& td, const Graph& g);
TreeDecomposition td_from_json(const Json& doc, const Graph& g);

// {"nodes": [{"id", "bag": [ids] | null, "aux": bool, "derivations": [[child ids], ...]},
//  ...], "root": int}
Json forest_to_json(const Forest& f, const Graph& g);
Json forest_to_json(const BinForest& f, const Graph& g);

// Reads an unbinarized forest (aux nodes are rejected).  Validates indices
// and that bags refer to existing vertices; deeper structural soundness is
// the verifier's job.
Forest forest_from_json(const Json& doc, const Graph& g);

}  // namespace tdforest
