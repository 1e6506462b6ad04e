#include <pybind11/pybind11.h>

#include <stdexcept>
#include <string>

#include "tdforest/pipeline.hpp"
#include "tdforest/recognizer.hpp"

namespace py = pybind11;

namespace {

// Single-graph façade over the batch pipeline; raises on any failure
// (including width-exceeded, which the batch API would mark as skipped).
std::string run_one(const std::string& command, const std::string& graph_json, int width,
                    bool root_constrained, bool min_bags, bool small_first, bool binarized,
                    std::uint64_t seed, std::size_t limit_trees, const std::string& forest_json) {
    tdforest::RunConfig cfg;
    cfg.command = command;
    cfg.width = width;
    cfg.root_constrained = root_constrained;
    cfg.min_bags = min_bags;
    cfg.freq_order =
        small_first ? tdforest::FreqOrder::kSmallFirst : tdforest::FreqOrder::kLargeFirst;
    cfg.binarized = binarized;
    cfg.seed = seed;
    cfg.limit_trees = limit_trees;
    cfg.forest_json = forest_json;
    cfg.jobs = 1;

    const tdforest::PipelineResult result = tdforest::run_batch(cfg, {{"input", graph_json}});
    const tdforest::Json& entry = result.doc["results"][0];
    if (!entry["ok"].get<bool>()) throw std::runtime_error(entry["error"].get<std::string>());
    tdforest::Json out = entry["result"];
    if (command == "dump-motifs") out["motifs"] = result.doc["motifs"];
    return out.dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "tree-decomposition forests, expected-tree marginals, and edge features";

    m.def("run", &run_one, py::arg("command"), py::arg("graph_json"), py::arg("width") = 3,
          py::arg("root_constrained") = false, py::arg("min_bags") = false,
          py::arg("small_first") = false, py::arg("binarized") = false, py::arg("seed") = 0,
          py::arg("limit_trees") = 1000, py::arg("forest_json") = "",
          "Run one pipeline command on one graph JSON document; returns the result JSON.");

    m.def(
        "treewidth",
        [](const std::string& graph_json, int max_width) -> py::object {
            const tdforest::Graph g =
                tdforest::graph_from_json(tdforest::Json::parse(graph_json));
            const std::optional<int> tw = tdforest::treewidth(g, max_width);
            if (!tw) return py::none();
            return py::int_(*tw);
        },
        py::arg("graph_json"), py::arg("max_width") = 8,
        "Exact treewidth, or None if it exceeds max_width.");
}
