#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tdforest/encoder.hpp"
#include "tdforest/json_io.hpp"
#include "tdforest/motif.hpp"

namespace tdforest {

// Everything a single run needs, assembled by the command line layer.
struct RunConfig {
    std::string command;  // treewidth | decompose | stats | encode | verify | dump-motifs
    int width = 3;
    bool root_constrained = false;
    bool min_bags = false;
    FreqOrder freq_order = FreqOrder::kLargeFirst;
    bool binarized = false;            // decompose: emit the binarized forest
    std::uint64_t seed = 0;            // encode: parameter seed
    int jobs = 1;
    std::size_t limit_trees = 1000;    // verify: enumeration cap
    std::string params_path;           // encode: load parameters instead of seeding
    std::string save_params_path;      // encode: write the parameters used
    std::string forest_path;           // verify: check this forest instead of rebuilding
    std::string forest_json;           // verify: same, but the document itself
};

// Width must lie in [0, 8]; encode and dump-motifs additionally need
// width <= 4 so bags stay canonicalizable.  jobs >= 1.
void validate_config(const RunConfig& cfg);

// One graph to process; `name` identifies it in the output and `text` is its
// unparsed JSON.
struct BatchItem {
    std::string name;
    std::string text;
};

// Accepts "-" (stdin), a .json file holding one graph or an array of graphs,
// a .jsonl file with one graph per line, or a directory of .json files
// (sorted by name).  Files without a known extension are sniffed: whole-file
// JSON first, JSON lines otherwise.
std::vector<BatchItem> load_inputs(const std::string& source);

// Result of a whole batch; `doc` is what gets printed.  Items that fail to
// decompose at the requested width are recorded as skipped, any other
// per-item failure as an error.
struct PipelineResult {
    Json doc;
    int errors = 0;
    int skipped = 0;
};

// Runs cfg.command over every item, with cfg.jobs worker threads; results
// keep input order regardless of scheduling.
PipelineResult run_batch(const RunConfig& cfg, const std::vector<BatchItem>& items);

}  // namespace tdforest
