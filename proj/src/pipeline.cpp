#include "tdforest/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

#include "tdforest/errors.hpp"
#include "tdforest/expected_tree.hpp"
#include "tdforest/oracle.hpp"

namespace tdforest {

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

bool whole_doc_items(const std::string& name, const std::string& text,
                     std::vector<BatchItem>& out) {
    Json doc;
    try {
        doc = Json::parse(text);
    } catch (const Json::parse_error&) {
        return false;
    }
    if (doc.is_array()) {
        for (std::size_t i = 0; i < doc.size(); ++i)
            out.push_back({name + "[" + std::to_string(i) + "]", doc[i].dump()});
        return true;
    }
    out.push_back({name, text});
    return true;
}

void line_items(const std::string& name, const std::string& text, std::vector<BatchItem>& out) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        out.push_back({name + ":" + std::to_string(lineno), line});
    }
}

std::vector<int> bag_orig_ids(VertexSet bag, const Graph& g) {
    std::vector<int> ids;
    for_each_vertex(bag, [&](int v) { ids.push_back(g.orig_ids[static_cast<std::size_t>(v)]); });
    std::sort(ids.begin(), ids.end());
    return ids;
}

std::string describe(const TdValidation& check) {
    if (check.structural_error) return *check.structural_error;
    std::string out;
    if (!check.uncovered_vertices.empty()) out += "uncovered vertices; ";
    if (!check.uncovered_edges.empty()) out += "uncovered edges; ";
    if (!check.running_intersection_violations.empty()) out += "running intersection broken; ";
    if (!out.empty()) out.resize(out.size() - 2);
    return out;
}

struct Shared {
    const RunConfig& cfg;
    const EncoderParams* params = nullptr;
    const Json* forest_doc = nullptr;
    MotifInterner* interner = nullptr;
};

Forest build_for(const RunConfig& cfg, const Graph& g) {
    Forest f = build_forest(g, cfg.width, cfg.root_constrained);
    if (cfg.min_bags) f = prune_min_bags(f, cfg.width, cfg.freq_order);
    return f;
}

Json process_item(const Shared& sh, const Graph& g) {
    const RunConfig& cfg = sh.cfg;
    Json res;
    if (cfg.command == "treewidth") {
        const std::optional<int> tw = treewidth(g, cfg.width);
        res["max_width"] = cfg.width;
        res["treewidth"] = tw ? Json(*tw) : Json(nullptr);
    } else if (cfg.command == "stats") {
        const GraphStats st = graph_stats(g, cfg.width);
        res["n_vertices"] = st.n_vertices;
        res["n_edges"] = st.n_edges;
        res["reentrancy_count"] = st.reentrancy_count;
        res["diameter"] = st.diameter_infinite ? Json(nullptr) : Json(st.diameter);
        res["treewidth"] = st.treewidth ? Json(*st.treewidth) : Json(nullptr);
    } else if (cfg.command == "decompose") {
        const Forest f = build_for(cfg, g);
        res["tree_count"] = count_trees(f).str();
        res["synthetic_root"] = f.synthetic_root();
        if (cfg.binarized) {
            const BinForest bf = binarize(f);
            res["forest"] = forest_to_json(bf, g);
        } else {
            res["forest"] = forest_to_json(f, g);
        }
    } else if (cfg.command == "encode") {
        const Forest f = build_for(cfg, g);
        const BinForest bf = binarize(f);
        ForestEncoder enc(bf, g, *sh.params);
        enc.forward();
        res["tree_count"] = count_trees(f).str();
        Json features = Json::array();
        const EdgeFeatureSet& fs = enc.features();
        for (std::size_t e = 0; e < g.edges.size(); ++e) {
            const Edge& edge = g.edges[e];
            if (edge.src == edge.dst) continue;  // self-loops carry no relation
            Json entry;
            entry["src"] = g.orig_ids[static_cast<std::size_t>(edge.src)];
            entry["dst"] = g.orig_ids[static_cast<std::size_t>(edge.dst)];
            entry["occ"] = edge.occ;
            entry["label"] = edge.label;
            entry["weight"] = fs.weight[e];
            Json vec = Json::array();
            for (Eigen::Index i = 0; i < fs.feature[e].size(); ++i) vec.push_back(fs.feature[e][i]);
            entry["feature"] = std::move(vec);
            features.push_back(std::move(entry));
        }
        res["features"] = std::move(features);
    } else if (cfg.command == "verify") {
        Forest f;
        if (sh.forest_doc) {
            f = forest_from_json(*sh.forest_doc, g);
        } else {
            f = build_for(cfg, g);
        }
        const TreeCount total = count_trees(f);
        const std::vector<TreeDecomposition> trees = enumerate_trees(f, cfg.limit_trees);
        res["tree_count"] = total.str();
        res["trees_checked"] = trees.size();
        res["truncated"] = TreeCount(trees.size()) < total;
        bool all_valid = true;
        Json violation;
        for (std::size_t i = 0; i < trees.size(); ++i) {
            const TdValidation check = validate_td(g, trees[i]);
            if (!check.valid()) {
                all_valid = false;
                violation["tree"] = i;
                violation["problem"] = describe(check);
                break;
            }
        }
        res["all_valid"] = all_valid;
        if (!all_valid) res["violation"] = std::move(violation);
    } else if (cfg.command == "dump-motifs") {
        const Forest f = build_for(cfg, g);
        std::map<std::uint64_t, int> seen;  // bag bits -> first node
        Json bags = Json::array();
        for (const ForestNode& node : f.nodes) {
            if (seen.count(node.bag.bits)) continue;
            seen[node.bag.bits] = 1;
            const CanonicalBag cb = canonical_bag(g, node.bag);
            sh.interner->intern(cb.code);
            Json entry;
            entry["bag"] = bag_orig_ids(node.bag, g);
            entry["code"] = cb.code.hex();
            bags.push_back(std::move(entry));
        }
        res["bags"] = std::move(bags);
    } else {
        throw Error("unknown command: " + cfg.command);
    }
    return res;
}

}  // namespace

void validate_config(const RunConfig& cfg) {
    if (cfg.width < 0 || cfg.width > 8)
        throw Error("width must be between 0 and 8");
    if ((cfg.command == "encode" || cfg.command == "dump-motifs") && cfg.width > 4)
        throw Error(cfg.command + " supports width at most 4 (bags up to 5 vertices)");
    if (cfg.jobs < 1) throw Error("jobs must be at least 1");
}

std::vector<BatchItem> load_inputs(const std::string& source) {
    std::vector<BatchItem> items;
    if (source == "-") {
        std::ostringstream buf;
        buf << std::cin.rdbuf();
        const std::string text = buf.str();
        if (!whole_doc_items("stdin", text, items)) line_items("stdin", text, items);
        return items;
    }
    namespace fs = std::filesystem;
    const fs::path path(source);
    if (fs::is_directory(path)) {
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(path))
            if (entry.is_regular_file() && entry.path().extension() == ".json")
                files.push_back(entry.path());
        std::sort(files.begin(), files.end());
        for (const fs::path& file : files)
            if (!whole_doc_items(file.string(), read_file(file.string()), items))
                throw ParseError("not valid JSON", file.string());
        return items;
    }
    if (!fs::exists(path)) throw Error("no such input: " + source);
    const std::string text = read_file(source);
    const std::string ext = path.extension().string();
    if (ext == ".jsonl") {
        line_items(source, text, items);
    } else if (ext == ".json") {
        if (!whole_doc_items(source, text, items)) throw ParseError("not valid JSON", source);
    } else {
        if (!whole_doc_items(source, text, items)) line_items(source, text, items);
    }
    return items;
}

PipelineResult run_batch(const RunConfig& cfg, const std::vector<BatchItem>& items) {
    validate_config(cfg);

    Shared sh{cfg};
    EncoderParams params;
    if (cfg.command == "encode") {
        if (!cfg.params_path.empty()) {
            params = EncoderParams::from_json(Json::parse(read_file(cfg.params_path)));
            if (params.dims.width != cfg.width)
                throw Error("parameter file was built for width " +
                            std::to_string(params.dims.width));
        } else {
            EncoderDims dims;
            dims.width = cfg.width;
            params = EncoderParams::seeded(dims, cfg.seed);
        }
        if (!cfg.save_params_path.empty()) {
            std::ofstream out(cfg.save_params_path, std::ios::binary);
            if (!out) throw Error("cannot write " + cfg.save_params_path);
            out << params.to_json().dump(2) << '\n';
        }
        sh.params = &params;
    }
    Json forest_doc;
    if (cfg.command == "verify" && !cfg.forest_json.empty()) {
        forest_doc = Json::parse(cfg.forest_json);
        sh.forest_doc = &forest_doc;
    } else if (cfg.command == "verify" && !cfg.forest_path.empty()) {
        forest_doc = Json::parse(read_file(cfg.forest_path));
        sh.forest_doc = &forest_doc;
    }
    MotifInterner interner;
    if (cfg.command == "dump-motifs") sh.interner = &interner;

    std::vector<Json> entries(items.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= items.size()) return;
            Json entry;
            entry["name"] = items[i].name;
            try {
                const Graph g = graph_from_json(Json::parse(items[i].text));
                entry["ok"] = true;
                entry["result"] = process_item(sh, g);
            } catch (const WidthExceededError& e) {
                entry["ok"] = false;
                entry["skipped"] = true;
                entry["error"] = e.what();
            } catch (const std::exception& e) {
                entry["ok"] = false;
                entry["error"] = e.what();
            }
            entries[i] = std::move(entry);
        }
    };
    const std::size_t jobs =
        std::min(static_cast<std::size_t>(cfg.jobs), std::max<std::size_t>(items.size(), 1));
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(jobs);
        for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }

    PipelineResult out;
    Json results = Json::array();
    for (Json& entry : entries) {
        if (!entry.value("ok", false)) {
            if (entry.value("skipped", false))
                ++out.skipped;
            else
                ++out.errors;
        }
        results.push_back(std::move(entry));
    }
    out.doc["command"] = cfg.command;
    out.doc["results"] = std::move(results);
    out.doc["errors"] = out.errors;
    out.doc["skipped"] = out.skipped;

    if (cfg.command == "dump-motifs") {
        // Motif ids are assigned over the sorted codes so output does not
        // depend on thread scheduling; id 0 is always the empty bag's code
        // (the empty code sorts first).
        std::vector<MotifId> entries_by_code = interner.entries();
        std::sort(entries_by_code.begin(), entries_by_code.end(),
                  [](const MotifId& a, const MotifId& b) { return a.code.bytes < b.code.bytes; });
        std::map<std::string, int> index_of;  // keyed by hex; same order as bytes
        Json table = Json::array();
        for (std::size_t i = 0; i < entries_by_code.size(); ++i) {
            index_of[entries_by_code[i].code.hex()] = static_cast<int>(i);
            Json row;
            row["index"] = i;
            row["code"] = entries_by_code[i].code.hex();
            table.push_back(std::move(row));
        }
        for (Json& entry : out.doc["results"]) {
            if (!entry.value("ok", false)) continue;
            for (Json& bag : entry["result"]["bags"])
                bag["index"] = index_of.at(bag["code"].get<std::string>());
        }
        out.doc["motifs"] = std::move(table);
    }
    return out;
}

}  // namespace tdforest
