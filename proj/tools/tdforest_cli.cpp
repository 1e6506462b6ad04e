#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "tdforest/errors.hpp"
#include "tdforest/pipeline.hpp"

namespace {

struct CliOptions {
    tdforest::RunConfig cfg;
    std::string input = "-";
    std::string out_path;
};

void add_common(CLI::App* cmd, CliOptions& opt, bool with_forest_flags) {
    cmd->add_option("input", opt.input,
                    "graph JSON file, .jsonl batch, directory of .json files, or - for stdin");
    cmd->add_option("--out", opt.out_path, "write the result document here instead of stdout");
    cmd->add_option("--width", opt.cfg.width, "maximum tree-decomposition width")
        ->capture_default_str();
    cmd->add_option("--jobs", opt.cfg.jobs, "worker threads for batch inputs")
        ->capture_default_str();
    if (with_forest_flags) {
        cmd->add_flag("--root-constrained", opt.cfg.root_constrained,
                      "top bags must contain the graph root and one of its edges");
        cmd->add_flag("--min-bags", opt.cfg.min_bags,
                      "prune to derivations with the best bag-size profile");
        std::map<std::string, tdforest::FreqOrder> orders{
            {"large-first", tdforest::FreqOrder::kLargeFirst},
            {"small-first", tdforest::FreqOrder::kSmallFirst}};
        cmd->add_option("--freq-order", opt.cfg.freq_order,
                        "bag-size profile comparison used by --min-bags")
            ->transform(CLI::CheckedTransformer(orders, CLI::ignore_case))
            ->default_str("large-first");
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tree-decomposition forests, marginals, and edge features for labeled digraphs"};
    app.require_subcommand(1);

    CliOptions opt;

    CLI::App* treewidth = app.add_subcommand("treewidth", "exact treewidth up to --width");
    add_common(treewidth, opt, false);

    CLI::App* stats = app.add_subcommand("stats", "size, reentrancies, diameter, treewidth");
    add_common(stats, opt, false);

    CLI::App* decompose =
        app.add_subcommand("decompose", "packed forest of all width-bounded decompositions");
    add_common(decompose, opt, true);
    decompose->add_flag("--binarized", opt.cfg.binarized, "emit the binarized forest");

    CLI::App* encode = app.add_subcommand("encode", "per-edge expected feature vectors");
    add_common(encode, opt, true);
    encode->add_option("--seed", opt.cfg.seed, "parameter seed")->capture_default_str();
    encode->add_option("--params", opt.cfg.params_path, "load encoder parameters from JSON");
    encode->add_option("--save-params", opt.cfg.save_params_path,
                       "write the encoder parameters actually used");

    CLI::App* verify = app.add_subcommand("verify", "enumerate trees and validate them");
    add_common(verify, opt, true);
    verify->add_option("--forest", opt.cfg.forest_path,
                       "check this forest JSON instead of rebuilding one");
    verify->add_option("--limit-trees", opt.cfg.limit_trees, "enumeration cap")
        ->capture_default_str();

    CLI::App* motifs = app.add_subcommand("dump-motifs", "canonical bag motifs used by a forest");
    add_common(motifs, opt, true);

    CLI11_PARSE(app, argc, argv);
    opt.cfg.command = app.get_subcommands().front()->get_name();

    try {
        tdforest::validate_config(opt.cfg);
        const std::vector<tdforest::BatchItem> items = tdforest::load_inputs(opt.input);
        const tdforest::PipelineResult result = tdforest::run_batch(opt.cfg, items);
        const std::string text = result.doc.dump(2) + "\n";
        if (opt.out_path.empty()) {
            std::cout << text;
        } else {
            std::ofstream out(opt.out_path, std::ios::binary);
            if (!out) throw tdforest::Error("cannot write " + opt.out_path);
            out << text;
        }
        return result.errors == 0 ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
