#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "tdforest/errors.hpp"
#include "tdforest/json_io.hpp"
#include "tdforest/pipeline.hpp"

using namespace tdforest;
namespace fs = std::filesystem;

namespace {

// Fresh scratch directory per test case.
struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) : path(fs::temp_directory_path() / ("tdforest_" + tag)) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name, const std::string& text) const {
        const fs::path p = path / name;
        std::ofstream out(p, std::ios::binary);
        out << text;
        return p.string();
    }
};

std::string amr_text() { return graph_to_json(testutil::amr_graph()).dump(); }

std::string k4_text() { return graph_to_json(testutil::complete_graph(4)).dump(); }

RunConfig config(const std::string& command, int width) {
    RunConfig cfg;
    cfg.command = command;
    cfg.width = width;
    return cfg;
}

}  // namespace

TEST_CASE("input loading understands files, arrays, lines, and directories") {
    TempDir tmp("inputs");

    SUBCASE("single-object json file") {
        const std::string p = tmp.file("one.json", amr_text());
        const std::vector<BatchItem> items = load_inputs(p);
        REQUIRE(items.size() == 1);
        CHECK(items[0].name == p);
        CHECK(items[0].text == amr_text());
    }

    SUBCASE("json array fans out with indexed names") {
        const std::string p = tmp.file("two.json", "[" + amr_text() + "," + k4_text() + "]");
        const std::vector<BatchItem> items = load_inputs(p);
        REQUIRE(items.size() == 2);
        CHECK(items[0].name == p + "[0]");
        CHECK(items[1].name == p + "[1]");
    }

    SUBCASE("jsonl numbers by line and skips blanks") {
        const std::string p = tmp.file("batch.jsonl", amr_text() + "\n   \n" + k4_text() + "\n");
        const std::vector<BatchItem> items = load_inputs(p);
        REQUIRE(items.size() == 2);
        CHECK(items[0].name == p + ":1");
        CHECK(items[1].name == p + ":3");
    }

    SUBCASE("directories take their .json files in name order") {
        tmp.file("b.json", k4_text());
        tmp.file("a.json", amr_text());
        tmp.file("notes.txt", "ignored");
        const std::vector<BatchItem> items = load_inputs(tmp.path.string());
        REQUIRE(items.size() == 2);
        CHECK(fs::path(items[0].name).filename() == "a.json");
        CHECK(fs::path(items[1].name).filename() == "b.json");
    }

    SUBCASE("extension-less files are sniffed") {
        const std::string whole = tmp.file("whole", amr_text());
        CHECK(load_inputs(whole).size() == 1);
        const std::string lines = tmp.file("lines", amr_text() + "\n" + k4_text() + "\n");
        CHECK(load_inputs(lines).size() == 2);
    }

    SUBCASE("missing or malformed inputs throw") {
        CHECK_THROWS_AS(load_inputs((tmp.path / "absent.json").string()), Error);
        const std::string bad = tmp.file("bad.json", "{broken");
        CHECK_THROWS_AS(load_inputs(bad), ParseError);
    }
}

TEST_CASE("config validation") {
    CHECK_THROWS_AS(validate_config(config("decompose", -1)), Error);
    CHECK_THROWS_AS(validate_config(config("decompose", 9)), Error);
    CHECK_NOTHROW(validate_config(config("decompose", 8)));
    CHECK_NOTHROW(validate_config(config("treewidth", 8)));
    CHECK_THROWS_AS(validate_config(config("encode", 5)), Error);
    CHECK_NOTHROW(validate_config(config("encode", 4)));
    CHECK_THROWS_AS(validate_config(config("dump-motifs", 5)), Error);
    RunConfig cfg = config("stats", 3);
    cfg.jobs = 0;
    CHECK_THROWS_AS(validate_config(cfg), Error);
}

TEST_CASE("batch accounting: ok, skipped, and error items keep their slots") {
    const std::vector<BatchItem> items{{"good", amr_text()},
                                       {"too-wide", k4_text()},
                                       {"broken", "{not json"}};
    const PipelineResult res = run_batch(config("decompose", 2), items);
    CHECK(res.errors == 1);
    CHECK(res.skipped == 1);
    CHECK(res.doc["errors"] == 1);
    CHECK(res.doc["skipped"] == 1);
    const Json& rs = res.doc["results"];
    REQUIRE(rs.size() == 3);
    CHECK(rs[0]["name"] == "good");
    CHECK(rs[0]["ok"] == true);
    CHECK(rs[1]["name"] == "too-wide");
    CHECK(rs[1]["ok"] == false);
    CHECK(rs[1]["skipped"] == true);
    CHECK(rs[2]["name"] == "broken");
    CHECK(rs[2]["ok"] == false);
    CHECK(rs[2].contains("error"));
    CHECK_FALSE(rs[2].contains("skipped"));
}

TEST_CASE("command outputs carry the advertised fields") {
    const std::vector<BatchItem> items{{"amr", amr_text()}};

    const Json tw = run_batch(config("treewidth", 3), items).doc;
    CHECK(tw["results"][0]["result"]["treewidth"] == 2);

    const Json capped = run_batch(config("treewidth", 1), {{"k4", k4_text()}}).doc;
    CHECK(capped["results"][0]["result"]["treewidth"].is_null());

    const Json st = run_batch(config("stats", 3), items).doc;
    const Json& fields = st["results"][0]["result"];
    CHECK(fields["n_vertices"] == 6);
    CHECK(fields["n_edges"] == 6);
    CHECK(fields["reentrancy_count"] == 1);
    CHECK(fields["diameter"] == 3);
    CHECK(fields["treewidth"] == 2);

    const Json dec = run_batch(config("decompose", 2), items).doc;
    CHECK(dec["results"][0]["result"]["tree_count"] == "186");
    CHECK(dec["results"][0]["result"]["synthetic_root"] == true);
    CHECK(dec["results"][0]["result"]["forest"]["nodes"].is_array());

    const Json ver = run_batch(config("verify", 2), items).doc;
    CHECK(ver["results"][0]["result"]["all_valid"] == true);
    CHECK(ver["results"][0]["result"]["tree_count"] == "186");
}

TEST_CASE("encode emits unit-mass features and skips self-loops") {
    Graph g = testutil::amr_graph();
    g.edges.push_back({3, 3, "self", 0});
    const std::vector<BatchItem> items{{"amr", graph_to_json(g).dump()}};
    RunConfig cfg = config("encode", 2);
    cfg.seed = 7;
    const Json doc = run_batch(cfg, items).doc;
    const Json& feats = doc["results"][0]["result"]["features"];
    REQUIRE(feats.size() == 6);  // the self-loop is dropped
    for (const Json& f : feats) {
        CHECK(f["weight"].get<double>() == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(f["feature"].size() == 8);
        CHECK(f.contains("occ"));
        CHECK(f.contains("label"));
    }
}

TEST_CASE("saved parameters reload into an identical run") {
    TempDir tmp("params");
    const std::vector<BatchItem> items{{"amr", amr_text()}};

    RunConfig first = config("encode", 2);
    first.seed = 99;
    first.save_params_path = (tmp.path / "params.json").string();
    const Json out1 = run_batch(first, items).doc;
    CHECK(fs::exists(first.save_params_path));

    RunConfig second = config("encode", 2);
    second.seed = 12345;  // must be ignored when params are loaded
    second.params_path = first.save_params_path;
    const Json out2 = run_batch(second, items).doc;
    CHECK(out1["results"][0]["result"] == out2["results"][0]["result"]);

    RunConfig wrong = config("encode", 3);
    wrong.params_path = first.save_params_path;
    CHECK_THROWS_AS(run_batch(wrong, items), Error);
}

TEST_CASE("thread count never changes the output document") {
    std::vector<BatchItem> items;
    std::mt19937_64 rng(61);
    for (int i = 0; i < 10; ++i) {
        const Graph g = testutil::random_connected(rng, 2 + static_cast<int>(rng() % 5), 25);
        items.push_back({"g" + std::to_string(i), graph_to_json(g).dump()});
    }
    items.push_back({"k4", k4_text()});  // one skip so mixed outcomes are covered

    for (const std::string& command : {std::string("treewidth"), std::string("stats"),
                                       std::string("decompose"), std::string("encode"),
                                       std::string("verify"), std::string("dump-motifs")}) {
        RunConfig solo = config(command, 2);
        solo.seed = 5;
        RunConfig parallel = solo;
        parallel.jobs = 4;
        const std::string a = run_batch(solo, items).doc.dump();
        const std::string b = run_batch(parallel, items).doc.dump();
        CHECK(a == b);
    }
}

TEST_CASE("verify can check an externally supplied forest") {
    const Graph g = testutil::amr_graph();
    const Forest f = build_forest(g, 2, true);
    const std::vector<BatchItem> items{{"amr", amr_text()}};

    RunConfig cfg = config("verify", 2);
    cfg.forest_json = forest_to_json(f, g).dump();
    const Json ok = run_batch(cfg, items).doc;
    CHECK(ok["results"][0]["result"]["all_valid"] == true);
    CHECK(ok["results"][0]["result"]["tree_count"] == count_trees(f).str());

    // Knock a vertex out of the only bag of a one-bag forest: the lone tree
    // now covers neither vertex 0 nor the edge, so validation must fail.
    const Graph tiny = testutil::make_graph(2, {{0, 1, "e"}}, 0);
    Json doc = forest_to_json(build_forest(tiny, 1, true), tiny);
    doc["nodes"][0]["bag"] = Json::array({1});
    RunConfig broken = config("verify", 1);
    broken.forest_json = doc.dump();
    const Json bad =
        run_batch(broken, {{"tiny", graph_to_json(tiny).dump()}}).doc;
    CHECK(bad["results"][0]["result"]["all_valid"] == false);
    CHECK(bad["results"][0]["result"]["violation"].contains("problem"));

    // A forest file works the same way as the inline document.
    TempDir tmp("forest");
    RunConfig from_file = config("verify", 2);
    from_file.forest_path = tmp.file("f.json", forest_to_json(f, g).dump());
    const Json viafile = run_batch(from_file, items).doc;
    CHECK(viafile["results"][0]["result"]["all_valid"] == true);

    // Binarized documents are for the encoder, not the verifier.
    RunConfig bin = config("verify", 2);
    bin.forest_json = forest_to_json(binarize(f), g).dump();
    const PipelineResult res = run_batch(bin, items);
    CHECK(res.errors == 1);
}

TEST_CASE("motif dump assigns indices by code, empty bag first") {
    const std::vector<BatchItem> items{{"amr", amr_text()},
                                       {"path", graph_to_json(testutil::path_graph(4)).dump()}};
    RunConfig cfg = config("dump-motifs", 2);
    const Json doc = run_batch(cfg, items).doc;

    const Json& table = doc["motifs"];
    REQUIRE(table.size() >= 2);
    CHECK(table[0]["index"] == 0);
    CHECK(table[0]["code"] == "00");  // empty bag of the synthetic root
    std::string prev;
    std::map<std::string, int> index_of;
    for (const Json& row : table) {
        const std::string code = row["code"].get<std::string>();
        CHECK(prev < code);  // strictly ascending => unique
        prev = code;
        index_of[code] = row["index"].get<int>();
    }

    for (const Json& entry : doc["results"])
        for (const Json& bag : entry["result"]["bags"])
            CHECK(bag["index"].get<int>() == index_of.at(bag["code"].get<std::string>()));
}
