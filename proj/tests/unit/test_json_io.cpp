#include <doctest.h>

#include <functional>
#include <string>

#include "helpers.hpp"
#include "tdforest/errors.hpp"
#include "tdforest/forest.hpp"
#include "tdforest/json_io.hpp"

using namespace tdforest;

namespace {

void check_same_graph(const Graph& a, const Graph& b) {
    CHECK(a.labels == b.labels);
    CHECK(a.orig_ids == b.orig_ids);
    CHECK(a.root == b.root);
    REQUIRE(a.edges.size() == b.edges.size());
    for (std::size_t i = 0; i < a.edges.size(); ++i) {
        CHECK(a.edges[i].src == b.edges[i].src);
        CHECK(a.edges[i].dst == b.edges[i].dst);
        CHECK(a.edges[i].label == b.edges[i].label);
        CHECK(a.edges[i].occ == b.edges[i].occ);
    }
}

std::string location_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const ParseError& e) {
        return e.location;
    }
    return "<no throw>";
}

}  // namespace

TEST_CASE("happy-path graph parse") {
    const Graph g = parse_graph(R"({
        "vertices": [{"id": 0, "label": "want"}, {"id": 1, "label": "boy"}],
        "edges": [{"src": 0, "dst": 1, "label": "arg0"}],
        "root": 0
    })");
    REQUIRE(g.n() == 2);
    CHECK(g.labels == std::vector<std::string>{"want", "boy"});
    CHECK(g.orig_ids == std::vector<long long>{0, 1});
    REQUIRE(g.m() == 1);
    CHECK(g.edges[0].src == 0);
    CHECK(g.edges[0].dst == 1);
    CHECK(g.edges[0].label == "arg0");
    CHECK(g.edges[0].occ == 0);
    REQUIRE(g.root.has_value());
    CHECK(*g.root == 0);
}

TEST_CASE("sparse ids densify in ascending order and outputs use the originals") {
    const Graph g = parse_graph(R"({
        "vertices": [{"id": 10, "label": "c"}, {"id": 3, "label": "a"}, {"id": 7, "label": "b"}],
        "edges": [{"src": 10, "dst": 3, "label": "x"}],
        "root": 7
    })");
    CHECK(g.orig_ids == std::vector<long long>{3, 7, 10});
    CHECK(g.labels == std::vector<std::string>{"a", "b", "c"});
    CHECK(g.edges[0].src == 2);  // id 10
    CHECK(g.edges[0].dst == 0);  // id 3
    CHECK(*g.root == 1);         // id 7

    const Json out = graph_to_json(g);
    CHECK(out["root"] == 7);
    CHECK(out["edges"][0]["src"] == 10);
    CHECK(out["edges"][0]["dst"] == 3);
}

TEST_CASE("parallel edges get ascending occurrence numbers") {
    const Graph g = parse_graph(R"({
        "vertices": [{"id": 0, "label": "u"}, {"id": 1, "label": "v"}],
        "edges": [{"src": 0, "dst": 1, "label": "a"},
                  {"src": 1, "dst": 0, "label": "b"},
                  {"src": 0, "dst": 1, "label": "c"},
                  {"src": 0, "dst": 0, "label": "loop"}]
    })");
    CHECK(g.edges[0].occ == 0);
    CHECK(g.edges[1].occ == 0);
    CHECK(g.edges[2].occ == 1);
    CHECK(g.edges[3].occ == 0);
    CHECK_FALSE(g.root.has_value());
}

TEST_CASE("missing root and null root both mean unrooted") {
    const char* without = R"({"vertices": [{"id": 0, "label": "a"}], "edges": []})";
    const char* null_root = R"({"vertices": [{"id": 0, "label": "a"}], "edges": [], "root": null})";
    CHECK_FALSE(parse_graph(without).root.has_value());
    CHECK_FALSE(parse_graph(null_root).root.has_value());
}

TEST_CASE("parse errors carry locations") {
    CHECK(location_of([] { parse_graph("{nope"); }).substr(0, 4) == "byte");
    CHECK(location_of([] { parse_graph(R"(["not an object"])"); }) == "top level");
    CHECK(location_of([] {
              parse_graph(R"({"vertices": [{"id": 0}], "edges": []})");
          }) == "vertices[0]");
    CHECK(location_of([] {
              parse_graph(R"({"vertices": [{"id": 0, "label": "a"},
                                           {"id": 0, "label": "b"}], "edges": []})");
          }) == "vertices[1]");
    CHECK(location_of([] {
              parse_graph(R"({"vertices": [{"id": 0, "label": "a"}],
                              "edges": [{"src": 0, "dst": 9, "label": "x"}]})");
          }) == "edges[0]");
    CHECK(location_of([] {
              parse_graph(R"({"vertices": [{"id": 0, "label": "a"}], "edges": [], "root": 5})");
          }) == "root");
    CHECK(location_of([] {
              parse_graph(R"({"vertices": [], "edges": [], "extra": 1})");
          }) == "top level");
    CHECK(location_of([] {
              parse_graph(R"({"vertices": [{"id": "zero", "label": "a"}], "edges": []})");
          }) == "vertices[0]");
    CHECK(location_of([] {
              parse_graph(R"({"vertices": [{"id": 0, "label": 3}], "edges": []})");
          }) == "vertices[0]");
    CHECK(location_of([] {
              parse_graph(R"({"vertices": [{"id": 0, "label": "a"}],
                              "edges": [{"src": 0, "dst": 0, "label": "x", "weight": 2}]})");
          }) == "edges[0]");
}

TEST_CASE("graph JSON roundtrip") {
    const Graph g = testutil::amr_graph();
    check_same_graph(g, graph_from_json(graph_to_json(g)));

    Graph unrooted = testutil::cycle_graph(4);
    unrooted.root.reset();
    check_same_graph(unrooted, graph_from_json(graph_to_json(unrooted)));
}

TEST_CASE("decomposition JSON roundtrip keeps original ids") {
    const Graph g = parse_graph(R"({
        "vertices": [{"id": 5, "label": "a"}, {"id": 9, "label": "b"}, {"id": 12, "label": "c"}],
        "edges": [{"src": 5, "dst": 9, "label": "x"}, {"src": 9, "dst": 12, "label": "y"}]
    })");
    TreeDecomposition td;
    VertexSet b0, b1;
    b0.add(0), b0.add(1);
    b1.add(1), b1.add(2);
    td.bags = {b0, b1};
    td.arcs = {{0, 1}};
    td.root = 0;

    const Json doc = td_to_json(td, g);
    CHECK(doc["bags"][0] == Json::array({5, 9}));
    CHECK(doc["bags"][1] == Json::array({9, 12}));
    CHECK(doc["arcs"][0] == Json::array({0, 1}));
    CHECK(doc["root"] == 0);

    const TreeDecomposition back = td_from_json(doc, g);
    CHECK(back.bags == td.bags);
    CHECK(back.arcs == td.arcs);
    CHECK(back.root == td.root);
    CHECK(validate_td(g, back).valid());
}

TEST_CASE("forest JSON roundtrip preserves structure and enumeration") {
    const Graph g = testutil::amr_graph();
    const Forest f = build_forest(g, 2, true);
    const Json doc = forest_to_json(f, g);
    const Forest back = forest_from_json(doc, g);

    REQUIRE(back.nodes.size() == f.nodes.size());
    CHECK(back.root == f.root);
    for (std::size_t i = 0; i < f.nodes.size(); ++i) {
        CHECK(back.nodes[i].bag == f.nodes[i].bag);
        REQUIRE(back.nodes[i].derivations.size() == f.nodes[i].derivations.size());
        for (std::size_t r = 0; r < f.nodes[i].derivations.size(); ++r)
            CHECK(back.nodes[i].derivations[r].children == f.nodes[i].derivations[r].children);
    }
    CHECK(count_trees(back) == count_trees(f));
    CHECK(testutil::forest_codes(back, 10000) == testutil::forest_codes(f, 10000));
}

TEST_CASE("binarized forest JSON marks aux nodes and is rejected by the reader") {
    const Graph g = testutil::amr_graph();
    const BinForest bf = binarize(build_forest(g, 2, false));
    const Json doc = forest_to_json(bf, g);

    bool saw_aux = false;
    for (const Json& n : doc["nodes"]) {
        if (n["aux"].get<bool>()) {
            saw_aux = true;
            CHECK(n["bag"].is_null());
        }
        for (const Json& d : n["derivations"]) CHECK(d.size() == 2);
    }
    CHECK(saw_aux);
    CHECK_THROWS_AS(forest_from_json(doc, g), ParseError);
}

TEST_CASE("forest reader validates ids, bags, and root") {
    const Graph g = testutil::path_graph(2);
    const Json good = forest_to_json(build_forest(g, 1, true), g);

    Json renumbered = good;
    renumbered["nodes"][0]["id"] = 4;
    CHECK_THROWS_AS(forest_from_json(renumbered, g), ParseError);

    Json missing_bag = good;
    missing_bag["nodes"][0]["bag"] = nullptr;
    CHECK_THROWS_AS(forest_from_json(missing_bag, g), ParseError);

    Json alien_bag = good;
    alien_bag["nodes"][0]["bag"] = Json::array({42});
    CHECK_THROWS_AS(forest_from_json(alien_bag, g), ParseError);

    Json stray_child = good;
    stray_child["nodes"][0]["derivations"] = Json::array({Json::array({7})});
    CHECK_THROWS_AS(forest_from_json(stray_child, g), ParseError);

    Json bad_root = good;
    bad_root["root"] = -1;
    CHECK_THROWS_AS(forest_from_json(bad_root, g), ParseError);

    Json extra = good;
    extra["flavor"] = "grape";
    CHECK_THROWS_AS(forest_from_json(extra, g), ParseError);
}
