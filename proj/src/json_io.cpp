#include "tdforest/json_io.hpp"

#include <algorithm>
#include <map>

#include "tdforest/errors.hpp"

namespace tdforest {

namespace {

void reject_unknown_fields(const Json& obj, std::initializer_list<const char*> allowed,
                           const std::string& where) {
    for (const auto& item : obj.items()) {
        bool ok = false;
        for (const char* name : allowed)
            if (item.key() == name) {
                ok = true;
                break;
            }
        if (!ok) throw ParseError("unknown field \"" + item.key() + "\"", where);
    }
}

long long require_int(const Json& obj, const char* field, const std::string& where) {
    auto it = obj.find(field);
    if (it == obj.end()) throw ParseError(std::string("missing field \"") + field + "\"", where);
    if (!it->is_number_integer())
        throw ParseError(std::string("field \"") + field + "\" must be an integer", where);
    return it->get<long long>();
}

std::string require_string(const Json& obj, const char* field, const std::string& where) {
    auto it = obj.find(field);
    if (it == obj.end()) throw ParseError(std::string("missing field \"") + field + "\"", where);
    if (!it->is_string())
        throw ParseError(std::string("field \"") + field + "\" must be a string", where);
    return it->get<std::string>();
}

}  // namespace

Graph graph_from_json(const Json& doc) {
    if (!doc.is_object()) throw ParseError("graph document must be an object", "top level");
    reject_unknown_fields(doc, {"vertices", "edges", "root"}, "top level");

    auto vit = doc.find("vertices");
    if (vit == doc.end() || !vit->is_array())
        throw ParseError("\"vertices\" must be an array", "top level");
    auto eit = doc.find("edges");
    if (eit == doc.end() || !eit->is_array())
        throw ParseError("\"edges\" must be an array", "top level");

    // Gather (id, label), then densify by ascending id.
    std::map<long long, std::string> by_id;
    std::size_t vi = 0;
    for (const Json& v : *vit) {
        const std::string where = "vertices[" + std::to_string(vi++) + "]";
        if (!v.is_object()) throw ParseError("vertex must be an object", where);
        reject_unknown_fields(v, {"id", "label"}, where);
        const long long id = require_int(v, "id", where);
        std::string label = require_string(v, "label", where);
        if (!by_id.emplace(id, std::move(label)).second)
            throw ParseError("duplicate vertex id " + std::to_string(id), where);
    }

    Graph g;
    std::map<long long, int> dense;
    for (auto& [id, label] : by_id) {
        dense.emplace(id, g.n());
        g.orig_ids.push_back(id);
        g.labels.push_back(std::move(label));
    }

    std::map<std::pair<int, int>, int> occ;
    std::size_t ei = 0;
    for (const Json& e : *eit) {
        const std::string where = "edges[" + std::to_string(ei++) + "]";
        if (!e.is_object()) throw ParseError("edge must be an object", where);
        reject_unknown_fields(e, {"src", "dst", "label"}, where);
        const long long src = require_int(e, "src", where);
        const long long dst = require_int(e, "dst", where);
        auto sit = dense.find(src);
        if (sit == dense.end())
            throw ParseError("dangling endpoint: no vertex with id " + std::to_string(src), where);
        auto dit = dense.find(dst);
        if (dit == dense.end())
            throw ParseError("dangling endpoint: no vertex with id " + std::to_string(dst), where);
        Edge edge;
        edge.src = sit->second;
        edge.dst = dit->second;
        edge.label = require_string(e, "label", where);
        edge.occ = occ[{edge.src, edge.dst}]++;
        g.edges.push_back(std::move(edge));
    }

    if (auto rit = doc.find("root"); rit != doc.end() && !rit->is_null()) {
        if (!rit->is_number_integer())
            throw ParseError("\"root\" must be an integer or null", "top level");
        const long long root = rit->get<long long>();
        auto it = dense.find(root);
        if (it == dense.end())
            throw ParseError("root refers to no vertex: " + std::to_string(root), "root");
        g.root = it->second;
    }
    return g;
}

Graph parse_graph(const std::string& text) {
    Json doc;
    try {
        doc = Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("malformed JSON: " + std::string(e.what()),
                         "byte " + std::to_string(e.byte));
    }
    return graph_from_json(doc);
}

Json graph_to_json(const Graph& g) {
    Json vertices = Json::array();
    for (int v = 0; v < g.n(); ++v)
        vertices.push_back({{"id", g.orig_ids[static_cast<std::size_t>(v)]},
                            {"label", g.labels[static_cast<std::size_t>(v)]}});
    Json edges = Json::array();
    for (const Edge& e : g.edges)
        edges.push_back({{"src", g.orig_ids[static_cast<std::size_t>(e.src)]},
                         {"dst", g.orig_ids[static_cast<std::size_t>(e.dst)]},
                         {"label", e.label}});
    Json doc;
    doc["vertices"] = std::move(vertices);
    doc["edges"] = std::move(edges);
    doc["root"] = g.root ? Json(g.orig_ids[static_cast<std::size_t>(*g.root)]) : Json(nullptr);
    return doc;
}

namespace {

Json bag_to_json(VertexSet bag, const Graph& g) {
    Json arr = Json::array();
    for_each_vertex(bag, [&](int v) { arr.push_back(g.orig_ids[static_cast<std::size_t>(v)]); });
    return arr;
}

VertexSet bag_from_json(const Json& arr, const Graph& g, const std::string& where) {
    if (!arr.is_array()) throw ParseError("bag must be an array of vertex ids", where);
    std::map<long long, int> dense;
    for (int v = 0; v < g.n(); ++v) dense.emplace(g.orig_ids[static_cast<std::size_t>(v)], v);
    VertexSet bag;
    for (const Json& item : arr) {
        if (!item.is_number_integer()) throw ParseError("bag entries must be integers", where);
        auto it = dense.find(item.get<long long>());
        if (it == dense.end())
            throw ParseError("bag refers to no vertex: " + item.dump(), where);
        bag.add(it->second);
    }
    return bag;
}

}  // namespace

Json td_to_json(const TreeDecomposition& td, const Graph& g) {
    Json bags = Json::array();
    for (VertexSet b : td.bags) bags.push_back(bag_to_json(b, g));
    Json arcs = Json::array();
    for (auto [p, c] : td.arcs) arcs.push_back(Json::array({p, c}));
    Json doc;
    doc["bags"] = std::move(bags);
    doc["arcs"] = std::move(arcs);
    doc["root"] = td.root;
    return doc;
}

TreeDecomposition td_from_json(const Json& doc, const Graph& g) {
    if (!doc.is_object()) throw ParseError("decomposition must be an object", "td");
    reject_unknown_fields(doc, {"bags", "arcs", "root"}, "td");
    TreeDecomposition td;
    auto bit = doc.find("bags");
    if (bit == doc.end() || !bit->is_array()) throw ParseError("\"bags\" must be an array", "td");
    std::size_t i = 0;
    for (const Json& b : *bit) td.bags.push_back(bag_from_json(b, g, "bags[" + std::to_string(i++) + "]"));
    auto ait = doc.find("arcs");
    if (ait == doc.end() || !ait->is_array()) throw ParseError("\"arcs\" must be an array", "td");
    for (const Json& a : *ait) {
        if (!a.is_array() || a.size() != 2 || !a[0].is_number_integer() ||
            !a[1].is_number_integer())
            throw ParseError("arcs must be [parent, child] pairs", "arcs");
        td.arcs.emplace_back(a[0].get<int>(), a[1].get<int>());
    }
    td.root = static_cast<int>(require_int(doc, "root", "td"));
    return td;
}

Json forest_to_json(const Forest& f, const Graph& g) {
    Json nodes = Json::array();
    for (std::size_t i = 0; i < f.nodes.size(); ++i) {
        const ForestNode& n = f.nodes[i];
        Json derivations = Json::array();
        for (const Derivation& d : n.derivations) {
            Json children = Json::array();
            for (int c : d.children) children.push_back(c);
            derivations.push_back(std::move(children));
        }
        nodes.push_back({{"id", static_cast<int>(i)},
                         {"bag", bag_to_json(n.bag, g)},
                         {"aux", false},
                         {"derivations", std::move(derivations)}});
    }
    Json doc;
    doc["nodes"] = std::move(nodes);
    doc["root"] = f.root;
    return doc;
}

Json forest_to_json(const BinForest& f, const Graph& g) {
    Json nodes = Json::array();
    for (std::size_t i = 0; i < f.nodes.size(); ++i) {
        const BinForest::Node& n = f.nodes[i];
        Json derivations = Json::array();
        for (const auto& d : f.nodes[i].derivations)
            derivations.push_back(Json::array({d[0], d[1]}));
        nodes.push_back({{"id", static_cast<int>(i)},
                         {"bag", n.bag ? bag_to_json(*n.bag, g) : Json(nullptr)},
                         {"aux", n.aux},
                         {"derivations", std::move(derivations)}});
    }
    Json doc;
    doc["nodes"] = std::move(nodes);
    doc["root"] = f.root;
    return doc;
}

Forest forest_from_json(const Json& doc, const Graph& g) {
    if (!doc.is_object()) throw ParseError("forest must be an object", "forest");
    reject_unknown_fields(doc, {"nodes", "root"}, "forest");
    auto nit = doc.find("nodes");
    if (nit == doc.end() || !nit->is_array())
        throw ParseError("\"nodes\" must be an array", "forest");

    Forest f;
    f.n_vertices = g.n();
    const int count = static_cast<int>(nit->size());
    std::size_t i = 0;
    for (const Json& n : *nit) {
        const std::string where = "nodes[" + std::to_string(i) + "]";
        if (!n.is_object()) throw ParseError("node must be an object", where);
        reject_unknown_fields(n, {"id", "bag", "aux", "derivations"}, where);
        if (require_int(n, "id", where) != static_cast<long long>(i))
            throw ParseError("node ids must be dense and in order", where);
        if (auto ait = n.find("aux"); ait != n.end() && ait->is_boolean() && ait->get<bool>())
            throw ParseError("binarized forests are not accepted here", where);
        ForestNode node;
        auto bit = n.find("bag");
        if (bit == n.end() || bit->is_null())
            throw ParseError("non-aux node needs a bag", where);
        node.bag = bag_from_json(*bit, g, where);
        auto dit = n.find("derivations");
        if (dit == n.end() || !dit->is_array())
            throw ParseError("\"derivations\" must be an array", where);
        for (const Json& d : *dit) {
            if (!d.is_array()) throw ParseError("derivation must be an array", where);
            Derivation der;
            for (const Json& c : d) {
                if (!c.is_number_integer() || c.get<int>() < 0 || c.get<int>() >= count)
                    throw ParseError("derivation child out of range", where);
                der.children.push_back(c.get<int>());
            }
            node.derivations.push_back(std::move(der));
        }
        f.nodes.push_back(std::move(node));
        ++i;
    }
    const long long root = require_int(doc, "root", "forest");
    if (root < 0 || root >= count) throw ParseError("root out of range", "forest");
    f.root = static_cast<int>(root);
    return f;
}

}  // namespace tdforest
