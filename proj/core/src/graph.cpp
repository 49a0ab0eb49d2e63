#include "mpgen/graph.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "mpgen/error.hpp"

namespace mpgen {

const char* node_kind_name(NodeKind k) {
    switch (k) {
        case NodeKind::KnowledgePoint: return "knowledge_point";
        case NodeKind::Grade: return "grade";
        case NodeKind::Description: return "description";
        case NodeKind::ExampleProblem: return "example_problem";
    }
    return "?";
}

std::optional<NodeKind> parse_node_kind(const std::string& name) {
    if (name == "knowledge_point") return NodeKind::KnowledgePoint;
    if (name == "grade") return NodeKind::Grade;
    if (name == "description") return NodeKind::Description;
    if (name == "example_problem") return NodeKind::ExampleProblem;
    return std::nullopt;
}

const Node& KnowledgeGraph::node(const std::string& id) const {
    const auto it = nodes_.find(id);
    if (it == nodes_.end()) {
        fail(ErrorCode::dangling_edge, "unknown node id " + id);
    }
    return it->second;
}

bool KnowledgeGraph::adjacent(const std::string& a, const std::string& b) const {
    const auto& key = a < b ? std::make_pair(a, b) : std::make_pair(b, a);
    return edges_.count(key) != 0;
}

KnowledgeGraph build_graph(
    const std::vector<Node>& node_specs,
    const std::vector<std::pair<std::string, std::string>>& edge_specs) {
    KnowledgeGraph g;
    for (const auto& spec : node_specs) {
        if (spec.label.empty()) {
            fail(ErrorCode::empty_label, "node " + spec.id + " has an empty label");
        }
        if (!g.nodes_.emplace(spec.id, spec).second) {
            fail(ErrorCode::duplicate_id, "node id " + spec.id + " declared twice");
        }
    }
    for (const auto& [id, node] : g.nodes_) {
        g.by_kind_[static_cast<int>(node.kind)].push_back(id);
    }
    for (const auto& [src, dst] : edge_specs) {
        if (g.nodes_.count(src) == 0) {
            fail(ErrorCode::dangling_edge, "edge endpoint " + src + " undeclared");
        }
        if (g.nodes_.count(dst) == 0) {
            fail(ErrorCode::dangling_edge, "edge endpoint " + dst + " undeclared");
        }
        if (src == dst) {
            fail(ErrorCode::invalid_config, "self-loop on node " + src);
        }
        g.edges_.insert(src < dst ? std::make_pair(src, dst)
                                  : std::make_pair(dst, src));
    }
    return g;
}

KnowledgeGraph load_graph(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::io_error, "cannot open " + path);
    std::vector<Node> nodes;
    std::vector<std::pair<std::string, std::string>> edges;
    std::string line;
    int line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty()) continue;
        const nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("record_type")) {
            fail(ErrorCode::parse_error,
                 path + ":" + std::to_string(line_number) + ": not a graph record");
        }
        const std::string record_type = j.value("record_type", "");
        if (record_type == "node") {
            Node n;
            n.id = j.value("id", "");
            n.label = j.value("label", "");
            const auto kind = parse_node_kind(j.value("kind", ""));
            if (n.id.empty() || !kind) {
                fail(ErrorCode::parse_error,
                     path + ":" + std::to_string(line_number) +
                         ": node needs id and a known kind");
            }
            n.kind = *kind;
            nodes.push_back(std::move(n));
        } else if (record_type == "edge") {
            const std::string src = j.value("src", "");
            const std::string dst = j.value("dst", "");
            if (src.empty() || dst.empty()) {
                fail(ErrorCode::parse_error,
                     path + ":" + std::to_string(line_number) +
                         ": edge needs src and dst");
            }
            edges.emplace_back(src, dst);
        } else {
            fail(ErrorCode::parse_error,
                 path + ":" + std::to_string(line_number) +
                     ": unknown record_type " + record_type);
        }
    }
    return build_graph(nodes, edges);
}

void save_graph(const KnowledgeGraph& graph, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::io_error, "cannot open " + path);
    for (const auto& [id, node] : graph.nodes()) {
        nlohmann::json j;
        j["record_type"] = "node";
        j["id"] = id;
        j["kind"] = node_kind_name(node.kind);
        j["label"] = node.label;
        out << j.dump() << '\n';
    }
    for (const auto& [src, dst] : graph.edges()) {
        nlohmann::json j;
        j["record_type"] = "edge";
        j["src"] = src;
        j["dst"] = dst;
        out << j.dump() << '\n';
    }
}

std::string to_string(const LinkSample& s) {
    std::ostringstream out;
    out << "link{kp=" << s.knowledge_point
        << " grade=" << (s.grade ? *s.grade : "-")
        << " desc=" << (s.description ? *s.description : "-")
        << " problem=" << (s.example_problem ? *s.example_problem : "-") << "}";
    return out.str();
}

std::string to_string(const RelationSample& s) {
    std::ostringstream out;
    out << "relation{seed=" << s.seed << " desc=[";
    for (std::size_t i = 0; i < s.descriptions.size(); ++i) {
        if (i > 0) out << ",";
        out << s.descriptions[i];
    }
    out << "] neighbors=[";
    for (std::size_t i = 0; i < s.neighbors.size(); ++i) {
        if (i > 0) out << ",";
        out << s.neighbors[i];
    }
    out << "]}";
    return out.str();
}

namespace {

const std::string& draw_seed(const KnowledgeGraph& graph, Rng& rng) {
    const auto& kps = graph.ids_of(NodeKind::KnowledgePoint);
    if (kps.empty()) {
        fail(ErrorCode::no_knowledge_points, "graph has no knowledge points");
    }
    return kps[rng.uniform(kps.size())];
}

// One adjacency-conditioned candidate draw from a kind bucket. Empty
// buckets consume no rng state.
std::optional<std::string> draw_adjacent(const KnowledgeGraph& graph,
                                         NodeKind kind, const std::string& seed,
                                         Rng& rng) {
    const auto& bucket = graph.ids_of(kind);
    if (bucket.empty()) return std::nullopt;
    const std::string& candidate = bucket[rng.uniform(bucket.size())];
    if (!graph.adjacent(seed, candidate)) return std::nullopt;
    return candidate;
}

}  // namespace

LinkSample sample_whole_link(const KnowledgeGraph& graph, Rng& rng) {
    LinkSample sample;
    sample.knowledge_point = draw_seed(graph, rng);
    sample.grade =
        draw_adjacent(graph, NodeKind::Grade, sample.knowledge_point, rng);
    sample.description =
        draw_adjacent(graph, NodeKind::Description, sample.knowledge_point, rng);
    sample.example_problem = draw_adjacent(graph, NodeKind::ExampleProblem,
                                           sample.knowledge_point, rng);
    return sample;
}

RelationSample sample_relation_set(const KnowledgeGraph& graph, Rng& rng) {
    RelationSample sample;
    sample.seed = draw_seed(graph, rng);

    for (int k = 0; k < 2; ++k) {
        const auto candidate =
            draw_adjacent(graph, NodeKind::Description, sample.seed, rng);
        if (candidate && std::find(sample.descriptions.begin(),
                                   sample.descriptions.end(),
                                   *candidate) == sample.descriptions.end()) {
            sample.descriptions.push_back(*candidate);
        }
    }

    const auto& kps = graph.ids_of(NodeKind::KnowledgePoint);
    if (kps.size() > 1) {
        // The seed is excluded from the draw domain; its position in the
        // sorted bucket maps the (size-1)-wide draw onto the remaining ids.
        const std::size_t seed_index =
            std::lower_bound(kps.begin(), kps.end(), sample.seed) - kps.begin();
        for (int k = 0; k < 4; ++k) {
            std::size_t index = rng.uniform(kps.size() - 1);
            if (index >= seed_index) ++index;
            const std::string& candidate = kps[index];
            if (graph.adjacent(sample.seed, candidate) &&
                std::find(sample.neighbors.begin(), sample.neighbors.end(),
                          candidate) == sample.neighbors.end()) {
                sample.neighbors.push_back(candidate);
            }
        }
    }
    return sample;
}

namespace {

SymbolicDoc verbalize_fields(const std::string& fields, ChatGateway& gateway) {
    ChatRequest req;
    req.temperature = 0.0;
    req.max_tokens = 1024;
    req.messages.push_back(
        {"user",
         "Rewrite the following subject-knowledge fields as connected prose, "
         "keeping every fact.\n---\n" +
             fields,
         ""});
    SymbolicDoc doc;
    doc.source = "graph";
    doc.text = gateway.complete_chat(req);
    return doc;
}

}  // namespace

SymbolicDoc verbalize_sample(const KnowledgeGraph& graph, const LinkSample& sample,
                             ChatGateway& gateway) {
    if (sample.knowledge_point.empty() || !graph.has_node(sample.knowledge_point)) {
        fail(ErrorCode::empty_sample, "link sample has no knowledge point in graph");
    }
    std::ostringstream fields;
    if (sample.grade) {
        fields << "[grade] " << graph.node(*sample.grade).label << "\n";
    }
    fields << "[knowledge point] " << graph.node(sample.knowledge_point).label
           << "\n";
    if (sample.description) {
        fields << "[concept description] " << graph.node(*sample.description).label
               << "\n";
    }
    if (sample.example_problem) {
        fields << "[example problem] " << graph.node(*sample.example_problem).label
               << "\n";
    }
    return verbalize_fields(fields.str(), gateway);
}

SymbolicDoc verbalize_sample(const KnowledgeGraph& graph,
                             const RelationSample& sample, ChatGateway& gateway) {
    if (sample.seed.empty() || !graph.has_node(sample.seed)) {
        fail(ErrorCode::empty_sample, "relation sample has no seed in graph");
    }
    std::ostringstream fields;
    fields << "[knowledge point] " << graph.node(sample.seed).label << "\n";
    for (const auto& id : sample.descriptions) {
        fields << "[concept description] " << graph.node(id).label << "\n";
    }
    for (const auto& id : sample.neighbors) {
        fields << "[related knowledge point] " << graph.node(id).label << "\n";
    }
    return verbalize_fields(fields.str(), gateway);
}

}  // namespace mpgen
