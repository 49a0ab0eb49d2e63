#pragma once

#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "mpgen/experience.hpp"
#include "mpgen/rng.hpp"

namespace mpgen {

enum class NodeKind { KnowledgePoint, Grade, Description, ExampleProblem };
constexpr int kNodeKindCount = 4;

const char* node_kind_name(NodeKind k);
std::optional<NodeKind> parse_node_kind(const std::string& name);

struct Node {
    std::string id;
    NodeKind kind = NodeKind::KnowledgePoint;
    std::string label;
};

// Typed heterogeneous graph over knowledge points, grades, concept
// descriptions and example problems. Undirected, no self-loops, no
// duplicate edges; immutable once built. Per-kind id buckets are sorted, so
// every uniform draw over a kind is reproducible across platforms.
class KnowledgeGraph {
public:
    std::size_t node_count() const { return nodes_.size(); }
    std::size_t edge_count() const { return edges_.size(); }

    bool has_node(const std::string& id) const { return nodes_.count(id) != 0; }
    const Node& node(const std::string& id) const;
    bool adjacent(const std::string& a, const std::string& b) const;

    // Ids of one kind, ascending.
    const std::vector<std::string>& ids_of(NodeKind kind) const {
        return by_kind_[static_cast<int>(kind)];
    }
    // Edges in canonical (lexicographically smaller endpoint first) order.
    const std::set<std::pair<std::string, std::string>>& edges() const {
        return edges_;
    }
    const std::map<std::string, Node>& nodes() const { return nodes_; }

private:
    friend KnowledgeGraph build_graph(
        const std::vector<Node>& node_specs,
        const std::vector<std::pair<std::string, std::string>>& edge_specs);

    std::map<std::string, Node> nodes_;
    std::set<std::pair<std::string, std::string>> edges_;
    std::array<std::vector<std::string>, kNodeKindCount> by_kind_;
};

// Validates and assembles a graph. Node ids must be unique across all
// kinds (DuplicateId), labels non-empty (EmptyLabel), edge endpoints
// declared (DanglingEdge), no self-loops (InvalidConfig). Repeating an
// edge, in either orientation, collapses to one undirected edge.
KnowledgeGraph build_graph(
    const std::vector<Node>& node_specs,
    const std::vector<std::pair<std::string, std::string>>& edge_specs);

// Graph ingestion files are line-delimited JSON records:
//   {"record_type": "node", "id": ..., "kind": ..., "label": ...}
//   {"record_type": "edge", "src": ..., "dst": ...}
// Parse failures carry the 1-based line number.
KnowledgeGraph load_graph(const std::string& path);
void save_graph(const KnowledgeGraph& graph, const std::string& path);

// One whole-link draw: a knowledge point, plus whichever of its grade /
// description / example-problem candidates landed on an actual neighbor.
struct LinkSample {
    std::string knowledge_point;
    std::optional<std::string> grade;
    std::optional<std::string> description;
    std::optional<std::string> example_problem;
};

// One relation draw: a knowledge point, up to 2 adjacent descriptions, up
// to 4 adjacent other knowledge points.
struct RelationSample {
    std::string seed;
    std::vector<std::string> descriptions;  // ≤ 2, deduplicated
    std::vector<std::string> neighbors;     // ≤ 4, deduplicated, seed excluded
};

// Canonical one-line renderings used for byte-identity comparisons.
std::string to_string(const LinkSample& s);
std::string to_string(const RelationSample& s);

// Draw order (fixed; replay tests depend on it): 1 seed from the knowledge
// points, then one candidate each from grades, descriptions and example
// problems, each kept only if adjacent to the seed. A draw over an empty
// bucket is skipped and consumes no rng state. Throws NoKnowledgePoints on
// a graph without knowledge points.
LinkSample sample_whole_link(const KnowledgeGraph& graph, Rng& rng);

// Draw order: 1 seed from the knowledge points, then exactly 2 description
// candidates, then exactly 4 knowledge-point candidates drawn from the
// other knowledge points (with replacement). Candidates are kept only if
// adjacent to the seed; duplicates are dropped after the adjacency check.
// Empty-bucket draws are skipped without consuming rng state.
RelationSample sample_relation_set(const KnowledgeGraph& graph, Rng& rng);

// Turns a sample into a pre-training document via the gateway: the member
// labels go out as labeled fields, the reply comes back as the document
// text. With the mock gateway the text is the labeled-field template
// itself. Throws EmptySample when the sample's seed is not in the graph.
SymbolicDoc verbalize_sample(const KnowledgeGraph& graph, const LinkSample& sample,
                             ChatGateway& gateway);
SymbolicDoc verbalize_sample(const KnowledgeGraph& graph,
                             const RelationSample& sample, ChatGateway& gateway);

}  // namespace mpgen
