#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mpgen/gateway.hpp"
#include "mpgen/rng.hpp"
#include "mpgen/tasks.hpp"

namespace mpgen {

// ---------------------------------------------------------------------------
// Problem records and task requests

struct ProblemRecord {
    std::string id;
    std::string modality = "single";  // "single" | "multi"
    ProblemType problem_type = ProblemType::MWP;
    std::string stem;
    std::string image_ref;  // required when modality == "multi"
    std::string answer;     // optional; "A".."D" for MCP
    std::string analysis;   // optional worked solution
    int grade = 0;          // 1..9, 0 when unknown
    std::vector<std::string> knowledge_points;
    int difficulty = 0;  // 1..5, 0 when unknown
};

// Throws InvalidConfig when an invariant is broken (multi-modality without
// an image reference, MCP answer outside A..D).
void validate_problem(const ProblemRecord& p);

std::string problem_to_json(const ProblemRecord& p);
ProblemRecord problem_from_json(const std::string& line, int line_number);

// A generation request for one of the three tasks. CG fills the four
// controllable fields; AG carries the seed problem to vary; FS carries the
// problem to solve.
struct TaskRequest {
    TaskKind kind = TaskKind::CG;
    ProblemType problem_type = ProblemType::MWP;
    std::string knowledge_point;
    int difficulty = 3;  // 1..5
    int grade = 5;       // 1..9
    std::optional<ProblemRecord> seed_problem;
    std::optional<ProblemRecord> problem;
};

// Renders the task instruction. Labeled-field templates keep the prompt
// injective in every controllable field; all three demand the rationale
// first, then the "####" delimiter line, then the deliverable. Throws
// MissingField when the task's required inputs are absent or out of range.
std::string build_task_prompt(const TaskRequest& req);

// ---------------------------------------------------------------------------
// The three experience record shapes

// A raw text document for next-token pre-training.
struct SymbolicDoc {
    std::string source;  // "book" | "graph" | "arithmetic" | "general"
    std::string text;
};

std::string symbolic_doc_to_json(const SymbolicDoc& d);
SymbolicDoc symbolic_doc_from_json(const std::string& line, int line_number);

// A query ⊕ response token sequence, padded or truncated to a fixed length,
// with the loss span marking exactly the response tokens (end-of-sequence
// marker included). Positions before the span are query; positions from
// span_end on are padding.
struct IconicPair {
    std::vector<int> tokens;
    int span_begin = 0;
    int span_end = 0;  // one past the last response position

    std::vector<int> query_tokens() const {
        return {tokens.begin(), tokens.begin() + span_begin};
    }
    std::vector<int> response_tokens() const {
        return {tokens.begin() + span_begin, tokens.begin() + span_end};
    }
};

std::string iconic_pair_to_json(const IconicPair& p);
IconicPair iconic_pair_from_json(const std::string& line, int line_number);

// One ranked preference: the same instruction with a preferred and a
// dispreferred response. preferred != dispreferred always.
struct PreferenceTriple {
    std::string instruction;
    std::string preferred;
    std::string dispreferred;
    std::string ranker = "human";  // "human" | "model"
};

std::string preference_triple_to_json(const PreferenceTriple& t);
PreferenceTriple preference_triple_from_json(const std::string& line,
                                             int line_number);

// ---------------------------------------------------------------------------
// Symbolic-stage construction

// Concatenates every document (each terminated by the separator token) and
// splits the stream into chunks of exactly max_tokens; only the final chunk
// may be shorter. Splices across documents by design — the pre-training
// loss has no mask. Concatenating the chunks reproduces the stream exactly.
std::vector<std::vector<int>> chunk_pretrain_corpus(
    const std::vector<SymbolicDoc>& docs, int max_tokens);

// Synthetic arithmetic drill lines, e.g. "4.75 + 1/4 = 5" — expression on
// the left, exact value on the right. Operands render in the drawn format
// (integer, decimal, percent, fraction, negative); values render exactly
// (integer, terminating decimal, or reduced fraction), so independently
// re-evaluating the expression must reproduce the value verbatim.
struct ArithmeticConfig {
    // Any subset of + - × ÷ ^ (ASCII aliases * and / accepted here).
    std::string operators = "+-*/^";
    // Any subset of {integer, decimal, percent, fraction, negative}.
    std::vector<std::string> formats = {"integer", "decimal", "percent",
                                        "fraction", "negative"};
    int min_operand = 0;
    int max_operand = 100;
    int max_operands = 3;   // expressions draw 2..max_operands operands
    int decimal_places = 2;  // operand rendering precision
};

SymbolicDoc generate_arithmetic(Rng& rng, const ArithmeticConfig& config);

// ---------------------------------------------------------------------------
// Iconic-stage construction

// Tokenizes query and response, appends the end marker to the response, and
// lays the pair out as one fixed-length sequence with the loss span over
// the response. Never splices two samples into one sequence. Throws
// EmptyResponse when the response tokenizes to nothing and
// ResponseFullyTruncated when the query alone fills max_tokens.
IconicPair make_masked_sample(const std::string& query,
                              const std::string& response, int max_tokens);

// A demonstrated solution: the problem, the worked reasoning, the answer.
struct SolvedProblem {
    ProblemRecord problem;
    std::string mind_of_solution;
    std::string final_answer;
};

// Produces the worked solution via the gateway. Three recipes:
//   1 — from the stem alone (answer read out of the reply);
//   2 — from stem + known answer, reasoning filled in (default recipe);
//   3 — from stem + answer + existing analysis, analysis rewritten.
// For recipes 2 and 3 the final answer is copied verbatim from the record.
SolvedProblem synthesize_solution(const ProblemRecord& p, int method,
                                  ChatGateway& gateway);

// A recorded trial-and-error episode: two generators take turns on the
// instruction, a discriminator reviews the transcript and writes guidance.
struct FailureEpisode {
    std::string task_instruction;
    std::string collaboration_info;  // ordered transcript, one line per turn
    std::string guidance_feedback;   // discriminator's final assessment
};

std::string failure_episode_to_json(const FailureEpisode& e);

using GeneratorHandle = std::function<std::string(const std::string& prompt)>;

FailureEpisode synthesize_failure_episode(const std::string& instruction,
                                          const std::vector<GeneratorHandle>& generators,
                                          ChatGateway& discriminator,
                                          int exchanges = 1);

// ---------------------------------------------------------------------------
// Direct-stage construction

enum class RankerKind {
    human_order,  // responses arrive best-first; first and last distinct win/lose
    gateway,      // round-robin battles via the judge; most wins vs fewest
};

// Builds one preference from ≥2 distinct responses. Throws
// AllResponsesIdentical when there is nothing to rank and TiedRanking when
// the gateway ranking cannot separate a top from a bottom (callers record
// the skip). gateway/rng are only used by the gateway ranker.
PreferenceTriple assemble_preference_pair(const std::string& instruction,
                                          const std::vector<std::string>& responses,
                                          RankerKind ranker,
                                          ChatGateway* gateway = nullptr,
                                          Rng* rng = nullptr);

// ---------------------------------------------------------------------------
// Line-delimited record files (one JSON object per line, "schema" field
// naming the record type)

void save_symbolic_docs(const std::vector<SymbolicDoc>& docs,
                        const std::string& path);
std::vector<SymbolicDoc> load_symbolic_docs(const std::string& path);
void save_iconic_pairs(const std::vector<IconicPair>& pairs,
                       const std::string& path);
std::vector<IconicPair> load_iconic_pairs(const std::string& path);
void save_preference_triples(const std::vector<PreferenceTriple>& triples,
                             const std::string& path);
std::vector<PreferenceTriple> load_preference_triples(const std::string& path);
void save_problems(const std::vector<ProblemRecord>& problems,
                   const std::string& path);
std::vector<ProblemRecord> load_problems(const std::string& path);

}  // namespace mpgen
