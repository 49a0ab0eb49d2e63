#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mpgen/generation.hpp"
#include "mpgen/tasks.hpp"

namespace mpgen {

// BLEU@n: modified n-gram precision, geometric mean of orders 1..n, brevity
// penalty exp(min(0, 1 - |ref|/|cand|)). Inputs are normalized and metric-
// tokenized internally. Empty candidate scores 0 and sets *empty_flag.
double bleu_n(const std::string& candidate, const std::string& reference, int n,
              bool* empty_flag = nullptr);

enum class RougeVariant { R1, R2, RL };

// R1/R2: F1 over unigram/bigram overlap (clipped counts). RL: F1 from the
// longest common subsequence. F1 rather than recall-only.
double rouge(const std::string& candidate, const std::string& reference,
             RougeVariant variant, bool* empty_flag = nullptr);

struct AccuracyResult {
    double accuracy = 0.0;
    int matched = 0;
    int total = 0;
    int unparsed = 0;  // predictions with no extractable answer, counted as misses
};

// Exact-match accuracy for answerable problem types. MCP compares the final
// option letter; MFP compares normalized strings or exact numeric value; MWP
// compares the last number in the answer part at relative tolerance 1e-6.
AccuracyResult exact_match_accuracy(const std::vector<GenerationOutput>& predictions,
                                    const std::vector<std::string>& golds,
                                    ProblemType type);

bool answers_match(const std::string& answer_text, const std::string& gold,
                   ProblemType type, bool* parsed = nullptr);

// Aggregate report mirroring the tabular outputs: accuracy by problem type
// and modality, BLEU/ROUGE for proof problems, dimension means, rating
// summary.
struct MetricReport {
    // key: "<type>/<modality>", e.g. "MCP/single"
    std::map<std::string, AccuracyResult> accuracy;
    std::map<std::string, double> bleu;    // "BLEU@1".."BLEU@4"
    std::map<std::string, double> rouge_;  // "ROUGE@1","ROUGE@2","ROUGE@L"
    std::map<std::string, double> dimension_means;
    std::map<std::string, double> elo_final;
    std::map<std::string, double> elo_median;
};

}  // namespace mpgen
