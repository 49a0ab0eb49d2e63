#include "mpgen/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "mpgen/error.hpp"
#include "mpgen/text.hpp"

namespace mpgen {

namespace {

using TokenList = std::vector<std::string>;

std::map<std::string, int> ngram_counts(const TokenList& tokens, int n) {
    std::map<std::string, int> counts;
    if (int(tokens.size()) < n) return counts;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
        std::string key;
        for (int k = 0; k < n; ++k) {
            if (k > 0) key.push_back('\x1f');
            key += tokens[i + k];
        }
        ++counts[key];
    }
    return counts;
}

// Clipped overlap: sum over candidate n-grams of min(count_cand, count_ref).
long clipped_overlap(const std::map<std::string, int>& cand,
                     const std::map<std::string, int>& ref) {
    long total = 0;
    for (const auto& [key, count] : cand) {
        auto it = ref.find(key);
        if (it != ref.end()) total += std::min(count, it->second);
    }
    return total;
}

std::size_t lcs_length(const TokenList& a, const TokenList& b) {
    const std::size_t na = a.size(), nb = b.size();
    std::vector<std::size_t> prev(nb + 1, 0), cur(nb + 1, 0);
    for (std::size_t i = 1; i <= na; ++i) {
        for (std::size_t j = 1; j <= nb; ++j) {
            if (a[i - 1] == b[j - 1]) {
                cur[j] = prev[j - 1] + 1;
            } else {
                cur[j] = std::max(prev[j], cur[j - 1]);
            }
        }
        std::swap(prev, cur);
    }
    return prev[nb];
}

double f1(double precision, double recall) {
    if (precision + recall == 0.0) return 0.0;
    return 2.0 * precision * recall / (precision + recall);
}

}  // namespace

double bleu_n(const std::string& candidate, const std::string& reference, int n,
              bool* empty_flag) {
    if (empty_flag != nullptr) *empty_flag = false;
    if (n < 1 || n > 4) fail(ErrorCode::invalid_config, "BLEU order must be 1..4");
    const TokenList cand = metric_tokenize(normalize_text(candidate));
    const TokenList ref = metric_tokenize(normalize_text(reference));
    if (cand.empty()) {
        if (empty_flag != nullptr) *empty_flag = true;
        return 0.0;
    }
    double log_precision_sum = 0.0;
    for (int order = 1; order <= n; ++order) {
        if (int(cand.size()) < order) return 0.0;  // no n-grams of this order
        const auto cc = ngram_counts(cand, order);
        const auto rc = ngram_counts(ref, order);
        const long overlap = clipped_overlap(cc, rc);
        const long total = long(cand.size()) - order + 1;
        if (overlap == 0) return 0.0;
        log_precision_sum += std::log(double(overlap) / double(total));
    }
    const double brevity =
        std::exp(std::min(0.0, 1.0 - double(ref.size()) / double(cand.size())));
    return brevity * std::exp(log_precision_sum / n);
}

double rouge(const std::string& candidate, const std::string& reference,
             RougeVariant variant, bool* empty_flag) {
    if (empty_flag != nullptr) *empty_flag = false;
    const TokenList cand = metric_tokenize(normalize_text(candidate));
    const TokenList ref = metric_tokenize(normalize_text(reference));
    if (cand.empty()) {
        if (empty_flag != nullptr) *empty_flag = true;
        return 0.0;
    }
    if (ref.empty()) return 0.0;
    if (variant == RougeVariant::RL) {
        const double lcs = double(lcs_length(cand, ref));
        if (lcs == 0.0) return 0.0;
        return f1(lcs / double(cand.size()), lcs / double(ref.size()));
    }
    const int order = variant == RougeVariant::R1 ? 1 : 2;
    const auto cc = ngram_counts(cand, order);
    const auto rc = ngram_counts(ref, order);
    long cand_total = 0, ref_total = 0;
    for (const auto& [k, v] : cc) cand_total += v;
    for (const auto& [k, v] : rc) ref_total += v;
    if (cand_total == 0 || ref_total == 0) return 0.0;
    const long overlap = clipped_overlap(cc, rc);
    return f1(double(overlap) / double(cand_total),
              double(overlap) / double(ref_total));
}

bool answers_match(const std::string& answer_text, const std::string& gold,
                   ProblemType type, bool* parsed) {
    if (parsed != nullptr) *parsed = true;
    switch (type) {
        case ProblemType::MCP: {
            const auto predicted = extract_option_letter(answer_text);
            const auto expected = extract_option_letter(gold);
            if (!predicted.has_value()) {
                if (parsed != nullptr) *parsed = false;
                return false;
            }
            return expected.has_value() && *predicted == *expected;
        }
        case ProblemType::MFP: {
            const std::string a = normalize_text(answer_text);
            const std::string g = normalize_text(gold);
            if (a.empty()) {
                if (parsed != nullptr) *parsed = false;
                return false;
            }
            if (a == g) return true;
            const auto av = extract_last_number(a);
            const auto gv = extract_last_number(g);
            if (av.has_value() && gv.has_value()) {
                const double scale = std::max(1.0, std::abs(*gv));
                return std::abs(*av - *gv) <= 1e-9 * scale;
            }
            return false;
        }
        case ProblemType::MWP: {
            const auto av = extract_last_number(answer_text);
            const auto gv = extract_last_number(gold);
            if (!av.has_value()) {
                if (parsed != nullptr) *parsed = false;
                return false;
            }
            if (!gv.has_value()) return false;
            const double scale = std::max(std::abs(*gv), 1e-12);
            return std::abs(*av - *gv) <= 1e-6 * scale;
        }
        case ProblemType::MPP:
            fail(ErrorCode::invalid_config,
                 "proof problems are scored with BLEU/ROUGE, not exact match");
    }
    return false;
}

AccuracyResult exact_match_accuracy(const std::vector<GenerationOutput>& predictions,
                                    const std::vector<std::string>& golds,
                                    ProblemType type) {
    if (type == ProblemType::MPP) {
        fail(ErrorCode::invalid_config,
             "exact match is defined for MCP, MFP, MWP only");
    }
    if (predictions.size() != golds.size()) {
        fail(ErrorCode::length_mismatch,
             "predictions (" + std::to_string(predictions.size()) +
                 ") vs golds (" + std::to_string(golds.size()) + ")");
    }
    AccuracyResult result;
    result.total = int(predictions.size());
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        bool parsed = true;
        if (answers_match(predictions[i].answer, golds[i], type, &parsed)) {
            ++result.matched;
        }
        if (!parsed) ++result.unparsed;
    }
    result.accuracy = result.total == 0 ? 0.0 : double(result.matched) / result.total;
    return result;
}

GenerationOutput split_generation(const std::string& text) {
    GenerationOutput out;
    const std::size_t pos = text.find(kMindAnswerSentinel);
    if (pos == std::string::npos) {
        out.mind = text;
        out.sentinel_found = false;
        return out;
    }
    out.mind = text.substr(0, pos);
    out.answer = text.substr(pos + std::string(kMindAnswerSentinel).size());
    out.sentinel_found = true;
    return out;
}

}  // namespace mpgen
