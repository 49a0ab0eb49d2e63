#pragma once

#include <stdexcept>
#include <string>

namespace mpgen {

// One error taxonomy for the whole library. The CLI maps categories to exit
// codes (usage=1, data=2, gateway=3).
enum class ErrorCode {
    // graph
    duplicate_id,
    dangling_edge,
    empty_label,
    no_knowledge_points,
    empty_sample,
    // gateway
    gateway_unavailable,
    malformed_response,
    incomplete_scores,
    // corpus
    missing_field,
    empty_corpus,
    empty_response,
    response_fully_truncated,
    missing_answer,
    missing_analysis,
    need_two_generators,
    all_responses_identical,
    tied_ranking,
    // model / training
    invalid_config,
    already_attached,
    token_out_of_range,
    too_short,
    empty_span,
    same_pair,
    non_finite_gradient,
    missing_checkpoint,
    missing_corpus,
    // io
    parse_error,
    io_error,
    length_mismatch,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, std::string message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " +
                             message),
          code_(code) {}

    ErrorCode code() const { return code_; }

    bool is_gateway_error() const {
        return code_ == ErrorCode::gateway_unavailable ||
               code_ == ErrorCode::malformed_response ||
               code_ == ErrorCode::incomplete_scores;
    }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace mpgen
