#include "mpgen/error.hpp"

namespace mpgen {

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::duplicate_id: return "DuplicateId";
        case ErrorCode::dangling_edge: return "DanglingEdge";
        case ErrorCode::empty_label: return "EmptyLabel";
        case ErrorCode::no_knowledge_points: return "NoKnowledgePoints";
        case ErrorCode::empty_sample: return "EmptySample";
        case ErrorCode::gateway_unavailable: return "GatewayUnavailable";
        case ErrorCode::malformed_response: return "MalformedResponse";
        case ErrorCode::incomplete_scores: return "IncompleteScores";
        case ErrorCode::missing_field: return "MissingField";
        case ErrorCode::empty_corpus: return "EmptyCorpus";
        case ErrorCode::empty_response: return "EmptyResponse";
        case ErrorCode::response_fully_truncated: return "ResponseFullyTruncated";
        case ErrorCode::missing_answer: return "MissingAnswer";
        case ErrorCode::missing_analysis: return "MissingAnalysis";
        case ErrorCode::need_two_generators: return "NeedTwoGenerators";
        case ErrorCode::all_responses_identical: return "AllResponsesIdentical";
        case ErrorCode::tied_ranking: return "TiedRanking";
        case ErrorCode::invalid_config: return "InvalidConfig";
        case ErrorCode::already_attached: return "AlreadyAttached";
        case ErrorCode::token_out_of_range: return "TokenOutOfRange";
        case ErrorCode::too_short: return "TooShort";
        case ErrorCode::empty_span: return "EmptySpan";
        case ErrorCode::same_pair: return "SamePair";
        case ErrorCode::non_finite_gradient: return "NonFiniteGradient";
        case ErrorCode::missing_checkpoint: return "MissingCheckpoint";
        case ErrorCode::missing_corpus: return "MissingCorpus";
        case ErrorCode::parse_error: return "ParseError";
        case ErrorCode::io_error: return "IoError";
        case ErrorCode::length_mismatch: return "LengthMismatch";
    }
    return "UnknownError";
}

}  // namespace mpgen
