#include "mpgen/tasks.hpp"

namespace mpgen {

const char* task_kind_name(TaskKind k) {
    switch (k) {
        case TaskKind::CG: return "CG";
        case TaskKind::AG: return "AG";
        case TaskKind::FS: return "FS";
    }
    return "?";
}

std::optional<TaskKind> parse_task_kind(const std::string& name) {
    if (name == "CG") return TaskKind::CG;
    if (name == "AG") return TaskKind::AG;
    if (name == "FS") return TaskKind::FS;
    return std::nullopt;
}

const char* problem_type_name(ProblemType t) {
    switch (t) {
        case ProblemType::MCP: return "MCP";
        case ProblemType::MFP: return "MFP";
        case ProblemType::MWP: return "MWP";
        case ProblemType::MPP: return "MPP";
    }
    return "?";
}

std::optional<ProblemType> parse_problem_type(const std::string& name) {
    if (name == "MCP") return ProblemType::MCP;
    if (name == "MFP") return ProblemType::MFP;
    if (name == "MWP") return ProblemType::MWP;
    if (name == "MPP") return ProblemType::MPP;
    return std::nullopt;
}

const std::vector<std::string>& dimension_codes(TaskKind k) {
    static const std::vector<std::string> cg = {"LF", "LC", "CC", "KR", "DA", "TA"};
    static const std::vector<std::string> ag = {"LF", "LC", "CC", "RR", "SR"};
    static const std::vector<std::string> fs = {"LF", "LC", "AC", "AA"};
    switch (k) {
        case TaskKind::CG: return cg;
        case TaskKind::AG: return ag;
        case TaskKind::FS: return fs;
    }
    return cg;
}

bool is_valid_dimension(TaskKind k, const std::string& code) {
    const auto& codes = dimension_codes(k);
    for (const auto& c : codes) {
        if (c == code) return true;
    }
    return false;
}

}  // namespace mpgen
