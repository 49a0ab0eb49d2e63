#pragma once

#include <optional>
#include <string>
#include <vector>

namespace mpgen {

// The three generation tasks: controllable generation, analogy generation,
// fine-grained solving.
enum class TaskKind { CG, AG, FS };

const char* task_kind_name(TaskKind k);
std::optional<TaskKind> parse_task_kind(const std::string& name);

// The four problem types: multiple-choice, fill-in-the-blank, word, proof.
enum class ProblemType { MCP, MFP, MWP, MPP };

const char* problem_type_name(ProblemType t);
std::optional<ProblemType> parse_problem_type(const std::string& name);

// Judge dimension codes per task: CG scores six dimensions, AG five, FS
// four. Codes are two-letter and unique within a task.
//   shared: LF language fluency, LC logical correctness; CG/AG add CC
//   content completeness; CG adds KR knowledge-point relevance, DA
//   difficulty appropriateness, TA type adaptability; AG adds RR reasoning
//   rationality, SR seed relevance; FS adds AC analytical completeness,
//   AA answer accuracy.
const std::vector<std::string>& dimension_codes(TaskKind k);
bool is_valid_dimension(TaskKind k, const std::string& code);

}  // namespace mpgen
