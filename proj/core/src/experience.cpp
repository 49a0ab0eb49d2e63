#include "mpgen/experience.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "mpgen/error.hpp"
#include "mpgen/generation.hpp"
#include "mpgen/rational.hpp"
#include "mpgen/tokenizer.hpp"

namespace mpgen {

// ---------------------------------------------------------------------------
// Problem records

void validate_problem(const ProblemRecord& p) {
    if (p.modality != "single" && p.modality != "multi") {
        fail(ErrorCode::invalid_config,
             "problem " + p.id + ": modality must be single or multi");
    }
    if (p.modality == "multi" && p.image_ref.empty()) {
        fail(ErrorCode::invalid_config,
             "problem " + p.id + ": multi-modality needs an image reference");
    }
    if (p.problem_type == ProblemType::MCP && !p.answer.empty()) {
        if (p.answer.size() != 1 || p.answer[0] < 'A' || p.answer[0] > 'D') {
            fail(ErrorCode::invalid_config,
                 "problem " + p.id + ": choice answer must be one of A..D");
        }
    }
    if (p.grade != 0 && (p.grade < 1 || p.grade > 9)) {
        fail(ErrorCode::invalid_config, "problem " + p.id + ": grade out of 1..9");
    }
    if (p.difficulty != 0 && (p.difficulty < 1 || p.difficulty > 5)) {
        fail(ErrorCode::invalid_config,
             "problem " + p.id + ": difficulty out of 1..5");
    }
}

std::string problem_to_json(const ProblemRecord& p) {
    nlohmann::json j;
    j["schema"] = "problem";
    j["id"] = p.id;
    j["modality"] = p.modality;
    j["problem_type"] = problem_type_name(p.problem_type);
    j["stem"] = p.stem;
    if (!p.image_ref.empty()) j["image_ref"] = p.image_ref;
    if (!p.answer.empty()) j["answer"] = p.answer;
    if (!p.analysis.empty()) j["analysis"] = p.analysis;
    j["grade"] = p.grade;
    j["knowledge_points"] = p.knowledge_points;
    j["difficulty"] = p.difficulty;
    return j.dump();
}

namespace {

nlohmann::json parse_record_line(const std::string& line, int line_number,
                                 const char* schema) {
    const nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        fail(ErrorCode::parse_error,
             "line " + std::to_string(line_number) + ": not a JSON record");
    }
    if (j.value("schema", "") != schema) {
        fail(ErrorCode::parse_error, "line " + std::to_string(line_number) +
                                         ": expected schema " + schema);
    }
    return j;
}

}  // namespace

ProblemRecord problem_from_json(const std::string& line, int line_number) {
    const nlohmann::json j = parse_record_line(line, line_number, "problem");
    ProblemRecord p;
    try {
        p.id = j.at("id").get<std::string>();
        p.modality = j.value("modality", "single");
        const auto type = parse_problem_type(j.value("problem_type", ""));
        if (!type) {
            fail(ErrorCode::parse_error, "line " + std::to_string(line_number) +
                                             ": unknown problem_type");
        }
        p.problem_type = *type;
        p.stem = j.at("stem").get<std::string>();
        p.image_ref = j.value("image_ref", "");
        p.answer = j.value("answer", "");
        p.analysis = j.value("analysis", "");
        p.grade = j.value("grade", 0);
        if (j.contains("knowledge_points")) {
            p.knowledge_points =
                j.at("knowledge_points").get<std::vector<std::string>>();
        }
        p.difficulty = j.value("difficulty", 0);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::parse_error,
             "line " + std::to_string(line_number) + ": " + e.what());
    }
    validate_problem(p);
    return p;
}

// ---------------------------------------------------------------------------
// Task prompts

namespace {

const char* problem_type_phrase(ProblemType t) {
    switch (t) {
        case ProblemType::MCP: return "multiple-choice problem (options A to D)";
        case ProblemType::MFP: return "fill-in-the-blank problem";
        case ProblemType::MWP: return "word problem";
        case ProblemType::MPP: return "proof problem";
    }
    return "?";
}

}  // namespace

std::string build_task_prompt(const TaskRequest& req) {
    std::ostringstream out;
    switch (req.kind) {
        case TaskKind::CG: {
            if (req.knowledge_point.empty()) {
                fail(ErrorCode::missing_field,
                     "controllable generation needs a knowledge point");
            }
            if (req.difficulty < 1 || req.difficulty > 5) {
                fail(ErrorCode::missing_field,
                     "controllable generation needs difficulty in 1..5");
            }
            if (req.grade < 1 || req.grade > 9) {
                fail(ErrorCode::missing_field,
                     "controllable generation needs grade in 1..9");
            }
            out << "[task] controllable generation\n"
                << "[problem type] " << problem_type_name(req.problem_type) << "\n"
                << "[knowledge point] " << req.knowledge_point << "\n"
                << "[difficulty] " << req.difficulty << " of 5\n"
                << "[grade] " << req.grade << " of 9\n"
                << "Design one new " << problem_type_phrase(req.problem_type)
                << " that matches every field above. First write your mind of "
                   "design — how the knowledge point, difficulty and grade shape "
                   "the problem — then the line ####, then the problem itself.";
            break;
        }
        case TaskKind::AG: {
            if (!req.seed_problem) {
                fail(ErrorCode::missing_field,
                     "analogy generation needs a seed problem");
            }
            out << "[task] analogy generation\n"
                << "[seed problem] " << req.seed_problem->stem << "\n"
                << "Write a new problem analogous to the seed problem: same "
                   "knowledge and structure, different surface. First think step "
                   "by step — state what the seed problem tests, then how you "
                   "will vary it — then the line ####, then the new problem.";
            break;
        }
        case TaskKind::FS: {
            if (!req.problem) {
                fail(ErrorCode::missing_field, "fine-grained solving needs a problem");
            }
            out << "[task] fine-grained solving\n"
                << "[problem] " << req.problem->stem << "\n"
                << "Solve the problem. Write the detailed analysis process step "
                   "by step, then the line ####, then the final answer alone.";
            break;
        }
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Record JSON

std::string symbolic_doc_to_json(const SymbolicDoc& d) {
    nlohmann::json j;
    j["schema"] = "symbolic_doc";
    j["source"] = d.source;
    j["text"] = d.text;
    return j.dump();
}

SymbolicDoc symbolic_doc_from_json(const std::string& line, int line_number) {
    const nlohmann::json j = parse_record_line(line, line_number, "symbolic_doc");
    SymbolicDoc d;
    d.source = j.value("source", "");
    d.text = j.value("text", "");
    if (d.source != "book" && d.source != "graph" && d.source != "arithmetic" &&
        d.source != "general") {
        fail(ErrorCode::parse_error, "line " + std::to_string(line_number) +
                                         ": unknown source " + d.source);
    }
    if (d.text.empty()) {
        fail(ErrorCode::parse_error,
             "line " + std::to_string(line_number) + ": empty document text");
    }
    return d;
}

std::string iconic_pair_to_json(const IconicPair& p) {
    nlohmann::json j;
    j["schema"] = "iconic_pair";
    j["tokens"] = p.tokens;
    j["span"] = {p.span_begin, p.span_end};
    return j.dump();
}

IconicPair iconic_pair_from_json(const std::string& line, int line_number) {
    const nlohmann::json j = parse_record_line(line, line_number, "iconic_pair");
    IconicPair p;
    try {
        p.tokens = j.at("tokens").get<std::vector<int>>();
        p.span_begin = j.at("span").at(0).get<int>();
        p.span_end = j.at("span").at(1).get<int>();
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::parse_error,
             "line " + std::to_string(line_number) + ": " + e.what());
    }
    if (p.span_begin < 0 || p.span_end <= p.span_begin ||
        p.span_end > int(p.tokens.size())) {
        fail(ErrorCode::parse_error,
             "line " + std::to_string(line_number) + ": bad loss span");
    }
    return p;
}

std::string preference_triple_to_json(const PreferenceTriple& t) {
    nlohmann::json j;
    j["schema"] = "preference_triple";
    j["instruction"] = t.instruction;
    j["preferred"] = t.preferred;
    j["dispreferred"] = t.dispreferred;
    j["ranker"] = t.ranker;
    return j.dump();
}

PreferenceTriple preference_triple_from_json(const std::string& line,
                                             int line_number) {
    const nlohmann::json j =
        parse_record_line(line, line_number, "preference_triple");
    PreferenceTriple t;
    t.instruction = j.value("instruction", "");
    t.preferred = j.value("preferred", "");
    t.dispreferred = j.value("dispreferred", "");
    t.ranker = j.value("ranker", "human");
    if (t.preferred == t.dispreferred) {
        fail(ErrorCode::same_pair, "line " + std::to_string(line_number) +
                                       ": preferred equals dispreferred");
    }
    return t;
}

// ---------------------------------------------------------------------------
// Symbolic-stage construction

std::vector<std::vector<int>> chunk_pretrain_corpus(
    const std::vector<SymbolicDoc>& docs, int max_tokens) {
    if (max_tokens < 2) {
        fail(ErrorCode::invalid_config, "chunk size must be at least 2 tokens");
    }
    if (docs.empty()) {
        fail(ErrorCode::empty_corpus, "no documents to chunk");
    }
    std::vector<std::vector<int>> chunks;
    std::vector<int> current;
    current.reserve(max_tokens);
    for (const auto& doc : docs) {
        if (doc.text.empty()) {
            fail(ErrorCode::invalid_config, "document with empty text");
        }
        std::vector<int> tokens = ByteTokenizer::encode(doc.text);
        tokens.push_back(ByteTokenizer::kSep);
        for (int t : tokens) {
            current.push_back(t);
            if (int(current.size()) == max_tokens) {
                chunks.push_back(std::move(current));
                current = {};
                current.reserve(max_tokens);
            }
        }
    }
    if (!current.empty()) chunks.push_back(std::move(current));
    return chunks;
}

namespace {

struct Operand {
    std::string rendered;
    Rational value;
};

Operand draw_operand(Rng& rng, const std::string& format,
                     const ArithmeticConfig& cfg) {
    Operand op;
    if (format == "integer") {
        const std::int64_t v = rng.uniform_int(cfg.min_operand, cfg.max_operand);
        op.value = Rational::from_int(v);
        op.rendered = std::to_string(v);
    } else if (format == "decimal") {
        const std::int64_t whole = rng.uniform_int(cfg.min_operand, cfg.max_operand);
        std::int64_t scale = 1;
        for (int i = 0; i < cfg.decimal_places; ++i) scale *= 10;
        const std::int64_t frac = std::int64_t(rng.uniform(scale));
        op.value = Rational(whole * scale + frac, scale);
        std::string digits = std::to_string(frac);
        while (int(digits.size()) < cfg.decimal_places) {
            digits.insert(digits.begin(), '0');
        }
        op.rendered = std::to_string(whole) + "." + digits;
    } else if (format == "percent") {
        const std::int64_t v = rng.uniform_int(cfg.min_operand, cfg.max_operand);
        op.value = Rational(v, 100);
        op.rendered = std::to_string(v) + "%";
    } else if (format == "fraction") {
        const std::int64_t num = rng.uniform_int(1, 9);
        const std::int64_t den = rng.uniform_int(2, 9);
        op.value = Rational(num, den);
        op.rendered = std::to_string(num) + "/" + std::to_string(den);
    } else if (format == "negative") {
        const std::int64_t v = rng.uniform_int(1, std::max<std::int64_t>(
                                                      1, cfg.max_operand));
        op.value = Rational::from_int(-v);
        op.rendered = "-" + std::to_string(v);
    } else {
        fail(ErrorCode::invalid_config, "unknown numeric format " + format);
    }
    return op;
}

// Left-to-right evaluation honoring precedence: ^ binds tightest, then
// × and ÷, then + and −.
Rational evaluate(std::vector<Rational> values, std::vector<char> ops) {
    for (std::size_t i = 0; i < ops.size();) {
        if (ops[i] == '^') {
            values[i] = pow_int(values[i], int(values[i + 1].num));
            values.erase(values.begin() + i + 1);
            ops.erase(ops.begin() + i);
        } else {
            ++i;
        }
    }
    for (std::size_t i = 0; i < ops.size();) {
        if (ops[i] == '*' || ops[i] == '/') {
            values[i] = ops[i] == '*' ? values[i] * values[i + 1]
                                      : values[i] / values[i + 1];
            values.erase(values.begin() + i + 1);
            ops.erase(ops.begin() + i);
        } else {
            ++i;
        }
    }
    Rational result = values[0];
    for (std::size_t i = 0; i < ops.size(); ++i) {
        result = ops[i] == '+' ? result + values[i + 1] : result - values[i + 1];
    }
    return result;
}

}  // namespace

SymbolicDoc generate_arithmetic(Rng& rng, const ArithmeticConfig& config) {
    if (config.operators.empty() || config.formats.empty()) {
        fail(ErrorCode::invalid_config,
             "arithmetic generator needs at least one operator and format");
    }
    if (config.max_operands < 2) {
        fail(ErrorCode::invalid_config, "expressions need at least 2 operands");
    }

    // At most one power per expression keeps associativity unambiguous; an
    // all-power operator set therefore caps the expression at two operands.
    const bool only_power =
        config.operators.find_first_not_of('^') == std::string::npos;
    const int count =
        only_power ? 2 : int(rng.uniform_int(2, config.max_operands));

    std::vector<char> ops;
    bool used_power = false;
    for (int i = 0; i + 1 < count; ++i) {
        char op = config.operators[rng.uniform(config.operators.size())];
        while (op == '^' && used_power) {
            op = config.operators[rng.uniform(config.operators.size())];
        }
        if (op == '^') used_power = true;
        ops.push_back(op);
    }

    std::vector<Operand> operands;
    for (int i = 0; i < count; ++i) {
        const char incoming = i > 0 ? ops[i - 1] : ' ';
        if (incoming == '^') {
            // Exponents are small non-negative integers regardless of the
            // format mix; 0^0 is nudged to an exponent of 1.
            std::int64_t e = rng.uniform_int(0, 3);
            if (e == 0 && operands.back().value.num == 0) e = 1;
            Operand op;
            op.value = Rational::from_int(e);
            op.rendered = std::to_string(e);
            operands.push_back(op);
            continue;
        }
        const std::string& format =
            config.formats[rng.uniform(config.formats.size())];
        Operand op = draw_operand(rng, format, config);
        if (incoming == '/') {
            while (op.value.num == 0) op = draw_operand(rng, format, config);
        }
        operands.push_back(op);
    }

    std::vector<Rational> values;
    std::ostringstream text;
    for (int i = 0; i < count; ++i) {
        if (i > 0) {
            const char op = ops[i - 1];
            text << ' '
                 << (op == '*' ? "×" : op == '/' ? "÷" : std::string(1, op))
                 << ' ';
        }
        const bool parenthesize = i > 0 && operands[i].rendered[0] == '-';
        text << (parenthesize ? "(" : "") << operands[i].rendered
             << (parenthesize ? ")" : "");
        values.push_back(operands[i].value);
    }

    const Rational result = evaluate(values, ops);
    text << " = " << to_string(result);

    SymbolicDoc doc;
    doc.source = "arithmetic";
    doc.text = text.str();
    return doc;
}

// ---------------------------------------------------------------------------
// Iconic-stage construction

IconicPair make_masked_sample(const std::string& query,
                              const std::string& response, int max_tokens) {
    if (max_tokens < 2) {
        fail(ErrorCode::invalid_config, "sample window must hold at least 2 tokens");
    }
    const std::vector<int> q = ByteTokenizer::encode(query);
    std::vector<int> r = ByteTokenizer::encode(response);
    if (r.empty()) {
        fail(ErrorCode::empty_response, "response tokenizes to nothing");
    }
    r.push_back(ByteTokenizer::kSep);
    if (int(q.size()) >= max_tokens) {
        fail(ErrorCode::response_fully_truncated,
             "query fills the whole window; response would be cut entirely");
    }
    IconicPair pair;
    pair.tokens = q;
    pair.span_begin = int(q.size());
    for (int t : r) {
        if (int(pair.tokens.size()) >= max_tokens) break;
        pair.tokens.push_back(t);
    }
    pair.span_end = int(pair.tokens.size());
    while (int(pair.tokens.size()) < max_tokens) {
        pair.tokens.push_back(ByteTokenizer::kPad);
    }
    return pair;
}

SolvedProblem synthesize_solution(const ProblemRecord& p, int method,
                                  ChatGateway& gateway) {
    validate_problem(p);
    if (method < 1 || method > 3) {
        fail(ErrorCode::invalid_config, "solution recipe must be 1, 2 or 3");
    }
    if (method >= 2 && p.answer.empty()) {
        fail(ErrorCode::missing_answer,
             "recipe " + std::to_string(method) + " needs the final answer");
    }
    if (method == 3 && p.analysis.empty()) {
        fail(ErrorCode::missing_analysis, "recipe 3 needs an existing analysis");
    }

    std::ostringstream user;
    switch (method) {
        case 1:
            user << "Solve the problem. Write the detailed analysis process, "
                    "then the line ####, then the final answer alone.\n---\n"
                 << "[problem] " << p.stem;
            break;
        case 2:
            user << "The final answer is known. Write the step-by-step analysis "
                    "that leads to exactly this answer.\n---\n"
                 << "[problem] " << p.stem << "\n[answer] " << p.answer;
            break;
        case 3:
            user << "Rewrite the analysis below so it reads clearly step by "
                    "step; keep the reasoning and the answer.\n---\n"
                 << "[problem] " << p.stem << "\n[analysis] " << p.analysis
                 << "\n[answer] " << p.answer;
            break;
    }
    ChatRequest req;
    req.temperature = 0.0;
    req.max_tokens = 1024;
    req.messages.push_back({"user", user.str(),
                            p.modality == "multi" ? p.image_ref : ""});
    const std::string reply = gateway.complete_chat(req);

    SolvedProblem out;
    out.problem = p;
    if (method == 1) {
        const GenerationOutput split = split_generation(reply);
        out.mind_of_solution = split.mind;
        out.final_answer = split.answer;
    } else {
        out.mind_of_solution = reply;
        out.final_answer = p.answer;
    }
    return out;
}

std::string failure_episode_to_json(const FailureEpisode& e) {
    nlohmann::json j;
    j["schema"] = "failure_episode";
    j["task_instruction"] = e.task_instruction;
    j["collaboration_info"] = e.collaboration_info;
    j["guidance_feedback"] = e.guidance_feedback;
    return j.dump();
}

FailureEpisode synthesize_failure_episode(const std::string& instruction,
                                          const std::vector<GeneratorHandle>& generators,
                                          ChatGateway& discriminator,
                                          int exchanges) {
    if (generators.size() != 2) {
        fail(ErrorCode::need_two_generators,
             "episode needs exactly 2 generators, got " +
                 std::to_string(generators.size()));
    }
    if (exchanges < 1) {
        fail(ErrorCode::invalid_config, "episode needs at least 1 exchange");
    }

    FailureEpisode episode;
    episode.task_instruction = instruction;
    std::ostringstream transcript;
    for (int round = 0; round < exchanges; ++round) {
        for (int g = 0; g < 2; ++g) {
            std::string prompt = instruction;
            const std::string so_far = transcript.str();
            if (!so_far.empty()) {
                prompt += "\n\nconversation so far:\n" + so_far;
            }
            if (round > 0 || g > 0) transcript << '\n';
            transcript << "generator " << (g + 1) << ": " << generators[g](prompt);
        }
    }
    episode.collaboration_info = transcript.str();

    ChatRequest req;
    req.temperature = 0.0;
    req.max_tokens = 1024;
    req.messages.push_back(
        {"user",
         "Two generators attempted the task below. Review the transcript, "
         "point out where the attempts fall short, and give concrete guidance "
         "for a better response.\n---\n[instruction] " +
             instruction + "\n[transcript]\n" + episode.collaboration_info,
         ""});
    episode.guidance_feedback = discriminator.complete_chat(req);
    return episode;
}

// ---------------------------------------------------------------------------
// Direct-stage construction

PreferenceTriple assemble_preference_pair(const std::string& instruction,
                                          const std::vector<std::string>& responses,
                                          RankerKind ranker, ChatGateway* gateway,
                                          Rng* rng) {
    if (responses.size() < 2) {
        fail(ErrorCode::invalid_config, "ranking needs at least 2 responses");
    }
    const bool all_same =
        std::all_of(responses.begin(), responses.end(),
                    [&](const std::string& r) { return r == responses.front(); });
    if (all_same) {
        fail(ErrorCode::all_responses_identical,
             "every response is identical; nothing to rank");
    }

    PreferenceTriple triple;
    triple.instruction = instruction;

    if (ranker == RankerKind::human_order) {
        triple.ranker = "human";
        triple.preferred = responses.front();
        // The last response distinct from the winner; exists because not
        // all responses are identical.
        for (auto it = responses.rbegin(); it != responses.rend(); ++it) {
            if (*it != triple.preferred) {
                triple.dispreferred = *it;
                break;
            }
        }
        return triple;
    }

    if (gateway == nullptr || rng == nullptr) {
        fail(ErrorCode::invalid_config,
             "gateway ranking needs a gateway and an rng");
    }
    triple.ranker = "model";
    std::vector<int> wins(responses.size(), 0);
    for (std::size_t i = 0; i < responses.size(); ++i) {
        for (std::size_t j = i + 1; j < responses.size(); ++j) {
            if (responses[i] == responses[j]) continue;
            const Verdict v =
                judge_battle(*gateway, instruction, responses[i], responses[j], *rng);
            ++wins[v.winner == 'A' ? i : j];
        }
    }
    const auto top = std::max_element(wins.begin(), wins.end()) - wins.begin();
    const auto bottom = std::min_element(wins.begin(), wins.end()) - wins.begin();
    if (std::count(wins.begin(), wins.end(), wins[top]) > 1 ||
        std::count(wins.begin(), wins.end(), wins[bottom]) > 1 ||
        responses[top] == responses[bottom]) {
        fail(ErrorCode::tied_ranking, "ranking cannot separate a top from a bottom");
    }
    triple.preferred = responses[top];
    triple.dispreferred = responses[bottom];
    return triple;
}

// ---------------------------------------------------------------------------
// Record files

namespace {

template <typename Record, typename ToJson>
void save_records(const std::vector<Record>& records, const std::string& path,
                  ToJson to_json) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::io_error, "cannot open " + path);
    for (const auto& r : records) out << to_json(r) << '\n';
}

template <typename Record, typename FromJson>
std::vector<Record> load_records(const std::string& path, FromJson from_json) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::io_error, "cannot open " + path);
    std::vector<Record> records;
    std::string line;
    int line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty()) continue;
        records.push_back(from_json(line, line_number));
    }
    return records;
}

}  // namespace

void save_symbolic_docs(const std::vector<SymbolicDoc>& docs,
                        const std::string& path) {
    save_records(docs, path, symbolic_doc_to_json);
}

std::vector<SymbolicDoc> load_symbolic_docs(const std::string& path) {
    return load_records<SymbolicDoc>(path, symbolic_doc_from_json);
}

void save_iconic_pairs(const std::vector<IconicPair>& pairs,
                       const std::string& path) {
    save_records(pairs, path, iconic_pair_to_json);
}

std::vector<IconicPair> load_iconic_pairs(const std::string& path) {
    return load_records<IconicPair>(path, iconic_pair_from_json);
}

void save_preference_triples(const std::vector<PreferenceTriple>& triples,
                             const std::string& path) {
    save_records(triples, path, preference_triple_to_json);
}

std::vector<PreferenceTriple> load_preference_triples(const std::string& path) {
    return load_records<PreferenceTriple>(path, preference_triple_from_json);
}

void save_problems(const std::vector<ProblemRecord>& problems,
                   const std::string& path) {
    save_records(problems, path, problem_to_json);
}

std::vector<ProblemRecord> load_problems(const std::string& path) {
    return load_records<ProblemRecord>(path, problem_from_json);
}

}  // namespace mpgen
