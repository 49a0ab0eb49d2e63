#include "mpgen/elo.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "json.hpp"

#include "mpgen/error.hpp"

namespace mpgen {

double elo_expected(double r_own, double r_opp, bool paper_literal) {
    const double diff = paper_literal ? (r_own - r_opp) : (r_opp - r_own);
    return 1.0 / (1.0 + std::pow(10.0, diff / 400.0));
}

std::pair<double, double> elo_update(double r_x, double r_y, BattleWinner winner,
                                     double k, bool paper_literal) {
    const double e_x = elo_expected(r_x, r_y, paper_literal);
    const double e_y = 1.0 - e_x;
    const double score_x = winner == BattleWinner::x ? 1.0 : 0.0;
    const double score_y = 1.0 - score_x;
    return {r_x + k * (score_x - e_x), r_y + k * (score_y - e_y)};
}

double ArenaLedger::rating_sum() const {
    double sum = 0.0;
    for (const auto& [name, r] : ratings) sum += r;
    return sum;
}

double ArenaLedger::rating_median(const std::string& model) const {
    std::vector<double> trajectory;
    trajectory.reserve(history.size());
    double current = initial_rating;
    for (const auto& record : history) {
        if (!record.skipped) {
            if (record.model_x == model) current = record.rating_x_after;
            else if (record.model_y == model) current = record.rating_y_after;
        }
        trajectory.push_back(current);
    }
    if (trajectory.empty()) return initial_rating;
    std::sort(trajectory.begin(), trajectory.end());
    const std::size_t n = trajectory.size();
    if (n % 2 == 1) return trajectory[n / 2];
    return 0.5 * (trajectory[n / 2 - 1] + trajectory[n / 2]);
}

ArenaLedger run_arena(const std::vector<ResponseSource>& models,
                      const std::vector<std::string>& prompts,
                      const BattleJudge& judge, const ArenaConfig& config,
                      Rng& rng) {
    if (models.size() < 2) {
        fail(ErrorCode::invalid_config, "arena needs at least 2 models");
    }
    if (prompts.empty()) {
        fail(ErrorCode::invalid_config, "arena needs at least 1 prompt");
    }
    ArenaLedger ledger;
    ledger.k_factor = config.k_factor;
    ledger.initial_rating = config.initial_rating;
    for (const auto& model : models) {
        if (ledger.ratings.count(model.name) != 0) {
            fail(ErrorCode::duplicate_id, "duplicate model name " + model.name);
        }
        ledger.ratings[model.name] = config.initial_rating;
    }

    for (int round = 0; round < config.rounds; ++round) {
        const std::size_t ix = rng.uniform(models.size());
        std::size_t iy = rng.uniform(models.size() - 1);
        if (iy >= ix) ++iy;
        const int prompt_index = int(rng.uniform(prompts.size()));

        RoundRecord record;
        record.round = round;
        record.model_x = models[ix].name;
        record.model_y = models[iy].name;
        record.prompt_index = prompt_index;

        const std::string& prompt = prompts[prompt_index];
        const std::string resp_x = models[ix].respond(prompt);
        const std::string resp_y = models[iy].respond(prompt);

        bool judged = false;
        BattleWinner winner = BattleWinner::x;
        for (int attempt = 0; attempt <= config.round_retries && !judged; ++attempt) {
            try {
                winner = judge(prompt, resp_x, resp_y, rng);
                judged = true;
            } catch (const Error& e) {
                if (e.code() != ErrorCode::gateway_unavailable) throw;
            }
        }
        if (!judged) {
            record.skipped = true;
            record.winner = '-';
            record.rating_x_after = ledger.ratings[record.model_x];
            record.rating_y_after = ledger.ratings[record.model_y];
            ledger.history.push_back(record);
            continue;
        }

        auto [rx, ry] =
            elo_update(ledger.ratings[record.model_x], ledger.ratings[record.model_y],
                       winner, config.k_factor, config.paper_literal);
        ledger.ratings[record.model_x] = rx;
        ledger.ratings[record.model_y] = ry;
        record.winner = winner == BattleWinner::x ? 'x' : 'y';
        record.rating_x_after = rx;
        record.rating_y_after = ry;
        ledger.history.push_back(record);
    }
    return ledger;
}

ArenaLedger replay_arena(const std::vector<RoundRecord>& history,
                         const ArenaConfig& config,
                         const std::vector<std::string>& model_names) {
    ArenaLedger ledger;
    ledger.k_factor = config.k_factor;
    ledger.initial_rating = config.initial_rating;
    for (const auto& name : model_names) ledger.ratings[name] = config.initial_rating;
    for (const auto& record : history) {
        RoundRecord replayed = record;
        if (ledger.ratings.count(record.model_x) == 0 ||
            ledger.ratings.count(record.model_y) == 0) {
            fail(ErrorCode::parse_error,
                 "history references unknown model in round " +
                     std::to_string(record.round));
        }
        if (!record.skipped) {
            auto [rx, ry] = elo_update(
                ledger.ratings[record.model_x], ledger.ratings[record.model_y],
                record.winner == 'x' ? BattleWinner::x : BattleWinner::y,
                config.k_factor, config.paper_literal);
            ledger.ratings[record.model_x] = rx;
            ledger.ratings[record.model_y] = ry;
            replayed.rating_x_after = rx;
            replayed.rating_y_after = ry;
        } else {
            replayed.rating_x_after = ledger.ratings[record.model_x];
            replayed.rating_y_after = ledger.ratings[record.model_y];
        }
        ledger.history.push_back(replayed);
    }
    return ledger;
}

std::string round_record_to_json(const RoundRecord& r) {
    nlohmann::json j;
    j["round"] = r.round;
    j["x"] = r.model_x;
    j["y"] = r.model_y;
    j["prompt"] = r.prompt_index;
    j["winner"] = std::string(1, r.winner);
    j["tie_broken"] = r.tie_broken;
    j["skipped"] = r.skipped;
    j["rx"] = r.rating_x_after;
    j["ry"] = r.rating_y_after;
    return j.dump();
}

RoundRecord round_record_from_json(const std::string& line, int line_number) {
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        fail(ErrorCode::parse_error,
             "bad round record at line " + std::to_string(line_number));
    }
    try {
        RoundRecord r;
        r.round = j.at("round").get<int>();
        r.model_x = j.at("x").get<std::string>();
        r.model_y = j.at("y").get<std::string>();
        r.prompt_index = j.at("prompt").get<int>();
        const std::string w = j.at("winner").get<std::string>();
        r.winner = w.empty() ? '-' : w[0];
        r.tie_broken = j.value("tie_broken", false);
        r.skipped = j.value("skipped", false);
        r.rating_x_after = j.at("rx").get<double>();
        r.rating_y_after = j.at("ry").get<double>();
        return r;
    } catch (const nlohmann::json::exception&) {
        fail(ErrorCode::parse_error,
             "bad round record at line " + std::to_string(line_number));
    }
}

void save_arena_history(const ArenaLedger& ledger, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::io_error, "cannot open " + path);
    for (const auto& record : ledger.history) {
        out << round_record_to_json(record) << '\n';
    }
}

std::vector<RoundRecord> load_arena_history(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::io_error, "cannot open " + path);
    std::vector<RoundRecord> history;
    std::string line;
    int line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty()) continue;
        history.push_back(round_record_from_json(line, line_number));
    }
    return history;
}

std::map<std::string, std::map<std::string, int>> pairwise_wins(
    const ArenaLedger& ledger) {
    std::map<std::string, std::map<std::string, int>> wins;
    for (const auto& [name, r] : ledger.ratings) wins[name] = {};
    for (const auto& record : ledger.history) {
        if (record.skipped) continue;
        if (record.winner == 'x') ++wins[record.model_x][record.model_y];
        else ++wins[record.model_y][record.model_x];
    }
    return wins;
}

}  // namespace mpgen
