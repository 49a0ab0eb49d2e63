#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "mpgen/rng.hpp"

namespace mpgen {

class ChatGateway;

// Expected score of the `own` player. Standard semantics put the opponent's
// rating minus one's own in the exponent, so the expectation rises with
// one's own rating. `paper_literal` flips the exponent sign for comparison
// runs; convergence inverts under it.
double elo_expected(double r_own, double r_opp, bool paper_literal = false);

enum class BattleWinner { x, y };

// One rating update. Conserves the rating sum: the winner gains exactly what
// the loser drops.
std::pair<double, double> elo_update(double r_x, double r_y, BattleWinner winner,
                                     double k = 4.0, bool paper_literal = false);

struct RoundRecord {
    int round = 0;
    std::string model_x;
    std::string model_y;
    int prompt_index = 0;
    char winner = 'x';      // 'x' or 'y'; '-' when the round was skipped
    bool tie_broken = false;
    bool skipped = false;
    double rating_x_after = 0.0;
    double rating_y_after = 0.0;
};

struct ArenaLedger {
    double k_factor = 4.0;
    double initial_rating = 1000.0;
    std::map<std::string, double> ratings;
    std::vector<RoundRecord> history;  // append-only

    double rating_sum() const;
    // Median of a model's rating across all round ends (value carried
    // forward through rounds it did not play).
    double rating_median(const std::string& model) const;
};

struct ResponseSource {
    std::string name;
    std::function<std::string(const std::string& prompt)> respond;
};

struct ArenaConfig {
    int rounds = 3600;
    double k_factor = 4.0;
    double initial_rating = 1000.0;
    bool paper_literal = false;
    int round_retries = 1;  // extra judge attempts before skipping a round
};

// The judge returns the winning side for (prompt, response_x, response_y);
// the rng is for recorded tie-breaks.
using BattleJudge =
    std::function<BattleWinner(const std::string& prompt, const std::string& resp_x,
                               const std::string& resp_y, Rng& rng)>;

// Pairwise anonymous battles: each round draws a model pair and a prompt
// uniformly, judges both responses, applies the rating update. Prompts are
// drawn with replacement. Judge failures retry, then skip with a record.
ArenaLedger run_arena(const std::vector<ResponseSource>& models,
                      const std::vector<std::string>& prompts,
                      const BattleJudge& judge, const ArenaConfig& config,
                      Rng& rng);

// Re-applies the recorded verdicts from scratch. Final ratings must
// reproduce the ledger's.
ArenaLedger replay_arena(const std::vector<RoundRecord>& history,
                         const ArenaConfig& config,
                         const std::vector<std::string>& model_names);

// Round-record JSONL (the replay format).
std::string round_record_to_json(const RoundRecord& record);
RoundRecord round_record_from_json(const std::string& line, int line_number);
void save_arena_history(const ArenaLedger& ledger, const std::string& path);
std::vector<RoundRecord> load_arena_history(const std::string& path);

// Win-rate matrix from a ledger's history: wins[a][b] = rounds a beat b.
std::map<std::string, std::map<std::string, int>> pairwise_wins(
    const ArenaLedger& ledger);

}  // namespace mpgen
