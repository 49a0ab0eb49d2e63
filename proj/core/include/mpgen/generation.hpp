#pragma once

#include <string>

namespace mpgen {

// Every generated reply has two parts: the rationale ("mind") and the final
// product (stem or answer). They are serialized as mind, sentinel, answer so
// the boundary is machine-recoverable.
inline constexpr const char* kMindAnswerSentinel = "\n####\n";

struct GenerationOutput {
    std::string mind;
    std::string answer;
    bool sentinel_found = true;

    std::string serialize() const { return mind + kMindAnswerSentinel + answer; }
};

// Splits at the first sentinel occurrence. A missing sentinel leaves the
// whole text in mind, answer empty, and the record flagged.
GenerationOutput split_generation(const std::string& text);

}  // namespace mpgen
