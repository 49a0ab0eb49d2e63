#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mpgen {

// Normalization applied before any text metric: trim, collapse whitespace
// runs, map full-width ASCII forms and CJK punctuation to half-width.
// Corpora mix Chinese and Latin text, so width differences must not count
// as mismatches.
std::string normalize_text(const std::string& text);

// Metric token stream: whitespace-separated words, with each CJK ideograph
// as its own token. Unsegmented Chinese would otherwise collapse into one
// giant token.
std::vector<std::string> metric_tokenize(const std::string& normalized);

// Decodes one UTF-8 code point starting at byte i; advances i. Invalid bytes
// decode as U+FFFD and advance by one.
std::uint32_t utf8_next(const std::string& s, std::size_t& i);

void utf8_append(std::string& out, std::uint32_t cp);

// Last number appearing in the text ("3.5", "-2", "40%", "1/2" all count).
std::optional<double> extract_last_number(const std::string& text);

// Last standalone option letter A-D (accepts "(B)", "B.", "answer is b").
std::optional<char> extract_option_letter(const std::string& text);

bool starts_with(const std::string& s, const std::string& prefix);
bool contains(const std::string& s, const std::string& needle);

std::vector<std::string> split_lines(const std::string& text);

}  // namespace mpgen
