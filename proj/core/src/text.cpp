#include "mpgen/text.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>

namespace mpgen {

std::uint32_t utf8_next(const std::string& s, std::size_t& i) {
    const unsigned char c0 = static_cast<unsigned char>(s[i]);
    if (c0 < 0x80) {
        i += 1;
        return c0;
    }
    auto cont = [&](std::size_t k) {
        return i + k < s.size() &&
               (static_cast<unsigned char>(s[i + k]) & 0xc0) == 0x80;
    };
    if ((c0 & 0xe0) == 0xc0 && cont(1)) {
        const std::uint32_t cp = ((c0 & 0x1fu) << 6) |
                                 (static_cast<unsigned char>(s[i + 1]) & 0x3fu);
        i += 2;
        return cp;
    }
    if ((c0 & 0xf0) == 0xe0 && cont(1) && cont(2)) {
        const std::uint32_t cp = ((c0 & 0x0fu) << 12) |
                                 ((static_cast<unsigned char>(s[i + 1]) & 0x3fu) << 6) |
                                 (static_cast<unsigned char>(s[i + 2]) & 0x3fu);
        i += 3;
        return cp;
    }
    if ((c0 & 0xf8) == 0xf0 && cont(1) && cont(2) && cont(3)) {
        const std::uint32_t cp = ((c0 & 0x07u) << 18) |
                                 ((static_cast<unsigned char>(s[i + 1]) & 0x3fu) << 12) |
                                 ((static_cast<unsigned char>(s[i + 2]) & 0x3fu) << 6) |
                                 (static_cast<unsigned char>(s[i + 3]) & 0x3fu);
        i += 4;
        return cp;
    }
    i += 1;
    return 0xfffd;
}

void utf8_append(std::string& out, std::uint32_t cp) {
    if (cp < 0x80) {
        out.push_back(char(cp));
    } else if (cp < 0x800) {
        out.push_back(char(0xc0 | (cp >> 6)));
        out.push_back(char(0x80 | (cp & 0x3f)));
    } else if (cp < 0x10000) {
        out.push_back(char(0xe0 | (cp >> 12)));
        out.push_back(char(0x80 | ((cp >> 6) & 0x3f)));
        out.push_back(char(0x80 | (cp & 0x3f)));
    } else {
        out.push_back(char(0xf0 | (cp >> 18)));
        out.push_back(char(0x80 | ((cp >> 12) & 0x3f)));
        out.push_back(char(0x80 | ((cp >> 6) & 0x3f)));
        out.push_back(char(0x80 | (cp & 0x3f)));
    }
}

namespace {

std::uint32_t to_half_width(std::uint32_t cp) {
    if (cp >= 0xff01 && cp <= 0xff5e) return cp - 0xfee0;  // full-width ASCII block
    switch (cp) {
        case 0x3000: return ' ';   // ideographic space
        case 0x3001: return ',';   // 、
        case 0x3002: return '.';   // 。
        case 0x2018: case 0x2019: return '\'';
        case 0x201c: case 0x201d: return '"';
        default: return cp;
    }
}

bool is_space_cp(std::uint32_t cp) {
    return cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' || cp == '\f' ||
           cp == '\v';
}

bool is_cjk(std::uint32_t cp) {
    return (cp >= 0x4e00 && cp <= 0x9fff) || (cp >= 0x3400 && cp <= 0x4dbf) ||
           (cp >= 0xf900 && cp <= 0xfaff);
}

}  // namespace

std::string normalize_text(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    bool at_start = true;
    std::size_t i = 0;
    while (i < text.size()) {
        std::uint32_t cp = to_half_width(utf8_next(text, i));
        if (is_space_cp(cp)) {
            pending_space = !at_start;
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        utf8_append(out, cp);
        at_start = false;
    }
    return out;
}

std::vector<std::string> metric_tokenize(const std::string& normalized) {
    std::vector<std::string> tokens;
    std::string current;
    std::size_t i = 0;
    while (i < normalized.size()) {
        const std::size_t start = i;
        const std::uint32_t cp = utf8_next(normalized, i);
        if (is_space_cp(cp)) {
            if (!current.empty()) {
                tokens.push_back(current);
                current.clear();
            }
        } else if (is_cjk(cp)) {
            if (!current.empty()) {
                tokens.push_back(current);
                current.clear();
            }
            tokens.push_back(normalized.substr(start, i - start));
        } else {
            current.append(normalized, start, i - start);
        }
    }
    if (!current.empty()) tokens.push_back(current);
    return tokens;
}

std::optional<double> extract_last_number(const std::string& text) {
    std::optional<double> best;
    std::size_t i = 0;
    while (i < text.size()) {
        const char c = text[i];
        const bool digit = std::isdigit(static_cast<unsigned char>(c));
        bool signed_digit = false;
        if ((c == '-' || c == '+') && i + 1 < text.size() &&
            std::isdigit(static_cast<unsigned char>(text[i + 1]))) {
            // Sign counts only when not glued to a preceding digit ("3-2" is
            // two numbers, not 3 and -2 is fine either way for "last").
            signed_digit = true;
        }
        if (digit || signed_digit) {
            std::size_t j = i;
            if (signed_digit) ++j;
            while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
            bool fractional = false;
            if (j < text.size() && text[j] == '.' && j + 1 < text.size() &&
                std::isdigit(static_cast<unsigned char>(text[j + 1]))) {
                ++j;
                while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
                fractional = true;
            }
            double value = std::strtod(text.substr(i, j - i).c_str(), nullptr);
            if (!fractional && j < text.size() && text[j] == '/' && j + 1 < text.size() &&
                std::isdigit(static_cast<unsigned char>(text[j + 1]))) {
                std::size_t k = j + 1;
                while (k < text.size() && std::isdigit(static_cast<unsigned char>(text[k]))) ++k;
                const double den = std::strtod(text.substr(j + 1, k - j - 1).c_str(), nullptr);
                if (den != 0.0) {
                    value /= den;
                    j = k;
                }
            } else if (j < text.size() && text[j] == '%') {
                value /= 100.0;
                ++j;
            }
            best = value;
            i = j;
        } else {
            ++i;
        }
    }
    return best;
}

std::optional<char> extract_option_letter(const std::string& text) {
    std::optional<char> best;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        const char upper = char(std::toupper(static_cast<unsigned char>(c)));
        if (upper < 'A' || upper > 'D') continue;
        const bool left_ok =
            i == 0 || !std::isalnum(static_cast<unsigned char>(text[i - 1]));
        const bool right_ok =
            i + 1 >= text.size() ||
            !std::isalnum(static_cast<unsigned char>(text[i + 1]));
        if (left_ok && right_ok) best = upper;
    }
    return best;
}

bool starts_with(const std::string& s, const std::string& prefix) {
    return s.size() >= prefix.size() && s.compare(0, prefix.size(), prefix) == 0;
}

bool contains(const std::string& s, const std::string& needle) {
    return s.find(needle) != std::string::npos;
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t nl = text.find('\n', start);
        if (nl == std::string::npos) {
            lines.push_back(text.substr(start));
            break;
        }
        lines.push_back(text.substr(start, nl - start));
        start = nl + 1;
    }
    return lines;
}

}  // namespace mpgen
