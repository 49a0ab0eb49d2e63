#pragma once

#include <string>
#include <vector>

namespace mpgen {

// Byte-level tokenizer: ids 0..255 are raw bytes, plus a reserved separator
// (doubles as end-of-text) and a pad id. Language-neutral and exactly
// reproducible, which the corpus losslessness checks rely on.
class ByteTokenizer {
public:
    static constexpr int kSep = 256;
    static constexpr int kPad = 257;
    static constexpr int kVocab = 258;

    static std::vector<int> encode(const std::string& text) {
        std::vector<int> ids;
        ids.reserve(text.size());
        for (unsigned char c : text) ids.push_back(int(c));
        return ids;
    }

    // Reserved ids are dropped; they have no byte representation.
    static std::string decode(const std::vector<int>& ids) {
        std::string out;
        out.reserve(ids.size());
        for (int id : ids) {
            if (id >= 0 && id < 256) out.push_back(char(static_cast<unsigned char>(id)));
        }
        return out;
    }

    static std::string decode(const int* ids, std::size_t n) {
        std::string out;
        out.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            if (ids[i] >= 0 && ids[i] < 256) out.push_back(char(static_cast<unsigned char>(ids[i])));
        }
        return out;
    }
};

}  // namespace mpgen
