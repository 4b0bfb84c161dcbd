// Deterministic CSV emission.
//
// Doubles are printed with the shortest representation that round-trips
// (std::to_chars), which is locale-independent and byte-stable across runs
// and thread counts; words are dash-separated edge ids.  Fields containing
// a comma, quote, or newline are quoted per RFC 4180, though no current
// report needs it.
#pragma once

#include <charconv>
#include <cstdio>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace cms {

inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string format_word(std::span<const int> word) {
    std::string out;
    for (std::size_t k = 0; k < word.size(); ++k) {
        if (k) out.push_back('-');
        out += std::to_string(word[k]);
    }
    return out;
}

class CsvWriter {
public:
    explicit CsvWriter(std::ostream& out) : out_(out) {}

    CsvWriter& field(const std::string& s) {
        sep();
        if (s.find_first_of(",\"\n") != std::string::npos) {
            out_ << '"';
            for (char c : s) {
                if (c == '"') out_ << '"';
                out_ << c;
            }
            out_ << '"';
        } else {
            out_ << s;
        }
        return *this;
    }

    CsvWriter& field(const char* s) { return field(std::string(s)); }
    CsvWriter& field(double v) { return field(format_double(v)); }
    CsvWriter& field(int v) { return field(std::to_string(v)); }
    CsvWriter& field(long v) { return field(std::to_string(v)); }
    CsvWriter& field(unsigned long v) { return field(std::to_string(v)); }
    CsvWriter& field(long long v) { return field(std::to_string(v)); }
    CsvWriter& field(unsigned long long v) { return field(std::to_string(v)); }

    void endrow() {
        out_ << '\n';
        first_ = true;
    }

    template <typename... Fields>
    void row(const Fields&... fields) {
        (field(fields), ...);
        endrow();
    }

private:
    void sep() {
        if (!first_) out_ << ',';
        first_ = false;
    }

    std::ostream& out_;
    bool first_ = true;
};

}  // namespace cms
