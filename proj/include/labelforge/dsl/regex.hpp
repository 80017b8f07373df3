#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "labelforge/core/error.hpp"

namespace labelforge::dsl {

/// Raised by Regex::compile. offset is a 0-based byte offset into the pattern.
class RegexError : public Error {
public:
    RegexError(const std::string& message, std::size_t offset)
        : Error(message + " at offset " + std::to_string(offset)), offset_(offset) {}
    [[nodiscard]] std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

/// Raised by Regex::search when the deadline passes mid-scan.
class RegexTimeout : public Error {
public:
    RegexTimeout() : Error("regex evaluation exceeded its time budget") {}
};

/// Regular expressions without backtracking: matching simulates the NFA over
/// the input's code points, so cost is O(pattern * text) for every pattern.
///
/// Supported: literals, '.', [...] classes with ranges and negation,
/// \d \w \s (and negations), \b \B, ^ $, groups (capturing syntax accepted
/// but not reported), alternation, * + ? {n} {n,} {n,m} (lazy and possessive
/// suffixes accepted), a leading (?i) flag. Backreferences and lookaround
/// are rejected at compile time.
class Regex {
public:
    static Regex compile(std::string_view pattern, bool case_insensitive = false);

    /// True if the pattern matches anywhere in text. Throws RegexTimeout if
    /// the deadline is reached before the scan finishes.
    [[nodiscard]] bool search(std::string_view text,
                              std::optional<std::chrono::steady_clock::time_point> deadline = std::nullopt) const;

    [[nodiscard]] const std::string& pattern() const { return pattern_; }
    [[nodiscard]] bool case_insensitive() const { return case_insensitive_; }
    [[nodiscard]] std::size_t program_size() const;

    struct Program;

private:
    Regex() = default;
    std::string pattern_;
    bool case_insensitive_ = false;
    std::shared_ptr<const Program> prog_;
};

/// UTF-8 decode; each invalid byte becomes U+FFFD.
std::vector<char32_t> decode_utf8(std::string_view s);
std::size_t count_code_points(std::string_view s);

}  // namespace labelforge::dsl
