#pragma once

#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "labelforge/core/types.hpp"
#include "labelforge/dsl/regex.hpp"

namespace labelforge::dsl {

/// Owning, deep-copying pointer so predicate trees keep value semantics.
template <class T>
class Box {
public:
    Box(T value) : ptr_(std::make_unique<T>(std::move(value))) {}  // NOLINT(google-explicit-constructor)
    Box(const Box& other) : ptr_(std::make_unique<T>(*other.ptr_)) {}
    Box(Box&&) noexcept = default;
    Box& operator=(const Box& other) {
        if (this != &other) ptr_ = std::make_unique<T>(*other.ptr_);
        return *this;
    }
    Box& operator=(Box&&) noexcept = default;
    ~Box() = default;

    const T& operator*() const { return *ptr_; }
    const T* operator->() const { return ptr_.get(); }
    T& operator*() { return *ptr_; }

    friend bool operator==(const Box& a, const Box& b) { return *a == *b; }

private:
    std::unique_ptr<T> ptr_;
};

enum class CmpOp { Less, LessEqual, Greater, GreaterEqual };

struct Predicate;

struct Contains {
    std::string term;
    bool case_sensitive = false;
    friend bool operator==(const Contains&, const Contains&) = default;
};

struct ContainsAny {
    std::vector<std::string> terms;
    bool case_sensitive = false;
    friend bool operator==(const ContainsAny&, const ContainsAny&) = default;
};

struct Matches {
    std::string pattern;
    bool case_sensitive = true;
    std::shared_ptr<const Regex> regex;  // filled by validation
    friend bool operator==(const Matches& a, const Matches& b) {
        return a.pattern == b.pattern && a.case_sensitive == b.case_sensitive;
    }
};

struct LengthAtLeast {
    std::size_t n_chars = 0;
    friend bool operator==(const LengthAtLeast&, const LengthAtLeast&) = default;
};

struct UppercaseRatioAtLeast {
    double ratio = 0.0;
    friend bool operator==(const UppercaseRatioAtLeast&, const UppercaseRatioAtLeast&) = default;
};

struct ScoreCmp {
    std::string concept_name;
    CmpOp op = CmpOp::GreaterEqual;
    double threshold = 0.0;
    std::size_t concept_index = 0;  // filled by validation
    friend bool operator==(const ScoreCmp& a, const ScoreCmp& b) {
        return a.concept_name == b.concept_name && a.op == b.op && a.threshold == b.threshold;
    }
};

struct And {
    std::vector<Predicate> children;
    friend bool operator==(const And&, const And&);
};

struct Or {
    std::vector<Predicate> children;
    friend bool operator==(const Or&, const Or&);
};

struct Not {
    Box<Predicate> child;
    friend bool operator==(const Not&, const Not&);
};

struct Predicate {
    std::variant<Contains, ContainsAny, Matches, LengthAtLeast, UppercaseRatioAtLeast, ScoreCmp, And, Or, Not> node;
    friend bool operator==(const Predicate&, const Predicate&) = default;
};

inline bool operator==(const And& a, const And& b) { return a.children == b.children; }
inline bool operator==(const Or& a, const Or& b) { return a.children == b.children; }
inline bool operator==(const Not& a, const Not& b) { return a.child == b.child; }

struct Rule {
    Predicate guard;
    int emit = kAbstain;
    friend bool operator==(const Rule&, const Rule&) = default;
};

/// Ordered guarded rules; the first guard that holds decides the vote.
struct LabelingProgram {
    std::string id;
    Modality modality = Modality::Text;
    std::vector<Rule> rules;
    int default_emit = kAbstain;

    /// Structural equality: ids are not compared.
    friend bool operator==(const LabelingProgram& a, const LabelingProgram& b) {
        return a.modality == b.modality && a.rules == b.rules && a.default_emit == b.default_emit;
    }
};

/// Rule count above which parse() logs a warning.
inline constexpr std::size_t kSoftRuleCap = 64;

}  // namespace labelforge::dsl
