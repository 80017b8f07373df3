#include "labelforge/dsl/evaluate.hpp"

#include <algorithm>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>

#include <spdlog/spdlog.h>

namespace labelforge::dsl {

namespace {

using Clock = std::chrono::steady_clock;

class TextContext {
public:
    explicit TextContext(const std::string& text) : text_(text) {}

    const std::string& raw() const { return text_; }
    const std::string& folded() {
        if (!folded_) {
            std::string f = text_;
            for (auto& c : f)
                if (c >= 'A' && c <= 'Z') c = static_cast<char>(c + 32);
            folded_ = std::move(f);
        }
        return *folded_;
    }

private:
    const std::string& text_;
    std::optional<std::string> folded_;
};

std::string fold_ascii(std::string s) {
    for (auto& c : s)
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c + 32);
    return s;
}

bool contains(TextContext& ctx, const std::string& term, bool case_sensitive) {
    if (case_sensitive) return ctx.raw().find(term) != std::string::npos;
    return ctx.folded().find(fold_ascii(term)) != std::string::npos;
}

double uppercase_ratio(const std::string& text) {
    std::size_t letters = 0, upper = 0;
    for (char c : text) {
        if (c >= 'A' && c <= 'Z') {
            ++letters;
            ++upper;
        } else if (c >= 'a' && c <= 'z') {
            ++letters;
        }
    }
    return letters == 0 ? 0.0 : static_cast<double>(upper) / static_cast<double>(letters);
}

struct Evaluator {
    const Record& record;
    TextContext* text;
    Clock::time_point deadline;

    bool operator()(const Predicate& p) const { return std::visit(*this, p.node); }

    bool operator()(const Contains& c) const { return contains(*text, c.term, c.case_sensitive); }
    bool operator()(const ContainsAny& c) const {
        return std::any_of(c.terms.begin(), c.terms.end(),
                           [&](const std::string& t) { return contains(*text, t, c.case_sensitive); });
    }
    bool operator()(const Matches& m) const {
        if (!m.regex) throw EvaluationError("regex '" + m.pattern + "' was never compiled");
        return m.regex->search(text->raw(), deadline);
    }
    bool operator()(const LengthAtLeast& l) const { return count_code_points(text->raw()) >= l.n_chars; }
    bool operator()(const UppercaseRatioAtLeast& u) const { return uppercase_ratio(text->raw()) >= u.ratio; }
    bool operator()(const ScoreCmp& s) const {
        const auto& values = record.scores().values;
        if (s.concept_index >= values.size())
            throw EvaluationError("record '" + record.id + "' has no score for concept '" + s.concept_name + "'");
        const double v = values[s.concept_index];
        switch (s.op) {
            case CmpOp::Less: return v < s.threshold;
            case CmpOp::LessEqual: return v <= s.threshold;
            case CmpOp::Greater: return v > s.threshold;
            case CmpOp::GreaterEqual: return v >= s.threshold;
        }
        return false;
    }
    bool operator()(const And& a) const {
        return std::all_of(a.children.begin(), a.children.end(), [&](const Predicate& c) { return (*this)(c); });
    }
    bool operator()(const Or& o) const {
        return std::any_of(o.children.begin(), o.children.end(), [&](const Predicate& c) { return (*this)(c); });
    }
    bool operator()(const Not& n) const { return !(*this)(*n.child); }
};

}  // namespace

int evaluate(const LabelingProgram& program, const Record& record, const EvalOptions& options) {
    if (program.modality != record.modality())
        throw EvaluationError("program '" + program.id + "' expects " + std::string(to_string(program.modality)) +
                              " records but record '" + record.id + "' is " +
                              std::string(to_string(record.modality())));
    const auto deadline = Clock::now() + options.budget;
    std::optional<TextContext> text;
    if (record.modality() == Modality::Text) text.emplace(record.text());
    Evaluator ev{record, text ? &*text : nullptr, deadline};
    try {
        for (const auto& rule : program.rules) {
            if (ev(rule.guard)) return rule.emit;
            if (Clock::now() > deadline) throw RegexTimeout();
        }
    } catch (const RegexTimeout&) {
        spdlog::warn("program '{}' exceeded its evaluation budget on record '{}'; abstaining", program.id, record.id);
        return kAbstain;
    }
    return program.default_emit;
}

VoteMatrix assemble_votes(const std::vector<Record>& records, const std::vector<LabelingProgram>& programs,
                          const AssembleOptions& options) {
    std::vector<std::string> pids;
    pids.reserve(programs.size());
    for (const auto& p : programs) pids.push_back(p.id);
    std::vector<std::string> rids;
    rids.reserve(records.size());
    for (const auto& r : records) rids.push_back(r.id);

    if (!records.empty()) {
        const Modality m = records.front().modality();
        for (const auto& p : programs)
            if (p.modality != m)
                throw EvaluationError("program '" + p.id + "' expects " + std::string(to_string(p.modality)) +
                                      " records but the dataset is " + std::string(to_string(m)));
    }

    VoteMatrix votes(records.size(), programs.size(), std::move(pids), std::move(rids));
    unsigned workers = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(1, records.size() / 64)));

    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&](std::size_t begin, std::size_t end) {
        try {
            for (std::size_t i = begin; i < end; ++i)
                for (std::size_t j = 0; j < programs.size(); ++j)
                    votes.set(i, j, evaluate(programs[j], records[i], options.eval));
        } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
        }
    };

    if (workers <= 1) {
        work(0, records.size());
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (records.size() + workers - 1) / workers;
        for (unsigned w = 0; w < workers; ++w) {
            const std::size_t b = w * chunk;
            const std::size_t e = std::min(records.size(), b + chunk);
            if (b >= e) break;
            pool.emplace_back(work, b, e);
        }
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);
    return votes;
}

}  // namespace labelforge::dsl
