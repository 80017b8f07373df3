#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "labelforge/core/types.hpp"

namespace labelforge {

/// n x m program outputs, row-major. Row i is record i in dataset order,
/// column j is program_ids[j].
class VoteMatrix {
public:
    VoteMatrix() = default;
    VoteMatrix(std::size_t n, std::size_t m, std::vector<std::string> program_ids,
               std::vector<std::string> record_ids = {});
    VoteMatrix(std::vector<std::vector<int>> rows, std::vector<std::string> program_ids = {});

    [[nodiscard]] std::size_t n() const { return n_; }
    [[nodiscard]] std::size_t m() const { return m_; }

    [[nodiscard]] int at(std::size_t i, std::size_t j) const { return votes_[i * m_ + j]; }
    void set(std::size_t i, std::size_t j, int v) { votes_[i * m_ + j] = v; }
    [[nodiscard]] std::span<const int> row(std::size_t i) const { return {votes_.data() + i * m_, m_}; }
    [[nodiscard]] const std::vector<int>& data() const { return votes_; }

    [[nodiscard]] const std::vector<std::string>& program_ids() const { return program_ids_; }
    [[nodiscard]] const std::vector<std::string>& record_ids() const { return record_ids_; }
    void set_record_ids(std::vector<std::string> ids);

    /// Throws ValidationError when an entry is outside {-1} U {0..K-1}.
    void validate(int num_classes) const;

    /// Copy restricted to the given columns, in the given order.
    [[nodiscard]] VoteMatrix select_columns(std::span<const std::size_t> columns) const;

    friend bool operator==(const VoteMatrix&, const VoteMatrix&) = default;

private:
    std::size_t n_ = 0;
    std::size_t m_ = 0;
    std::vector<int> votes_;
    std::vector<std::string> program_ids_;
    std::vector<std::string> record_ids_;
};

/// Vote-matrix file: JSON {"class_names", "program_ids", "record_ids", "votes": [[...]]}.
void save_votes(const VoteMatrix& votes, const ClassSpace& classes, const std::filesystem::path& path);
VoteMatrix load_votes(const std::filesystem::path& path, ClassSpace* classes_out = nullptr);

}  // namespace labelforge
