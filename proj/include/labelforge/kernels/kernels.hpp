#pragma once

// Dense double-precision inner loops shared by the concept and distill
// modules. Every kernel has a scalar reference implementation; wider ISA
// variants are selected once at startup and must agree with the reference
// up to summation-order rounding.

#include <cstddef>
#include <span>
#include <string_view>

namespace labelforge::kernels {

enum class Isa { Scalar, Avx2 };

std::string_view to_string(Isa isa);

struct KernelTable {
    Isa isa;
    double (*dot)(const double* a, const double* b, std::size_t n);
    double (*squared_norm)(const double* a, std::size_t n);
    /// y += alpha * x
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    /// y[r] = bias[r] + dot(W[r, :], x) for a rows x cols row-major W.
    void (*gemv)(const double* w, const double* x, const double* bias, double* y, std::size_t rows,
                 std::size_t cols);
};

const KernelTable& scalar_kernels();
/// nullptr when not compiled in or not supported by this CPU.
const KernelTable* avx2_kernels();

/// The table in use. First call picks the widest supported ISA unless the
/// LABELFORGE_ISA environment variable is "scalar" or "avx2".
const KernelTable& active();
/// Overrides the selection (tests and benchmarks). Returns false if the ISA is unavailable.
bool select(Isa isa);

inline double dot(std::span<const double> a, std::span<const double> b) {
    return active().dot(a.data(), b.data(), a.size() < b.size() ? a.size() : b.size());
}
inline double squared_norm(std::span<const double> a) { return active().squared_norm(a.data(), a.size()); }
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    active().axpy(alpha, x.data(), y.data(), x.size() < y.size() ? x.size() : y.size());
}

}  // namespace labelforge::kernels
