#include "lexmae/autodiff/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <cblas.h>

#include "lexmae/util/errors.hpp"

namespace lexmae::ad {

std::size_t shape_size(const Shape& shape)
{
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape)
{
    std::string out = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i > 0) {
            out += "x";
        }
        out += std::to_string(shape[i]);
    }
    return out + "]";
}

Tensor::Tensor(Shape shape, double fill) : m_shape(std::move(shape))
{
    for (auto extent : m_shape) {
        if (extent == 0) {
            throw dimension_error("tensor extents must be positive, got " + shape_string(m_shape));
        }
    }
    m_values.assign(shape_size(m_shape), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : m_shape(std::move(shape)), m_values(std::move(values))
{
    if (shape_size(m_shape) != m_values.size()) {
        throw dimension_error(
            "buffer of " + std::to_string(m_values.size()) + " values does not fit shape "
            + shape_string(m_shape));
    }
}

Tensor Tensor::vector(std::initializer_list<double> values)
{
    return Tensor({values.size()}, std::vector<double>(values));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows)
{
    std::size_t cols = rows.size() == 0 ? 0 : rows.begin()->size();
    std::vector<double> flat;
    flat.reserve(rows.size() * cols);
    for (const auto& row : rows) {
        if (row.size() != cols) {
            throw dimension_error("ragged matrix literal");
        }
        flat.insert(flat.end(), row.begin(), row.end());
    }
    return Tensor({rows.size(), cols}, std::move(flat));
}

void Tensor::fill(double value) { std::fill(m_values.begin(), m_values.end(), value); }

void Tensor::reshape(Shape shape)
{
    if (shape_size(shape) != m_values.size()) {
        throw dimension_error(
            "cannot reshape " + shape_string(m_shape) + " to " + shape_string(shape));
    }
    m_shape = std::move(shape);
}

bool Tensor::all_finite() const noexcept
{
    return std::all_of(m_values.begin(), m_values.end(), [](double v) { return std::isfinite(v); });
}

namespace {

// One BLAS thread: callers already parallelize over documents/queries, and a
// fixed partitioning keeps results reproducible.
const bool g_blas_single_threaded = [] {
    openblas_set_num_threads(1);
    return true;
}();

int to_int(std::size_t v) { return static_cast<int>(v); }

}  // namespace

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c)
{
    if (m == 0 || n == 0 || k == 0) {
        return;
    }
    cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, to_int(m), to_int(n), to_int(k), 1.0, a, to_int(k), b,
                to_int(n), 1.0, c, to_int(n));
}

void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c)
{
    if (m == 0 || n == 0 || k == 0) {
        return;
    }
    cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasTrans, to_int(m), to_int(n), to_int(k), 1.0, a, to_int(k), b,
                to_int(k), 1.0, c, to_int(n));
}

void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c)
{
    if (m == 0 || n == 0 || k == 0) {
        return;
    }
    cblas_dgemm(CblasRowMajor, CblasTrans, CblasNoTrans, to_int(m), to_int(n), to_int(k), 1.0, a, to_int(m), b,
                to_int(n), 1.0, c, to_int(n));
}

}  // namespace lexmae::ad
