#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace lexmae::ad {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major array of doubles. Rank 1 and rank 2 are all the network needs.
class Tensor {
  public:
    Tensor() = default;
    explicit Tensor(Shape shape, double fill = 0.0);
    Tensor(Shape shape, std::vector<double> values);

    static Tensor vector(std::initializer_list<double> values);
    static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);

    [[nodiscard]] const Shape& shape() const noexcept { return m_shape; }
    [[nodiscard]] std::size_t rank() const noexcept { return m_shape.size(); }
    [[nodiscard]] std::size_t size() const noexcept { return m_values.size(); }
    [[nodiscard]] std::size_t rows() const { return m_shape.at(0); }
    [[nodiscard]] std::size_t cols() const { return m_shape.at(1); }
    [[nodiscard]] bool empty() const noexcept { return m_values.empty(); }

    [[nodiscard]] std::span<double> values() noexcept { return m_values; }
    [[nodiscard]] std::span<const double> values() const noexcept { return m_values; }
    [[nodiscard]] double* data() noexcept { return m_values.data(); }
    [[nodiscard]] const double* data() const noexcept { return m_values.data(); }

    double& operator[](std::size_t i) { return m_values[i]; }
    double operator[](std::size_t i) const { return m_values[i]; }
    double& operator()(std::size_t r, std::size_t c) { return m_values[r * m_shape[1] + c]; }
    double operator()(std::size_t r, std::size_t c) const { return m_values[r * m_shape[1] + c]; }

    void fill(double value);
    /// Same buffer, new extents; the element count must agree.
    void reshape(Shape shape);
    [[nodiscard]] bool all_finite() const noexcept;

    friend bool operator==(const Tensor&, const Tensor&) = default;

  private:
    Shape m_shape;
    std::vector<double> m_values;
};

/// Small dense kernels shared by forward and backward rules.
/// C[m×n] (+)= op(A)·op(B) with row-major storage.
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c);
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c);
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c);

}  // namespace lexmae::ad
