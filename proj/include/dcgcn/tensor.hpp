#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace dcgcn {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);

/// Dense row-major array of doubles. Rank 1 shapes {n} behave as a single row
/// (1 x n) wherever a matrix is expected.
class Tensor {
   public:
    Tensor() = default;
    explicit Tensor(Shape shape, double fill = 0.0);
    Tensor(Shape shape, std::vector<double> data);

    static Tensor matrix(std::size_t rows, std::size_t cols, double fill = 0.0) {
        return Tensor(Shape{rows, cols}, fill);
    }
    static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows);
    static Tensor scalar(double v) { return Tensor(Shape{1, 1}, std::vector<double>{v}); }

    const Shape& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }
    std::size_t rows() const;
    std::size_t cols() const;

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::span<double> values() { return data_; }
    std::span<const double> values() const { return data_; }
    std::vector<double>& storage() { return data_; }
    const std::vector<double>& storage() const { return data_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }
    double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
    double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }
    std::span<double> row(std::size_t r) { return {data_.data() + r * cols(), cols()}; }
    std::span<const double> row(std::size_t r) const {
        return {data_.data() + r * cols(), cols()};
    }

    bool all_finite() const;
    void fill(double v);

    friend bool operator==(const Tensor&, const Tensor&) = default;

   private:
    Shape shape_;
    std::vector<double> data_;
};

std::size_t shape_product(const Shape& shape);

}  // namespace dcgcn
