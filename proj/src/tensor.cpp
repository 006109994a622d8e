#include "dcgcn/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "dcgcn/errors.hpp"

namespace dcgcn {

std::string shape_string(const Shape& shape) {
    std::string out = "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(shape[i]);
    }
    return out + ")";
}

std::size_t shape_product(const Shape& shape) {
    std::size_t n = 1;
    for (auto s : shape) n *= s;
    return n;
}

namespace {
void check_shape(const Shape& shape) {
    if (shape.empty() || shape.size() > 2)
        throw ShapeError("tensor rank must be 1 or 2, got shape " + shape_string(shape));
    for (auto s : shape)
        if (s == 0) throw ShapeError("tensor dimensions must be positive: " + shape_string(shape));
}
}  // namespace

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
    check_shape(shape_);
    data_.assign(shape_product(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    check_shape(shape_);
    if (data_.size() != shape_product(shape_))
        throw ShapeError("data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_string(shape_));
}

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r ? rows.begin()->size() : 0;
    std::vector<double> data;
    data.reserve(r * c);
    for (const auto& row : rows) {
        if (row.size() != c) throw ShapeError("ragged rows in Tensor::from_rows");
        data.insert(data.end(), row.begin(), row.end());
    }
    return Tensor(Shape{r, c}, std::move(data));
}

std::size_t Tensor::rows() const { return shape_.size() == 2 ? shape_[0] : 1; }
std::size_t Tensor::cols() const { return shape_.empty() ? 0 : shape_.back(); }

bool Tensor::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

}  // namespace dcgcn
