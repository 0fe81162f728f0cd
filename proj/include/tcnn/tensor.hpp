#pragma once

#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace tcnn {

// Dense row-major numeric array with 1 to 4 axes. Every extent must be >= 1
// and product(shape) == data.size() at all times.
template <typename T>
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<T> data;

    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> s, T fill = T(0)) : shape(std::move(s)) {
        validate_shape(shape);
        data.assign(element_count(shape), fill);
    }

    Tensor(std::vector<std::size_t> s, std::vector<T> values) : shape(std::move(s)), data(std::move(values)) {
        validate_shape(shape);
        if (element_count(shape) != data.size())
            throw std::invalid_argument("tensor: shape does not match data length");
    }

    static std::size_t element_count(const std::vector<std::size_t>& s) {
        return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
    }

    static void validate_shape(const std::vector<std::size_t>& s) {
        if (s.empty() || s.size() > 4)
            throw std::invalid_argument("tensor: rank must be 1..4");
        for (std::size_t e : s)
            if (e == 0) throw std::invalid_argument("tensor: extents must be >= 1");
    }

    std::size_t size() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }
    std::size_t extent(std::size_t axis) const { return shape.at(axis); }

    T& operator[](std::size_t i) { return data[i]; }
    const T& operator[](std::size_t i) const { return data[i]; }

    T& at(std::size_t i) { return data[check_flat(i)]; }
    const T& at(std::size_t i) const { return data[check_flat(i)]; }

    T& at(std::size_t i, std::size_t j) { return data[flat2(i, j)]; }
    const T& at(std::size_t i, std::size_t j) const { return data[flat2(i, j)]; }

    T& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) { return data[flat4(n, c, h, w)]; }
    const T& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const { return data[flat4(n, c, h, w)]; }

    bool same_shape(const Tensor& other) const { return shape == other.shape; }

    std::string shape_string() const {
        std::string s = "[";
        for (std::size_t i = 0; i < shape.size(); ++i) {
            if (i) s += "x";
            s += std::to_string(shape[i]);
        }
        return s + "]";
    }

private:
    std::size_t check_flat(std::size_t i) const {
        if (i >= data.size()) throw std::out_of_range("tensor: index out of range");
        return i;
    }
    std::size_t flat2(std::size_t i, std::size_t j) const {
        if (rank() != 2 || i >= shape[0] || j >= shape[1]) throw std::out_of_range("tensor: bad 2-d index");
        return i * shape[1] + j;
    }
    std::size_t flat4(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const {
        if (rank() != 4 || n >= shape[0] || c >= shape[1] || h >= shape[2] || w >= shape[3])
            throw std::out_of_range("tensor: bad 4-d index");
        return ((n * shape[1] + c) * shape[2] + h) * shape[3] + w;
    }
};

template <typename T>
void require_shape(const Tensor<T>& t, const std::vector<std::size_t>& shape, const char* what) {
    if (t.shape != shape)
        throw std::invalid_argument(std::string(what) + ": expected shape mismatch, got " + t.shape_string());
}

}  // namespace tcnn
