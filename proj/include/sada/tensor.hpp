#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sada/errors.hpp"

namespace sada {

std::int64_t shape_numel(const std::vector<int>& shape);
std::string shape_str(const std::vector<int>& shape);

// Dense float64 array, row-major. A Tensor produced by a Tape carries the
// (node_id, generation) handle of the node that holds it; constants have
// node_id == -1. Values are always finite after a forward kernel on finite
// inputs; the tape enforces that.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> values;
    bool requires_grad = false;
    int node_id = -1;
    std::uint64_t generation = 0;

    Tensor() = default;
    Tensor(std::vector<int> s, std::vector<double> v);

    std::int64_t numel() const { return static_cast<std::int64_t>(values.size()); }
    int rank() const { return static_cast<int>(shape.size()); }
    bool on_tape() const { return node_id >= 0; }

    double scalar() const {
        if (numel() != 1) throw ShapeError("scalar() on tensor of shape " + shape_str(shape));
        return values[0];
    }

    static Tensor zeros(std::vector<int> shape);
    static Tensor full(std::vector<int> shape, double value);
    static Tensor scalar_of(double value) { return Tensor({1}, {value}); }
};

}  // namespace sada
