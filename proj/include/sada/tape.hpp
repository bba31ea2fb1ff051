#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "sada/tensor.hpp"

namespace sada {

// Kernel vocabulary of the tape. Everything the training path records is one
// of these; asking for anything else is an UnsupportedKernelError.
enum class OpKind {
    conv2d_same,
    avg_pool2x2,
    channel_avg_pool,
    channel_max_pool,
    concat,
    sigmoid,
    add,
    sub,
    hadamard,
    scale,
    sqrt,
    square,
    matvec,
    reduce_mean,
    reduce_var,
    l2_normalize,
    cosine_sim,
    softmax_xent,
    stack,
    slice,
    reshape,
};

OpKind kind_from_name(const std::string& name);
const char* kind_name(OpKind kind);

// Kind-specific attributes; unused fields are ignored by the kernel.
struct OpAttrs {
    int axis = 0;                 // concat
    int begin = 0;                // slice (leading axis)
    int end = 0;                  // slice
    int target = -1;              // softmax_xent
    double tau = 1.0;             // softmax_xent
    double factor = 1.0;          // scale
    double floor = 0.0;           // reduce_var
    std::vector<int> axes;        // reduce_mean ({0} or {0,1})
    std::vector<int> shape;       // reshape
};

// Gradients produced by one backward pass, keyed by node id. Every
// requires_grad leaf reachable from the loss has an entry (possibly zeros);
// constants have none.
class GradientMap {
public:
    bool contains(const Tensor& t) const;
    const std::vector<double>& at(const Tensor& t) const;
    std::vector<double> get_or_zeros(const Tensor& t) const;
    std::size_t size() const { return grads_.size(); }

private:
    friend class Tape;
    std::uint64_t generation_ = 0;
    std::unordered_map<int, std::vector<double>> grads_;
};

// Records forward ops over float64 tensors and replays them in reverse for
// gradients. One tape per thread of execution; clear() bumps the generation
// and invalidates every handle issued before it.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Tensor leaf(std::vector<int> shape, std::vector<double> values, bool requires_grad);
    Tensor constant(std::vector<int> shape, std::vector<double> values);
    Tensor constant(const Tensor& t) { return constant(t.shape, t.values); }

    Tensor record(OpKind kind, const std::vector<Tensor>& inputs, const OpAttrs& attrs = {});

    GradientMap backward(const Tensor& loss) const;

    void clear();
    std::uint64_t generation() const { return generation_; }
    std::size_t num_ops() const { return entries_.size(); }

    // convenience wrappers over record()
    Tensor conv2d_same(const Tensor& x, const Tensor& k);
    Tensor avg_pool2x2(const Tensor& x);
    Tensor channel_avg_pool(const Tensor& x);
    Tensor channel_max_pool(const Tensor& x);
    Tensor concat(const std::vector<Tensor>& xs, int axis);
    Tensor sigmoid(const Tensor& x);
    Tensor add(const Tensor& a, const Tensor& b);
    Tensor sub(const Tensor& a, const Tensor& b);
    Tensor hadamard(const Tensor& a, const Tensor& b);
    Tensor scale(const Tensor& x, double c);
    Tensor sqrt(const Tensor& x);
    Tensor square(const Tensor& x);
    Tensor matvec(const Tensor& a, const Tensor& v);
    Tensor reduce_mean(const Tensor& x, std::vector<int> axes = {0});
    Tensor reduce_var(const Tensor& x, double floor = 0.0);
    Tensor l2_normalize(const Tensor& x);
    Tensor cosine_sim(const Tensor& a, const Tensor& b);
    Tensor softmax_xent(const Tensor& logits, int target, double tau = 1.0);
    Tensor stack(const std::vector<Tensor>& xs);
    Tensor slice(const Tensor& x, int begin, int end);
    Tensor reshape(const Tensor& x, std::vector<int> shape);

private:
    struct Node {
        std::vector<int> shape;
        std::vector<double> values;
        bool requires_grad = false;
    };
    struct Entry {
        OpKind kind;
        std::vector<int> inputs;
        int output = -1;
        OpAttrs attrs;
    };

    int register_node(std::vector<int> shape, std::vector<double> values, bool requires_grad);
    int input_node(const Tensor& t);
    Tensor wrap(int node) const;

    std::vector<Node> nodes_;
    std::vector<Entry> entries_;
    std::uint64_t generation_ = 1;
};

// Compares backward gradients of a recorded scalar function against central
// finite differences, coordinate by coordinate; returns the worst relative
// error (denominator floored at 1e-8). The max-pool subgradient convention
// (first maximal index wins) makes this exact away from ties.
double grad_check(const std::function<Tensor(Tape&, const Tensor&)>& scalar_fn,
                  const Tensor& point, double eps);

}  // namespace sada
