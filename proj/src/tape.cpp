#include "sada/tape.hpp"

#include <cmath>
#include <cstring>
#include <numeric>
#include <unordered_map>

#include "sada/kernels.hpp"

namespace sada {

namespace {

const std::unordered_map<std::string, OpKind>& kind_table() {
    static const std::unordered_map<std::string, OpKind> table = {
        {"conv2d_same", OpKind::conv2d_same},
        {"avg_pool2x2", OpKind::avg_pool2x2},
        {"channel_avg_pool", OpKind::channel_avg_pool},
        {"channel_max_pool", OpKind::channel_max_pool},
        {"concat", OpKind::concat},
        {"sigmoid", OpKind::sigmoid},
        {"add", OpKind::add},
        {"sub", OpKind::sub},
        {"hadamard", OpKind::hadamard},
        {"scale", OpKind::scale},
        {"sqrt", OpKind::sqrt},
        {"square", OpKind::square},
        {"matvec", OpKind::matvec},
        {"reduce_mean", OpKind::reduce_mean},
        {"reduce_var", OpKind::reduce_var},
        {"l2_normalize", OpKind::l2_normalize},
        {"cosine_sim", OpKind::cosine_sim},
        {"softmax_xent", OpKind::softmax_xent},
        {"stack", OpKind::stack},
        {"slice", OpKind::slice},
        {"reshape", OpKind::reshape},
    };
    return table;
}

void check(bool ok, const std::string& msg) {
    if (!ok) throw ShapeError(msg);
}

// (outer, ca, cb) factorization for elementwise binaries; cb == 1 means the
// second operand broadcasts across the trailing axis.
struct BinaryDims {
    std::int64_t outer;
    int ca;
    int cb;
};

BinaryDims binary_dims(const std::vector<int>& a, const std::vector<int>& b, const char* op) {
    if (a == b) {
        const int c = a.empty() ? 1 : a.back();
        return {shape_numel(a) / c, c, c};
    }
    const bool broadcast = a.size() == b.size() && !a.empty() && b.back() == 1 && a.back() > 1 &&
                           std::equal(a.begin(), a.end() - 1, b.begin());
    check(broadcast, std::string(op) + ": shapes " + shape_str(a) + " and " + shape_str(b) +
                         " neither match nor broadcast over the trailing axis");
    return {shape_numel(b), a.back(), 1};
}

}  // namespace

std::int64_t shape_numel(const std::vector<int>& shape) {
    std::int64_t n = 1;
    for (int d : shape) n *= d;
    return n;
}

std::string shape_str(const std::vector<int>& shape) {
    std::string s = "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ", ";
        s += std::to_string(shape[i]);
    }
    return s + ")";
}

Tensor::Tensor(std::vector<int> s, std::vector<double> v) : shape(std::move(s)), values(std::move(v)) {
    if (shape_numel(shape) != static_cast<std::int64_t>(values.size()))
        throw ShapeError("tensor: " + std::to_string(values.size()) + " values for shape " +
                         shape_str(shape));
}

Tensor Tensor::zeros(std::vector<int> shape) {
    std::vector<double> v(static_cast<std::size_t>(shape_numel(shape)), 0.0);
    return Tensor(std::move(shape), std::move(v));
}

Tensor Tensor::full(std::vector<int> shape, double value) {
    std::vector<double> v(static_cast<std::size_t>(shape_numel(shape)), value);
    return Tensor(std::move(shape), std::move(v));
}

OpKind kind_from_name(const std::string& name) {
    auto it = kind_table().find(name);
    if (it == kind_table().end()) throw UnsupportedKernelError(name);
    return it->second;
}

const char* kind_name(OpKind kind) {
    for (const auto& [name, k] : kind_table())
        if (k == kind) return name.c_str();
    return "?";
}

// ---------------------------------------------------------------- GradientMap

bool GradientMap::contains(const Tensor& t) const {
    return t.generation == generation_ && grads_.count(t.node_id) > 0;
}

const std::vector<double>& GradientMap::at(const Tensor& t) const {
    if (t.generation != generation_)
        throw StaleHandleError("gradient lookup across tape generations");
    auto it = grads_.find(t.node_id);
    if (it == grads_.end())
        throw StateError("no gradient recorded for node " + std::to_string(t.node_id));
    return it->second;
}

std::vector<double> GradientMap::get_or_zeros(const Tensor& t) const {
    if (contains(t)) return grads_.at(t.node_id);
    return std::vector<double>(static_cast<std::size_t>(t.numel()), 0.0);
}

// ---------------------------------------------------------------- Tape

int Tape::register_node(std::vector<int> shape, std::vector<double> values, bool requires_grad) {
    nodes_.push_back(Node{std::move(shape), std::move(values), requires_grad});
    return static_cast<int>(nodes_.size()) - 1;
}

Tensor Tape::wrap(int node) const {
    Tensor t;
    t.shape = nodes_[node].shape;
    t.values = nodes_[node].values;
    t.requires_grad = nodes_[node].requires_grad;
    t.node_id = node;
    t.generation = generation_;
    return t;
}

Tensor Tape::leaf(std::vector<int> shape, std::vector<double> values, bool requires_grad) {
    Tensor t(std::move(shape), std::move(values));
    t.requires_grad = requires_grad;
    t.node_id = register_node(t.shape, t.values, requires_grad);
    t.generation = generation_;
    return t;
}

Tensor Tape::constant(std::vector<int> shape, std::vector<double> values) {
    return leaf(std::move(shape), std::move(values), false);
}

int Tape::input_node(const Tensor& t) {
    if (t.node_id < 0) {
        // unregistered constant: give it a node so backward can read it
        return register_node(t.shape, t.values, false);
    }
    if (t.generation != generation_ || t.node_id >= static_cast<int>(nodes_.size()))
        throw StaleHandleError("tensor recorded on a cleared or different tape");
    return t.node_id;
}

void Tape::clear() {
    nodes_.clear();
    entries_.clear();
    ++generation_;
}

Tensor Tape::record(OpKind kind, const std::vector<Tensor>& inputs, const OpAttrs& attrs) {
    std::vector<int> ids;
    ids.reserve(inputs.size());
    for (const auto& t : inputs) ids.push_back(input_node(t));

    auto shape_of = [&](std::size_t i) -> const std::vector<int>& { return nodes_[ids[i]].shape; };
    auto vals_of = [&](std::size_t i) -> const std::vector<double>& { return nodes_[ids[i]].values; };
    auto arity = [&](std::size_t n) {
        check(inputs.size() == n, std::string(kind_name(kind)) + ": expected " +
                                      std::to_string(n) + " inputs, got " +
                                      std::to_string(inputs.size()));
    };

    std::vector<int> out_shape;
    std::vector<double> out;

    switch (kind) {
        case OpKind::conv2d_same: {
            arity(2);
            const auto& xs = shape_of(0);
            const auto& ks = shape_of(1);
            check(xs.size() == 3, "conv2d_same: image must be HxWxC, got " + shape_str(xs));
            check(ks.size() == 4, "conv2d_same: kernel must be KhxKwxCinxCout, got " + shape_str(ks));
            check(ks[0] % 2 == 1 && ks[1] % 2 == 1, "conv2d_same: kernel dims must be odd");
            check(ks[2] == xs[2], "conv2d_same: kernel Cin " + std::to_string(ks[2]) +
                                      " != image C " + std::to_string(xs[2]));
            out_shape = {xs[0], xs[1], ks[3]};
            out.resize(static_cast<std::size_t>(shape_numel(out_shape)));
            kernels::conv2d_same(vals_of(0).data(), xs[0], xs[1], xs[2], vals_of(1).data(), ks[0],
                                 ks[1], ks[3], out.data());
            break;
        }
        case OpKind::avg_pool2x2: {
            arity(1);
            const auto& xs = shape_of(0);
            check(xs.size() == 3, "avg_pool2x2: expected HxWxC, got " + shape_str(xs));
            check(xs[0] % 2 == 0 && xs[1] % 2 == 0, "avg_pool2x2: H and W must be even");
            out_shape = {xs[0] / 2, xs[1] / 2, xs[2]};
            out.resize(static_cast<std::size_t>(shape_numel(out_shape)));
            kernels::avg_pool2x2(vals_of(0).data(), xs[0], xs[1], xs[2], out.data());
            break;
        }
        case OpKind::channel_avg_pool:
        case OpKind::channel_max_pool: {
            arity(1);
            const auto& xs = shape_of(0);
            check(xs.size() == 3, "channel pool: expected HxWxC, got " + shape_str(xs));
            out_shape = {xs[0], xs[1], 1};
            out.resize(static_cast<std::size_t>(shape_numel(out_shape)));
            if (kind == OpKind::channel_avg_pool)
                kernels::channel_avg_pool(vals_of(0).data(), xs[0], xs[1], xs[2], out.data());
            else
                kernels::channel_max_pool(vals_of(0).data(), xs[0], xs[1], xs[2], out.data());
            break;
        }
        case OpKind::concat: {
            check(!inputs.empty(), "concat: no inputs");
            const auto& first = shape_of(0);
            const int axis = attrs.axis;
            check(axis >= 0 && axis < static_cast<int>(first.size()),
                  "concat: axis " + std::to_string(axis) + " out of range for " + shape_str(first));
            int total = 0;
            for (std::size_t i = 0; i < inputs.size(); ++i) {
                const auto& s = shape_of(i);
                check(s.size() == first.size(), "concat: rank mismatch");
                for (std::size_t d = 0; d < s.size(); ++d)
                    check(static_cast<int>(d) == axis || s[d] == first[d],
                          "concat: dim mismatch at axis " + std::to_string(d) + " between " +
                              shape_str(first) + " and " + shape_str(s));
                total += s[axis];
            }
            out_shape = first;
            out_shape[axis] = total;
            out.resize(static_cast<std::size_t>(shape_numel(out_shape)));
            std::int64_t outer = 1, inner = 1;
            for (int d = 0; d < axis; ++d) outer *= first[d];
            for (std::size_t d = axis + 1; d < first.size(); ++d) inner *= first[d];
            std::int64_t offset = 0;
            for (std::size_t i = 0; i < inputs.size(); ++i) {
                const std::int64_t len = shape_of(i)[axis] * inner;
                const double* src = vals_of(i).data();
                for (std::int64_t o = 0; o < outer; ++o)
                    std::memcpy(out.data() + o * total * inner + offset, src + o * len,
                                static_cast<std::size_t>(len) * sizeof(double));
                offset += len;
            }
            break;
        }
        case OpKind::sigmoid:
        case OpKind::sqrt:
        case OpKind::square: {
            arity(1);
            out_shape = shape_of(0);
            out.resize(vals_of(0).size());
            const auto n = static_cast<std::int64_t>(out.size());
            if (kind == OpKind::sigmoid)
                kernels::sigmoid(vals_of(0).data(), n, out.data());
            else if (kind == OpKind::sqrt)
                kernels::sqrt_clamped(vals_of(0).data(), n, out.data());
            else
                kernels::square(vals_of(0).data(), n, out.data());
            break;
        }
        case OpKind::add:
        case OpKind::sub:
        case OpKind::hadamard: {
            arity(2);
            const auto dims = binary_dims(shape_of(0), shape_of(1), kind_name(kind));
            out_shape = shape_of(0);
            out.resize(vals_of(0).size());
            const auto op = kind == OpKind::add   ? kernels::BinaryOp::add
                            : kind == OpKind::sub ? kernels::BinaryOp::sub
                                                  : kernels::BinaryOp::mul;
            kernels::binary(op, vals_of(0).data(), vals_of(1).data(), dims.outer, dims.ca, dims.cb,
                            out.data());
            break;
        }
        case OpKind::scale: {
            arity(1);
            out_shape = shape_of(0);
            out.resize(vals_of(0).size());
            kernels::scale(vals_of(0).data(), attrs.factor, static_cast<std::int64_t>(out.size()),
                           out.data());
            break;
        }
        case OpKind::matvec: {
            arity(2);
            const auto& as = shape_of(0);
            const auto& vs = shape_of(1);
            check(as.size() == 2, "matvec: matrix must be rank 2, got " + shape_str(as));
            check(vs.size() == 1 && vs[0] == as[1], "matvec: vector " + shape_str(vs) +
                                                        " does not match matrix " + shape_str(as));
            out_shape = {as[0]};
            out.resize(static_cast<std::size_t>(as[0]));
            kernels::matvec(vals_of(0).data(), as[0], as[1], vals_of(1).data(), out.data());
            break;
        }
        case OpKind::reduce_mean: {
            arity(1);
            const auto& xs = shape_of(0);
            const auto& axes = attrs.axes;
            check(axes == std::vector<int>{0} || axes == std::vector<int>{0, 1},
                  "reduce_mean: only leading-axis reductions {0} or {0,1} are supported");
            check(xs.size() >= axes.size(), "reduce_mean: rank too small for axes");
            std::int64_t s = 1;
            for (std::size_t d = 0; d < axes.size(); ++d) s *= xs[d];
            out_shape.assign(xs.begin() + static_cast<std::ptrdiff_t>(axes.size()), xs.end());
            if (out_shape.empty()) out_shape = {1};
            const std::int64_t r = shape_numel(out_shape);
            out.resize(static_cast<std::size_t>(r));
            kernels::reduce_mean_leading(vals_of(0).data(), s, r, out.data());
            break;
        }
        case OpKind::reduce_var: {
            arity(1);
            const auto& xs = shape_of(0);
            check(xs.size() == 2, "reduce_var: expected SxD samples, got " + shape_str(xs));
            out_shape = {xs[1]};
            out.resize(static_cast<std::size_t>(xs[1]));
            kernels::reduce_var_leading(vals_of(0).data(), xs[0], xs[1], attrs.floor, out.data());
            break;
        }
        case OpKind::l2_normalize: {
            arity(1);
            const auto& xs = shape_of(0);
            check(xs.size() == 1, "l2_normalize: expected a vector, got " + shape_str(xs));
            out_shape = xs;
            out.resize(vals_of(0).size());
            kernels::l2_normalize(vals_of(0).data(), static_cast<std::int64_t>(out.size()),
                                  out.data());
            break;
        }
        case OpKind::cosine_sim: {
            arity(2);
            check(shape_of(0).size() == 1 && shape_of(0) == shape_of(1),
                  "cosine_sim: expected two equal-length vectors, got " + shape_str(shape_of(0)) +
                      " and " + shape_str(shape_of(1)));
            out_shape = {1};
            out = {kernels::cosine_sim(vals_of(0).data(), vals_of(1).data(),
                                       static_cast<std::int64_t>(vals_of(0).size()))};
            break;
        }
        case OpKind::softmax_xent: {
            arity(1);
            const auto& xs = shape_of(0);
            check(xs.size() == 1, "softmax_xent: logits must be a vector, got " + shape_str(xs));
            check(attrs.target >= 0 && attrs.target < xs[0],
                  "softmax_xent: target " + std::to_string(attrs.target) + " out of range");
            check(attrs.tau > 0.0, "softmax_xent: temperature must be positive");
            out_shape = {1};
            out = {kernels::softmax_xent(vals_of(0).data(), xs[0], attrs.target, attrs.tau)};
            break;
        }
        case OpKind::stack: {
            check(!inputs.empty(), "stack: no inputs");
            const auto& first = shape_of(0);
            for (std::size_t i = 1; i < inputs.size(); ++i)
                check(shape_of(i) == first, "stack: all inputs must share a shape");
            out_shape.assign(1, static_cast<int>(inputs.size()));
            out_shape.insert(out_shape.end(), first.begin(), first.end());
            const std::int64_t len = shape_numel(first);
            out.resize(static_cast<std::size_t>(len * static_cast<std::int64_t>(inputs.size())));
            for (std::size_t i = 0; i < inputs.size(); ++i)
                std::memcpy(out.data() + static_cast<std::int64_t>(i) * len, vals_of(i).data(),
                            static_cast<std::size_t>(len) * sizeof(double));
            break;
        }
        case OpKind::slice: {
            arity(1);
            const auto& xs = shape_of(0);
            check(!xs.empty(), "slice: scalar input");
            check(0 <= attrs.begin && attrs.begin < attrs.end && attrs.end <= xs[0],
                  "slice: range [" + std::to_string(attrs.begin) + ", " +
                      std::to_string(attrs.end) + ") invalid for leading dim " +
                      std::to_string(xs[0]));
            out_shape = xs;
            out_shape[0] = attrs.end - attrs.begin;
            const std::int64_t inner = shape_numel(xs) / xs[0];
            out.resize(static_cast<std::size_t>(out_shape[0] * inner));
            std::memcpy(out.data(), vals_of(0).data() + attrs.begin * inner,
                        out.size() * sizeof(double));
            break;
        }
        case OpKind::reshape: {
            arity(1);
            check(shape_numel(attrs.shape) == static_cast<std::int64_t>(vals_of(0).size()),
                  "reshape: " + shape_str(shape_of(0)) + " -> " + shape_str(attrs.shape) +
                      " changes the element count");
            out_shape = attrs.shape;
            out = vals_of(0);
            break;
        }
    }

    for (double v : out)
        if (!std::isfinite(v))
            throw DomainError(std::string(kind_name(kind)) + " produced a non-finite value");

    bool rg = false;
    for (int id : ids) rg = rg || nodes_[id].requires_grad;
    const int out_id = register_node(out_shape, std::move(out), rg);
    entries_.push_back(Entry{kind, std::move(ids), out_id, attrs});
    return wrap(out_id);
}

GradientMap Tape::backward(const Tensor& loss) const {
    if (loss.node_id < 0 || loss.generation != generation_ ||
        loss.node_id >= static_cast<int>(nodes_.size()))
        throw StaleHandleError("backward: loss is not on this tape");
    if (loss.numel() != 1)
        throw ShapeError("backward: loss must be scalar, got " + shape_str(loss.shape));

    // reverse reachability from the loss through grad-requiring entries
    std::vector<char> needed(nodes_.size(), 0);
    needed[static_cast<std::size_t>(loss.node_id)] = 1;
    for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
        if (!needed[static_cast<std::size_t>(it->output)] ||
            !nodes_[static_cast<std::size_t>(it->output)].requires_grad)
            continue;
        for (int id : it->inputs)
            if (nodes_[static_cast<std::size_t>(id)].requires_grad)
                needed[static_cast<std::size_t>(id)] = 1;
    }

    std::vector<std::vector<double>> grads(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (needed[i] && nodes_[i].requires_grad) grads[i].assign(nodes_[i].values.size(), 0.0);
    grads[static_cast<std::size_t>(loss.node_id)] = {1.0};

    auto shape = [&](int id) -> const std::vector<int>& { return nodes_[static_cast<std::size_t>(id)].shape; };
    auto vals = [&](int id) -> const std::vector<double>& { return nodes_[static_cast<std::size_t>(id)].values; };
    auto wants = [&](int id) {
        return needed[static_cast<std::size_t>(id)] && nodes_[static_cast<std::size_t>(id)].requires_grad;
    };
    auto accumulate = [&](int id, const std::vector<double>& g) {
        auto& dst = grads[static_cast<std::size_t>(id)];
        for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
    };

    for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
        const Entry& e = *it;
        if (!needed[static_cast<std::size_t>(e.output)] ||
            !nodes_[static_cast<std::size_t>(e.output)].requires_grad)
            continue;
        const std::vector<double>& gy = grads[static_cast<std::size_t>(e.output)];
        std::vector<double> tmp;

        switch (e.kind) {
            case OpKind::conv2d_same: {
                const auto& xs = shape(e.inputs[0]);
                const auto& ks = shape(e.inputs[1]);
                if (wants(e.inputs[0])) {
                    tmp.resize(vals(e.inputs[0]).size());
                    kernels::conv2d_same_grad_x(gy.data(), xs[0], xs[1], xs[2],
                                                vals(e.inputs[1]).data(), ks[0], ks[1], ks[3],
                                                tmp.data());
                    accumulate(e.inputs[0], tmp);
                }
                if (wants(e.inputs[1])) {
                    tmp.assign(vals(e.inputs[1]).size(), 0.0);
                    kernels::conv2d_same_grad_k(vals(e.inputs[0]).data(), gy.data(), xs[0], xs[1],
                                                xs[2], ks[0], ks[1], ks[3], tmp.data());
                    accumulate(e.inputs[1], tmp);
                }
                break;
            }
            case OpKind::avg_pool2x2: {
                if (!wants(e.inputs[0])) break;
                const auto& xs = shape(e.inputs[0]);
                tmp.resize(vals(e.inputs[0]).size());
                kernels::avg_pool2x2_grad(gy.data(), xs[0], xs[1], xs[2], tmp.data());
                accumulate(e.inputs[0], tmp);
                break;
            }
            case OpKind::channel_avg_pool: {
                if (!wants(e.inputs[0])) break;
                const auto& xs = shape(e.inputs[0]);
                tmp.resize(vals(e.inputs[0]).size());
                kernels::channel_avg_pool_grad(gy.data(), xs[0], xs[1], xs[2], tmp.data());
                accumulate(e.inputs[0], tmp);
                break;
            }
            case OpKind::channel_max_pool: {
                if (!wants(e.inputs[0])) break;
                const auto& xs = shape(e.inputs[0]);
                tmp.resize(vals(e.inputs[0]).size());
                kernels::channel_max_pool_grad(vals(e.inputs[0]).data(), gy.data(), xs[0], xs[1],
                                               xs[2], tmp.data());
                accumulate(e.inputs[0], tmp);
                break;
            }
            case OpKind::concat: {
                const auto& os = shape(e.output);
                const int axis = e.attrs.axis;
                std::int64_t outer = 1, inner = 1;
                for (int d = 0; d < axis; ++d) outer *= os[d];
                for (std::size_t d = static_cast<std::size_t>(axis) + 1; d < os.size(); ++d)
                    inner *= os[d];
                const std::int64_t total = os[axis] * inner;
                std::int64_t offset = 0;
                for (int id : e.inputs) {
                    const std::int64_t len = shape(id)[axis] * inner;
                    if (wants(id)) {
                        tmp.resize(vals(id).size());
                        for (std::int64_t o = 0; o < outer; ++o)
                            std::memcpy(tmp.data() + o * len, gy.data() + o * total + offset,
                                        static_cast<std::size_t>(len) * sizeof(double));
                        accumulate(id, tmp);
                    }
                    offset += len;
                }
                break;
            }
            case OpKind::sigmoid: {
                if (!wants(e.inputs[0])) break;
                tmp.resize(gy.size());
                kernels::sigmoid_grad(vals(e.output).data(), gy.data(),
                                      static_cast<std::int64_t>(gy.size()), tmp.data());
                accumulate(e.inputs[0], tmp);
                break;
            }
            case OpKind::sqrt: {
                if (!wants(e.inputs[0])) break;
                tmp.resize(gy.size());
                kernels::sqrt_clamped_grad(vals(e.inputs[0]).data(), gy.data(),
                                           static_cast<std::int64_t>(gy.size()), tmp.data());
                accumulate(e.inputs[0], tmp);
                break;
            }
            case OpKind::square: {
                if (!wants(e.inputs[0])) break;
                tmp.resize(gy.size());
                kernels::square_grad(vals(e.inputs[0]).data(), gy.data(),
                                     static_cast<std::int64_t>(gy.size()), tmp.data());
                accumulate(e.inputs[0], tmp);
                break;
            }
            case OpKind::add:
            case OpKind::sub:
            case OpKind::hadamard: {
                const auto dims = binary_dims(shape(e.inputs[0]), shape(e.inputs[1]), "binary");
                const auto op = e.kind == OpKind::add   ? kernels::BinaryOp::add
                                : e.kind == OpKind::sub ? kernels::BinaryOp::sub
                                                        : kernels::BinaryOp::mul;
                if (wants(e.inputs[0])) {
                    tmp.resize(vals(e.inputs[0]).size());
                    kernels::binary_grad_a(op, vals(e.inputs[1]).data(), gy.data(), dims.outer,
                                           dims.ca, dims.cb, tmp.data());
                    accumulate(e.inputs[0], tmp);
                }
                if (wants(e.inputs[1])) {
                    tmp.resize(vals(e.inputs[1]).size());
                    kernels::binary_grad_b(op, vals(e.inputs[0]).data(), gy.data(), dims.outer,
                                           dims.ca, dims.cb, tmp.data());
                    accumulate(e.inputs[1], tmp);
                }
                break;
            }
            case OpKind::scale: {
                if (!wants(e.inputs[0])) break;
                tmp.resize(gy.size());
                kernels::scale_grad(gy.data(), e.attrs.factor,
                                    static_cast<std::int64_t>(gy.size()), tmp.data());
                accumulate(e.inputs[0], tmp);
                break;
            }
            case OpKind::matvec: {
                const auto& as = shape(e.inputs[0]);
                if (wants(e.inputs[0])) {
                    tmp.resize(vals(e.inputs[0]).size());
                    kernels::matvec_grad_a(vals(e.inputs[1]).data(), gy.data(), as[0], as[1],
                                           tmp.data());
                    accumulate(e.inputs[0], tmp);
                }
                if (wants(e.inputs[1])) {
                    tmp.resize(vals(e.inputs[1]).size());
                    kernels::matvec_grad_v(vals(e.inputs[0]).data(), gy.data(), as[0], as[1],
                                           tmp.data());
                    accumulate(e.inputs[1], tmp);
                }
                break;
            }
            case OpKind::reduce_mean: {
                if (!wants(e.inputs[0])) break;
                const std::int64_t n = static_cast<std::int64_t>(vals(e.inputs[0]).size());
                const std::int64_t r = static_cast<std::int64_t>(gy.size());
                tmp.resize(static_cast<std::size_t>(n));
                kernels::reduce_mean_leading_grad(gy.data(), n / r, r, tmp.data());
                accumulate(e.inputs[0], tmp);
                break;
            }
            case OpKind::reduce_var: {
                if (!wants(e.inputs[0])) break;
                const auto& xs = shape(e.inputs[0]);
                tmp.resize(vals(e.inputs[0]).size());
                kernels::reduce_var_leading_grad(vals(e.inputs[0]).data(), gy.data(), xs[0], xs[1],
                                                 e.attrs.floor, tmp.data());
                accumulate(e.inputs[0], tmp);
                break;
            }
            case OpKind::l2_normalize: {
                if (!wants(e.inputs[0])) break;
                tmp.resize(gy.size());
                kernels::l2_normalize_grad(vals(e.inputs[0]).data(), gy.data(),
                                           static_cast<std::int64_t>(gy.size()), tmp.data());
                accumulate(e.inputs[0], tmp);
                break;
            }
            case OpKind::cosine_sim: {
                const std::int64_t n = static_cast<std::int64_t>(vals(e.inputs[0]).size());
                std::vector<double> ga(static_cast<std::size_t>(n)), gb(static_cast<std::size_t>(n));
                kernels::cosine_sim_grad(vals(e.inputs[0]).data(), vals(e.inputs[1]).data(), n,
                                         gy[0], ga.data(), gb.data());
                if (wants(e.inputs[0])) accumulate(e.inputs[0], ga);
                if (wants(e.inputs[1])) accumulate(e.inputs[1], gb);
                break;
            }
            case OpKind::softmax_xent: {
                if (!wants(e.inputs[0])) break;
                const auto& xs = shape(e.inputs[0]);
                tmp.resize(static_cast<std::size_t>(xs[0]));
                kernels::softmax_xent_grad(vals(e.inputs[0]).data(), xs[0], e.attrs.target,
                                           e.attrs.tau, gy[0], tmp.data());
                accumulate(e.inputs[0], tmp);
                break;
            }
            case OpKind::stack: {
                const std::int64_t len =
                    static_cast<std::int64_t>(gy.size()) / static_cast<std::int64_t>(e.inputs.size());
                for (std::size_t i = 0; i < e.inputs.size(); ++i) {
                    if (!wants(e.inputs[i])) continue;
                    tmp.assign(gy.begin() + static_cast<std::int64_t>(i) * len,
                               gy.begin() + static_cast<std::int64_t>(i + 1) * len);
                    accumulate(e.inputs[i], tmp);
                }
                break;
            }
            case OpKind::slice: {
                if (!wants(e.inputs[0])) break;
                const auto& xs = shape(e.inputs[0]);
                const std::int64_t inner = shape_numel(xs) / xs[0];
                tmp.assign(vals(e.inputs[0]).size(), 0.0);
                std::memcpy(tmp.data() + e.attrs.begin * inner, gy.data(),
                            gy.size() * sizeof(double));
                accumulate(e.inputs[0], tmp);
                break;
            }
            case OpKind::reshape: {
                if (!wants(e.inputs[0])) break;
                accumulate(e.inputs[0], gy);
                break;
            }
        }
    }

    GradientMap map;
    map.generation_ = generation_;
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (needed[i] && nodes_[i].requires_grad)
            map.grads_[static_cast<int>(i)] = std::move(grads[i]);
    return map;
}

// ---------------------------------------------------------------- wrappers

Tensor Tape::conv2d_same(const Tensor& x, const Tensor& k) {
    return record(OpKind::conv2d_same, {x, k});
}
Tensor Tape::avg_pool2x2(const Tensor& x) { return record(OpKind::avg_pool2x2, {x}); }
Tensor Tape::channel_avg_pool(const Tensor& x) { return record(OpKind::channel_avg_pool, {x}); }
Tensor Tape::channel_max_pool(const Tensor& x) { return record(OpKind::channel_max_pool, {x}); }
Tensor Tape::concat(const std::vector<Tensor>& xs, int axis) {
    OpAttrs a;
    a.axis = axis;
    return record(OpKind::concat, xs, a);
}
Tensor Tape::sigmoid(const Tensor& x) { return record(OpKind::sigmoid, {x}); }
Tensor Tape::add(const Tensor& a, const Tensor& b) { return record(OpKind::add, {a, b}); }
Tensor Tape::sub(const Tensor& a, const Tensor& b) { return record(OpKind::sub, {a, b}); }
Tensor Tape::hadamard(const Tensor& a, const Tensor& b) { return record(OpKind::hadamard, {a, b}); }
Tensor Tape::scale(const Tensor& x, double c) {
    OpAttrs a;
    a.factor = c;
    return record(OpKind::scale, {x}, a);
}
Tensor Tape::sqrt(const Tensor& x) { return record(OpKind::sqrt, {x}); }
Tensor Tape::square(const Tensor& x) { return record(OpKind::square, {x}); }
Tensor Tape::matvec(const Tensor& a, const Tensor& v) { return record(OpKind::matvec, {a, v}); }
Tensor Tape::reduce_mean(const Tensor& x, std::vector<int> axes) {
    OpAttrs a;
    a.axes = std::move(axes);
    return record(OpKind::reduce_mean, {x}, a);
}
Tensor Tape::reduce_var(const Tensor& x, double floor) {
    OpAttrs a;
    a.floor = floor;
    return record(OpKind::reduce_var, {x}, a);
}
Tensor Tape::l2_normalize(const Tensor& x) { return record(OpKind::l2_normalize, {x}); }
Tensor Tape::cosine_sim(const Tensor& a, const Tensor& b) {
    return record(OpKind::cosine_sim, {a, b});
}
Tensor Tape::softmax_xent(const Tensor& logits, int target, double tau) {
    OpAttrs a;
    a.target = target;
    a.tau = tau;
    return record(OpKind::softmax_xent, {logits}, a);
}
Tensor Tape::stack(const std::vector<Tensor>& xs) { return record(OpKind::stack, xs); }
Tensor Tape::slice(const Tensor& x, int begin, int end) {
    OpAttrs a;
    a.begin = begin;
    a.end = end;
    return record(OpKind::slice, {x}, a);
}
Tensor Tape::reshape(const Tensor& x, std::vector<int> shape) {
    OpAttrs a;
    a.shape = std::move(shape);
    return record(OpKind::reshape, {x}, a);
}

// ---------------------------------------------------------------- grad_check

double grad_check(const std::function<Tensor(Tape&, const Tensor&)>& scalar_fn,
                  const Tensor& point, double eps) {
    if (eps <= 0.0) throw ConfigError("grad_check: eps must be positive");

    Tape tape;
    Tensor x = tape.leaf(point.shape, point.values, true);
    Tensor loss = scalar_fn(tape, x);
    GradientMap grads = tape.backward(loss);
    const std::vector<double> analytic = grads.get_or_zeros(x);

    auto eval = [&](const std::vector<double>& v) {
        Tape t;
        Tensor p = t.leaf(point.shape, v, false);
        return scalar_fn(t, p).scalar();
    };

    double worst = 0.0;
    std::vector<double> v = point.values;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double orig = v[i];
        v[i] = orig + eps;
        const double fp = eval(v);
        v[i] = orig - eps;
        const double fm = eval(v);
        v[i] = orig;
        const double numeric = (fp - fm) / (2.0 * eps);
        const double denom = std::max({1e-8, std::abs(numeric), std::abs(analytic[i])});
        worst = std::max(worst, std::abs(numeric - analytic[i]) / denom);
    }
    return worst;
}

}  // namespace sada
