#include "promptstream/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include "promptstream/errors.hpp"

namespace promptstream {

int64_t shape_numel(const Shape& shape) {
    int64_t n = 1;
    for (int d : shape) n *= d;
    return n;
}

std::string shape_to_string(const Shape& shape) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ",";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

namespace detail {

void Node::ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
}

}  // namespace detail

namespace {

thread_local bool g_grad_enabled = true;

void check_shape(const Shape& shape) {
    for (int d : shape) {
        if (d <= 0) throw DimensionError("tensor: non-positive extent in " + shape_to_string(shape));
    }
}

void check_defined(const Tensor& t, const char* op) {
    if (!t.defined()) throw ContractError(std::string(op) + ": undefined tensor input");
}

}  // namespace

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool grad_enabled() { return g_grad_enabled; }

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
    return from_data(shape, std::vector<double>(shape_numel(shape), 0.0), requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
    return from_data(shape, std::vector<double>(shape_numel(shape), value), requires_grad);
}

Tensor Tensor::from_data(Shape shape, std::vector<double> values, bool requires_grad) {
    check_shape(shape);
    if (shape_numel(shape) != static_cast<int64_t>(values.size())) {
        throw DimensionError("tensor: shape " + shape_to_string(shape) + " does not match value count " +
                             std::to_string(values.size()));
    }
    auto node = std::make_shared<detail::Node>();
    node->shape = std::move(shape);
    node->data = std::move(values);
    node->requires_grad = requires_grad;
    return Tensor(std::move(node));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
    return from_data({}, {value}, requires_grad);
}

const Shape& Tensor::shape() const {
    check_defined(*this, "shape");
    return node_->shape;
}

int64_t Tensor::numel() const { return static_cast<int64_t>(data().size()); }

bool Tensor::requires_grad() const {
    check_defined(*this, "requires_grad");
    return node_->requires_grad;
}

const std::vector<double>& Tensor::data() const {
    check_defined(*this, "data");
    return node_->data;
}

std::vector<double>& Tensor::mutable_data() {
    check_defined(*this, "mutable_data");
    return node_->data;
}

const std::vector<double>& Tensor::grad() const {
    check_defined(*this, "grad");
    if (!has_grad()) throw ContractError("grad: no gradient populated for this tensor");
    return node_->grad;
}

bool Tensor::has_grad() const {
    check_defined(*this, "has_grad");
    return node_->grad.size() == node_->data.size();
}

void Tensor::zero_grad() {
    check_defined(*this, "zero_grad");
    if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

double Tensor::value() const {
    if (numel() != 1) throw ContractError("value: tensor has " + std::to_string(numel()) + " elements");
    return data()[0];
}

double Tensor::at(std::initializer_list<int> idx) const {
    const Shape& s = shape();
    if (idx.size() != s.size()) throw DimensionError("at: index rank mismatch");
    int64_t flat = 0;
    size_t k = 0;
    for (int i : idx) {
        if (i < 0 || i >= s[k]) throw std::out_of_range("at: index out of range");
        flat = flat * s[k] + i;
        ++k;
    }
    return data()[flat];
}

void Tensor::backward() const {
    check_defined(*this, "backward");
    if (numel() != 1) {
        throw ContractError("backward: root must be a single-element tensor, got shape " +
                            shape_to_string(node_->shape));
    }
    if (!node_->requires_grad) {
        throw ContractError("backward: root is not attached to the tape");
    }
    // Iterative post-order DFS over the requires_grad subgraph.
    std::vector<detail::Node*> order;
    std::unordered_set<detail::Node*> seen;
    std::vector<std::pair<detail::Node*, size_t>> stack;
    if (node_->requires_grad) stack.push_back({node_.get(), 0});
    seen.insert(node_.get());
    while (!stack.empty()) {
        auto& [n, next] = stack.back();
        if (next < n->parents.size()) {
            detail::Node* p = n->parents[next++].get();
            if (p->requires_grad && !seen.count(p)) {
                seen.insert(p);
                stack.push_back({p, 0});
            }
        } else {
            order.push_back(n);
            stack.pop_back();
        }
    }
    node_->ensure_grad();
    node_->grad[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        detail::Node* n = *it;
        n->ensure_grad();
        if (n->grad_fn) n->grad_fn(*n);
    }
}

Tensor make_op_result(Shape shape, std::vector<double> values, std::vector<Tensor> inputs,
                      std::function<void(detail::Node&)> grad_fn) {
    auto node = std::make_shared<detail::Node>();
    check_shape(shape);
    node->shape = std::move(shape);
    node->data = std::move(values);
    bool any_grad = false;
    for (const Tensor& in : inputs) any_grad = any_grad || in.requires_grad();
    if (g_grad_enabled && any_grad) {
        node->requires_grad = true;
        node->parents.reserve(inputs.size());
        for (const Tensor& in : inputs) node->parents.push_back(in.node());
        node->grad_fn = std::move(grad_fn);
    }
    return Tensor(std::move(node));
}

namespace ops {

namespace {

// Accumulate into a parent's grad only when it participates in the tape.
bool wants_grad(const detail::Node& out, size_t k) {
    return out.parents[k]->requires_grad;
}

std::vector<double>& parent_grad(detail::Node& out, size_t k) {
    out.parents[k]->ensure_grad();
    return out.parents[k]->grad;
}

// Views a tensor as [outer, extent, inner] around `axis`.
struct AxisSplit {
    int64_t outer = 1, extent = 1, inner = 1;
};

AxisSplit split_at(const Shape& shape, int axis) {
    AxisSplit s;
    for (int i = 0; i < axis; ++i) s.outer *= shape[i];
    s.extent = shape[axis];
    for (size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
    return s;
}

void check_axis(const char* op, const Shape& shape, int axis) {
    if (axis < 0 || axis >= static_cast<int>(shape.size())) {
        throw std::out_of_range(std::string(op) + ": axis " + std::to_string(axis) +
                                " out of range for shape " + shape_to_string(shape));
    }
}

Shape drop_axis(const Shape& shape, int axis) {
    Shape out;
    for (int i = 0; i < static_cast<int>(shape.size()); ++i) {
        if (i != axis) out.push_back(shape[i]);
    }
    return out;
}

int64_t last_extent(const Shape& shape) { return shape.empty() ? 1 : shape.back(); }

Tensor unary_map(const char* name, const Tensor& t, double (*fwd)(double), double (*dfdx)(double)) {
    check_defined(t, name);
    const auto& x = t.data();
    std::vector<double> y(x.size());
    for (size_t i = 0; i < x.size(); ++i) y[i] = fwd(x[i]);
    return make_op_result(t.shape(), std::move(y), {t}, [dfdx](detail::Node& out) {
        if (!wants_grad(out, 0)) return;
        auto& gx = parent_grad(out, 0);
        const auto& x = out.parents[0]->data;
        for (size_t i = 0; i < x.size(); ++i) gx[i] += out.grad[i] * dfdx(x[i]);
    });
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
    check_defined(a, "matmul");
    check_defined(b, "matmul");
    if (a.rank() != 2 || b.rank() != 2 || a.shape()[1] != b.shape()[0]) {
        throw DimensionError("matmul: incompatible shapes " + shape_to_string(a.shape()) + " x " +
                             shape_to_string(b.shape()));
    }
    const int64_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
    std::vector<double> out(m * n, 0.0);
    const double* pa = a.data().data();
    const double* pb = b.data().data();
    for (int64_t i = 0; i < m; ++i) {
        for (int64_t kk = 0; kk < k; ++kk) {
            const double av = pa[i * k + kk];
            const double* pbr = pb + kk * n;
            double* po = out.data() + i * n;
            for (int64_t j = 0; j < n; ++j) po[j] += av * pbr[j];
        }
    }
    return make_op_result({static_cast<int>(m), static_cast<int>(n)}, std::move(out), {a, b},
                          [m, k, n](detail::Node& o) {
                              const double* pa = o.parents[0]->data.data();
                              const double* pb = o.parents[1]->data.data();
                              const double* g = o.grad.data();
                              if (wants_grad(o, 0)) {
                                  double* ga = parent_grad(o, 0).data();
                                  for (int64_t i = 0; i < m; ++i)
                                      for (int64_t j = 0; j < n; ++j) {
                                          const double gv = g[i * n + j];
                                          const double* pbr = pb + j;
                                          double* gar = ga + i * k;
                                          for (int64_t kk = 0; kk < k; ++kk) gar[kk] += gv * pbr[kk * n];
                                      }
                              }
                              if (wants_grad(o, 1)) {
                                  double* gb = parent_grad(o, 1).data();
                                  for (int64_t i = 0; i < m; ++i)
                                      for (int64_t kk = 0; kk < k; ++kk) {
                                          const double av = pa[i * k + kk];
                                          const double* gr = g + i * n;
                                          double* gbr = gb + kk * n;
                                          for (int64_t j = 0; j < n; ++j) gbr[j] += av * gr[j];
                                      }
                              }
                          });
}

namespace {

Tensor add_like(const char* name, const Tensor& a, const Tensor& b, double sign) {
    check_defined(a, name);
    check_defined(b, name);
    if (a.shape() == b.shape()) {
        const auto& xa = a.data();
        const auto& xb = b.data();
        std::vector<double> y(xa.size());
        for (size_t i = 0; i < y.size(); ++i) y[i] = xa[i] + sign * xb[i];
        return make_op_result(a.shape(), std::move(y), {a, b}, [sign](detail::Node& o) {
            if (wants_grad(o, 0)) {
                auto& g = parent_grad(o, 0);
                for (size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
            }
            if (wants_grad(o, 1)) {
                auto& g = parent_grad(o, 1);
                for (size_t i = 0; i < g.size(); ++i) g[i] += sign * o.grad[i];
            }
        });
    }
    // Row broadcast: [r, c] (+|-) [c].
    if (a.rank() == 2 && b.rank() == 1 && a.shape()[1] == b.shape()[0]) {
        const int64_t r = a.shape()[0], c = a.shape()[1];
        const auto& xa = a.data();
        const auto& xb = b.data();
        std::vector<double> y(xa.size());
        for (int64_t i = 0; i < r; ++i)
            for (int64_t j = 0; j < c; ++j) y[i * c + j] = xa[i * c + j] + sign * xb[j];
        return make_op_result(a.shape(), std::move(y), {a, b}, [r, c, sign](detail::Node& o) {
            if (wants_grad(o, 0)) {
                auto& g = parent_grad(o, 0);
                for (size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
            }
            if (wants_grad(o, 1)) {
                auto& g = parent_grad(o, 1);
                for (int64_t i = 0; i < r; ++i)
                    for (int64_t j = 0; j < c; ++j) g[j] += sign * o.grad[i * c + j];
            }
        });
    }
    throw DimensionError(std::string(name) + ": shape mismatch " + shape_to_string(a.shape()) + " vs " +
                         shape_to_string(b.shape()));
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return add_like("add", a, b, 1.0); }
Tensor sub(const Tensor& a, const Tensor& b) { return add_like("sub", a, b, -1.0); }

Tensor elementwise_mul(const Tensor& a, const Tensor& b) {
    check_defined(a, "elementwise_mul");
    check_defined(b, "elementwise_mul");
    if (a.shape() != b.shape()) {
        throw DimensionError("elementwise_mul: shape mismatch " + shape_to_string(a.shape()) + " vs " +
                             shape_to_string(b.shape()));
    }
    const auto& xa = a.data();
    const auto& xb = b.data();
    std::vector<double> y(xa.size());
    for (size_t i = 0; i < y.size(); ++i) y[i] = xa[i] * xb[i];
    return make_op_result(a.shape(), std::move(y), {a, b}, [](detail::Node& o) {
        const auto& xa = o.parents[0]->data;
        const auto& xb = o.parents[1]->data;
        if (wants_grad(o, 0)) {
            auto& g = parent_grad(o, 0);
            for (size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] * xb[i];
        }
        if (wants_grad(o, 1)) {
            auto& g = parent_grad(o, 1);
            for (size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] * xa[i];
        }
    });
}

Tensor broadcast_mul_vector(const Tensor& vec, const Tensor& mat) {
    check_defined(vec, "broadcast_mul_vector");
    check_defined(mat, "broadcast_mul_vector");
    if (vec.rank() != 1 || mat.rank() != 2 || vec.shape()[0] != mat.shape()[1]) {
        throw DimensionError("broadcast_mul_vector: expected [d] and [r,d], got " +
                             shape_to_string(vec.shape()) + " and " + shape_to_string(mat.shape()));
    }
    const int64_t r = mat.shape()[0], d = mat.shape()[1];
    const auto& v = vec.data();
    const auto& m = mat.data();
    std::vector<double> y(m.size());
    for (int64_t i = 0; i < r; ++i)
        for (int64_t j = 0; j < d; ++j) y[i * d + j] = v[j] * m[i * d + j];
    return make_op_result(mat.shape(), std::move(y), {vec, mat}, [r, d](detail::Node& o) {
        const auto& v = o.parents[0]->data;
        const auto& m = o.parents[1]->data;
        if (wants_grad(o, 0)) {
            auto& gv = parent_grad(o, 0);
            for (int64_t i = 0; i < r; ++i)
                for (int64_t j = 0; j < d; ++j) gv[j] += o.grad[i * d + j] * m[i * d + j];
        }
        if (wants_grad(o, 1)) {
            auto& gm = parent_grad(o, 1);
            for (int64_t i = 0; i < r; ++i)
                for (int64_t j = 0; j < d; ++j) gm[i * d + j] += o.grad[i * d + j] * v[j];
        }
    });
}

Tensor concat(const std::vector<Tensor>& parts, int axis) {
    if (parts.empty()) throw ContractError("concat: no inputs");
    for (const Tensor& p : parts) check_defined(p, "concat");
    const Shape& base = parts[0].shape();
    check_axis("concat", base, axis);
    int total = 0;
    for (const Tensor& p : parts) {
        if (p.rank() != static_cast<int>(base.size())) {
            throw DimensionError("concat: rank mismatch " + shape_to_string(p.shape()) + " vs " +
                                 shape_to_string(base));
        }
        for (int i = 0; i < p.rank(); ++i) {
            if (i != axis && p.shape()[i] != base[i]) {
                throw DimensionError("concat: shape mismatch " + shape_to_string(p.shape()) + " vs " +
                                     shape_to_string(base) + " on axis " + std::to_string(i));
            }
        }
        total += p.shape()[axis];
    }
    Shape out_shape = base;
    out_shape[axis] = total;
    AxisSplit sp = split_at(out_shape, axis);
    std::vector<double> y(shape_numel(out_shape));
    std::vector<int64_t> extents;
    int64_t offset = 0;
    for (const Tensor& p : parts) {
        const int64_t e = p.shape()[axis];
        extents.push_back(e);
        const double* src = p.data().data();
        for (int64_t o = 0; o < sp.outer; ++o) {
            double* dst = y.data() + (o * sp.extent + offset) * sp.inner;
            std::copy(src + o * e * sp.inner, src + (o + 1) * e * sp.inner, dst);
        }
        offset += e;
    }
    return make_op_result(out_shape, std::move(y), parts, [sp, extents](detail::Node& o) {
        int64_t offset = 0;
        for (size_t k = 0; k < extents.size(); ++k) {
            const int64_t e = extents[k];
            if (wants_grad(o, k)) {
                auto& g = parent_grad(o, k);
                for (int64_t ou = 0; ou < sp.outer; ++ou) {
                    const double* src = o.grad.data() + (ou * sp.extent + offset) * sp.inner;
                    double* dst = g.data() + ou * e * sp.inner;
                    for (int64_t i = 0; i < e * sp.inner; ++i) dst[i] += src[i];
                }
            }
            offset += e;
        }
    });
}

namespace {

Tensor reduce_axis(const char* name, const Tensor& t, int axis, bool take_mean) {
    check_defined(t, name);
    check_axis(name, t.shape(), axis);
    AxisSplit sp = split_at(t.shape(), axis);
    Shape out_shape = drop_axis(t.shape(), axis);
    std::vector<double> y(sp.outer * sp.inner, 0.0);
    const double* x = t.data().data();
    for (int64_t o = 0; o < sp.outer; ++o)
        for (int64_t e = 0; e < sp.extent; ++e)
            for (int64_t i = 0; i < sp.inner; ++i)
                y[o * sp.inner + i] += x[(o * sp.extent + e) * sp.inner + i];
    const double w = take_mean ? 1.0 / static_cast<double>(sp.extent) : 1.0;
    if (take_mean)
        for (double& v : y) v *= w;
    return make_op_result(out_shape, std::move(y), {t}, [sp, w](detail::Node& o) {
        if (!wants_grad(o, 0)) return;
        auto& g = parent_grad(o, 0);
        for (int64_t ou = 0; ou < sp.outer; ++ou)
            for (int64_t e = 0; e < sp.extent; ++e)
                for (int64_t i = 0; i < sp.inner; ++i)
                    g[(ou * sp.extent + e) * sp.inner + i] += w * o.grad[ou * sp.inner + i];
    });
}

Tensor reduce_all(const char* name, const Tensor& t, bool take_mean) {
    check_defined(t, name);
    const auto& x = t.data();
    double acc = 0.0;
    for (double v : x) acc += v;
    const double w = take_mean ? 1.0 / static_cast<double>(x.size()) : 1.0;
    return make_op_result({}, {acc * w}, {t}, [w](detail::Node& o) {
        if (!wants_grad(o, 0)) return;
        auto& g = parent_grad(o, 0);
        const double gv = w * o.grad[0];
        for (double& v : g) v += gv;
    });
}

}  // namespace

Tensor sum(const Tensor& t, int axis) { return reduce_axis("sum", t, axis, false); }
Tensor mean(const Tensor& t, int axis) { return reduce_axis("mean", t, axis, true); }
Tensor sum_all(const Tensor& t) { return reduce_all("sum_all", t, false); }
Tensor mean_all(const Tensor& t) { return reduce_all("mean_all", t, true); }

Tensor softmax(const Tensor& t) {
    check_defined(t, "softmax");
    if (t.rank() < 1) throw DimensionError("softmax: rank-0 input");
    const int64_t d = last_extent(t.shape());
    const int64_t rows = t.numel() / d;
    const auto& x = t.data();
    std::vector<double> y(x.size());
    for (int64_t r = 0; r < rows; ++r) {
        const double* xr = x.data() + r * d;
        double* yr = y.data() + r * d;
        double mx = xr[0];
        for (int64_t j = 1; j < d; ++j) mx = std::max(mx, xr[j]);
        double z = 0.0;
        for (int64_t j = 0; j < d; ++j) {
            yr[j] = std::exp(xr[j] - mx);
            z += yr[j];
        }
        for (int64_t j = 0; j < d; ++j) yr[j] /= z;
    }
    return make_op_result(t.shape(), std::move(y), {t}, [rows, d](detail::Node& o) {
        if (!wants_grad(o, 0)) return;
        auto& g = parent_grad(o, 0);
        for (int64_t r = 0; r < rows; ++r) {
            const double* yr = o.data.data() + r * d;
            const double* gr = o.grad.data() + r * d;
            double dot = 0.0;
            for (int64_t j = 0; j < d; ++j) dot += gr[j] * yr[j];
            for (int64_t j = 0; j < d; ++j) g[r * d + j] += yr[j] * (gr[j] - dot);
        }
    });
}

Tensor layer_norm(const Tensor& t, double eps) {
    check_defined(t, "layer_norm");
    if (t.rank() < 1) throw DimensionError("layer_norm: rank-0 input");
    const int64_t d = last_extent(t.shape());
    const int64_t rows = t.numel() / d;
    const auto& x = t.data();
    std::vector<double> y(x.size());
    for (int64_t r = 0; r < rows; ++r) {
        const double* xr = x.data() + r * d;
        double* yr = y.data() + r * d;
        double mu = 0.0;
        for (int64_t j = 0; j < d; ++j) mu += xr[j];
        mu /= static_cast<double>(d);
        double var = 0.0;
        for (int64_t j = 0; j < d; ++j) var += (xr[j] - mu) * (xr[j] - mu);
        var /= static_cast<double>(d);
        const double inv = 1.0 / std::sqrt(var + eps);
        for (int64_t j = 0; j < d; ++j) yr[j] = (xr[j] - mu) * inv;
    }
    return make_op_result(t.shape(), std::move(y), {t}, [rows, d, eps](detail::Node& o) {
        if (!wants_grad(o, 0)) return;
        auto& g = parent_grad(o, 0);
        const auto& x = o.parents[0]->data;
        for (int64_t r = 0; r < rows; ++r) {
            const double* xr = x.data() + r * d;
            const double* yr = o.data.data() + r * d;
            const double* gr = o.grad.data() + r * d;
            double mu = 0.0;
            for (int64_t j = 0; j < d; ++j) mu += xr[j];
            mu /= static_cast<double>(d);
            double var = 0.0;
            for (int64_t j = 0; j < d; ++j) var += (xr[j] - mu) * (xr[j] - mu);
            var /= static_cast<double>(d);
            const double inv = 1.0 / std::sqrt(var + eps);
            double gmean = 0.0, gydot = 0.0;
            for (int64_t j = 0; j < d; ++j) {
                gmean += gr[j];
                gydot += gr[j] * yr[j];
            }
            gmean /= static_cast<double>(d);
            gydot /= static_cast<double>(d);
            for (int64_t j = 0; j < d; ++j) g[r * d + j] += inv * (gr[j] - gmean - yr[j] * gydot);
        }
    });
}

namespace {

constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;

double gelu_fwd(double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); }
double gelu_dfdx(double x) {
    return 0.5 * (1.0 + std::erf(x * kInvSqrt2)) + x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

double log_fwd(double x) { return std::log(x); }
double log_dfdx(double x) { return 1.0 / x; }
double exp_fwd(double x) { return std::exp(x); }
double abs_fwd(double x) { return std::fabs(x); }
double abs_dfdx(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

}  // namespace

Tensor gelu(const Tensor& t) { return unary_map("gelu", t, gelu_fwd, gelu_dfdx); }
Tensor log(const Tensor& t) { return unary_map("log", t, log_fwd, log_dfdx); }
Tensor abs(const Tensor& t) { return unary_map("abs", t, abs_fwd, abs_dfdx); }

Tensor exp(const Tensor& t) {
    check_defined(t, "exp");
    const auto& x = t.data();
    std::vector<double> y(x.size());
    for (size_t i = 0; i < x.size(); ++i) y[i] = exp_fwd(x[i]);
    return make_op_result(t.shape(), std::move(y), {t}, [](detail::Node& o) {
        if (!wants_grad(o, 0)) return;
        auto& g = parent_grad(o, 0);
        for (size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] * o.data[i];
    });
}

Tensor scale(const Tensor& t, double c) {
    check_defined(t, "scale");
    const auto& x = t.data();
    std::vector<double> y(x.size());
    for (size_t i = 0; i < x.size(); ++i) y[i] = c * x[i];
    return make_op_result(t.shape(), std::move(y), {t}, [c](detail::Node& o) {
        if (!wants_grad(o, 0)) return;
        auto& g = parent_grad(o, 0);
        for (size_t i = 0; i < g.size(); ++i) g[i] += c * o.grad[i];
    });
}

Tensor transpose(const Tensor& t) {
    check_defined(t, "transpose");
    if (t.rank() < 2) throw DimensionError("transpose: needs rank >= 2, got " + shape_to_string(t.shape()));
    const Shape& s = t.shape();
    const int64_t r = s[s.size() - 2], c = s[s.size() - 1];
    const int64_t batch = t.numel() / (r * c);
    Shape out_shape = s;
    std::swap(out_shape[s.size() - 2], out_shape[s.size() - 1]);
    const auto& x = t.data();
    std::vector<double> y(x.size());
    for (int64_t b = 0; b < batch; ++b) {
        const double* xb = x.data() + b * r * c;
        double* yb = y.data() + b * r * c;
        for (int64_t i = 0; i < r; ++i)
            for (int64_t j = 0; j < c; ++j) yb[j * r + i] = xb[i * c + j];
    }
    return make_op_result(out_shape, std::move(y), {t}, [batch, r, c](detail::Node& o) {
        if (!wants_grad(o, 0)) return;
        auto& g = parent_grad(o, 0);
        for (int64_t b = 0; b < batch; ++b) {
            const double* gb = o.grad.data() + b * r * c;
            double* xb = g.data() + b * r * c;
            for (int64_t i = 0; i < r; ++i)
                for (int64_t j = 0; j < c; ++j) xb[i * c + j] += gb[j * r + i];
        }
    });
}

Tensor slice(const Tensor& t, int axis, int begin, int end) {
    check_defined(t, "slice");
    check_axis("slice", t.shape(), axis);
    const int extent = t.shape()[axis];
    if (begin < 0 || end > extent || begin >= end) {
        throw std::out_of_range("slice: range [" + std::to_string(begin) + "," + std::to_string(end) +
                                ") invalid for extent " + std::to_string(extent));
    }
    AxisSplit sp = split_at(t.shape(), axis);
    Shape out_shape = t.shape();
    out_shape[axis] = end - begin;
    const int64_t e = end - begin;
    std::vector<double> y(sp.outer * e * sp.inner);
    const double* x = t.data().data();
    for (int64_t o = 0; o < sp.outer; ++o) {
        const double* src = x + (o * sp.extent + begin) * sp.inner;
        std::copy(src, src + e * sp.inner, y.data() + o * e * sp.inner);
    }
    return make_op_result(out_shape, std::move(y), {t}, [sp, begin, e](detail::Node& o) {
        if (!wants_grad(o, 0)) return;
        auto& g = parent_grad(o, 0);
        for (int64_t ou = 0; ou < sp.outer; ++ou) {
            const double* src = o.grad.data() + ou * e * sp.inner;
            double* dst = g.data() + (ou * sp.extent + begin) * sp.inner;
            for (int64_t i = 0; i < e * sp.inner; ++i) dst[i] += src[i];
        }
    });
}

Tensor reshape(const Tensor& t, Shape shape) {
    check_defined(t, "reshape");
    if (shape_numel(shape) != t.numel()) {
        throw DimensionError("reshape: cannot view " + shape_to_string(t.shape()) + " as " +
                             shape_to_string(shape));
    }
    return make_op_result(std::move(shape), t.data(), {t}, [](detail::Node& o) {
        if (!wants_grad(o, 0)) return;
        auto& g = parent_grad(o, 0);
        for (size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
    });
}

Tensor cross_entropy_with_logits(const Tensor& logits, int label) {
    check_defined(logits, "cross_entropy_with_logits");
    if (logits.rank() != 1) {
        throw DimensionError("cross_entropy_with_logits: expected rank-1 logits, got " +
                             shape_to_string(logits.shape()));
    }
    const int64_t c = logits.shape()[0];
    if (label < 0 || label >= c) {
        throw DomainError("cross_entropy_with_logits: label " + std::to_string(label) +
                          " out of range for " + std::to_string(c) + " classes");
    }
    const auto& z = logits.data();
    double mx = z[0];
    for (int64_t j = 1; j < c; ++j) mx = std::max(mx, z[j]);
    double sum = 0.0;
    for (int64_t j = 0; j < c; ++j) sum += std::exp(z[j] - mx);
    const double loss = mx + std::log(sum) - z[label];
    return make_op_result({}, {loss}, {logits}, [c, label, mx, sum](detail::Node& o) {
        if (!wants_grad(o, 0)) return;
        auto& g = parent_grad(o, 0);
        const auto& z = o.parents[0]->data;
        const double gv = o.grad[0];
        for (int64_t j = 0; j < c; ++j) {
            const double p = std::exp(z[j] - mx) / sum;
            g[j] += gv * (p - (j == label ? 1.0 : 0.0));
        }
    });
}

}  // namespace ops

}  // namespace promptstream
