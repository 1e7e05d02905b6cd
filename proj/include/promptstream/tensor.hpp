#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace promptstream {

using Shape = std::vector<int>;

int64_t shape_numel(const Shape& shape);
std::string shape_to_string(const Shape& shape);

namespace detail {

struct Node {
    Shape shape;
    std::vector<double> data;
    std::vector<double> grad;  // allocated lazily, same length as data
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    // Reads this->grad, accumulates (+=) into parents' grads.
    std::function<void(Node&)> grad_fn;

    void ensure_grad();
};

}  // namespace detail

// Dense tensor of 64-bit reals, row-major, participating in a reverse-mode
// tape. A Tensor is a cheap handle; copies share the underlying node.
// Values are treated as immutable once the tensor feeds another op; the
// exceptions are grad buffers and optimizer updates to leaf parameters.
class Tensor {
  public:
    Tensor() = default;

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double value, bool requires_grad = false);
    static Tensor from_data(Shape shape, std::vector<double> values, bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const;
    int rank() const { return static_cast<int>(shape().size()); }
    int64_t numel() const;
    bool requires_grad() const;

    const std::vector<double>& data() const;
    std::vector<double>& mutable_data();  // leaves only; graphs built from old values stay valid
    const std::vector<double>& grad() const;
    bool has_grad() const;
    void zero_grad();

    double value() const;  // single-element tensors
    double at(std::initializer_list<int> idx) const;

    // Reverse topological sweep from a single-element root. Gradients
    // accumulate (+=) at fan-in, so repeated backward calls without
    // zero_grad sum their contributions.
    void backward() const;

    std::shared_ptr<detail::Node> node() const { return node_; }

  private:
    explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
    std::shared_ptr<detail::Node> node_;

    friend Tensor make_op_result(Shape shape, std::vector<double> values,
                                 std::vector<Tensor> inputs,
                                 std::function<void(detail::Node&)> grad_fn);
};

// Disables tape recording for the enclosing scope (evaluation passes).
struct NoGradGuard {
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

  private:
    bool previous_;
};

bool grad_enabled();

namespace ops {

Tensor matmul(const Tensor& a, const Tensor& b);
// Same-shape elementwise add; a rank-1 rhs matching the last axis of a
// rank-2 lhs broadcasts over rows (bias addition).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor elementwise_mul(const Tensor& a, const Tensor& b);
// Scales each row of an r x d matrix elementwise by a d-vector; the
// backward pass reduces over the broadcast (row) axis.
Tensor broadcast_mul_vector(const Tensor& vec, const Tensor& mat);
Tensor concat(const std::vector<Tensor>& parts, int axis);
Tensor sum(const Tensor& t, int axis);
Tensor mean(const Tensor& t, int axis);
Tensor sum_all(const Tensor& t);   // rank-0 result
Tensor mean_all(const Tensor& t);  // rank-0 result
Tensor softmax(const Tensor& t);      // last axis, max-shifted
Tensor layer_norm(const Tensor& t, double eps = 1e-12);  // last axis, no affine
Tensor gelu(const Tensor& t);  // exact erf form
Tensor scale(const Tensor& t, double c);
Tensor transpose(const Tensor& t);  // swaps the last two axes
Tensor slice(const Tensor& t, int axis, int begin, int end);
Tensor log(const Tensor& t);
Tensor exp(const Tensor& t);
Tensor abs(const Tensor& t);  // subgradient 0 at the kink
Tensor reshape(const Tensor& t, Shape shape);  // row-major relabel, same numel
// Stable log-sum-exp cross entropy over a rank-1 logit vector.
Tensor cross_entropy_with_logits(const Tensor& logits, int label);

}  // namespace ops

}  // namespace promptstream
