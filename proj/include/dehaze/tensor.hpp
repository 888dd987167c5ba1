#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

// Minimal N-D f64 tensor with reverse-mode autodiff. Values are immutable
// once produced by an op; the graph is held through shared parent links and
// torn down when the last handle goes away. One control thread per graph.
namespace dehaze {

class Tensor;

namespace detail {

struct Node {
    std::vector<int> shape;
    std::vector<double> data;
    std::vector<double> grad;  // empty until backward reaches this node
    bool requires_grad = false;
    bool is_leaf = false;
    uint64_t id = 0;
    std::string name;
    std::vector<Tensor> parents;
    // consumes this->grad, accumulates into parents' grads
    std::function<void(Node&)> backward_fn;
};

}  // namespace detail

size_t numel(const std::vector<int>& shape);

class Tensor {
  public:
    Tensor() = default;

    static Tensor zeros(const std::vector<int>& shape, bool requires_grad = false);
    static Tensor full(const std::vector<int>& shape, double value,
                       bool requires_grad = false);
    static Tensor from(const std::vector<int>& shape, std::vector<double> data,
                       bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);

    bool defined() const { return static_cast<bool>(node_); }
    const std::vector<int>& shape() const { return node_->shape; }
    int dim(int i) const { return node_->shape[static_cast<size_t>(i)]; }
    int ndim() const { return static_cast<int>(node_->shape.size()); }
    size_t size() const { return node_->data.size(); }

    const double* data() const { return node_->data.data(); }
    // In-place access is reserved for leaves (initializers / the optimizer);
    // op outputs are immutable.
    double* data_mut();

    bool requires_grad() const { return node_->requires_grad; }
    void set_requires_grad(bool on);  // leaves only; used to freeze networks
    bool is_leaf() const { return node_->is_leaf; }
    bool has_grad() const { return !node_->grad.empty(); }
    const double* grad() const { return node_->grad.data(); }
    std::vector<double> grad_or_zeros() const;
    void zero_grad();

    double item() const;  // scalar tensors only

    uint64_t id() const { return node_->id; }
    const std::string& name() const { return node_->name; }
    void set_name(std::string n) { node_->name = std::move(n); }

    detail::Node* node() const { return node_.get(); }

  private:
    friend Tensor make_op(std::vector<int> shape, std::vector<double> data,
                          std::vector<Tensor> parents,
                          std::function<void(detail::Node&)> backward_fn,
                          const char* op_name);

    std::shared_ptr<detail::Node> node_;
};

// Populates grads of every reachable requires_grad tensor; loss must be scalar.
void backward(const Tensor& loss);

// While alive on a thread, ops record no graph (pure value computation).
struct NoGradGuard {
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

  private:
    bool prev_;
};
bool grad_enabled();

// Global toggle for the every-op finiteness scan (on by default).
void set_finite_checks(bool on);
bool finite_checks();

// ---- primitives ------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b);  // same shape, or b = [N,C,1,1]
Tensor add(const Tensor& a, double c);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor sub(double c, const Tensor& a);
Tensor mul(const Tensor& a, const Tensor& b);  // same shape, or b = [N,C,1,1]
Tensor mul(const Tensor& a, double c);
Tensor div(const Tensor& a, const Tensor& b);

Tensor abs(const Tensor& a);
Tensor log(const Tensor& a);
Tensor clamp_min(const Tensor& a, double lo);
Tensor relu(const Tensor& a);
Tensor leaky_relu(const Tensor& a, double slope = 0.2);
Tensor sigmoid(const Tensor& a);
Tensor softmax(const Tensor& a, int axis);

Tensor sum(const Tensor& a);   // -> [1]
Tensor mean(const Tensor& a);  // -> [1]

Tensor reshape(const Tensor& a, const std::vector<int>& shape);
Tensor concat(const std::vector<Tensor>& parts, int axis);
Tensor detach(const Tensor& a);

// x [N,C,H,W], k [F,C,kh,kw]; cross-correlation, zero padding.
Tensor conv2d(const Tensor& x, const Tensor& k, int stride, int pad);
Tensor conv2d(const Tensor& x, const Tensor& k, const Tensor& bias, int stride,
              int pad);

// Per-channel normalization over (N,H,W); running stats live outside the graph.
Tensor batchnorm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                 std::vector<double>& running_mean, std::vector<double>& running_var,
                 bool training, double momentum = 0.1, double eps = 1e-5);

Tensor maxpool(const Tensor& x, int size);  // stride = size, no padding
Tensor global_avg_pool(const Tensor& x);    // [N,C,H,W] -> [N,C,1,1]

Tensor pixel_shuffle(const Tensor& x, int r);
Tensor pixel_unshuffle(const Tensor& x, int r);

Tensor pad_reflect(const Tensor& x, int pad);  // [N,C,H,W], reflect, pad <= H-1,W-1

// Batched matmul on [N,a,b] tensors with optional per-item transposes.
Tensor matmul(const Tensor& a, const Tensor& b, bool trans_a = false,
              bool trans_b = false);

// Per-item (x - min) / (max - min) over all of C,H,W; all-zero when max == min.
Tensor minmax_normalize_items(const Tensor& x);

}  // namespace dehaze
