#include "dehaze/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "dehaze/kernels.hpp"

namespace dehaze {

using detail::Node;

namespace {

thread_local bool g_grad_enabled = true;
std::atomic<bool> g_finite_checks{true};
std::atomic<uint64_t> g_next_id{1};

const kernels::Ops& kn() { return kernels::ops(); }

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

void check(bool cond, const std::string& msg) {
    if (!cond) fail(msg);
}

std::string shape_str(const std::vector<int>& s) {
    std::ostringstream os;
    os << '[';
    for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << ']';
    return os.str();
}

double* ensure_grad(Node* n) {
    if (n->grad.empty()) n->grad.assign(n->data.size(), 0.0);
    return n->grad.data();
}

void release_grad(Node* n) { std::vector<double>().swap(n->grad); }

void add_const(double* y, double c, size_t n) {
    for (size_t i = 0; i < n; ++i) y[i] += c;
}

}  // namespace

size_t numel(const std::vector<int>& shape) {
    size_t n = 1;
    for (int d : shape) {
        check(d > 0, "tensor: extents must be positive, got " + shape_str(shape));
        n *= static_cast<size_t>(d);
    }
    return n;
}

// ---- Tensor basics ----------------------------------------------------------

Tensor make_op(std::vector<int> shape, std::vector<double> data,
               std::vector<Tensor> parents, std::function<void(Node&)> bwd,
               const char* op_name);

Tensor Tensor::zeros(const std::vector<int>& shape, bool requires_grad) {
    return from(shape, std::vector<double>(numel(shape), 0.0), requires_grad);
}

Tensor Tensor::full(const std::vector<int>& shape, double value, bool requires_grad) {
    return from(shape, std::vector<double>(numel(shape), value), requires_grad);
}

Tensor Tensor::from(const std::vector<int>& shape, std::vector<double> data,
                    bool requires_grad) {
    check(numel(shape) == data.size(),
          "tensor: data length does not match shape " + shape_str(shape));
    auto node = std::make_shared<Node>();
    node->shape = shape;
    node->data = std::move(data);
    node->requires_grad = requires_grad;
    node->is_leaf = requires_grad;
    node->id = g_next_id.fetch_add(1, std::memory_order_relaxed);
    Tensor t;
    t.node_ = std::move(node);
    return t;
}

Tensor Tensor::scalar(double value, bool requires_grad) {
    return from({1}, {value}, requires_grad);
}

double* Tensor::data_mut() {
    check(node_ && (node_->is_leaf || !node_->backward_fn),
          "tensor: in-place mutation is limited to leaves");
    return node_->data.data();
}

void Tensor::set_requires_grad(bool on) {
    check(node_ && node_->is_leaf, "tensor: requires_grad toggles leaves only");
    node_->requires_grad = on;
}

std::vector<double> Tensor::grad_or_zeros() const {
    if (node_->grad.empty()) return std::vector<double>(size(), 0.0);
    return node_->grad;
}

void Tensor::zero_grad() {
    if (node_) std::vector<double>().swap(node_->grad);
}

double Tensor::item() const {
    check(node_ && size() == 1, "tensor: item() requires a scalar");
    return node_->data[0];
}

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }
bool grad_enabled() { return g_grad_enabled; }

void set_finite_checks(bool on) { g_finite_checks.store(on); }
bool finite_checks() { return g_finite_checks.load(); }

Tensor make_op(std::vector<int> shape, std::vector<double> data,
               std::vector<Tensor> parents, std::function<void(Node&)> bwd,
               const char* op_name) {
    if (g_finite_checks.load(std::memory_order_relaxed) &&
        !kn().all_finite(data.data(), data.size()))
        throw std::runtime_error(std::string(op_name) +
                                 ": non-finite value in op output");
    auto node = std::make_shared<Node>();
    node->shape = std::move(shape);
    node->data = std::move(data);
    node->id = g_next_id.fetch_add(1, std::memory_order_relaxed);
    node->name = op_name;
    bool rg = false;
    if (g_grad_enabled)
        for (const auto& p : parents)
            if (p.requires_grad()) rg = true;
    if (rg && bwd) {
        node->requires_grad = true;
        node->parents = std::move(parents);
        node->backward_fn = std::move(bwd);
    }
    Tensor t;
    t.node_ = std::move(node);
    return t;
}

// ---- backward ---------------------------------------------------------------

void backward(const Tensor& loss) {
    check(loss.defined(), "backward: undefined loss");
    check(loss.size() == 1, "backward: loss must be a scalar, got " +
                                shape_str(loss.shape()));
    Node* root = loss.node();
    if (!root->requires_grad) return;

    // post-order DFS over requires_grad ancestry
    std::vector<Node*> order;
    std::unordered_map<Node*, int> state;  // 1 = open, 2 = closed
    std::vector<std::pair<Node*, size_t>> stack;
    stack.emplace_back(root, 0);
    state[root] = 1;
    while (!stack.empty()) {
        auto& [n, idx] = stack.back();
        if (idx < n->parents.size()) {
            Node* p = n->parents[idx++].node();
            if (p->requires_grad && state[p] == 0) {
                state[p] = 1;
                stack.emplace_back(p, 0);
            }
        } else {
            state[n] = 2;
            order.push_back(n);
            stack.pop_back();
        }
    }

    root->grad.assign(1, 1.0);
    const bool finite = g_finite_checks.load(std::memory_order_relaxed);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->grad.empty()) continue;  // no contribution reached this node
        if (finite && !kn().all_finite(n->grad.data(), n->grad.size()))
            throw std::runtime_error("backward: non-finite gradient at op '" +
                                     n->name + "'");
        if (n->backward_fn) {
            n->backward_fn(*n);
            if (!n->is_leaf) release_grad(n);
        }
    }
}

// ---- elementwise ------------------------------------------------------------

namespace {

enum class BinKind { same, channel };

BinKind bin_kind(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() == b.shape()) return BinKind::same;
    if (a.ndim() == 4 && b.ndim() == 4 && a.dim(0) == b.dim(0) &&
        a.dim(1) == b.dim(1) && b.dim(2) == 1 && b.dim(3) == 1)
        return BinKind::channel;
    fail(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
         shape_str(b.shape()));
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    const BinKind kind = bin_kind(a, b, "add");
    std::vector<double> out(a.size());
    if (kind == BinKind::same) {
        kn().add(a.data(), b.data(), out.data(), a.size());
    } else {
        const size_t hw = static_cast<size_t>(a.dim(2)) * a.dim(3);
        const size_t nc = static_cast<size_t>(a.dim(0)) * a.dim(1);
        for (size_t i = 0; i < nc; ++i)
            kn().affine(a.data() + i * hw, 1.0, b.data()[i], out.data() + i * hw, hw);
    }
    return make_op(a.shape(), std::move(out), {a, b},
                   [kind](Node& self) {
                       Node* pa = self.parents[0].node();
                       Node* pb = self.parents[1].node();
                       const double* dy = self.grad.data();
                       if (pa->requires_grad)
                           kn().axpy(1.0, dy, ensure_grad(pa), self.grad.size());
                       if (pb->requires_grad) {
                           double* db = ensure_grad(pb);
                           if (kind == BinKind::same) {
                               kn().axpy(1.0, dy, db, self.grad.size());
                           } else {
                               const size_t hw = self.grad.size() / pb->data.size();
                               for (size_t i = 0; i < pb->data.size(); ++i)
                                   db[i] += kn().sum(dy + i * hw, hw);
                           }
                       }
                   },
                   "add");
}

Tensor add(const Tensor& a, double c) {
    std::vector<double> out(a.size());
    kn().affine(a.data(), 1.0, c, out.data(), a.size());
    return make_op(a.shape(), std::move(out), {a},
                   [](Node& self) {
                       Node* pa = self.parents[0].node();
                       if (pa->requires_grad)
                           kn().axpy(1.0, self.grad.data(), ensure_grad(pa),
                                     self.grad.size());
                   },
                   "add_scalar");
}

Tensor sub(const Tensor& a, const Tensor& b) {
    check(a.shape() == b.shape(), "sub: shape mismatch " + shape_str(a.shape()) +
                                      " vs " + shape_str(b.shape()));
    std::vector<double> out(a.size());
    kn().sub(a.data(), b.data(), out.data(), a.size());
    return make_op(a.shape(), std::move(out), {a, b},
                   [](Node& self) {
                       Node* pa = self.parents[0].node();
                       Node* pb = self.parents[1].node();
                       if (pa->requires_grad)
                           kn().axpy(1.0, self.grad.data(), ensure_grad(pa),
                                     self.grad.size());
                       if (pb->requires_grad)
                           kn().axpy(-1.0, self.grad.data(), ensure_grad(pb),
                                     self.grad.size());
                   },
                   "sub");
}

Tensor sub(double c, const Tensor& a) {
    std::vector<double> out(a.size());
    kn().affine(a.data(), -1.0, c, out.data(), a.size());
    return make_op(a.shape(), std::move(out), {a},
                   [](Node& self) {
                       Node* pa = self.parents[0].node();
                       if (pa->requires_grad)
                           kn().axpy(-1.0, self.grad.data(), ensure_grad(pa),
                                     self.grad.size());
                   },
                   "rsub_scalar");
}

Tensor mul(const Tensor& a, const Tensor& b) {
    const BinKind kind = bin_kind(a, b, "mul");
    std::vector<double> out(a.size());
    if (kind == BinKind::same) {
        kn().mul(a.data(), b.data(), out.data(), a.size());
    } else {
        const size_t hw = static_cast<size_t>(a.dim(2)) * a.dim(3);
        const size_t nc = static_cast<size_t>(a.dim(0)) * a.dim(1);
        for (size_t i = 0; i < nc; ++i)
            kn().affine(a.data() + i * hw, b.data()[i], 0.0, out.data() + i * hw, hw);
    }
    return make_op(a.shape(), std::move(out), {a, b},
                   [kind](Node& self) {
                       Node* pa = self.parents[0].node();
                       Node* pb = self.parents[1].node();
                       const double* dy = self.grad.data();
                       const size_t n = self.grad.size();
                       if (kind == BinKind::same) {
                           if (pa->requires_grad)
                               kn().madd_acc(dy, pb->data.data(), ensure_grad(pa), n);
                           if (pb->requires_grad)
                               kn().madd_acc(dy, pa->data.data(), ensure_grad(pb), n);
                       } else {
                           const size_t hw = n / pb->data.size();
                           if (pa->requires_grad) {
                               double* da = ensure_grad(pa);
                               for (size_t i = 0; i < pb->data.size(); ++i)
                                   kn().axpy(pb->data[i], dy + i * hw, da + i * hw, hw);
                           }
                           if (pb->requires_grad) {
                               double* db = ensure_grad(pb);
                               for (size_t i = 0; i < pb->data.size(); ++i)
                                   db[i] += kn().dot(dy + i * hw,
                                                     pa->data.data() + i * hw, hw);
                           }
                       }
                   },
                   "mul");
}

Tensor mul(const Tensor& a, double c) {
    std::vector<double> out(a.size());
    kn().affine(a.data(), c, 0.0, out.data(), a.size());
    return make_op(a.shape(), std::move(out), {a},
                   [c](Node& self) {
                       Node* pa = self.parents[0].node();
                       if (pa->requires_grad)
                           kn().axpy(c, self.grad.data(), ensure_grad(pa),
                                     self.grad.size());
                   },
                   "mul_scalar");
}

Tensor div(const Tensor& a, const Tensor& b) {
    check(a.shape() == b.shape(), "div: shape mismatch " + shape_str(a.shape()) +
                                      " vs " + shape_str(b.shape()));
    std::vector<double> out(a.size());
    kn().div(a.data(), b.data(), out.data(), a.size());
    return make_op(a.shape(), std::move(out), {a, b},
                   [](Node& self) {
                       Node* pa = self.parents[0].node();
                       Node* pb = self.parents[1].node();
                       const size_t n = self.grad.size();
                       std::vector<double> tmp(n);
                       kn().div(self.grad.data(), pb->data.data(), tmp.data(), n);
                       if (pa->requires_grad)
                           kn().axpy(1.0, tmp.data(), ensure_grad(pa), n);
                       if (pb->requires_grad) {
                           // db -= (dy/b) * y
                           kn().mul(tmp.data(), self.data.data(), tmp.data(), n);
                           kn().axpy(-1.0, tmp.data(), ensure_grad(pb), n);
                       }
                   },
                   "div");
}

Tensor abs(const Tensor& a) {
    std::vector<double> out(a.size());
    for (size_t i = 0; i < a.size(); ++i) out[i] = std::fabs(a.data()[i]);
    return make_op(a.shape(), std::move(out), {a},
                   [](Node& self) {
                       Node* pa = self.parents[0].node();
                       if (!pa->requires_grad) return;
                       double* da = ensure_grad(pa);
                       const double* x = pa->data.data();
                       const double* dy = self.grad.data();
                       for (size_t i = 0; i < self.grad.size(); ++i)
                           da[i] += x[i] > 0.0 ? dy[i] : (x[i] < 0.0 ? -dy[i] : 0.0);
                   },
                   "abs");
}

Tensor log(const Tensor& a) {
    std::vector<double> out(a.size());
    for (size_t i = 0; i < a.size(); ++i) out[i] = std::log(a.data()[i]);
    return make_op(a.shape(), std::move(out), {a},
                   [](Node& self) {
                       Node* pa = self.parents[0].node();
                       if (!pa->requires_grad) return;
                       const size_t n = self.grad.size();
                       std::vector<double> tmp(n);
                       kn().div(self.grad.data(), pa->data.data(), tmp.data(), n);
                       kn().axpy(1.0, tmp.data(), ensure_grad(pa), n);
                   },
                   "log");
}

Tensor clamp_min(const Tensor& a, double lo) {
    std::vector<double> out(a.size());
    kn().clamp_min(a.data(), lo, out.data(), a.size());
    return make_op(a.shape(), std::move(out), {a},
                   [lo](Node& self) {
                       Node* pa = self.parents[0].node();
                       if (!pa->requires_grad) return;
                       double* da = ensure_grad(pa);
                       const double* x = pa->data.data();
                       const double* dy = self.grad.data();
                       for (size_t i = 0; i < self.grad.size(); ++i)
                           if (x[i] >= lo) da[i] += dy[i];
                   },
                   "clamp_min");
}

Tensor relu(const Tensor& a) {
    std::vector<double> out(a.size());
    kn().relu(a.data(), out.data(), a.size());
    return make_op(a.shape(), std::move(out), {a},
                   [](Node& self) {
                       Node* pa = self.parents[0].node();
                       if (pa->requires_grad)
                           kn().relu_bwd_acc(pa->data.data(), self.grad.data(),
                                             ensure_grad(pa), self.grad.size());
                   },
                   "relu");
}

Tensor leaky_relu(const Tensor& a, double slope) {
    std::vector<double> out(a.size());
    kn().lrelu(a.data(), slope, out.data(), a.size());
    return make_op(a.shape(), std::move(out), {a},
                   [slope](Node& self) {
                       Node* pa = self.parents[0].node();
                       if (pa->requires_grad)
                           kn().lrelu_bwd_acc(pa->data.data(), slope,
                                              self.grad.data(), ensure_grad(pa),
                                              self.grad.size());
                   },
                   "leaky_relu");
}

Tensor sigmoid(const Tensor& a) {
    const size_t n = a.size();
    std::vector<double> out(n), tmp(n);
    const double* x = a.data();
    for (size_t i = 0; i < n; ++i) tmp[i] = -std::fabs(x[i]);
    kn().vexp(tmp.data(), tmp.data(), n);
    for (size_t i = 0; i < n; ++i) {
        const double t = tmp[i];
        out[i] = x[i] >= 0.0 ? 1.0 / (1.0 + t) : t / (1.0 + t);
    }
    return make_op(a.shape(), std::move(out), {a},
                   [](Node& self) {
                       Node* pa = self.parents[0].node();
                       if (!pa->requires_grad) return;
                       double* da = ensure_grad(pa);
                       const double* y = self.data.data();
                       const double* dy = self.grad.data();
                       for (size_t i = 0; i < self.grad.size(); ++i)
                           da[i] += dy[i] * y[i] * (1.0 - y[i]);
                   },
                   "sigmoid");
}

// ---- softmax ----------------------------------------------------------------

namespace {

struct AxisSplit {
    size_t outer, len, inner;
};

AxisSplit axis_split(const std::vector<int>& shape, int axis, const char* op) {
    check(axis >= 0 && axis < static_cast<int>(shape.size()),
          std::string(op) + ": axis out of range for " + shape_str(shape));
    AxisSplit s{1, static_cast<size_t>(shape[axis]), 1};
    for (int i = 0; i < axis; ++i) s.outer *= static_cast<size_t>(shape[i]);
    for (size_t i = axis + 1; i < shape.size(); ++i)
        s.inner *= static_cast<size_t>(shape[i]);
    return s;
}

}  // namespace

Tensor softmax(const Tensor& a, int axis) {
    const AxisSplit sp = axis_split(a.shape(), axis, "softmax");
    std::vector<double> out(a.size());
    const double* x = a.data();
    if (sp.inner == 1) {
        for (size_t o = 0; o < sp.outer; ++o) {
            const double* row = x + o * sp.len;
            double* yrow = out.data() + o * sp.len;
            const double m = kn().vmax(row, sp.len);
            kn().affine(row, 1.0, -m, yrow, sp.len);
            kn().vexp(yrow, yrow, sp.len);
            const double s = kn().sum(yrow, sp.len);
            kn().affine(yrow, 1.0 / s, 0.0, yrow, sp.len);
        }
    } else {
        std::vector<double> lane(sp.len);
        for (size_t o = 0; o < sp.outer; ++o)
            for (size_t i = 0; i < sp.inner; ++i) {
                const size_t base = o * sp.len * sp.inner + i;
                for (size_t l = 0; l < sp.len; ++l)
                    lane[l] = x[base + l * sp.inner];
                const double m = kn().vmax(lane.data(), sp.len);
                kn().affine(lane.data(), 1.0, -m, lane.data(), sp.len);
                kn().vexp(lane.data(), lane.data(), sp.len);
                const double s = kn().sum(lane.data(), sp.len);
                for (size_t l = 0; l < sp.len; ++l)
                    out[base + l * sp.inner] = lane[l] / s;
            }
    }
    return make_op(a.shape(), std::move(out), {a},
                   [sp](Node& self) {
                       Node* pa = self.parents[0].node();
                       if (!pa->requires_grad) return;
                       double* da = ensure_grad(pa);
                       const double* y = self.data.data();
                       const double* dy = self.grad.data();
                       if (sp.inner == 1) {
                           std::vector<double> tmp(sp.len);
                           for (size_t o = 0; o < sp.outer; ++o) {
                               const double* yr = y + o * sp.len;
                               const double* dr = dy + o * sp.len;
                               const double dot = kn().dot(yr, dr, sp.len);
                               kn().affine(dr, 1.0, -dot, tmp.data(), sp.len);
                               kn().madd_acc(yr, tmp.data(), da + o * sp.len, sp.len);
                           }
                       } else {
                           for (size_t o = 0; o < sp.outer; ++o)
                               for (size_t i = 0; i < sp.inner; ++i) {
                                   const size_t base = o * sp.len * sp.inner + i;
                                   double dot = 0.0;
                                   for (size_t l = 0; l < sp.len; ++l) {
                                       const size_t k = base + l * sp.inner;
                                       dot += y[k] * dy[k];
                                   }
                                   for (size_t l = 0; l < sp.len; ++l) {
                                       const size_t k = base + l * sp.inner;
                                       da[k] += y[k] * (dy[k] - dot);
                                   }
                               }
                       }
                   },
                   "softmax");
}

// ---- reductions -------------------------------------------------------------

Tensor sum(const Tensor& a) {
    std::vector<double> out{kn().sum(a.data(), a.size())};
    return make_op({1}, std::move(out), {a},
                   [](Node& self) {
                       Node* pa = self.parents[0].node();
                       if (pa->requires_grad)
                           add_const(ensure_grad(pa), self.grad[0], pa->data.size());
                   },
                   "sum");
}

Tensor mean(const Tensor& a) {
    // divide (not multiply by the reciprocal) so the mean of n identical
    // values reproduces that value exactly
    const double n = static_cast<double>(a.size());
    std::vector<double> out{kn().sum(a.data(), a.size()) / n};
    return make_op({1}, std::move(out), {a},
                   [n](Node& self) {
                       Node* pa = self.parents[0].node();
                       if (pa->requires_grad)
                           add_const(ensure_grad(pa), self.grad[0] / n,
                                     pa->data.size());
                   },
                   "mean");
}

// ---- shape ops --------------------------------------------------------------

Tensor reshape(const Tensor& a, const std::vector<int>& shape) {
    check(numel(shape) == a.size(), "reshape: cannot view " +
                                        shape_str(a.shape()) + " as " +
                                        shape_str(shape));
    std::vector<double> out(a.data(), a.data() + a.size());
    return make_op(shape, std::move(out), {a},
                   [](Node& self) {
                       Node* pa = self.parents[0].node();
                       if (pa->requires_grad)
                           kn().axpy(1.0, self.grad.data(), ensure_grad(pa),
                                     self.grad.size());
                   },
                   "reshape");
}

Tensor concat(const std::vector<Tensor>& parts, int axis) {
    check(!parts.empty(), "concat: no inputs");
    const auto& s0 = parts[0].shape();
    check(axis >= 0 && axis < static_cast<int>(s0.size()),
          "concat: axis out of range");
    std::vector<int> out_shape = s0;
    int axis_total = 0;
    for (const auto& p : parts) {
        check(p.ndim() == static_cast<int>(s0.size()), "concat: rank mismatch");
        for (int d = 0; d < p.ndim(); ++d)
            if (d != axis)
                check(p.dim(d) == s0[static_cast<size_t>(d)],
                      "concat: shape mismatch at non-concat axis " +
                          std::to_string(d));
        axis_total += p.dim(axis);
    }
    out_shape[static_cast<size_t>(axis)] = axis_total;

    size_t outer = 1, inner = 1;
    for (int i = 0; i < axis; ++i) outer *= static_cast<size_t>(s0[i]);
    for (size_t i = axis + 1; i < s0.size(); ++i) inner *= static_cast<size_t>(s0[i]);

    std::vector<double> out(numel(out_shape));
    const size_t out_row = static_cast<size_t>(axis_total) * inner;
    size_t offset = 0;
    for (const auto& p : parts) {
        const size_t blk = static_cast<size_t>(p.dim(axis)) * inner;
        for (size_t o = 0; o < outer; ++o)
            std::copy_n(p.data() + o * blk, blk, out.data() + o * out_row + offset);
        offset += blk;
    }
    return make_op(std::move(out_shape), std::move(out), parts,
                   [axis, outer, inner, out_row](Node& self) {
                       size_t offset = 0;
                       for (auto& parent : self.parents) {
                           Node* pn = parent.node();
                           const size_t blk =
                               static_cast<size_t>(
                                   pn->shape[static_cast<size_t>(axis)]) *
                               inner;
                           if (pn->requires_grad) {
                               double* dp = ensure_grad(pn);
                               for (size_t o = 0; o < outer; ++o)
                                   kn().axpy(1.0,
                                             self.grad.data() + o * out_row + offset,
                                             dp + o * blk, blk);
                           }
                           offset += blk;
                       }
                   },
                   "concat");
}

Tensor detach(const Tensor& a) {
    return Tensor::from(a.shape(),
                        std::vector<double>(a.data(), a.data() + a.size()), false);
}

// ---- conv2d -----------------------------------------------------------------

namespace {

struct ConvDims {
    int n, c, h, w, f, kh, kw, oh, ow;
};

ConvDims conv_dims(const Tensor& x, const Tensor& k, int stride, int pad) {
    check(x.ndim() == 4, "conv2d: input must be [N,C,H,W], got " +
                             shape_str(x.shape()));
    check(k.ndim() == 4, "conv2d: kernel must be [F,C,kh,kw], got " +
                             shape_str(k.shape()));
    check(stride >= 1, "conv2d: stride must be >= 1");
    check(pad >= 0, "conv2d: pad must be >= 0");
    ConvDims d{x.dim(0), x.dim(1), x.dim(2), x.dim(3),
               k.dim(0), 0,       0,        0,
               0};
    check(k.dim(1) == d.c, "conv2d: channel mismatch, input has " +
                               std::to_string(d.c) + ", kernel expects " +
                               std::to_string(k.dim(1)));
    d.kh = k.dim(2);
    d.kw = k.dim(3);
    check(d.kh <= d.h + 2 * pad && d.kw <= d.w + 2 * pad,
          "conv2d: kernel larger than padded input");
    d.oh = (d.h + 2 * pad - d.kh) / stride + 1;
    d.ow = (d.w + 2 * pad - d.kw) / stride + 1;
    return d;
}

// col is [C*kh*kw, oh*ow] row-major
void im2col(const double* x, const ConvDims& d, int stride, int pad, double* col) {
    const size_t ohw = static_cast<size_t>(d.oh) * d.ow;
    for (int c = 0; c < d.c; ++c) {
        const double* plane = x + static_cast<size_t>(c) * d.h * d.w;
        for (int ki = 0; ki < d.kh; ++ki)
            for (int kj = 0; kj < d.kw; ++kj) {
                double* crow = col + (static_cast<size_t>(c) * d.kh * d.kw +
                                      static_cast<size_t>(ki) * d.kw + kj) *
                                         ohw;
                for (int oh = 0; oh < d.oh; ++oh) {
                    const int ih = oh * stride - pad + ki;
                    double* dst = crow + static_cast<size_t>(oh) * d.ow;
                    if (ih < 0 || ih >= d.h) {
                        kn().fill(dst, 0.0, static_cast<size_t>(d.ow));
                        continue;
                    }
                    const double* srow = plane + static_cast<size_t>(ih) * d.w;
                    for (int ow = 0; ow < d.ow; ++ow) {
                        const int iw = ow * stride - pad + kj;
                        dst[ow] = (iw < 0 || iw >= d.w) ? 0.0 : srow[iw];
                    }
                }
            }
    }
}

void col2im_acc(const double* col, const ConvDims& d, int stride, int pad,
                double* dx) {
    const size_t ohw = static_cast<size_t>(d.oh) * d.ow;
    for (int c = 0; c < d.c; ++c) {
        double* plane = dx + static_cast<size_t>(c) * d.h * d.w;
        for (int ki = 0; ki < d.kh; ++ki)
            for (int kj = 0; kj < d.kw; ++kj) {
                const double* crow = col + (static_cast<size_t>(c) * d.kh * d.kw +
                                            static_cast<size_t>(ki) * d.kw + kj) *
                                               ohw;
                for (int oh = 0; oh < d.oh; ++oh) {
                    const int ih = oh * stride - pad + ki;
                    if (ih < 0 || ih >= d.h) continue;
                    double* drow = plane + static_cast<size_t>(ih) * d.w;
                    const double* srow = crow + static_cast<size_t>(oh) * d.ow;
                    for (int ow = 0; ow < d.ow; ++ow) {
                        const int iw = ow * stride - pad + kj;
                        if (iw >= 0 && iw < d.w) drow[iw] += srow[ow];
                    }
                }
            }
    }
}

Tensor conv2d_impl(const Tensor& x, const Tensor& k, const Tensor* bias,
                   int stride, int pad) {
    const ConvDims d = conv_dims(x, k, stride, pad);
    if (bias) {
        check(bias->ndim() == 1 && bias->dim(0) == d.f,
              "conv2d: bias must be [F]");
    }
    const size_t ohw = static_cast<size_t>(d.oh) * d.ow;
    const size_t ckk = static_cast<size_t>(d.c) * d.kh * d.kw;
    const size_t in_item = static_cast<size_t>(d.c) * d.h * d.w;
    const size_t out_item = static_cast<size_t>(d.f) * ohw;

    std::vector<double> out(static_cast<size_t>(d.n) * out_item);
    std::vector<double> col(ckk * ohw);
    for (int n = 0; n < d.n; ++n) {
        im2col(x.data() + n * in_item, d, stride, pad, col.data());
        kn().gemm_nn(d.f, static_cast<int>(ohw), static_cast<int>(ckk), k.data(),
                     static_cast<int>(ckk), col.data(), static_cast<int>(ohw),
                     out.data() + n * out_item, static_cast<int>(ohw), false);
        if (bias)
            for (int f = 0; f < d.f; ++f)
                add_const(out.data() + n * out_item + f * ohw, bias->data()[f], ohw);
    }

    std::vector<Tensor> parents{x, k};
    if (bias) parents.push_back(*bias);
    return make_op(
        {d.n, d.f, d.oh, d.ow}, std::move(out), std::move(parents),
        [d, stride, pad, ohw, ckk, in_item, out_item](Node& self) {
            Node* px = self.parents[0].node();
            Node* pk = self.parents[1].node();
            Node* pb = self.parents.size() > 2 ? self.parents[2].node() : nullptr;
            const double* dy = self.grad.data();
            std::vector<double> col(ckk * ohw);
            double* dxg = px->requires_grad ? ensure_grad(px) : nullptr;
            double* dkg = pk->requires_grad ? ensure_grad(pk) : nullptr;
            for (int n = 0; n < d.n; ++n) {
                const double* dy_n = dy + n * out_item;
                if (dxg) {
                    kn().gemm_tn(static_cast<int>(ckk), static_cast<int>(ohw), d.f,
                                 pk->data.data(), static_cast<int>(ckk), dy_n,
                                 static_cast<int>(ohw), col.data(),
                                 static_cast<int>(ohw), false);
                    col2im_acc(col.data(), d, stride, pad, dxg + n * in_item);
                }
                if (dkg) {
                    im2col(px->data.data() + n * in_item, d, stride, pad, col.data());
                    kn().gemm_nt(d.f, static_cast<int>(ckk), static_cast<int>(ohw),
                                 dy_n, static_cast<int>(ohw), col.data(),
                                 static_cast<int>(ohw), dkg, static_cast<int>(ckk),
                                 true);
                }
                if (pb && pb->requires_grad) {
                    double* dbg = ensure_grad(pb);
                    for (int f = 0; f < d.f; ++f)
                        dbg[f] += kn().sum(dy_n + f * ohw, ohw);
                }
            }
        },
        "conv2d");
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& k, int stride, int pad) {
    return conv2d_impl(x, k, nullptr, stride, pad);
}

Tensor conv2d(const Tensor& x, const Tensor& k, const Tensor& bias, int stride,
              int pad) {
    return conv2d_impl(x, k, &bias, stride, pad);
}

// ---- batchnorm --------------------------------------------------------------

Tensor batchnorm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                 std::vector<double>& running_mean, std::vector<double>& running_var,
                 bool training, double momentum, double eps) {
    check(x.ndim() == 4, "batchnorm: input must be [N,C,H,W]");
    const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    check(gamma.ndim() == 1 && gamma.dim(0) == c, "batchnorm: gamma must be [C]");
    check(beta.ndim() == 1 && beta.dim(0) == c, "batchnorm: beta must be [C]");
    check(running_mean.size() == static_cast<size_t>(c) &&
              running_var.size() == static_cast<size_t>(c),
          "batchnorm: running stats must have length C");
    const size_t hw = static_cast<size_t>(h) * w;
    const size_t m = static_cast<size_t>(n) * hw;
    if (training)
        check(m >= 2, "batchnorm: train mode needs at least 2 values per channel");

    std::vector<double> mean_c(c), invstd_c(c);
    if (training) {
        for (int ci = 0; ci < c; ++ci) {
            double s = 0.0, sq = 0.0;
            for (int ni = 0; ni < n; ++ni) {
                const double* blk = x.data() + (static_cast<size_t>(ni) * c + ci) * hw;
                s += kn().sum(blk, hw);
                sq += kn().dot(blk, blk, hw);
            }
            const double mu = s / static_cast<double>(m);
            double var = sq / static_cast<double>(m) - mu * mu;
            if (var < 0.0) var = 0.0;
            mean_c[ci] = mu;
            invstd_c[ci] = 1.0 / std::sqrt(var + eps);
            running_mean[ci] = (1.0 - momentum) * running_mean[ci] + momentum * mu;
            const double unbiased = var * static_cast<double>(m) /
                                    static_cast<double>(m - 1);
            running_var[ci] = (1.0 - momentum) * running_var[ci] + momentum * unbiased;
        }
    } else {
        for (int ci = 0; ci < c; ++ci) {
            mean_c[ci] = running_mean[ci];
            invstd_c[ci] = 1.0 / std::sqrt(running_var[ci] + eps);
        }
    }

    std::vector<double> out(x.size());
    for (int ni = 0; ni < n; ++ni)
        for (int ci = 0; ci < c; ++ci) {
            const size_t off = (static_cast<size_t>(ni) * c + ci) * hw;
            const double a = gamma.data()[ci] * invstd_c[ci];
            const double b = beta.data()[ci] - mean_c[ci] * a;
            kn().affine(x.data() + off, a, b, out.data() + off, hw);
        }

    return make_op(
        x.shape(), std::move(out), {x, gamma, beta},
        [n, c, hw, m, training, mean_c, invstd_c](Node& self) {
            Node* px = self.parents[0].node();
            Node* pg = self.parents[1].node();
            Node* pb = self.parents[2].node();
            const double* dy = self.grad.data();
            const double* xv = px->data.data();
            const double* gv = pg->data.data();

            std::vector<double> xhat(hw);
            for (int ci = 0; ci < c; ++ci) {
                const double mu = mean_c[ci], is = invstd_c[ci];
                double dbeta = 0.0, dgamma = 0.0;
                for (int ni = 0; ni < n; ++ni) {
                    const size_t off = (static_cast<size_t>(ni) * c + ci) * hw;
                    dbeta += kn().sum(dy + off, hw);
                    kn().affine(xv + off, is, -mu * is, xhat.data(), hw);
                    dgamma += kn().dot(dy + off, xhat.data(), hw);
                }
                if (pg->requires_grad) ensure_grad(pg)[ci] += dgamma;
                if (pb->requires_grad) ensure_grad(pb)[ci] += dbeta;
                if (!px->requires_grad) continue;
                double* dx = ensure_grad(px);
                const double gis = gv[ci] * is;
                if (training) {
                    const double mdb = dbeta / static_cast<double>(m);
                    const double mdg = dgamma / static_cast<double>(m);
                    for (int ni = 0; ni < n; ++ni) {
                        const size_t off = (static_cast<size_t>(ni) * c + ci) * hw;
                        kn().affine(xv + off, is, -mu * is, xhat.data(), hw);
                        double* dxb = dx + off;
                        const double* dyb = dy + off;
                        for (size_t i = 0; i < hw; ++i)
                            dxb[i] += gis * (dyb[i] - mdb - xhat[i] * mdg);
                    }
                } else {
                    for (int ni = 0; ni < n; ++ni) {
                        const size_t off = (static_cast<size_t>(ni) * c + ci) * hw;
                        kn().axpy(gis, dy + off, dx + off, hw);
                    }
                }
            }
        },
        "batchnorm");
}

// ---- pooling ----------------------------------------------------------------

Tensor maxpool(const Tensor& x, int size) {
    check(x.ndim() == 4, "maxpool: input must be [N,C,H,W]");
    check(size >= 1, "maxpool: size must be >= 1");
    const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    check(h % size == 0 && w % size == 0,
          "maxpool: spatial extents " + std::to_string(h) + "x" +
              std::to_string(w) + " not divisible by pool size " +
              std::to_string(size));
    const int oh = h / size, ow = w / size;
    std::vector<double> out(static_cast<size_t>(n) * c * oh * ow);
    std::vector<size_t> argmax(out.size());
    const double* xv = x.data();
    size_t oi = 0;
    for (int ni = 0; ni < n; ++ni)
        for (int ci = 0; ci < c; ++ci) {
            const size_t plane = (static_cast<size_t>(ni) * c + ci) *
                                 static_cast<size_t>(h) * w;
            for (int po = 0; po < oh; ++po)
                for (int qo = 0; qo < ow; ++qo, ++oi) {
                    size_t best_idx = plane + static_cast<size_t>(po) * size * w +
                                      static_cast<size_t>(qo) * size;
                    double best = xv[best_idx];
                    for (int i = 0; i < size; ++i)
                        for (int j = 0; j < size; ++j) {
                            const size_t idx =
                                plane +
                                (static_cast<size_t>(po) * size + i) * w +
                                (static_cast<size_t>(qo) * size + j);
                            // strict > keeps the first maximum in scan order
                            if (xv[idx] > best) {
                                best = xv[idx];
                                best_idx = idx;
                            }
                        }
                    out[oi] = best;
                    argmax[oi] = best_idx;
                }
        }
    return make_op({n, c, oh, ow}, std::move(out), {x},
                   [argmax = std::move(argmax)](Node& self) {
                       Node* px = self.parents[0].node();
                       if (!px->requires_grad) return;
                       double* dx = ensure_grad(px);
                       const double* dy = self.grad.data();
                       for (size_t i = 0; i < self.grad.size(); ++i)
                           dx[argmax[i]] += dy[i];
                   },
                   "maxpool");
}

Tensor global_avg_pool(const Tensor& x) {
    check(x.ndim() == 4, "global_avg_pool: input must be [N,C,H,W]");
    const int n = x.dim(0), c = x.dim(1);
    const size_t hw = static_cast<size_t>(x.dim(2)) * x.dim(3);
    const double inv = 1.0 / static_cast<double>(hw);
    std::vector<double> out(static_cast<size_t>(n) * c);
    for (size_t i = 0; i < out.size(); ++i)
        out[i] = kn().sum(x.data() + i * hw, hw) * inv;
    return make_op({n, c, 1, 1}, std::move(out), {x},
                   [hw, inv](Node& self) {
                       Node* px = self.parents[0].node();
                       if (!px->requires_grad) return;
                       double* dx = ensure_grad(px);
                       for (size_t i = 0; i < self.grad.size(); ++i)
                           add_const(dx + i * hw, self.grad[i] * inv, hw);
                   },
                   "global_avg_pool");
}

// ---- pixel shuffle ----------------------------------------------------------

namespace {

// out[n, c, h*r+i, w*r+j] = in[n, c*r*r + i*r + j, h, w]
void shuffle_map(const double* in, double* out, int n, int oc, int h, int w,
                 int r, bool inverse, bool accumulate) {
    const size_t in_hw = static_cast<size_t>(h) * w;
    for (int ni = 0; ni < n; ++ni)
        for (int c = 0; c < oc; ++c)
            for (int i = 0; i < r; ++i)
                for (int j = 0; j < r; ++j) {
                    const size_t src_plane =
                        (static_cast<size_t>(ni) * oc * r * r +
                         static_cast<size_t>(c) * r * r + static_cast<size_t>(i) * r +
                         j) *
                        in_hw;
                    const size_t dst_plane =
                        (static_cast<size_t>(ni) * oc + c) * in_hw *
                        static_cast<size_t>(r) * r;
                    for (int y = 0; y < h; ++y)
                        for (int x = 0; x < w; ++x) {
                            const size_t s = src_plane + static_cast<size_t>(y) * w + x;
                            const size_t d = dst_plane +
                                             (static_cast<size_t>(y) * r + i) *
                                                 (static_cast<size_t>(w) * r) +
                                             static_cast<size_t>(x) * r + j;
                            const size_t from = inverse ? d : s;
                            const size_t to = inverse ? s : d;
                            if (accumulate)
                                out[to] += in[from];
                            else
                                out[to] = in[from];
                        }
                }
}

}  // namespace

Tensor pixel_shuffle(const Tensor& x, int r) {
    check(x.ndim() == 4, "pixel_shuffle: input must be [N,C,H,W]");
    check(r >= 1, "pixel_shuffle: r must be >= 1");
    const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    check(c % (r * r) == 0, "pixel_shuffle: channels " + std::to_string(c) +
                                " not divisible by r^2 = " + std::to_string(r * r));
    const int oc = c / (r * r);
    std::vector<double> out(x.size());
    shuffle_map(x.data(), out.data(), n, oc, h, w, r, false, false);
    return make_op({n, oc, h * r, w * r}, std::move(out), {x},
                   [n, oc, h, w, r](Node& self) {
                       Node* px = self.parents[0].node();
                       if (!px->requires_grad) return;
                       shuffle_map(self.grad.data(), ensure_grad(px), n, oc, h, w, r,
                                   true, true);
                   },
                   "pixel_shuffle");
}

Tensor pixel_unshuffle(const Tensor& x, int r) {
    check(x.ndim() == 4, "pixel_unshuffle: input must be [N,C,H,W]");
    check(r >= 1, "pixel_unshuffle: r must be >= 1");
    const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    check(h % r == 0 && w % r == 0,
          "pixel_unshuffle: spatial extents not divisible by r");
    const int sh = h / r, sw = w / r;
    std::vector<double> out(x.size());
    shuffle_map(x.data(), out.data(), n, c, sh, sw, r, true, false);
    return make_op({n, c * r * r, sh, sw}, std::move(out), {x},
                   [n, c, sh, sw, r](Node& self) {
                       Node* px = self.parents[0].node();
                       if (!px->requires_grad) return;
                       shuffle_map(self.grad.data(), ensure_grad(px), n, c, sh, sw, r,
                                   false, true);
                   },
                   "pixel_unshuffle");
}

// ---- reflect padding ----------------------------------------------------------

namespace {

inline int reflect(int i, int n) {
    if (i < 0) return -i;
    if (i >= n) return 2 * n - 2 - i;
    return i;
}

}  // namespace

Tensor pad_reflect(const Tensor& x, int pad) {
    check(x.ndim() == 4, "pad_reflect: input must be [N,C,H,W]");
    check(pad >= 0, "pad_reflect: pad must be >= 0");
    const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    check(pad <= h - 1 && pad <= w - 1,
          "pad_reflect: pad " + std::to_string(pad) +
              " too large for spatial extents " + std::to_string(h) + "x" +
              std::to_string(w));
    const int oh = h + 2 * pad, ow = w + 2 * pad;
    std::vector<double> out(static_cast<size_t>(n) * c * oh * ow);
    const size_t planes = static_cast<size_t>(n) * c;
    for (size_t p = 0; p < planes; ++p) {
        const double* src = x.data() + p * static_cast<size_t>(h) * w;
        double* dst = out.data() + p * static_cast<size_t>(oh) * ow;
        for (int y = 0; y < oh; ++y) {
            const int sy = reflect(y - pad, h);
            for (int xo = 0; xo < ow; ++xo)
                dst[static_cast<size_t>(y) * ow + xo] =
                    src[static_cast<size_t>(sy) * w + reflect(xo - pad, w)];
        }
    }
    return make_op({n, c, oh, ow}, std::move(out), {x},
                   [h, w, oh, ow, pad, planes](Node& self) {
                       Node* px = self.parents[0].node();
                       if (!px->requires_grad) return;
                       double* dx = ensure_grad(px);
                       const double* dy = self.grad.data();
                       for (size_t p = 0; p < planes; ++p) {
                           const double* dyp =
                               dy + p * static_cast<size_t>(oh) * ow;
                           double* dxp = dx + p * static_cast<size_t>(h) * w;
                           for (int y = 0; y < oh; ++y) {
                               const int sy = reflect(y - pad, h);
                               for (int xo = 0; xo < ow; ++xo)
                                   dxp[static_cast<size_t>(sy) * w +
                                       reflect(xo - pad, w)] +=
                                       dyp[static_cast<size_t>(y) * ow + xo];
                           }
                       }
                   },
                   "pad_reflect");
}

// ---- batched matmul -----------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b, bool trans_a, bool trans_b) {
    check(a.ndim() == 3 && b.ndim() == 3,
          "matmul: inputs must be [N,rows,cols], got " + shape_str(a.shape()) +
              " and " + shape_str(b.shape()));
    check(!(trans_a && trans_b), "matmul: double transpose not supported");
    check(a.dim(0) == b.dim(0), "matmul: batch size mismatch");
    const int n = a.dim(0);
    const int m = trans_a ? a.dim(2) : a.dim(1);
    const int k = trans_a ? a.dim(1) : a.dim(2);
    const int kb = trans_b ? b.dim(2) : b.dim(1);
    const int p = trans_b ? b.dim(1) : b.dim(2);
    check(k == kb, "matmul: inner dimensions differ, " + std::to_string(k) +
                       " vs " + std::to_string(kb));

    const size_t a_item = static_cast<size_t>(a.dim(1)) * a.dim(2);
    const size_t b_item = static_cast<size_t>(b.dim(1)) * b.dim(2);
    const size_t y_item = static_cast<size_t>(m) * p;
    std::vector<double> out(static_cast<size_t>(n) * y_item);
    for (int i = 0; i < n; ++i) {
        const double* ai = a.data() + i * a_item;
        const double* bi = b.data() + i * b_item;
        double* yi = out.data() + i * y_item;
        if (trans_a)
            kn().gemm_tn(m, p, k, ai, m, bi, p, yi, p, false);
        else if (trans_b)
            kn().gemm_nt(m, p, k, ai, k, bi, k, yi, p, false);
        else
            kn().gemm_nn(m, p, k, ai, k, bi, p, yi, p, false);
    }

    return make_op(
        {n, m, p}, std::move(out), {a, b},
        [n, m, k, p, trans_a, trans_b, a_item, b_item, y_item](Node& self) {
            Node* pa = self.parents[0].node();
            Node* pb = self.parents[1].node();
            const double* dy = self.grad.data();
            double* da = pa->requires_grad ? ensure_grad(pa) : nullptr;
            double* db = pb->requires_grad ? ensure_grad(pb) : nullptr;
            for (int i = 0; i < n; ++i) {
                const double* ai = pa->data.data() + i * a_item;
                const double* bi = pb->data.data() + i * b_item;
                const double* dyi = dy + i * y_item;
                if (trans_a) {
                    // Y = A^T B with A [k,m], B [k,p]
                    if (da)  // dA = B dY^T -> [k,m]
                        kn().gemm_nt(k, m, p, bi, p, dyi, p, da + i * a_item, m, true);
                    if (db)  // dB = A dY -> [k,p]
                        kn().gemm_nn(k, p, m, ai, m, dyi, p, db + i * b_item, p, true);
                } else if (trans_b) {
                    // Y = A B^T with A [m,k], B [p,k]
                    if (da)  // dA = dY B -> [m,k]
                        kn().gemm_nn(m, k, p, dyi, p, bi, k, da + i * a_item, k, true);
                    if (db)  // dB = dY^T A -> [p,k]
                        kn().gemm_tn(p, k, m, dyi, p, ai, k, db + i * b_item, k, true);
                } else {
                    if (da)  // dA = dY B^T -> [m,k]
                        kn().gemm_nt(m, k, p, dyi, p, bi, p, da + i * a_item, k, true);
                    if (db)  // dB = A^T dY -> [k,p]
                        kn().gemm_tn(k, p, m, ai, k, dyi, p, db + i * b_item, p, true);
                }
            }
        },
        "matmul");
}

// ---- per-item min-max normalization --------------------------------------------

Tensor minmax_normalize_items(const Tensor& x) {
    check(x.ndim() >= 2, "minmax_normalize_items: need at least 2 dims");
    const int n = x.dim(0);
    const size_t item = x.size() / static_cast<size_t>(n);
    std::vector<double> out(x.size());
    std::vector<double> scale(n);
    std::vector<size_t> amin(n), amax(n);
    for (int i = 0; i < n; ++i) {
        const double* xi = x.data() + i * item;
        size_t imin = 0, imax = 0;
        for (size_t j = 1; j < item; ++j) {
            if (xi[j] < xi[imin]) imin = j;
            if (xi[j] > xi[imax]) imax = j;
        }
        const double mn = xi[imin], mx = xi[imax];
        amin[i] = imin;
        amax[i] = imax;
        if (mx == mn) {
            scale[i] = 0.0;
            kn().fill(out.data() + i * item, 0.0, item);
        } else {
            scale[i] = 1.0 / (mx - mn);
            // divide rather than multiply by the reciprocal so the endpoints
            // land exactly on 0 and 1 and nothing escapes [0,1]
            const double range = mx - mn;
            double* yi = out.data() + i * item;
            for (size_t j = 0; j < item; ++j) yi[j] = (xi[j] - mn) / range;
        }
    }
    return make_op(
        x.shape(), std::move(out), {x},
        [n, item, scale = std::move(scale), amin = std::move(amin),
         amax = std::move(amax)](Node& self) {
            Node* px = self.parents[0].node();
            if (!px->requires_grad) return;
            double* dx = ensure_grad(px);
            const double* dy = self.grad.data();
            const double* y = self.data.data();
            for (int i = 0; i < n; ++i) {
                if (scale[i] == 0.0) continue;  // degenerate item, zero gradient
                const double* dyi = dy + i * item;
                const double* yi = y + i * item;
                double* dxi = dx + i * item;
                const double s1 = kn().sum(dyi, item);
                const double t = scale[i] * kn().dot(dyi, yi, item);
                kn().axpy(scale[i], dyi, dxi, item);
                dxi[amin[i]] += -scale[i] * s1 + t;
                dxi[amax[i]] -= t;
            }
        },
        "minmax_normalize_items");
}

}  // namespace dehaze
