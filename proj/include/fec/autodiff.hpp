#ifndef FEC_AUTODIFF_HPP
#define FEC_AUTODIFF_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "fec/errors.hpp"
#include "fec/rng.hpp"

namespace fec {

// Named trainable tensor living outside any tape. Gradients accumulate with
// += across tape backward passes until the optimizer clears them.
template <typename T>
struct Parameter {
    std::string name;
    std::vector<int> shape;
    std::vector<T> value;
    std::vector<T> grad;

    Parameter() = default;
    Parameter(std::string n, std::vector<int> s) : name(std::move(n)), shape(std::move(s)) {
        size_t total = 1;
        for (int d : shape) total *= static_cast<size_t>(d);
        value.assign(total, T(0));
        grad.assign(total, T(0));
    }
    size_t size() const { return value.size(); }
    int rows() const { return shape.empty() ? 1 : shape[0]; }
    int cols() const { return shape.size() < 2 ? 1 : shape[1]; }
    void zero_grad() { std::fill(grad.begin(), grad.end(), T(0)); }
};

// Batch-normalization learnables plus running statistics. Running stats are
// buffers, not parameters: updated only during training-mode forward passes
// and frozen at inference.
template <typename T>
struct BatchNormState {
    Parameter<T> gamma, beta;
    std::vector<T> running_mean, running_var;
    T momentum = T(0.1);
    T eps = T(1e-5);

    BatchNormState() = default;
    explicit BatchNormState(const std::string& prefix, int features)
        : gamma(prefix + ".gamma", {features}), beta(prefix + ".beta", {features}) {
        std::fill(gamma.value.begin(), gamma.value.end(), T(1));
        running_mean.assign(features, T(0));
        running_var.assign(features, T(1));
    }
    int features() const { return static_cast<int>(gamma.size()); }
};

// Handle to a node on a tape.
struct Var {
    int id = -1;
};

// Reverse-mode tape over row-major 2-D arrays. Nodes are created in
// topological order by construction, so the backward pass is a single
// reverse sweep that visits each node exactly once. Leaves created without
// requires_grad never receive gradients.
template <typename T>
class Tape {
  public:
    struct Node {
        int rows = 0, cols = 0;
        std::vector<T> val;
        std::vector<T> grad;
        std::function<void(Tape&)> backward; // empty for leaves
        bool requires_grad = false;
        bool touched = false; // received any upstream gradient
    };

    int rows(Var v) const { return nodes_[v.id].rows; }
    int cols(Var v) const { return nodes_[v.id].cols; }
    const std::vector<T>& value(Var v) const { return nodes_[v.id].val; }
    const std::vector<T>& grad(Var v) const { return nodes_[v.id].grad; }

    Var leaf(int rows, int cols, std::vector<T> data, bool requires_grad = false) {
        if (static_cast<size_t>(rows) * cols != data.size()) throw ShapeError("leaf: data size mismatch");
        return push(rows, cols, std::move(data), requires_grad, nullptr);
    }

    Var zeros(int rows, int cols, bool requires_grad = false) {
        return push(rows, cols, std::vector<T>(static_cast<size_t>(rows) * cols, T(0)), requires_grad,
                    nullptr);
    }

    // Bind a parameter to this tape. Repeated binds of the same parameter
    // return the same node, so every use shares one gradient accumulator and
    // tied weights receive summed gradients.
    Var param(Parameter<T>& p) {
        auto it = param_nodes_.find(&p);
        if (it != param_nodes_.end()) return Var{it->second};
        Var v = push(p.rows(), p.cols(), p.value, true, nullptr);
        param_nodes_[&p] = v.id;
        bound_params_.push_back(&p);
        return v;
    }

    // y = x * W^T + b with x [R, Din], W [Dout, Din], b [Dout]
    Var affine(Var x, Var w, Var b) {
        const Node& xn = nodes_[x.id];
        const Node& wn = nodes_[w.id];
        const Node& bn = nodes_[b.id];
        const int R = xn.rows, Din = xn.cols, Dout = wn.rows;
        if (wn.cols != Din) throw ShapeError("affine: W cols != x cols");
        if (static_cast<int>(bn.val.size()) != Dout) throw ShapeError("affine: bias size != W rows");
        std::vector<T> y(static_cast<size_t>(R) * Dout);
        for (int r = 0; r < R; ++r) {
            const T* xr = xn.val.data() + static_cast<size_t>(r) * Din;
            T* yr = y.data() + static_cast<size_t>(r) * Dout;
            for (int o = 0; o < Dout; ++o) {
                const T* wo = wn.val.data() + static_cast<size_t>(o) * Din;
                T acc = bn.val[o];
                for (int i = 0; i < Din; ++i) acc += xr[i] * wo[i];
                yr[o] = acc;
            }
        }
        bool rg = xn.requires_grad || wn.requires_grad || bn.requires_grad;
        return push(R, Dout, std::move(y), rg, [x, w, b, R, Din, Dout](Tape& t) {
            Node& out = t.nodes_[t.cursor_];
            Node& xn2 = t.nodes_[x.id];
            Node& wn2 = t.nodes_[w.id];
            Node& bn2 = t.nodes_[b.id];
            const std::vector<T>& g = out.grad;
            if (xn2.requires_grad) {
                for (int r = 0; r < R; ++r) {
                    const T* gr = g.data() + static_cast<size_t>(r) * Dout;
                    T* xg = xn2.grad.data() + static_cast<size_t>(r) * Din;
                    for (int o = 0; o < Dout; ++o) {
                        const T go = gr[o];
                        if (go == T(0)) continue;
                        const T* wo = wn2.val.data() + static_cast<size_t>(o) * Din;
                        for (int i = 0; i < Din; ++i) xg[i] += go * wo[i];
                    }
                }
                xn2.touched = true;
            }
            if (wn2.requires_grad) {
                for (int r = 0; r < R; ++r) {
                    const T* gr = g.data() + static_cast<size_t>(r) * Dout;
                    const T* xr = xn2.val.data() + static_cast<size_t>(r) * Din;
                    for (int o = 0; o < Dout; ++o) {
                        const T go = gr[o];
                        if (go == T(0)) continue;
                        T* wg = wn2.grad.data() + static_cast<size_t>(o) * Din;
                        for (int i = 0; i < Din; ++i) wg[i] += go * xr[i];
                    }
                }
                wn2.touched = true;
            }
            if (bn2.requires_grad) {
                for (int r = 0; r < R; ++r) {
                    const T* gr = g.data() + static_cast<size_t>(r) * Dout;
                    for (int o = 0; o < Dout; ++o) bn2.grad[o] += gr[o];
                }
                bn2.touched = true;
            }
        });
    }

    Var add(Var a, Var b) { return binary(a, b, "add", [](T x, T y) { return x + y; }, T(1), T(1)); }
    Var sub(Var a, Var b) { return binary(a, b, "sub", [](T x, T y) { return x - y; }, T(1), T(-1)); }

    // elementwise product
    Var mul(Var a, Var b) {
        const Node& an = nodes_[a.id];
        const Node& bn = nodes_[b.id];
        if (an.rows != bn.rows || an.cols != bn.cols) throw ShapeError("mul: shape mismatch");
        std::vector<T> y(an.val.size());
        for (size_t i = 0; i < y.size(); ++i) y[i] = an.val[i] * bn.val[i];
        bool rg = an.requires_grad || bn.requires_grad;
        return push(an.rows, an.cols, std::move(y), rg, [a, b](Tape& t) {
            Node& out = t.nodes_[t.cursor_];
            Node& an2 = t.nodes_[a.id];
            Node& bn2 = t.nodes_[b.id];
            if (an2.requires_grad) {
                for (size_t i = 0; i < out.grad.size(); ++i) an2.grad[i] += out.grad[i] * bn2.val[i];
                an2.touched = true;
            }
            if (bn2.requires_grad) {
                for (size_t i = 0; i < out.grad.size(); ++i) bn2.grad[i] += out.grad[i] * an2.val[i];
                bn2.touched = true;
            }
        });
    }

    Var sigmoid(Var x) {
        const Node& xn = nodes_[x.id];
        std::vector<T> y(xn.val.size());
        for (size_t i = 0; i < y.size(); ++i) y[i] = T(1) / (T(1) + std::exp(-xn.val[i]));
        return push(xn.rows, xn.cols, std::move(y), xn.requires_grad, [x](Tape& t) {
            Node& out = t.nodes_[t.cursor_];
            Node& xn2 = t.nodes_[x.id];
            if (!xn2.requires_grad) return;
            for (size_t i = 0; i < out.grad.size(); ++i) {
                const T s = out.val[i];
                xn2.grad[i] += out.grad[i] * s * (T(1) - s);
            }
            xn2.touched = true;
        });
    }

    Var tanh_op(Var x) {
        const Node& xn = nodes_[x.id];
        std::vector<T> y(xn.val.size());
        for (size_t i = 0; i < y.size(); ++i) y[i] = std::tanh(xn.val[i]);
        return push(xn.rows, xn.cols, std::move(y), xn.requires_grad, [x](Tape& t) {
            Node& out = t.nodes_[t.cursor_];
            Node& xn2 = t.nodes_[x.id];
            if (!xn2.requires_grad) return;
            for (size_t i = 0; i < out.grad.size(); ++i) {
                const T th = out.val[i];
                xn2.grad[i] += out.grad[i] * (T(1) - th * th);
            }
            xn2.touched = true;
        });
    }

    Var concat_cols(Var a, Var b) {
        const Node& an = nodes_[a.id];
        const Node& bn = nodes_[b.id];
        if (an.rows != bn.rows) throw ShapeError("concat_cols: row mismatch");
        const int R = an.rows, Ca = an.cols, Cb = bn.cols;
        std::vector<T> y(static_cast<size_t>(R) * (Ca + Cb));
        for (int r = 0; r < R; ++r) {
            std::copy_n(an.val.data() + static_cast<size_t>(r) * Ca, Ca,
                        y.data() + static_cast<size_t>(r) * (Ca + Cb));
            std::copy_n(bn.val.data() + static_cast<size_t>(r) * Cb, Cb,
                        y.data() + static_cast<size_t>(r) * (Ca + Cb) + Ca);
        }
        bool rg = an.requires_grad || bn.requires_grad;
        return push(R, Ca + Cb, std::move(y), rg, [a, b, R, Ca, Cb](Tape& t) {
            Node& out = t.nodes_[t.cursor_];
            Node& an2 = t.nodes_[a.id];
            Node& bn2 = t.nodes_[b.id];
            for (int r = 0; r < R; ++r) {
                const T* gr = out.grad.data() + static_cast<size_t>(r) * (Ca + Cb);
                if (an2.requires_grad)
                    for (int c = 0; c < Ca; ++c) an2.grad[static_cast<size_t>(r) * Ca + c] += gr[c];
                if (bn2.requires_grad)
                    for (int c = 0; c < Cb; ++c) bn2.grad[static_cast<size_t>(r) * Cb + c] += gr[Ca + c];
            }
            an2.touched = an2.touched || an2.requires_grad;
            bn2.touched = bn2.touched || bn2.requires_grad;
        });
    }

    Var slice_cols(Var x, int c0, int width) {
        const Node& xn = nodes_[x.id];
        if (c0 < 0 || c0 + width > xn.cols) throw ShapeError("slice_cols: out of range");
        const int R = xn.rows, C = xn.cols;
        std::vector<T> y(static_cast<size_t>(R) * width);
        for (int r = 0; r < R; ++r)
            std::copy_n(xn.val.data() + static_cast<size_t>(r) * C + c0, width,
                        y.data() + static_cast<size_t>(r) * width);
        return push(R, width, std::move(y), xn.requires_grad, [x, c0, width, R, C](Tape& t) {
            Node& out = t.nodes_[t.cursor_];
            Node& xn2 = t.nodes_[x.id];
            if (!xn2.requires_grad) return;
            for (int r = 0; r < R; ++r) {
                const T* gr = out.grad.data() + static_cast<size_t>(r) * width;
                T* xg = xn2.grad.data() + static_cast<size_t>(r) * C + c0;
                for (int c = 0; c < width; ++c) xg[c] += gr[c];
            }
            xn2.touched = true;
        });
    }

    Var row_block(Var x, int r0, int rows) {
        const Node& xn = nodes_[x.id];
        if (r0 < 0 || r0 + rows > xn.rows) throw ShapeError("row_block: out of range");
        const int C = xn.cols;
        std::vector<T> y(xn.val.begin() + static_cast<size_t>(r0) * C,
                         xn.val.begin() + static_cast<size_t>(r0 + rows) * C);
        return push(rows, C, std::move(y), xn.requires_grad, [x, r0, rows, C](Tape& t) {
            Node& out = t.nodes_[t.cursor_];
            Node& xn2 = t.nodes_[x.id];
            if (!xn2.requires_grad) return;
            T* xg = xn2.grad.data() + static_cast<size_t>(r0) * C;
            for (size_t i = 0; i < out.grad.size(); ++i) xg[i] += out.grad[i];
            xn2.touched = true;
        });
    }

    Var concat_rows(const std::vector<Var>& parts) {
        if (parts.empty()) throw ShapeError("concat_rows: empty");
        const int C = nodes_[parts[0].id].cols;
        int R = 0;
        bool rg = false;
        for (Var p : parts) {
            if (nodes_[p.id].cols != C) throw ShapeError("concat_rows: col mismatch");
            R += nodes_[p.id].rows;
            rg = rg || nodes_[p.id].requires_grad;
        }
        std::vector<T> y;
        y.reserve(static_cast<size_t>(R) * C);
        for (Var p : parts) {
            const Node& pn = nodes_[p.id];
            y.insert(y.end(), pn.val.begin(), pn.val.end());
        }
        std::vector<Var> parts_copy = parts;
        return push(R, C, std::move(y), rg, [parts_copy, C](Tape& t) {
            Node& out = t.nodes_[t.cursor_];
            size_t offset = 0;
            for (Var p : parts_copy) {
                Node& pn = t.nodes_[p.id];
                const size_t n = pn.val.size();
                if (pn.requires_grad) {
                    for (size_t i = 0; i < n; ++i) pn.grad[i] += out.grad[offset + i];
                    pn.touched = true;
                }
                offset += n;
            }
        });
    }

    // out block i = in block perm[i]; blocks are `block` consecutive rows.
    Var permute_row_blocks(Var x, const std::vector<int>& perm, int block) {
        const Node& xn = nodes_[x.id];
        const int C = xn.cols;
        const int nblocks = static_cast<int>(perm.size());
        if (nblocks * block != xn.rows) throw ShapeError("permute_row_blocks: size mismatch");
        std::vector<T> y(xn.val.size());
        for (int i = 0; i < nblocks; ++i)
            std::copy_n(xn.val.data() + static_cast<size_t>(perm[i]) * block * C,
                        static_cast<size_t>(block) * C, y.data() + static_cast<size_t>(i) * block * C);
        std::vector<int> perm_copy = perm;
        return push(xn.rows, C, std::move(y), xn.requires_grad, [x, perm_copy, block, C](Tape& t) {
            Node& out = t.nodes_[t.cursor_];
            Node& xn2 = t.nodes_[x.id];
            if (!xn2.requires_grad) return;
            const int nb = static_cast<int>(perm_copy.size());
            for (int i = 0; i < nb; ++i) {
                const T* gr = out.grad.data() + static_cast<size_t>(i) * block * C;
                T* xg = xn2.grad.data() + static_cast<size_t>(perm_copy[i]) * block * C;
                for (int j = 0; j < block * C; ++j) xg[j] += gr[j];
            }
            xn2.touched = true;
        });
    }

    // Batch normalization over the feature (column) axis with statistics
    // pooled over all rows. Training mode uses batch statistics and updates
    // the running buffers; inference uses the frozen running statistics.
    Var batchnorm(Var x, BatchNormState<T>& state, bool training) {
        // bind first: param() may grow the node vector and invalidate references
        Var gamma = param(state.gamma);
        Var beta = param(state.beta);
        const Node& xn = nodes_[x.id];
        const int R = xn.rows, C = xn.cols;
        if (C != state.features()) throw ShapeError("batchnorm: feature count mismatch");
        if (training && R < 2) throw NumericalError("batchnorm: degenerate batch (fewer than 2 rows)");

        std::vector<T> mean(C, T(0)), var(C, T(0));
        if (training) {
            for (int r = 0; r < R; ++r) {
                const T* xr = xn.val.data() + static_cast<size_t>(r) * C;
                for (int c = 0; c < C; ++c) mean[c] += xr[c];
            }
            for (int c = 0; c < C; ++c) mean[c] /= T(R);
            for (int r = 0; r < R; ++r) {
                const T* xr = xn.val.data() + static_cast<size_t>(r) * C;
                for (int c = 0; c < C; ++c) {
                    const T d = xr[c] - mean[c];
                    var[c] += d * d;
                }
            }
            for (int c = 0; c < C; ++c) var[c] /= T(R);
            for (int c = 0; c < C; ++c) {
                state.running_mean[c] = (T(1) - state.momentum) * state.running_mean[c] + state.momentum * mean[c];
                state.running_var[c] = (T(1) - state.momentum) * state.running_var[c] + state.momentum * var[c];
            }
        } else {
            mean = state.running_mean;
            var = state.running_var;
        }

        std::vector<T> inv_std(C);
        for (int c = 0; c < C; ++c) inv_std[c] = T(1) / std::sqrt(var[c] + state.eps);
        std::vector<T> xhat(xn.val.size());
        std::vector<T> y(xn.val.size());
        const std::vector<T>& gv = nodes_[gamma.id].val;
        const std::vector<T>& bv = nodes_[beta.id].val;
        for (int r = 0; r < R; ++r) {
            const T* xr = xn.val.data() + static_cast<size_t>(r) * C;
            T* hr = xhat.data() + static_cast<size_t>(r) * C;
            T* yr = y.data() + static_cast<size_t>(r) * C;
            for (int c = 0; c < C; ++c) {
                hr[c] = (xr[c] - mean[c]) * inv_std[c];
                yr[c] = gv[c] * hr[c] + bv[c];
            }
        }

        bool rg = xn.requires_grad || nodes_[gamma.id].requires_grad || nodes_[beta.id].requires_grad;
        auto xhat_shared = std::make_shared<std::vector<T>>(std::move(xhat));
        auto inv_shared = std::make_shared<std::vector<T>>(std::move(inv_std));
        return push(R, C, std::move(y), rg,
                    [x, gamma, beta, R, C, training, xhat_shared, inv_shared](Tape& t) {
            Node& out = t.nodes_[t.cursor_];
            Node& xn2 = t.nodes_[x.id];
            Node& gn = t.nodes_[gamma.id];
            Node& bn = t.nodes_[beta.id];
            const std::vector<T>& xh = *xhat_shared;
            const std::vector<T>& is = *inv_shared;
            // d gamma, d beta
            std::vector<T> dg(C, T(0)), db(C, T(0));
            for (int r = 0; r < R; ++r) {
                const T* gr = out.grad.data() + static_cast<size_t>(r) * C;
                const T* hr = xh.data() + static_cast<size_t>(r) * C;
                for (int c = 0; c < C; ++c) {
                    dg[c] += gr[c] * hr[c];
                    db[c] += gr[c];
                }
            }
            if (gn.requires_grad) {
                for (int c = 0; c < C; ++c) gn.grad[c] += dg[c];
                gn.touched = true;
            }
            if (bn.requires_grad) {
                for (int c = 0; c < C; ++c) bn.grad[c] += db[c];
                bn.touched = true;
            }
            if (xn2.requires_grad) {
                const std::vector<T>& gv2 = gn.val;
                if (training) {
                    // full batch-statistic gradient
                    for (int r = 0; r < R; ++r) {
                        const T* gr = out.grad.data() + static_cast<size_t>(r) * C;
                        const T* hr = xh.data() + static_cast<size_t>(r) * C;
                        T* xg = xn2.grad.data() + static_cast<size_t>(r) * C;
                        for (int c = 0; c < C; ++c) {
                            const T term = gr[c] - db[c] / T(R) - hr[c] * dg[c] / T(R);
                            xg[c] += gv2[c] * is[c] * term;
                        }
                    }
                } else {
                    for (int r = 0; r < R; ++r) {
                        const T* gr = out.grad.data() + static_cast<size_t>(r) * C;
                        T* xg = xn2.grad.data() + static_cast<size_t>(r) * C;
                        for (int c = 0; c < C; ++c) xg[c] += gv2[c] * is[c] * gr[c];
                    }
                }
                xn2.touched = true;
            }
        });
    }

    // Numerically stable binary cross-entropy on logits, averaged over the
    // positions where mask is nonzero (mask empty = all positions).
    Var bce_with_logits(Var logits, const std::vector<T>& targets, const std::vector<T>& mask = {}) {
        const Node& ln = nodes_[logits.id];
        if (ln.val.size() != targets.size()) throw ShapeError("bce: target size mismatch");
        if (!mask.empty() && mask.size() != targets.size()) throw ShapeError("bce: mask size mismatch");
        T denom = T(0);
        if (mask.empty())
            denom = T(targets.size());
        else
            for (T m : mask) denom += m;
        if (denom <= T(0)) throw NumericalError("bce: empty mask");
        T loss = T(0);
        for (size_t i = 0; i < targets.size(); ++i) {
            const T w = mask.empty() ? T(1) : mask[i];
            if (w == T(0)) continue;
            const T z = ln.val[i];
            const T y = targets[i];
            loss += w * (std::max(z, T(0)) - z * y + std::log1p(std::exp(-std::abs(z))));
        }
        loss /= denom;
        auto targets_shared = std::make_shared<std::vector<T>>(targets);
        auto mask_shared = std::make_shared<std::vector<T>>(mask);
        return push(1, 1, {loss}, ln.requires_grad,
                    [logits, targets_shared, mask_shared, denom](Tape& t) {
            Node& out = t.nodes_[t.cursor_];
            Node& ln2 = t.nodes_[logits.id];
            if (!ln2.requires_grad) return;
            const T g = out.grad[0] / denom;
            const std::vector<T>& y = *targets_shared;
            const std::vector<T>& m = *mask_shared;
            for (size_t i = 0; i < y.size(); ++i) {
                const T w = m.empty() ? T(1) : m[i];
                if (w == T(0)) continue;
                const T s = T(1) / (T(1) + std::exp(-ln2.val[i]));
                ln2.grad[i] += g * w * (s - y[i]);
            }
            ln2.touched = true;
        });
    }

    Var sum(Var x) {
        const Node& xn = nodes_[x.id];
        T s = T(0);
        for (T v : xn.val) s += v;
        return push(1, 1, {s}, xn.requires_grad, [x](Tape& t) {
            Node& out = t.nodes_[t.cursor_];
            Node& xn2 = t.nodes_[x.id];
            if (!xn2.requires_grad) return;
            for (T& g : xn2.grad) g += out.grad[0];
            xn2.touched = true;
        });
    }

    // Reverse sweep from a scalar output. Parameter gradients are flushed
    // into their Parameter::grad accumulators at the end.
    void backward(Var loss) {
        Node& ln = nodes_[loss.id];
        if (ln.val.size() != 1) throw ShapeError("backward: loss must be scalar");
        ln.grad[0] = T(1);
        ln.touched = true;
        for (int i = loss.id; i >= 0; --i) {
            Node& n = nodes_[i];
            if (!n.touched || !n.backward) continue;
            cursor_ = i;
            n.backward(*this);
        }
        for (Parameter<T>* p : bound_params_) {
            const Node& n = nodes_[param_nodes_[p]];
            for (size_t i = 0; i < p->grad.size(); ++i) p->grad[i] += n.grad[i];
        }
    }

    size_t node_count() const { return nodes_.size(); }

  private:
    std::vector<Node> nodes_;
    std::unordered_map<Parameter<T>*, int> param_nodes_;
    std::vector<Parameter<T>*> bound_params_;
    int cursor_ = -1; // node whose backward is currently running

    Var push(int rows, int cols, std::vector<T> val, bool requires_grad,
             std::function<void(Tape&)> backward) {
        Node n;
        n.rows = rows;
        n.cols = cols;
        n.val = std::move(val);
        n.grad.assign(n.val.size(), T(0));
        n.requires_grad = requires_grad;
        n.backward = std::move(backward);
        nodes_.push_back(std::move(n));
        return Var{static_cast<int>(nodes_.size()) - 1};
    }

    template <typename F>
    Var binary(Var a, Var b, const char* name, F fwd, T da, T db) {
        const Node& an = nodes_[a.id];
        const Node& bn = nodes_[b.id];
        if (an.rows != bn.rows || an.cols != bn.cols)
            throw ShapeError(std::string(name) + ": shape mismatch");
        std::vector<T> y(an.val.size());
        for (size_t i = 0; i < y.size(); ++i) y[i] = fwd(an.val[i], bn.val[i]);
        bool rg = an.requires_grad || bn.requires_grad;
        return push(an.rows, an.cols, std::move(y), rg, [a, b, da, db](Tape& t) {
            Node& out = t.nodes_[t.cursor_];
            Node& an2 = t.nodes_[a.id];
            Node& bn2 = t.nodes_[b.id];
            if (an2.requires_grad) {
                for (size_t i = 0; i < out.grad.size(); ++i) an2.grad[i] += da * out.grad[i];
                an2.touched = true;
            }
            if (bn2.requires_grad) {
                for (size_t i = 0; i < out.grad.size(); ++i) bn2.grad[i] += db * out.grad[i];
                bn2.touched = true;
            }
        });
    }
};

// One direction of one LSTM layer, PyTorch parameterization: gate blocks
// [input, forget, candidate, output] stacked rowwise in w_ih [4H, Din] and
// w_hh [4H, H] with separate biases.
template <typename T>
struct LstmCellParams {
    Parameter<T> w_ih, w_hh, b_ih, b_hh;

    LstmCellParams() = default;
    LstmCellParams(const std::string& prefix, int d_in, int d_hidden)
        : w_ih(prefix + ".w_ih", {4 * d_hidden, d_in}),
          w_hh(prefix + ".w_hh", {4 * d_hidden, d_hidden}),
          b_ih(prefix + ".b_ih", {4 * d_hidden}),
          b_hh(prefix + ".b_hh", {4 * d_hidden}) {}
    int hidden() const { return static_cast<int>(b_ih.size()) / 4; }
};

// Run one LSTM direction over a time-major sequence x [K*B, Din]; row
// t*B + b is step t of batch element b. reverse=true processes steps in
// descending order; outputs stay aligned with input steps, so a
// bidirectional pair concatenates columnwise.
template <typename T>
Var lstm_layer(Tape<T>& tape, Var x, int K, int B, LstmCellParams<T>& cell, bool reverse) {
    const int H = cell.hidden();
    Var w_ih = tape.param(cell.w_ih);
    Var w_hh = tape.param(cell.w_hh);
    Var b_ih = tape.param(cell.b_ih);
    Var b_hh = tape.param(cell.b_hh);

    Var h = tape.zeros(B, H);
    Var c = tape.zeros(B, H);
    std::vector<Var> outputs(K);
    for (int step = 0; step < K; ++step) {
        const int t = reverse ? K - 1 - step : step;
        Var xt = tape.row_block(x, t * B, B);
        Var gates = tape.add(tape.affine(xt, w_ih, b_ih), tape.affine(h, w_hh, b_hh));
        Var i = tape.sigmoid(tape.slice_cols(gates, 0, H));
        Var f = tape.sigmoid(tape.slice_cols(gates, H, H));
        Var g = tape.tanh_op(tape.slice_cols(gates, 2 * H, H));
        Var o = tape.sigmoid(tape.slice_cols(gates, 3 * H, H));
        c = tape.add(tape.mul(f, c), tape.mul(i, g));
        h = tape.mul(o, tape.tanh_op(c));
        outputs[t] = h;
    }
    return tape.concat_rows(outputs);
}

// Central finite-difference gradient verification. loss(with_grad=true) must
// (re)build the computation, run backward, and leave gradients in the given
// parameters; loss(false) only evaluates. Gradients are compared on
// randomly probed coordinates.
struct GradCheckResult {
    double max_rel_error = 0.0;
    int probes = 0;
    std::string worst_param;
};

template <typename T>
GradCheckResult grad_check(std::vector<Parameter<T>*> params, const std::function<T(bool)>& loss,
                           int probes_per_param, Rng& rng, double h = 1e-5) {
    for (auto* p : params) p->zero_grad();
    loss(true);
    GradCheckResult result;
    for (auto* p : params) {
        const int n = static_cast<int>(p->size());
        for (int probe = 0; probe < probes_per_param; ++probe) {
            const int idx = n <= probes_per_param ? probe : static_cast<int>(rng.below(n));
            if (idx >= n) break;
            const T saved = p->value[idx];
            p->value[idx] = saved + static_cast<T>(h);
            const double fp = static_cast<double>(loss(false));
            p->value[idx] = saved - static_cast<T>(h);
            const double fm = static_cast<double>(loss(false));
            p->value[idx] = saved;
            const double numeric = (fp - fm) / (2.0 * h);
            const double analytic = static_cast<double>(p->grad[idx]);
            const double scale = std::max({std::abs(numeric), std::abs(analytic), 1e-6});
            const double rel = std::abs(numeric - analytic) / scale;
            ++result.probes;
            if (rel > result.max_rel_error) {
                result.max_rel_error = rel;
                result.worst_param = p->name;
            }
        }
    }
    return result;
}

} // namespace fec

#endif
