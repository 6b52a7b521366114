#pragma once

#include <functional>
#include <memory>
#include <unordered_set>

#include "ops.hpp"
#include "params.hpp"

// Define-by-run reverse-mode autodiff over the ops kernels. Each op returns a
// Var whose closure scatters the upstream gradient to its parents; when no
// input needs gradients the closure is skipped entirely, so inference pays
// only the forward kernels.

namespace osr {

template <class T>
struct NodeT {
    TensorT<T> val;
    TensorT<T> grad;  // allocated on demand during backward
    bool needs_grad = false;
    std::vector<std::shared_ptr<NodeT>> parents;
    std::function<void(NodeT&)> back;                 // scatters this->grad to parents
    typename ParamStoreT<T>::Entry* sink = nullptr;   // param leaves accumulate here

    TensorT<T>& g() {
        if (grad.v.empty()) grad = TensorT<T>(val.shape);
        return grad;
    }
};

template <class T>
using Var = std::shared_ptr<NodeT<T>>;

template <class T>
Var<T> constant(TensorT<T> value) {
    auto n = std::make_shared<NodeT<T>>();
    n->val = std::move(value);
    return n;
}

template <class T>
Var<T> leaf(TensorT<T> value, bool needs_grad = true) {
    auto n = std::make_shared<NodeT<T>>();
    n->val = std::move(value);
    n->needs_grad = needs_grad;
    return n;
}

// Parameter leaf reading from (and accumulating gradients into) a store entry.
template <class T>
Var<T> param_leaf(ParamStoreT<T>& store, const std::string& name, bool train_mode) {
    auto& entry = store.at(name);
    auto n = std::make_shared<NodeT<T>>();
    n->val = entry.value;
    if (train_mode && entry.trainable) {
        n->needs_grad = true;
        n->sink = &entry;
    }
    return n;
}

template <class T>
Var<T> make_op(TensorT<T> val, std::vector<Var<T>> parents, std::function<void(NodeT<T>&)> back) {
    auto n = std::make_shared<NodeT<T>>();
    n->val = std::move(val);
    for (auto& p : parents) n->needs_grad = n->needs_grad || p->needs_grad;
    if (n->needs_grad) {
        n->parents = std::move(parents);
        n->back = std::move(back);
    }
    return n;
}

template <class T>
inline void accum(TensorT<T>& dst, const TensorT<T>& src) {
    for (size_t i = 0; i < dst.v.size(); ++i) dst.v[i] += src.v[i];
}

// Reverse-topological sweep from root; root is seeded with ones (scalar losses)
// unless an explicit seed tensor is given. Param-leaf gradients land in their
// store entries.
template <class T>
void backward(const Var<T>& root, const TensorT<T>* seed = nullptr) {
    std::vector<NodeT<T>*> topo;
    std::unordered_set<NodeT<T>*> seen;
    std::vector<std::pair<NodeT<T>*, size_t>> stack{{root.get(), 0}};
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next == 0 && !seen.insert(node).second) {
            stack.pop_back();
            continue;
        }
        if (next < node->parents.size()) {
            NodeT<T>* p = node->parents[next].get();
            ++next;
            if (!seen.count(p) && p->needs_grad) stack.push_back({p, 0});
        } else {
            topo.push_back(node);
            stack.pop_back();
        }
    }

    if (seed) {
        require(seed->shape == root->val.shape, errc::invalid_argument,
                "backward: seed shape mismatch");
        root->g() = *seed;
    } else {
        root->g() = TensorT<T>::full(root->val.shape, T(1));
    }
    for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
        NodeT<T>* node = *it;
        if (node->back) node->back(*node);
        if (node->sink) accum(node->sink->grad, node->g());
    }
}

/*================================================= op wrappers ====*/

template <class T>
Var<T> v_add(Var<T> a, Var<T> b) {
    require(a->val.same_shape(b->val), errc::invalid_argument, "add: shape mismatch");
    TensorT<T> y = a->val;
    accum(y, b->val);
    return make_op<T>(std::move(y), {a, b}, [a, b](NodeT<T>& n) {
        if (a->needs_grad) accum(a->g(), n.g());
        if (b->needs_grad) accum(b->g(), n.g());
    });
}

template <class T>
Var<T> v_scale(Var<T> a, T c) {
    TensorT<T> y = a->val;
    for (auto& v : y.v) v *= c;
    return make_op<T>(std::move(y), {a}, [a, c](NodeT<T>& n) {
        if (!a->needs_grad) return;
        auto& ga = a->g();
        for (size_t i = 0; i < ga.v.size(); ++i) ga.v[i] += c * n.grad.v[i];
    });
}

// x[C,h,w] + per-channel vector[C], broadcast over spatial positions
template <class T>
Var<T> v_add_channel(Var<T> x, Var<T> vec) {
    const int c = x->val.dim(0), h = x->val.dim(1), w = x->val.dim(2);
    require(vec->val.shape.size() == 1 && vec->val.dim(0) == c, errc::invalid_state,
            "channel broadcast: vector length " + shape_str(vec->val) + " vs C=" +
                std::to_string(c));
    TensorT<T> y = x->val;
    for (int ci = 0; ci < c; ++ci) {
        T add = vec->val.v[size_t(ci)];
        T* plane = y.data() + size_t(ci) * h * w;
        for (int i = 0; i < h * w; ++i) plane[i] += add;
    }
    return make_op<T>(std::move(y), {x, vec}, [x, vec, c, h, w](NodeT<T>& n) {
        if (x->needs_grad) accum(x->g(), n.g());
        if (vec->needs_grad) {
            auto& gv = vec->g();
            for (int ci = 0; ci < c; ++ci) {
                const T* plane = n.grad.data() + size_t(ci) * h * w;
                T acc = 0;
                for (int i = 0; i < h * w; ++i) acc += plane[i];
                gv.v[size_t(ci)] += acc;
            }
        }
    });
}

// gain[C] (x) x[C,h,w] + bias[C] — channel-wise affine modulation
template <class T>
Var<T> v_channel_affine(Var<T> x, Var<T> gain, Var<T> bias) {
    const int c = x->val.dim(0), h = x->val.dim(1), w = x->val.dim(2);
    require(gain->val.dim(0) == c && bias->val.dim(0) == c, errc::invalid_state,
            "channel affine: gain/bias length mismatch");
    TensorT<T> y = x->val;
    for (int ci = 0; ci < c; ++ci) {
        T g = gain->val.v[size_t(ci)], b = bias->val.v[size_t(ci)];
        T* plane = y.data() + size_t(ci) * h * w;
        for (int i = 0; i < h * w; ++i) plane[i] = plane[i] * g + b;
    }
    return make_op<T>(std::move(y), {x, gain, bias}, [x, gain, bias, c, h, w](NodeT<T>& n) {
        for (int ci = 0; ci < c; ++ci) {
            const T* gp = n.grad.data() + size_t(ci) * h * w;
            const T* xp = x->val.data() + size_t(ci) * h * w;
            if (x->needs_grad) {
                T g = gain->val.v[size_t(ci)];
                T* xg = x->g().data() + size_t(ci) * h * w;
                for (int i = 0; i < h * w; ++i) xg[i] += gp[i] * g;
            }
            if (gain->needs_grad) {
                T acc = 0;
                for (int i = 0; i < h * w; ++i) acc += gp[i] * xp[i];
                gain->g().v[size_t(ci)] += acc;
            }
            if (bias->needs_grad) {
                T acc = 0;
                for (int i = 0; i < h * w; ++i) acc += gp[i];
                bias->g().v[size_t(ci)] += acc;
            }
        }
    });
}

template <class T>
Var<T> v_linear(Var<T> x, Var<T> w, Var<T> b) {
    TensorT<T> y = linear_fwd(x->val, w->val, b->val);
    return make_op<T>(std::move(y), {x, w, b}, [x, w, b](NodeT<T>& n) {
        TensorT<T> dx, dw, db;
        linear_bwd(x->val, w->val, n.grad, dx, dw, db);
        if (x->needs_grad) accum(x->g(), dx);
        if (w->needs_grad) accum(w->g(), dw);
        if (b->needs_grad) accum(b->g(), db);
    });
}

template <class T>
Var<T> v_matmul(Var<T> x, Var<T> w) {
    TensorT<T> y = matmul_fwd(x->val, w->val);
    return make_op<T>(std::move(y), {x, w}, [x, w](NodeT<T>& n) {
        TensorT<T> dx, dw;
        matmul_bwd(x->val, w->val, n.grad, dx, dw);
        if (x->needs_grad) accum(x->g(), dx);
        if (w->needs_grad) accum(w->g(), dw);
    });
}

template <class T>
Var<T> v_conv2d(Var<T> x, Var<T> k, Var<T> b, int stride = 1, int pad = 1) {
    TensorT<T> y = conv2d_fwd(x->val, k->val, b->val, stride, pad);
    return make_op<T>(std::move(y), {x, k, b}, [x, k, b, stride, pad](NodeT<T>& n) {
        TensorT<T> dx, dk, db;
        conv2d_bwd(x->val, k->val, stride, pad, n.grad, dx, dk, db);
        if (x->needs_grad) accum(x->g(), dx);
        if (k->needs_grad) accum(k->g(), dk);
        if (b->needs_grad) accum(b->g(), db);
    });
}

template <class T>
Var<T> v_silu(Var<T> x) {
    return make_op<T>(silu_fwd(x->val), {x}, [x](NodeT<T>& n) {
        if (x->needs_grad) accum(x->g(), silu_bwd(x->val, n.grad));
    });
}

template <class T>
Var<T> v_group_norm(Var<T> x, int groups, Var<T> gamma, Var<T> beta, T eps) {
    auto mean = std::make_shared<TensorT<T>>();
    auto rstd = std::make_shared<TensorT<T>>();
    TensorT<T> y = group_norm_fwd(x->val, groups, gamma->val, beta->val, eps, mean.get(),
                                  rstd.get());
    return make_op<T>(std::move(y), {x, gamma, beta},
                      [x, groups, gamma, beta, mean, rstd](NodeT<T>& n) {
                          TensorT<T> dx, dgamma, dbeta;
                          group_norm_bwd(x->val, groups, gamma->val, *mean, *rstd, n.grad, dx,
                                         dgamma, dbeta);
                          if (x->needs_grad) accum(x->g(), dx);
                          if (gamma->needs_grad) accum(gamma->g(), dgamma);
                          if (beta->needs_grad) accum(beta->g(), dbeta);
                      });
}

template <class T>
Var<T> v_attention(Var<T> q, Var<T> k, Var<T> v) {
    auto attn = std::make_shared<TensorT<T>>();
    TensorT<T> y = attention_fwd(q->val, k->val, v->val, attn.get());
    return make_op<T>(std::move(y), {q, k, v}, [q, k, v, attn](NodeT<T>& n) {
        TensorT<T> dq, dk, dv;
        attention_bwd(q->val, k->val, v->val, *attn, n.grad, dq, dk, dv);
        if (q->needs_grad) accum(q->g(), dq);
        if (k->needs_grad) accum(k->g(), dk);
        if (v->needs_grad) accum(v->g(), dv);
    });
}

template <class T>
Var<T> v_tokens(Var<T> x) {  // [C,h,w] -> [h*w, C]
    const int c = x->val.dim(0), h = x->val.dim(1), w = x->val.dim(2);
    return make_op<T>(chw_to_tokens(x->val), {x}, [x, c, h, w](NodeT<T>& n) {
        if (x->needs_grad) accum(x->g(), tokens_to_chw(n.grad, c, h, w));
    });
}

template <class T>
Var<T> v_chw(Var<T> t, int c, int h, int w) {  // [h*w, C] -> [C,h,w]
    return make_op<T>(tokens_to_chw(t->val, c, h, w), {t}, [t](NodeT<T>& n) {
        if (t->needs_grad) accum(t->g(), chw_to_tokens(n.grad));
    });
}

template <class T>
Var<T> v_upsample2x(Var<T> x) {
    const int c = x->val.dim(0), h = x->val.dim(1), w = x->val.dim(2);
    return make_op<T>(upsample_nearest2x_fwd(x->val), {x}, [x, c, h, w](NodeT<T>& n) {
        if (x->needs_grad) accum(x->g(), upsample_nearest2x_bwd(n.grad, c, h, w));
    });
}

template <class T>
Var<T> v_depth_to_space2(Var<T> x) {
    const int c4 = x->val.dim(0), h = x->val.dim(1), w = x->val.dim(2);
    return make_op<T>(depth_to_space2_fwd(x->val), {x}, [x, c4, h, w](NodeT<T>& n) {
        if (x->needs_grad) accum(x->g(), depth_to_space2_bwd(n.grad, c4, h, w));
    });
}

// same data, new shape (row-major copy)
template <class T>
Var<T> v_reshape(Var<T> x, std::vector<int> shape) {
    require(TensorT<T>::count(shape) == x->val.numel(), errc::invalid_argument,
            "reshape: element count mismatch");
    TensorT<T> y;
    y.shape = shape;
    y.v = x->val.v;
    auto old_shape = x->val.shape;
    return make_op<T>(std::move(y), {x}, [x, old_shape](NodeT<T>& n) {
        if (!x->needs_grad) return;
        TensorT<T> g;
        g.shape = old_shape;
        g.v = n.grad.v;
        accum(x->g(), g);
    });
}

// x + c elementwise (constant scalar)
template <class T>
Var<T> v_add_scalar(Var<T> x, T c) {
    TensorT<T> y = x->val;
    for (auto& v : y.v) v += c;
    return make_op<T>(std::move(y), {x}, [x](NodeT<T>& n) {
        if (x->needs_grad) accum(x->g(), n.grad);
    });
}

// row r of a [N,M] table as a 1-d [M] slice (semantic token lookups)
template <class T>
Var<T> v_row(Var<T> table, int r) {
    require(table->val.shape.size() == 2 && r >= 0 && r < table->val.dim(0),
            errc::invalid_argument, "v_row: row out of range");
    const int cols = table->val.dim(1);
    TensorT<T> y({cols});
    for (int j = 0; j < cols; ++j) y.v[size_t(j)] = table->val.at(r, j);
    return make_op<T>(std::move(y), {table}, [table, r, cols](NodeT<T>& n) {
        if (!table->needs_grad) return;
        auto& g = table->g();
        for (int j = 0; j < cols; ++j) g.at(r, j) += n.grad.v[size_t(j)];
    });
}

// rows [r0, r0+count) of a [N,M] table as a [count, M] block
template <class T>
Var<T> v_rows(Var<T> table, int r0, int count) {
    require(table->val.shape.size() == 2 && r0 >= 0 && count >= 1 &&
                r0 + count <= table->val.dim(0),
            errc::invalid_argument, "v_rows: row range out of bounds");
    const int cols = table->val.dim(1);
    TensorT<T> y({count, cols});
    for (int i = 0; i < count; ++i)
        for (int j = 0; j < cols; ++j) y.at(i, j) = table->val.at(r0 + i, j);
    return make_op<T>(std::move(y), {table}, [table, r0, count, cols](NodeT<T>& n) {
        if (!table->needs_grad) return;
        auto& g = table->g();
        for (int i = 0; i < count; ++i)
            for (int j = 0; j < cols; ++j) g.at(r0 + i, j) += n.grad.at(i, j);
    });
}

/*================================================= scalar losses ====*/

// mean squared error against a constant target -> scalar Var [1]
template <class T>
Var<T> v_mse(Var<T> x, const TensorT<T>& target) {
    require(x->val.same_shape(target), errc::invalid_argument, "mse: shape mismatch");
    const int64_t m = x->val.numel();
    T acc = 0;
    for (int64_t i = 0; i < m; ++i) {
        T d = x->val.v[size_t(i)] - target.v[size_t(i)];
        acc += d * d;
    }
    TensorT<T> y({1});
    y.v[0] = acc / T(m);
    auto tgt = std::make_shared<TensorT<T>>(target);
    return make_op<T>(std::move(y), {x}, [x, tgt, m](NodeT<T>& n) {
        if (!x->needs_grad) return;
        T gscale = n.grad.v[0] * T(2) / T(m);
        auto& gx = x->g();
        for (int64_t i = 0; i < m; ++i)
            gx.v[size_t(i)] += gscale * (x->val.v[size_t(i)] - tgt->v[size_t(i)]);
    });
}

// mean absolute error against a constant target -> scalar Var [1]
template <class T>
Var<T> v_l1(Var<T> x, const TensorT<T>& target) {
    require(x->val.same_shape(target), errc::invalid_argument, "l1: shape mismatch");
    const int64_t m = x->val.numel();
    T acc = 0;
    for (int64_t i = 0; i < m; ++i) acc += std::abs(x->val.v[size_t(i)] - target.v[size_t(i)]);
    TensorT<T> y({1});
    y.v[0] = acc / T(m);
    auto tgt = std::make_shared<TensorT<T>>(target);
    return make_op<T>(std::move(y), {x}, [x, tgt, m](NodeT<T>& n) {
        if (!x->needs_grad) return;
        T gscale = n.grad.v[0] / T(m);
        auto& gx = x->g();
        for (int64_t i = 0; i < m; ++i) {
            T d = x->val.v[size_t(i)] - tgt->v[size_t(i)];
            gx.v[size_t(i)] += gscale * (d > T(0) ? T(1) : (d < T(0) ? T(-1) : T(0)));
        }
    });
}

}  // namespace osr
