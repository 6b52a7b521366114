#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>

#include "tensor.hpp"

// Forward/backward kernels for every differentiable primitive. Matmul-shaped
// inner loops are delegated to Eigen (single-threaded, deterministic); the
// test suite checks each kernel against independent brute-force oracles.

namespace osr {

template <class T>
using EMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using EMap = Eigen::Map<EMat<T>>;
template <class T>
using ECMap = Eigen::Map<const EMat<T>>;

/*================================================= linear ====*/

// y[N,out] = x[N,in] . w[in,out] + b[out]
template <class T>
TensorT<T> linear_fwd(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& b) {
    require(x.shape.size() == 2 && w.shape.size() == 2 && b.shape.size() == 1,
            errc::invalid_argument, "linear: expected x[N,in], w[in,out], b[out]");
    const int n = x.dim(0), in = x.dim(1), out = w.dim(1);
    require(w.dim(0) == in && b.dim(0) == out, errc::invalid_argument,
            "linear: shape mismatch " + shape_str(x) + " x " + shape_str(w));
    TensorT<T> y({n, out});
    EMap<T>(y.data(), n, out).noalias() =
        ECMap<T>(x.data(), n, in) * ECMap<T>(w.data(), in, out);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < out; ++j) y.at(i, j) += b.v[size_t(j)];
    return y;
}

template <class T>
void linear_bwd(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& dy, TensorT<T>& dx,
                TensorT<T>& dw, TensorT<T>& db) {
    const int n = x.dim(0), in = x.dim(1), out = w.dim(1);
    dx = TensorT<T>({n, in});
    dw = TensorT<T>({in, out});
    db = TensorT<T>({out});
    EMap<T>(dx.data(), n, in).noalias() =
        ECMap<T>(dy.data(), n, out) * ECMap<T>(w.data(), in, out).transpose();
    EMap<T>(dw.data(), in, out).noalias() =
        ECMap<T>(x.data(), n, in).transpose() * ECMap<T>(dy.data(), n, out);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < out; ++j) db.v[size_t(j)] += dy.at(i, j);
}

// y[N,out] = x[N,in] . w[in,out] (projection without bias)
template <class T>
TensorT<T> matmul_fwd(const TensorT<T>& x, const TensorT<T>& w) {
    require(x.shape.size() == 2 && w.shape.size() == 2 && x.dim(1) == w.dim(0),
            errc::invalid_argument,
            "matmul: shape mismatch " + shape_str(x) + " x " + shape_str(w));
    const int n = x.dim(0), in = x.dim(1), out = w.dim(1);
    TensorT<T> y({n, out});
    EMap<T>(y.data(), n, out).noalias() =
        ECMap<T>(x.data(), n, in) * ECMap<T>(w.data(), in, out);
    return y;
}

template <class T>
void matmul_bwd(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& dy, TensorT<T>& dx,
                TensorT<T>& dw) {
    const int n = x.dim(0), in = x.dim(1), out = w.dim(1);
    dx = TensorT<T>({n, in});
    dw = TensorT<T>({in, out});
    EMap<T>(dx.data(), n, in).noalias() =
        ECMap<T>(dy.data(), n, out) * ECMap<T>(w.data(), in, out).transpose();
    EMap<T>(dw.data(), in, out).noalias() =
        ECMap<T>(x.data(), n, in).transpose() * ECMap<T>(dy.data(), n, out);
}

/*================================================= conv2d ====*/

inline int conv_out_size(int in, int k, int stride, int pad) {
    int num = in + 2 * pad - k;
    require(num >= 0, errc::invalid_argument, "conv2d: kernel larger than padded input");
    return num / stride + 1;  // floor
}

// column matrix [C*kh*kw, H'*W'] of input patches (zero padding)
template <class T>
TensorT<T> im2col(const TensorT<T>& x, int kh, int kw, int stride, int pad, int oh, int ow) {
    const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
    TensorT<T> cols({c * kh * kw, oh * ow});
    for (int ci = 0; ci < c; ++ci)
        for (int ky = 0; ky < kh; ++ky)
            for (int kx = 0; kx < kw; ++kx) {
                T* row = cols.data() + size_t((ci * kh + ky) * kw + kx) * oh * ow;
                for (int oy = 0; oy < oh; ++oy) {
                    int iy = oy * stride - pad + ky;
                    for (int ox = 0; ox < ow; ++ox) {
                        int ix = ox * stride - pad + kx;
                        row[oy * ow + ox] = (iy >= 0 && iy < h && ix >= 0 && ix < w)
                                                ? x.at(ci, iy, ix)
                                                : T(0);
                    }
                }
            }
    return cols;
}

template <class T>
void col2im(const TensorT<T>& cols, int c, int h, int w, int kh, int kw, int stride, int pad,
            int oh, int ow, TensorT<T>& x) {
    x = TensorT<T>({c, h, w});
    for (int ci = 0; ci < c; ++ci)
        for (int ky = 0; ky < kh; ++ky)
            for (int kx = 0; kx < kw; ++kx) {
                const T* row = cols.data() + size_t((ci * kh + ky) * kw + kx) * oh * ow;
                for (int oy = 0; oy < oh; ++oy) {
                    int iy = oy * stride - pad + ky;
                    if (iy < 0 || iy >= h) continue;
                    for (int ox = 0; ox < ow; ++ox) {
                        int ix = ox * stride - pad + kx;
                        if (ix >= 0 && ix < w) x.at(ci, iy, ix) += row[oy * ow + ox];
                    }
                }
            }
}

// cross-correlation: y[OC,H',W'], k[OC,C,kh,kw], zero padding
template <class T>
TensorT<T> conv2d_fwd(const TensorT<T>& x, const TensorT<T>& k, const TensorT<T>& b, int stride,
                      int pad) {
    require(x.shape.size() == 3 && k.shape.size() == 4 && b.shape.size() == 1,
            errc::invalid_argument, "conv2d: expected x[C,H,W], k[OC,C,kh,kw], b[OC]");
    const int c = x.dim(0), oc = k.dim(0), kh = k.dim(2), kw = k.dim(3);
    require(k.dim(1) == c, errc::invalid_argument,
            "conv2d: channel mismatch " + shape_str(x) + " vs " + shape_str(k));
    require(kh % 2 == 1 && kw % 2 == 1, errc::invalid_argument, "conv2d: kernel dims must be odd");
    require(b.dim(0) == oc, errc::invalid_argument, "conv2d: bias mismatch");
    const int oh = conv_out_size(x.dim(1), kh, stride, pad);
    const int ow = conv_out_size(x.dim(2), kw, stride, pad);

    TensorT<T> cols = im2col(x, kh, kw, stride, pad, oh, ow);
    TensorT<T> y({oc, oh, ow});
    EMap<T>(y.data(), oc, oh * ow).noalias() =
        ECMap<T>(k.data(), oc, c * kh * kw) * ECMap<T>(cols.data(), c * kh * kw, oh * ow);
    for (int o = 0; o < oc; ++o) {
        T* plane = y.data() + size_t(o) * oh * ow;
        for (int i = 0; i < oh * ow; ++i) plane[i] += b.v[size_t(o)];
    }
    return y;
}

template <class T>
void conv2d_bwd(const TensorT<T>& x, const TensorT<T>& k, int stride, int pad,
                const TensorT<T>& dy, TensorT<T>& dx, TensorT<T>& dk, TensorT<T>& db) {
    const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
    const int oc = k.dim(0), kh = k.dim(2), kw = k.dim(3);
    const int oh = dy.dim(1), ow = dy.dim(2);

    TensorT<T> cols = im2col(x, kh, kw, stride, pad, oh, ow);
    dk = TensorT<T>({oc, c, kh, kw});
    EMap<T>(dk.data(), oc, c * kh * kw).noalias() =
        ECMap<T>(dy.data(), oc, oh * ow) * ECMap<T>(cols.data(), c * kh * kw, oh * ow).transpose();

    db = TensorT<T>({oc});
    for (int o = 0; o < oc; ++o) {
        const T* plane = dy.data() + size_t(o) * oh * ow;
        T acc = 0;
        for (int i = 0; i < oh * ow; ++i) acc += plane[i];
        db.v[size_t(o)] = acc;
    }

    TensorT<T> dcols({c * kh * kw, oh * ow});
    EMap<T>(dcols.data(), c * kh * kw, oh * ow).noalias() =
        ECMap<T>(k.data(), oc, c * kh * kw).transpose() * ECMap<T>(dy.data(), oc, oh * ow);
    col2im(dcols, c, h, w, kh, kw, stride, pad, oh, ow, dx);
}

/*================================================= silu ====*/

template <class T>
TensorT<T> silu_fwd(const TensorT<T>& x) {
    TensorT<T> y = x;
    for (auto& v : y.v) {
        T s = T(1) / (T(1) + std::exp(-v));
        v = v * s;
    }
    return y;
}

template <class T>
TensorT<T> silu_bwd(const TensorT<T>& x, const TensorT<T>& dy) {
    TensorT<T> dx = x;
    for (size_t i = 0; i < dx.v.size(); ++i) {
        T s = T(1) / (T(1) + std::exp(-x.v[i]));
        dx.v[i] = dy.v[i] * s * (T(1) + x.v[i] * (T(1) - s));
    }
    return dx;
}

/*================================================= group_norm ====*/

// normalize over (channels-in-group x H x W), then per-channel affine
template <class T>
TensorT<T> group_norm_fwd(const TensorT<T>& x, int groups, const TensorT<T>& gamma,
                          const TensorT<T>& beta, T eps, TensorT<T>* save_mean = nullptr,
                          TensorT<T>* save_rstd = nullptr) {
    require(x.shape.size() == 3, errc::invalid_argument, "group_norm: expected [C,H,W]");
    const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
    require(groups >= 1 && c % groups == 0, errc::invalid_argument,
            "group_norm: C not divisible by groups");
    require(gamma.dim(0) == c && beta.dim(0) == c, errc::invalid_argument,
            "group_norm: affine shape mismatch");
    const int cpg = c / groups;
    const int64_t m = int64_t(cpg) * h * w;

    TensorT<T> y({c, h, w});
    TensorT<T> mean({groups}), rstd({groups});
    for (int g = 0; g < groups; ++g) {
        const T* xs = x.data() + size_t(g) * cpg * h * w;
        T mu = 0;
        for (int64_t i = 0; i < m; ++i) mu += xs[i];
        mu /= T(m);
        T var = 0;
        for (int64_t i = 0; i < m; ++i) var += (xs[i] - mu) * (xs[i] - mu);
        var /= T(m);
        T rs = T(1) / std::sqrt(var + eps);
        mean.v[size_t(g)] = mu;
        rstd.v[size_t(g)] = rs;
        T* ys = y.data() + size_t(g) * cpg * h * w;
        for (int ci = 0; ci < cpg; ++ci) {
            T ga = gamma.v[size_t(g * cpg + ci)];
            T be = beta.v[size_t(g * cpg + ci)];
            for (int i = 0; i < h * w; ++i) {
                int64_t idx = int64_t(ci) * h * w + i;
                ys[idx] = (xs[idx] - mu) * rs * ga + be;
            }
        }
    }
    if (save_mean) *save_mean = mean;
    if (save_rstd) *save_rstd = rstd;
    return y;
}

template <class T>
void group_norm_bwd(const TensorT<T>& x, int groups, const TensorT<T>& gamma,
                    const TensorT<T>& mean, const TensorT<T>& rstd, const TensorT<T>& dy,
                    TensorT<T>& dx, TensorT<T>& dgamma, TensorT<T>& dbeta) {
    const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
    const int cpg = c / groups;
    const int64_t m = int64_t(cpg) * h * w;

    dx = TensorT<T>({c, h, w});
    dgamma = TensorT<T>({c});
    dbeta = TensorT<T>({c});
    for (int g = 0; g < groups; ++g) {
        const T mu = mean.v[size_t(g)], rs = rstd.v[size_t(g)];
        const T* xs = x.data() + size_t(g) * cpg * h * w;
        const T* dys = dy.data() + size_t(g) * cpg * h * w;
        T* dxs = dx.data() + size_t(g) * cpg * h * w;

        // accumulate sums of dxhat and dxhat*xhat over the group
        T sum_dxh = 0, sum_dxh_xh = 0;
        for (int ci = 0; ci < cpg; ++ci) {
            T ga = gamma.v[size_t(g * cpg + ci)];
            for (int i = 0; i < h * w; ++i) {
                int64_t idx = int64_t(ci) * h * w + i;
                T xh = (xs[idx] - mu) * rs;
                T dxh = dys[idx] * ga;
                sum_dxh += dxh;
                sum_dxh_xh += dxh * xh;
                dgamma.v[size_t(g * cpg + ci)] += dys[idx] * xh;
                dbeta.v[size_t(g * cpg + ci)] += dys[idx];
            }
        }
        for (int ci = 0; ci < cpg; ++ci) {
            T ga = gamma.v[size_t(g * cpg + ci)];
            for (int i = 0; i < h * w; ++i) {
                int64_t idx = int64_t(ci) * h * w + i;
                T xh = (xs[idx] - mu) * rs;
                T dxh = dys[idx] * ga;
                dxs[idx] = rs * (dxh - sum_dxh / T(m) - xh * sum_dxh_xh / T(m));
            }
        }
    }
}

/*================================================= attention ====*/

// out[n,dv] = softmax(Q.K^T / sqrt(d)) . V; rows of A sum to 1
template <class T>
TensorT<T> attention_fwd(const TensorT<T>& q, const TensorT<T>& k, const TensorT<T>& v,
                         TensorT<T>* save_attn = nullptr) {
    require(q.shape.size() == 2 && k.shape.size() == 2 && v.shape.size() == 2,
            errc::invalid_argument, "attention: expected 2-d Q, K, V");
    const int n = q.dim(0), d = q.dim(1), m = k.dim(0), dv = v.dim(1);
    require(k.dim(1) == d && v.dim(0) == m, errc::invalid_argument,
            "attention: shape mismatch Q" + shape_str(q) + " K" + shape_str(k) + " V" +
                shape_str(v));

    TensorT<T> attn({n, m});
    EMap<T>(attn.data(), n, m).noalias() =
        ECMap<T>(q.data(), n, d) * ECMap<T>(k.data(), m, d).transpose() / std::sqrt(T(d));
    for (int i = 0; i < n; ++i) {
        T* row = attn.data() + size_t(i) * m;
        T mx = row[0];
        for (int j = 1; j < m; ++j) mx = std::max(mx, row[j]);
        T sum = 0;
        for (int j = 0; j < m; ++j) {
            row[j] = std::exp(row[j] - mx);
            sum += row[j];
        }
        for (int j = 0; j < m; ++j) row[j] /= sum;
    }
    TensorT<T> out({n, dv});
    EMap<T>(out.data(), n, dv).noalias() = ECMap<T>(attn.data(), n, m) * ECMap<T>(v.data(), m, dv);
    if (save_attn) *save_attn = attn;
    return out;
}

template <class T>
void attention_bwd(const TensorT<T>& q, const TensorT<T>& k, const TensorT<T>& v,
                   const TensorT<T>& attn, const TensorT<T>& dout, TensorT<T>& dq, TensorT<T>& dk,
                   TensorT<T>& dv) {
    const int n = q.dim(0), d = q.dim(1), m = k.dim(0), dv_dim = v.dim(1);

    dv = TensorT<T>({m, dv_dim});
    EMap<T>(dv.data(), m, dv_dim).noalias() =
        ECMap<T>(attn.data(), n, m).transpose() * ECMap<T>(dout.data(), n, dv_dim);

    TensorT<T> dattn({n, m});
    EMap<T>(dattn.data(), n, m).noalias() =
        ECMap<T>(dout.data(), n, dv_dim) * ECMap<T>(v.data(), m, dv_dim).transpose();

    // softmax backward, rowwise: ds = a * (da - sum(da*a))
    TensorT<T> dscore({n, m});
    for (int i = 0; i < n; ++i) {
        const T* a = attn.data() + size_t(i) * m;
        const T* da = dattn.data() + size_t(i) * m;
        T dot = 0;
        for (int j = 0; j < m; ++j) dot += da[j] * a[j];
        T* ds = dscore.data() + size_t(i) * m;
        for (int j = 0; j < m; ++j) ds[j] = a[j] * (da[j] - dot);
    }
    const T inv_sqrt_d = T(1) / std::sqrt(T(d));
    dq = TensorT<T>({n, d});
    dk = TensorT<T>({m, d});
    EMap<T>(dq.data(), n, d).noalias() =
        ECMap<T>(dscore.data(), n, m) * ECMap<T>(k.data(), m, d) * inv_sqrt_d;
    EMap<T>(dk.data(), m, d).noalias() =
        ECMap<T>(dscore.data(), n, m).transpose() * ECMap<T>(q.data(), n, d) * inv_sqrt_d;
}

/*================================================= sinusoidal encoding ====*/

// out[k] = sin(s*w_k), out[dim/2+k] = cos(s*w_k), w_k = 10000^(-k/(dim/2))
template <class T>
TensorT<T> sinusoidal_encode(double s, int dim) {
    require(dim >= 2 && dim % 2 == 0, errc::invalid_argument,
            "sinusoidal_encode: dim must be even and >= 2");
    const int half = dim / 2;
    TensorT<T> out({dim});
    for (int k = 0; k < half; ++k) {
        double w = std::pow(10000.0, -double(k) / double(half));
        out.v[size_t(k)] = T(std::sin(s * w));
        out.v[size_t(half + k)] = T(std::cos(s * w));
    }
    return out;
}

/*================================================= shape movers ====*/

// [C,h,w] -> tokens [h*w, C]
template <class T>
TensorT<T> chw_to_tokens(const TensorT<T>& x) {
    const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
    TensorT<T> t({h * w, c});
    for (int ci = 0; ci < c; ++ci)
        for (int i = 0; i < h * w; ++i) t.v[size_t(i) * c + ci] = x.v[size_t(ci) * h * w + i];
    return t;
}

template <class T>
TensorT<T> tokens_to_chw(const TensorT<T>& t, int c, int h, int w) {
    TensorT<T> x({c, h, w});
    for (int ci = 0; ci < c; ++ci)
        for (int i = 0; i < h * w; ++i) x.v[size_t(ci) * h * w + i] = t.v[size_t(i) * c + ci];
    return x;
}

template <class T>
TensorT<T> upsample_nearest2x_fwd(const TensorT<T>& x) {
    const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
    TensorT<T> y({c, 2 * h, 2 * w});
    for (int ci = 0; ci < c; ++ci)
        for (int yy = 0; yy < 2 * h; ++yy)
            for (int xx = 0; xx < 2 * w; ++xx) y.at(ci, yy, xx) = x.at(ci, yy / 2, xx / 2);
    return y;
}

template <class T>
TensorT<T> upsample_nearest2x_bwd(const TensorT<T>& dy, int c, int h, int w) {
    TensorT<T> dx({c, h, w});
    for (int ci = 0; ci < c; ++ci)
        for (int yy = 0; yy < 2 * h; ++yy)
            for (int xx = 0; xx < 2 * w; ++xx) dx.at(ci, yy / 2, xx / 2) += dy.at(ci, yy, xx);
    return dx;
}

// [4C,h,w] -> [C,2h,2w]; channel index encodes the 2x2 sub-pixel position
template <class T>
TensorT<T> depth_to_space2_fwd(const TensorT<T>& x) {
    const int c4 = x.dim(0), h = x.dim(1), w = x.dim(2);
    require(c4 % 4 == 0, errc::invalid_argument, "depth_to_space2: channels must divide by 4");
    const int c = c4 / 4;
    TensorT<T> y({c, 2 * h, 2 * w});
    for (int ci = 0; ci < c; ++ci)
        for (int yy = 0; yy < 2 * h; ++yy)
            for (int xx = 0; xx < 2 * w; ++xx)
                y.at(ci, yy, xx) = x.at(ci * 4 + (yy % 2) * 2 + (xx % 2), yy / 2, xx / 2);
    return y;
}

template <class T>
TensorT<T> depth_to_space2_bwd(const TensorT<T>& dy, int c4, int h, int w) {
    const int c = c4 / 4;
    TensorT<T> dx({c4, h, w});
    for (int ci = 0; ci < c; ++ci)
        for (int yy = 0; yy < 2 * h; ++yy)
            for (int xx = 0; xx < 2 * w; ++xx)
                dx.at(ci * 4 + (yy % 2) * 2 + (xx % 2), yy / 2, xx / 2) = dy.at(ci, yy, xx);
    return dx;
}

}  // namespace osr
