#include "kernclass/tape.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

#include "kernclass/errors.hpp"

namespace kernclass {

namespace {

using MatRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Map = Eigen::Map<MatRM>;
using CMap = Eigen::Map<const MatRM>;

CMap as_matrix(const Tensor& t, int rows, int cols) { return CMap(t.data(), rows, cols); }
Map as_matrix(Tensor& t, int rows, int cols) { return Map(t.data(), rows, cols); }

// Sliding-window unfold along time: col row t is x[t:t+n] flattened, source
// rows past T contribute zeros. `x` is [T, c] (or any [T, c]-contiguous view).
Tensor im2col_time(const Tensor& x, int t_len, int c, int n) {
    Tensor col({t_len, n * c});
    for (int t = 0; t < t_len; ++t) {
        double* dst = col.data() + static_cast<std::size_t>(t) * n * c;
        int take = std::min(n, t_len - t);
        std::copy_n(x.data() + static_cast<std::size_t>(t) * c, static_cast<std::size_t>(take) * c,
                    dst);
    }
    return col;
}

void col2im_time_add(const Tensor& dcol, int t_len, int c, int n, Tensor& dx) {
    for (int t = 0; t < t_len; ++t) {
        const double* src = dcol.data() + static_cast<std::size_t>(t) * n * c;
        int take = std::min(n, t_len - t);
        double* dst = dx.data() + static_cast<std::size_t>(t) * c;
        for (std::size_t i = 0; i < static_cast<std::size_t>(take) * c; ++i) dst[i] += src[i];
    }
}

// Per-voice unfold: col row (t*P + p) is x[t:t+n, p, :] flattened.
Tensor im2col_time_voices(const Tensor& x, int t_len, int voices, int c, int n) {
    Tensor col({t_len * voices, n * c});
    for (int t = 0; t < t_len; ++t)
        for (int p = 0; p < voices; ++p) {
            double* dst = col.data() + (static_cast<std::size_t>(t) * voices + p) * n * c;
            for (int i = 0; i < n && t + i < t_len; ++i)
                std::copy_n(x.data() + (static_cast<std::size_t>(t + i) * voices + p) * c,
                            static_cast<std::size_t>(c), dst + static_cast<std::size_t>(i) * c);
        }
    return col;
}

void col2im_time_voices_add(const Tensor& dcol, int t_len, int voices, int c, int n, Tensor& dx) {
    for (int t = 0; t < t_len; ++t)
        for (int p = 0; p < voices; ++p) {
            const double* src = dcol.data() + (static_cast<std::size_t>(t) * voices + p) * n * c;
            for (int i = 0; i < n && t + i < t_len; ++i) {
                double* dst = dx.data() + (static_cast<std::size_t>(t + i) * voices + p) * c;
                for (int q = 0; q < c; ++q) dst[q] += src[static_cast<std::size_t>(i) * c + q];
            }
        }
}

// Pitch-axis unfold: col row (t*N + u) entry (p*j + jj) is f[t, p, u+jj],
// zero at or above N.
Tensor im2col_pitch(const Tensor& f, int t_len, int voices, int n_pitch, int j) {
    Tensor col({t_len * n_pitch, j * voices});
    for (int t = 0; t < t_len; ++t)
        for (int u = 0; u < n_pitch; ++u) {
            double* dst = col.data() + (static_cast<std::size_t>(t) * n_pitch + u) * j * voices;
            for (int p = 0; p < voices; ++p) {
                const double* src = f.data() + (static_cast<std::size_t>(t) * voices + p) * n_pitch;
                for (int jj = 0; jj < j && u + jj < n_pitch; ++jj)
                    dst[static_cast<std::size_t>(p) * j + jj] = src[u + jj];
            }
        }
    return col;
}

void col2im_pitch_add(const Tensor& dcol, int t_len, int voices, int n_pitch, int j, Tensor& df) {
    for (int t = 0; t < t_len; ++t)
        for (int u = 0; u < n_pitch; ++u) {
            const double* src =
                dcol.data() + (static_cast<std::size_t>(t) * n_pitch + u) * j * voices;
            for (int p = 0; p < voices; ++p) {
                double* dst = df.data() + (static_cast<std::size_t>(t) * voices + p) * n_pitch;
                for (int jj = 0; jj < j && u + jj < n_pitch; ++jj)
                    dst[u + jj] += src[static_cast<std::size_t>(p) * j + jj];
            }
        }
}

}  // namespace

NodeId Tape::push(Tensor value, bool tracked, std::function<void(Tape&)> back) {
    Node node;
    node.value = std::move(value);
    node.tracked = tracked;
    if (tracked) node.grad = Tensor(node.value.shape());
    node.back = std::move(back);
    nodes_.push_back(std::move(node));
    return static_cast<NodeId>(nodes_.size() - 1);
}

void Tape::set_back(NodeId id, std::function<void(Tape&)> back) {
    nodes_[static_cast<std::size_t>(id)].back = std::move(back);
}

NodeId Tape::constant(Tensor value) { return push(std::move(value), false, nullptr); }

NodeId Tape::leaf(Tensor value) {
    value.check_finite("leaf tensor");
    return push(std::move(value), true, nullptr);
}

const Tensor& Tape::grad(NodeId id) const {
    const Node& node = nodes_[static_cast<std::size_t>(id)];
    if (!node.tracked) throw Error("gradient requested for an untracked node");
    return node.grad;
}

NodeId Tape::linear(NodeId x, NodeId w) {
    const Tensor& xv = value(x);
    const Tensor& wv = value(w);
    if (wv.rank() != 2) throw ShapeMismatch("linear: weights must be rank 2");
    if (xv.rank() != 1 && xv.rank() != 2)
        throw ShapeMismatch("linear: input must be rank 1 or 2, got " + xv.shape_str());
    const int a = wv.dim(0), b = wv.dim(1);
    const int r = xv.rank() == 1 ? 1 : xv.dim(0);
    if (xv.dim(xv.rank() - 1) != a)
        throw ShapeMismatch("linear: input " + xv.shape_str() + " vs weights " + wv.shape_str());

    Tensor out(xv.rank() == 1 ? std::vector<int>{b} : std::vector<int>{r, b});
    as_matrix(out, r, b).noalias() = as_matrix(xv, r, a) * as_matrix(wv, a, b);

    bool tr = tracked(x) || tracked(w);
    NodeId self = push(std::move(out), tr, nullptr);
    if (tr)
        set_back(self, [self, x, w, r, a, b](Tape& t) {
            CMap dout = as_matrix(t.grad(self), r, b);
            if (t.tracked(x))
                as_matrix(t.grad_mut(x), r, a).noalias() +=
                    dout * as_matrix(t.value(w), a, b).transpose();
            if (t.tracked(w))
                as_matrix(t.grad_mut(w), a, b).noalias() +=
                    as_matrix(t.value(x), r, a).transpose() * dout;
        });
    return self;
}

NodeId Tape::conv_time(NodeId x, NodeId w, int n) {
    const Tensor& xv = value(x);
    const Tensor& wv = value(w);
    if (n < 1) throw ShapeMismatch("conv_time: window must be >= 1");
    if (xv.rank() != 2 || wv.rank() != 2)
        throw ShapeMismatch("conv_time: expected x [T, c] and w [n*c, k]");
    const int t_len = xv.dim(0), c = xv.dim(1), k = wv.dim(1);
    if (wv.dim(0) != n * c)
        throw ShapeMismatch("conv_time: weights " + wv.shape_str() + " do not match window " +
                            std::to_string(n) + " x channels " + std::to_string(c));

    Tensor col = im2col_time(xv, t_len, c, n);
    Tensor out({t_len, k});
    as_matrix(out, t_len, k).noalias() = as_matrix(col, t_len, n * c) * as_matrix(wv, n * c, k);

    bool tr = tracked(x) || tracked(w);
    NodeId self = push(std::move(out), tr, nullptr);
    if (tr)
        set_back(self, [self, x, w, n, t_len, c, k](Tape& t) {
            CMap dout = as_matrix(t.grad(self), t_len, k);
            if (t.tracked(x)) {
                Tensor dcol({t_len, n * c});
                as_matrix(dcol, t_len, n * c).noalias() =
                    dout * as_matrix(t.value(w), n * c, k).transpose();
                col2im_time_add(dcol, t_len, c, n, t.grad_mut(x));
            }
            if (t.tracked(w)) {
                Tensor col = im2col_time(t.value(x), t_len, c, n);
                as_matrix(t.grad_mut(w), n * c, k).noalias() +=
                    as_matrix(col, t_len, n * c).transpose() * dout;
            }
        });
    return self;
}

NodeId Tape::conv_time_voices(NodeId x, NodeId w, int n) {
    const Tensor& xv = value(x);
    const Tensor& wv = value(w);
    if (n < 1) throw ShapeMismatch("conv_time_voices: window must be >= 1");
    if (xv.rank() != 3 || wv.rank() != 2)
        throw ShapeMismatch("conv_time_voices: expected x [T, P, c] and w [n*c, k]");
    const int t_len = xv.dim(0), voices = xv.dim(1), c = xv.dim(2), k = wv.dim(1);
    if (wv.dim(0) != n * c)
        throw ShapeMismatch("conv_time_voices: weights " + wv.shape_str() +
                            " do not match window x channels");

    Tensor col = im2col_time_voices(xv, t_len, voices, c, n);
    Tensor out({t_len, voices, k});
    as_matrix(out, t_len * voices, k).noalias() =
        as_matrix(col, t_len * voices, n * c) * as_matrix(wv, n * c, k);

    bool tr = tracked(x) || tracked(w);
    NodeId self = push(std::move(out), tr, nullptr);
    if (tr)
        set_back(self, [self, x, w, n, t_len, voices, c, k](Tape& t) {
            CMap dout = as_matrix(t.grad(self), t_len * voices, k);
            if (t.tracked(x)) {
                Tensor dcol({t_len * voices, n * c});
                as_matrix(dcol, t_len * voices, n * c).noalias() =
                    dout * as_matrix(t.value(w), n * c, k).transpose();
                col2im_time_voices_add(dcol, t_len, voices, c, n, t.grad_mut(x));
            }
            if (t.tracked(w)) {
                Tensor col = im2col_time_voices(t.value(x), t_len, voices, c, n);
                as_matrix(t.grad_mut(w), n * c, k).noalias() +=
                    as_matrix(col, t_len * voices, n * c).transpose() * dout;
            }
        });
    return self;
}

NodeId Tape::conv_pitch(NodeId f, NodeId w, int j) {
    const Tensor& fv = value(f);
    const Tensor& wv = value(w);
    if (fv.rank() != 3 || wv.rank() != 2)
        throw ShapeMismatch("conv_pitch: expected f [T, P, N] and w [j*P, k]");
    const int t_len = fv.dim(0), voices = fv.dim(1), n_pitch = fv.dim(2), k = wv.dim(1);
    if (j < 1 || j > n_pitch) throw ShapeMismatch("conv_pitch: window must be in [1, N]");
    if (wv.dim(0) != j * voices)
        throw ShapeMismatch("conv_pitch: weights " + wv.shape_str() + " do not match j*P");

    Tensor col = im2col_pitch(fv, t_len, voices, n_pitch, j);
    Tensor out({t_len, n_pitch, k});
    as_matrix(out, t_len * n_pitch, k).noalias() =
        as_matrix(col, t_len * n_pitch, j * voices) * as_matrix(wv, j * voices, k);

    bool tr = tracked(f) || tracked(w);
    NodeId self = push(std::move(out), tr, nullptr);
    if (tr)
        set_back(self, [self, f, w, j, t_len, voices, n_pitch, k](Tape& t) {
            CMap dout = as_matrix(t.grad(self), t_len * n_pitch, k);
            if (t.tracked(f)) {
                Tensor dcol({t_len * n_pitch, j * voices});
                as_matrix(dcol, t_len * n_pitch, j * voices).noalias() =
                    dout * as_matrix(t.value(w), j * voices, k).transpose();
                col2im_pitch_add(dcol, t_len, voices, n_pitch, j, t.grad_mut(f));
            }
            if (t.tracked(w)) {
                Tensor col = im2col_pitch(t.value(f), t_len, voices, n_pitch, j);
                as_matrix(t.grad_mut(w), j * voices, k).noalias() +=
                    as_matrix(col, t_len * n_pitch, j * voices).transpose() * dout;
            }
        });
    return self;
}

NodeId Tape::relu(NodeId x) {
    const Tensor& xv = value(x);
    Tensor out(xv.shape());
    for (std::size_t i = 0; i < xv.size(); ++i) out[i] = xv[i] > 0.0 ? xv[i] : 0.0;

    bool tr = tracked(x);
    NodeId self = push(std::move(out), tr, nullptr);
    if (tr)
        set_back(self, [self, x](Tape& t) {
            const Tensor& xv = t.value(x);
            const Tensor& dout = t.grad(self);
            Tensor& dx = t.grad_mut(x);
            for (std::size_t i = 0; i < xv.size(); ++i)
                if (xv[i] > 0.0) dx[i] += dout[i];
        });
    return self;
}

NodeId Tape::mean_pool_all(NodeId x) {
    const Tensor& xv = value(x);
    if (xv.rank() != 3) throw ShapeMismatch("mean_pool_all: expected [T, P, k]");
    const int rows = xv.dim(0) * xv.dim(1), k = xv.dim(2);
    const double denom = static_cast<double>(rows);
    Tensor out({k});
    for (int r = 0; r < rows; ++r)
        for (int m = 0; m < k; ++m) out[m] += xv[static_cast<std::size_t>(r) * k + m];
    for (int m = 0; m < k; ++m) out[m] /= denom;

    bool tr = tracked(x);
    NodeId self = push(std::move(out), tr, nullptr);
    if (tr)
        set_back(self, [self, x, rows, k, denom](Tape& t) {
            const Tensor& dout = t.grad(self);
            Tensor& dx = t.grad_mut(x);
            for (int r = 0; r < rows; ++r)
                for (int m = 0; m < k; ++m) dx[static_cast<std::size_t>(r) * k + m] += dout[m] / denom;
        });
    return self;
}

NodeId Tape::mean_pool_rows(NodeId x) {
    const Tensor& xv = value(x);
    if (xv.rank() != 2) throw ShapeMismatch("mean_pool_rows: expected [T, k]");
    const int rows = xv.dim(0), k = xv.dim(1);
    const double denom = static_cast<double>(rows);
    Tensor out({k});
    for (int r = 0; r < rows; ++r)
        for (int m = 0; m < k; ++m) out[m] += xv[static_cast<std::size_t>(r) * k + m];
    for (int m = 0; m < k; ++m) out[m] /= denom;

    bool tr = tracked(x);
    NodeId self = push(std::move(out), tr, nullptr);
    if (tr)
        set_back(self, [self, x, rows, k, denom](Tape& t) {
            const Tensor& dout = t.grad(self);
            Tensor& dx = t.grad_mut(x);
            for (int r = 0; r < rows; ++r)
                for (int m = 0; m < k; ++m) dx[static_cast<std::size_t>(r) * k + m] += dout[m] / denom;
        });
    return self;
}

NodeId Tape::mean_over_axis1(NodeId x) {
    const Tensor& xv = value(x);
    if (xv.rank() != 3) throw ShapeMismatch("mean_over_axis1: expected [T, P, c]");
    const int t_len = xv.dim(0), voices = xv.dim(1), c = xv.dim(2);
    const double denom = static_cast<double>(voices);
    Tensor out({t_len, c});
    for (int t = 0; t < t_len; ++t)
        for (int p = 0; p < voices; ++p)
            for (int m = 0; m < c; ++m)
                out[static_cast<std::size_t>(t) * c + m] +=
                    xv[(static_cast<std::size_t>(t) * voices + p) * c + m];
    for (std::size_t i = 0; i < out.size(); ++i) out[i] /= denom;

    bool tr = tracked(x);
    NodeId self = push(std::move(out), tr, nullptr);
    if (tr)
        set_back(self, [self, x, t_len, voices, c, denom](Tape& t) {
            const Tensor& dout = t.grad(self);
            Tensor& dx = t.grad_mut(x);
            for (int tt = 0; tt < t_len; ++tt)
                for (int p = 0; p < voices; ++p)
                    for (int m = 0; m < c; ++m)
                        dx[(static_cast<std::size_t>(tt) * voices + p) * c + m] +=
                            dout[static_cast<std::size_t>(tt) * c + m] / denom;
        });
    return self;
}

NodeId Tape::add(NodeId a, NodeId b) {
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    if (!av.same_shape(bv))
        throw ShapeMismatch("add: " + av.shape_str() + " vs " + bv.shape_str());
    Tensor out(av.shape());
    for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] + bv[i];

    bool tr = tracked(a) || tracked(b);
    NodeId self = push(std::move(out), tr, nullptr);
    if (tr)
        set_back(self, [self, a, b](Tape& t) {
            const Tensor& dout = t.grad(self);
            if (t.tracked(a)) {
                Tensor& da = t.grad_mut(a);
                for (std::size_t i = 0; i < dout.size(); ++i) da[i] += dout[i];
            }
            if (t.tracked(b)) {
                Tensor& db = t.grad_mut(b);
                for (std::size_t i = 0; i < dout.size(); ++i) db[i] += dout[i];
            }
        });
    return self;
}

NodeId Tape::scale(NodeId x, double c) {
    const Tensor& xv = value(x);
    Tensor out(xv.shape());
    for (std::size_t i = 0; i < xv.size(); ++i) out[i] = c * xv[i];

    bool tr = tracked(x);
    NodeId self = push(std::move(out), tr, nullptr);
    if (tr)
        set_back(self, [self, x, c](Tape& t) {
            const Tensor& dout = t.grad(self);
            Tensor& dx = t.grad_mut(x);
            for (std::size_t i = 0; i < dout.size(); ++i) dx[i] += c * dout[i];
        });
    return self;
}

NodeId Tape::softmax_cross_entropy(NodeId logits, int label) {
    const Tensor& z = value(logits);
    // One class is legal: the loss is identically zero.
    if (z.rank() != 1 || z.dim(0) < 1)
        throw ShapeMismatch("softmax_cross_entropy: need a non-empty logit vector");
    const int classes = z.dim(0);
    if (label < 0 || label >= classes)
        throw LabelOutOfRange("label " + std::to_string(label) + " outside [0, " +
                              std::to_string(classes) + ")");

    // Max-subtraction plus log1p over the non-max terms: the max term's
    // exp(0) = 1 is folded in exactly, so tiny losses keep full precision.
    int imax = 0;
    for (int i = 1; i < classes; ++i)
        if (z[static_cast<std::size_t>(i)] > z[static_cast<std::size_t>(imax)]) imax = i;
    const double mx = z[static_cast<std::size_t>(imax)];
    double sum_rest = 0.0;
    for (int i = 0; i < classes; ++i)
        if (i != imax) sum_rest += std::exp(z[static_cast<std::size_t>(i)] - mx);
    double loss = std::log1p(sum_rest) - (z[static_cast<std::size_t>(label)] - mx);

    bool tr = tracked(logits);
    NodeId self = push(Tensor::scalar(loss), tr, nullptr);
    if (tr)
        set_back(self, [self, logits, label, classes, mx, sum_rest](Tape& t) {
            double d = t.grad(self)[0];
            const Tensor& z = t.value(logits);
            Tensor& dz = t.grad_mut(logits);
            const double denom = 1.0 + sum_rest;
            for (int i = 0; i < classes; ++i) {
                double p = std::exp(z[static_cast<std::size_t>(i)] - mx) / denom;
                dz[static_cast<std::size_t>(i)] += d * (p - (i == label ? 1.0 : 0.0));
            }
        });
    return self;
}

void Tape::backward(NodeId root) {
    if (backward_done_) throw Error("backward() called twice on one tape");
    backward_done_ = true;
    const Node& r = nodes_[static_cast<std::size_t>(root)];
    if (r.value.size() != 1) throw ShapeMismatch("backward root must hold a single value");
    if (!r.tracked) throw Error("backward root does not depend on any tracked leaf");
    grad_mut(root)[0] = 1.0;
    for (NodeId id = root; id >= 0; --id) {
        Node& node = nodes_[static_cast<std::size_t>(id)];
        if (node.tracked && node.back) node.back(*this);
    }
}

}  // namespace kernclass
