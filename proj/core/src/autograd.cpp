#include "gencodec/autograd.hpp"

#include <cmath>

#include "gencodec/errors.hpp"

namespace gencodec::ag {

Value* Graph::make(Tensor val, bool needs_grad) {
    nodes_.emplace_back();
    Value& v = nodes_.back();
    v.val = std::move(val);
    v.needs_grad = needs_grad;
    v.graph = this;
    return &v;
}

Value* Graph::leaf(const Tensor& t, bool needs_grad) {
    return make(t, needs_grad);
}

void Graph::backward(Value* root) {
    if (root->val.numel() != 1)
        throw InvalidArgument("backward: root must be a scalar");
    ensure_grad(root);
    root->grad.fill(1.0);
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
        Value& v = *it;
        if (v.grad.defined() && v.pull) v.pull(v);
    }
}

void ensure_grad(Value* v) {
    if (!v->grad.defined()) v->grad = Tensor::zeros(v->val.shape());
}

namespace {

enum class BKind { Same, Scalar, Channel, RowVec };

BKind classify(const Tensor& a, const Tensor& b) {
    if (a.same_shape(b)) return BKind::Same;
    if (b.numel() == 1) return BKind::Scalar;
    if (a.ndim() == 3 && b.ndim() == 3 && b.dim(0) == a.dim(0) && b.dim(1) == 1 && b.dim(2) == 1)
        return BKind::Channel;
    if (a.ndim() == 2 && b.ndim() == 1 && b.dim(0) == a.dim(1)) return BKind::RowVec;
    throw InvalidArgument("binary op: incompatible shapes " + a.shape_str() + " vs " + b.shape_str());
}

// Index of the rhs element matched with flat lhs index i.
inline std::int64_t rhs_index(BKind k, std::int64_t i, std::int64_t inner, std::int64_t ncols) {
    switch (k) {
        case BKind::Same: return i;
        case BKind::Scalar: return 0;
        case BKind::Channel: return i / inner;
        case BKind::RowVec: return i % ncols;
    }
    return 0;
}

struct Geometry {
    BKind kind;
    std::int64_t inner = 1; // H*W for Channel
    std::int64_t ncols = 1; // N for RowVec
};

Geometry geometry_of(const Tensor& a, const Tensor& b) {
    Geometry g;
    g.kind = classify(a, b);
    if (g.kind == BKind::Channel) g.inner = static_cast<std::int64_t>(a.dim(1)) * a.dim(2);
    if (g.kind == BKind::RowVec) g.ncols = a.dim(1);
    return g;
}

template <class Fwd, class Pull>
Value* unary_op(Value* a, Fwd&& fwd, Pull&& pull_fn) {
    Graph* g = a->graph;
    Tensor out(a->val.shape());
    const double* ap = a->val.data();
    double* op = out.data();
    const std::int64_t n = out.numel();
    for (std::int64_t i = 0; i < n; ++i) op[i] = fwd(ap[i]);
    Value* y = g->make(std::move(out), a->needs_grad);
    if (a->needs_grad) {
        y->pull = [a, pull_fn](Value& self) {
            ensure_grad(a);
            const double* gp = self.grad.data();
            const double* ap2 = a->val.data();
            const double* yp = self.val.data();
            double* dst = a->grad.data();
            const std::int64_t m = self.val.numel();
            for (std::int64_t i = 0; i < m; ++i) dst[i] += pull_fn(ap2[i], yp[i]) * gp[i];
        };
    }
    return y;
}

} // namespace

#define GENCODEC_BINARY_COMMON()                                     \
    Graph* g = a->graph;                                             \
    const Geometry geo = geometry_of(a->val, b->val);                \
    Tensor out(a->val.shape());                                      \
    const double* ap = a->val.data();                                \
    const double* bp = b->val.data();                                \
    double* op = out.data();                                         \
    const std::int64_t n = out.numel();

Value* add(Value* a, Value* b) {
    GENCODEC_BINARY_COMMON()
    for (std::int64_t i = 0; i < n; ++i) op[i] = ap[i] + bp[rhs_index(geo.kind, i, geo.inner, geo.ncols)];
    Value* y = g->make(std::move(out), a->needs_grad || b->needs_grad);
    if (y->needs_grad) {
        y->pull = [a, b, geo](Value& self) {
            const double* gp = self.grad.data();
            const std::int64_t m = self.val.numel();
            if (a->needs_grad) {
                ensure_grad(a);
                a->grad.add_(self.grad);
            }
            if (b->needs_grad) {
                ensure_grad(b);
                double* db = b->grad.data();
                for (std::int64_t i = 0; i < m; ++i) db[rhs_index(geo.kind, i, geo.inner, geo.ncols)] += gp[i];
            }
        };
    }
    return y;
}

Value* sub(Value* a, Value* b) {
    GENCODEC_BINARY_COMMON()
    for (std::int64_t i = 0; i < n; ++i) op[i] = ap[i] - bp[rhs_index(geo.kind, i, geo.inner, geo.ncols)];
    Value* y = g->make(std::move(out), a->needs_grad || b->needs_grad);
    if (y->needs_grad) {
        y->pull = [a, b, geo](Value& self) {
            const double* gp = self.grad.data();
            const std::int64_t m = self.val.numel();
            if (a->needs_grad) {
                ensure_grad(a);
                a->grad.add_(self.grad);
            }
            if (b->needs_grad) {
                ensure_grad(b);
                double* db = b->grad.data();
                for (std::int64_t i = 0; i < m; ++i) db[rhs_index(geo.kind, i, geo.inner, geo.ncols)] -= gp[i];
            }
        };
    }
    return y;
}

Value* mul(Value* a, Value* b) {
    GENCODEC_BINARY_COMMON()
    for (std::int64_t i = 0; i < n; ++i) op[i] = ap[i] * bp[rhs_index(geo.kind, i, geo.inner, geo.ncols)];
    Value* y = g->make(std::move(out), a->needs_grad || b->needs_grad);
    if (y->needs_grad) {
        y->pull = [a, b, geo](Value& self) {
            const double* gp = self.grad.data();
            const double* ap2 = a->val.data();
            const double* bp2 = b->val.data();
            const std::int64_t m = self.val.numel();
            if (a->needs_grad) {
                ensure_grad(a);
                double* da = a->grad.data();
                for (std::int64_t i = 0; i < m; ++i) da[i] += gp[i] * bp2[rhs_index(geo.kind, i, geo.inner, geo.ncols)];
            }
            if (b->needs_grad) {
                ensure_grad(b);
                double* db = b->grad.data();
                for (std::int64_t i = 0; i < m; ++i) db[rhs_index(geo.kind, i, geo.inner, geo.ncols)] += gp[i] * ap2[i];
            }
        };
    }
    return y;
}

Value* div(Value* a, Value* b) {
    GENCODEC_BINARY_COMMON()
    for (std::int64_t i = 0; i < n; ++i) op[i] = ap[i] / bp[rhs_index(geo.kind, i, geo.inner, geo.ncols)];
    Value* y = g->make(std::move(out), a->needs_grad || b->needs_grad);
    if (y->needs_grad) {
        y->pull = [a, b, geo](Value& self) {
            const double* gp = self.grad.data();
            const double* ap2 = a->val.data();
            const double* bp2 = b->val.data();
            const std::int64_t m = self.val.numel();
            if (a->needs_grad) {
                ensure_grad(a);
                double* da = a->grad.data();
                for (std::int64_t i = 0; i < m; ++i) da[i] += gp[i] / bp2[rhs_index(geo.kind, i, geo.inner, geo.ncols)];
            }
            if (b->needs_grad) {
                ensure_grad(b);
                double* db = b->grad.data();
                for (std::int64_t i = 0; i < m; ++i) {
                    const std::int64_t j = rhs_index(geo.kind, i, geo.inner, geo.ncols);
                    db[j] -= gp[i] * ap2[i] / (bp2[j] * bp2[j]);
                }
            }
        };
    }
    return y;
}

#undef GENCODEC_BINARY_COMMON

Value* add_scalar(Value* a, double s) {
    return unary_op(
        a, [s](double x) { return x + s; }, [](double, double) { return 1.0; });
}

Value* mul_scalar(Value* a, double s) {
    return unary_op(
        a, [s](double x) { return x * s; }, [s](double, double) { return s; });
}

Value* neg(Value* a) { return mul_scalar(a, -1.0); }

Value* exp_op(Value* a) {
    return unary_op(
        a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Value* log_op(Value* a) {
    return unary_op(
        a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Value* sqrt_op(Value* a) {
    return unary_op(
        a, [](double x) { return std::sqrt(x); }, [](double, double y) { return 0.5 / y; });
}

Value* erf_op(Value* a) {
    constexpr double kTwoOverSqrtPi = 1.12837916709551257390;
    return unary_op(
        a, [](double x) { return std::erf(x); },
        [kTwoOverSqrtPi](double x, double) { return kTwoOverSqrtPi * std::exp(-x * x); });
}

Value* abs_op(Value* a) {
    return unary_op(
        a, [](double x) { return std::fabs(x); },
        [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Value* square(Value* a) {
    return unary_op(
        a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Value* pow_scalar(Value* a, double p) {
    return unary_op(
        a, [p](double x) { return std::pow(x, p); },
        [p](double x, double y) { return x == 0.0 ? 0.0 : p * y / x; });
}

Value* sigmoid(Value* a) {
    return unary_op(
        a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
        [](double, double y) { return y * (1.0 - y); });
}

Value* silu(Value* a) {
    return unary_op(
        a,
        [](double x) { return x / (1.0 + std::exp(-x)); },
        [](double x, double) {
            const double s = 1.0 / (1.0 + std::exp(-x));
            return s * (1.0 + x * (1.0 - s));
        });
}

Value* relu(Value* a) {
    return unary_op(
        a, [](double x) { return x > 0.0 ? x : 0.0; },
        [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Value* leaky_relu(Value* a, double slope) {
    return unary_op(
        a, [slope](double x) { return x > 0.0 ? x : slope * x; },
        [slope](double x, double) { return x > 0.0 ? 1.0 : slope; });
}

Value* tanh_op(Value* a) {
    return unary_op(
        a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Value* clamp_min(Value* a, double lo) {
    return unary_op(
        a, [lo](double x) { return x < lo ? lo : x; },
        [lo](double x, double) { return x > lo ? 1.0 : 0.0; });
}

Value* clamp(Value* a, double lo, double hi) {
    return unary_op(
        a, [lo, hi](double x) { return x < lo ? lo : (x > hi ? hi : x); },
        [lo, hi](double x, double) { return (x > lo && x < hi) ? 1.0 : 0.0; });
}

Value* round_ste(Value* a) {
    return unary_op(
        a, [](double x) { return std::round(x); }, [](double, double) { return 1.0; });
}

Value* sum_all(Value* a) {
    Graph* g = a->graph;
    Tensor out({1}, a->val.sum());
    Value* y = g->make(std::move(out), a->needs_grad);
    if (a->needs_grad) {
        y->pull = [a](Value& self) {
            ensure_grad(a);
            const double gv = self.grad[0];
            double* da = a->grad.data();
            const std::int64_t n = a->val.numel();
            for (std::int64_t i = 0; i < n; ++i) da[i] += gv;
        };
    }
    return y;
}

Value* mean_all(Value* a) {
    return mul_scalar(sum_all(a), 1.0 / static_cast<double>(a->val.numel()));
}

Value* mean_hw(Value* a) {
    Graph* g = a->graph;
    const int C = a->val.dim(0);
    const std::int64_t inner = static_cast<std::int64_t>(a->val.dim(1)) * a->val.dim(2);
    Tensor out({C, 1, 1});
    const double* ap = a->val.data();
    for (int c = 0; c < C; ++c) {
        double s = 0.0;
        for (std::int64_t i = 0; i < inner; ++i) s += ap[c * inner + i];
        out[c] = s / static_cast<double>(inner);
    }
    Value* y = g->make(std::move(out), a->needs_grad);
    if (a->needs_grad) {
        y->pull = [a, C, inner](Value& self) {
            ensure_grad(a);
            double* da = a->grad.data();
            const double* gp = self.grad.data();
            for (int c = 0; c < C; ++c) {
                const double gv = gp[c] / static_cast<double>(inner);
                for (std::int64_t i = 0; i < inner; ++i) da[c * inner + i] += gv;
            }
        };
    }
    return y;
}

Value* reshape(Value* a, std::vector<int> shape) {
    Graph* g = a->graph;
    Value* y = g->make(a->val.reshaped(shape), a->needs_grad);
    if (a->needs_grad) {
        y->pull = [a](Value& self) {
            ensure_grad(a);
            a->grad.add_(self.grad.reshaped(a->val.shape()));
        };
    }
    return y;
}

Value* crop_hw(Value* a, int h, int w) {
    Graph* g = a->graph;
    const int c = a->val.dim(0), ih = a->val.dim(1), iw = a->val.dim(2);
    if (h > ih || w > iw) throw InvalidArgument("crop_hw: target larger than input");
    if (h == ih && w == iw) return a;
    Tensor out({c, h, w});
    const double* ap = a->val.data();
    double* op = out.data();
    for (int ci = 0; ci < c; ++ci)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                op[(static_cast<std::int64_t>(ci) * h + y) * w + x] =
                    ap[(static_cast<std::int64_t>(ci) * ih + y) * iw + x];
    Value* y = g->make(std::move(out), a->needs_grad);
    if (a->needs_grad) {
        y->pull = [a, c, h, w, ih, iw](Value& self) {
            ensure_grad(a);
            const double* gp = self.grad.data();
            double* da = a->grad.data();
            for (int ci = 0; ci < c; ++ci)
                for (int yy = 0; yy < h; ++yy)
                    for (int xx = 0; xx < w; ++xx)
                        da[(static_cast<std::int64_t>(ci) * ih + yy) * iw + xx] +=
                            gp[(static_cast<std::int64_t>(ci) * h + yy) * w + xx];
        };
    }
    return y;
}

Value* concat_ch(Value* a, Value* b) {
    Graph* g = a->graph;
    const int Ca = a->val.dim(0), Cb = b->val.dim(0);
    const int H = a->val.dim(1), W = a->val.dim(2);
    if (b->val.dim(1) != H || b->val.dim(2) != W)
        throw InvalidArgument("concat_ch: spatial mismatch");
    Tensor out({Ca + Cb, H, W});
    const std::int64_t na = a->val.numel(), nb = b->val.numel();
    std::copy(a->val.data(), a->val.data() + na, out.data());
    std::copy(b->val.data(), b->val.data() + nb, out.data() + na);
    Value* y = g->make(std::move(out), a->needs_grad || b->needs_grad);
    if (y->needs_grad) {
        y->pull = [a, b, na, nb](Value& self) {
            const double* gp = self.grad.data();
            if (a->needs_grad) {
                ensure_grad(a);
                double* da = a->grad.data();
                for (std::int64_t i = 0; i < na; ++i) da[i] += gp[i];
            }
            if (b->needs_grad) {
                ensure_grad(b);
                double* db = b->grad.data();
                for (std::int64_t i = 0; i < nb; ++i) db[i] += gp[na + i];
            }
        };
    }
    return y;
}

Value* slice_ch(Value* a, int c0, int c1) {
    Graph* g = a->graph;
    const int H = a->val.dim(1), W = a->val.dim(2);
    const std::int64_t inner = static_cast<std::int64_t>(H) * W;
    Tensor out({c1 - c0, H, W});
    std::copy(a->val.data() + c0 * inner, a->val.data() + c1 * inner, out.data());
    Value* y = g->make(std::move(out), a->needs_grad);
    if (a->needs_grad) {
        y->pull = [a, c0, inner](Value& self) {
            ensure_grad(a);
            double* da = a->grad.data() + c0 * inner;
            const double* gp = self.grad.data();
            const std::int64_t n = self.val.numel();
            for (std::int64_t i = 0; i < n; ++i) da[i] += gp[i];
        };
    }
    return y;
}

Value* chw_to_tokens(Value* a) {
    Graph* g = a->graph;
    const int C = a->val.dim(0), H = a->val.dim(1), W = a->val.dim(2);
    const std::int64_t hw = static_cast<std::int64_t>(H) * W;
    Tensor out({static_cast<int>(hw), C});
    const double* ap = a->val.data();
    double* op = out.data();
    for (int c = 0; c < C; ++c)
        for (std::int64_t p = 0; p < hw; ++p) op[p * C + c] = ap[c * hw + p];
    Value* y = g->make(std::move(out), a->needs_grad);
    if (a->needs_grad) {
        y->pull = [a, C, hw](Value& self) {
            ensure_grad(a);
            double* da = a->grad.data();
            const double* gp = self.grad.data();
            for (int c = 0; c < C; ++c)
                for (std::int64_t p = 0; p < hw; ++p) da[c * hw + p] += gp[p * C + c];
        };
    }
    return y;
}

Value* tokens_to_chw(Value* a, int c, int h, int w) {
    Graph* g = a->graph;
    const std::int64_t hw = static_cast<std::int64_t>(h) * w;
    if (a->val.dim(0) != hw || a->val.dim(1) != c)
        throw InvalidArgument("tokens_to_chw: shape mismatch");
    Tensor out({c, h, w});
    const double* ap = a->val.data();
    double* op = out.data();
    for (std::int64_t p = 0; p < hw; ++p)
        for (int ci = 0; ci < c; ++ci) op[ci * hw + p] = ap[p * c + ci];
    Value* y = g->make(std::move(out), a->needs_grad);
    if (a->needs_grad) {
        y->pull = [a, c, hw](Value& self) {
            ensure_grad(a);
            double* da = a->grad.data();
            const double* gp = self.grad.data();
            for (std::int64_t p = 0; p < hw; ++p)
                for (int ci = 0; ci < c; ++ci) da[p * c + ci] += gp[ci * hw + p];
        };
    }
    return y;
}

Value* matmul(Value* a, Value* b) {
    Graph* g = a->graph;
    const int m = a->val.dim(0), k = a->val.dim(1), n = b->val.dim(1);
    if (b->val.dim(0) != k) throw InvalidArgument("matmul: inner dim mismatch");
    Tensor out({m, n});
    const double* ap = a->val.data();
    const double* bp = b->val.data();
    double* op = out.data();
    for (int i = 0; i < m; ++i)
        for (int kk = 0; kk < k; ++kk) {
            const double av = ap[i * k + kk];
            const double* brow = bp + static_cast<std::int64_t>(kk) * n;
            double* orow = op + static_cast<std::int64_t>(i) * n;
            for (int j = 0; j < n; ++j) orow[j] += av * brow[j];
        }
    Value* y = g->make(std::move(out), a->needs_grad || b->needs_grad);
    if (y->needs_grad) {
        y->pull = [a, b, m, k, n](Value& self) {
            const double* gp = self.grad.data();
            const double* ap2 = a->val.data();
            const double* bp2 = b->val.data();
            if (a->needs_grad) {
                ensure_grad(a);
                double* da = a->grad.data();
                // dA = G * B^T
                for (int i = 0; i < m; ++i)
                    for (int kk = 0; kk < k; ++kk) {
                        double s = 0.0;
                        for (int j = 0; j < n; ++j) s += gp[i * n + j] * bp2[kk * n + j];
                        da[i * k + kk] += s;
                    }
            }
            if (b->needs_grad) {
                ensure_grad(b);
                double* db = b->grad.data();
                // dB = A^T * G
                for (int kk = 0; kk < k; ++kk)
                    for (int i = 0; i < m; ++i) {
                        const double av = ap2[i * k + kk];
                        for (int j = 0; j < n; ++j) db[kk * n + j] += av * gp[i * n + j];
                    }
            }
        };
    }
    return y;
}

Value* matmul_nt(Value* a, Value* b) {
    Graph* g = a->graph;
    const int m = a->val.dim(0), k = a->val.dim(1), n = b->val.dim(0);
    if (b->val.dim(1) != k) throw InvalidArgument("matmul_nt: inner dim mismatch");
    Tensor out({m, n});
    const double* ap = a->val.data();
    const double* bp = b->val.data();
    double* op = out.data();
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            const double* arow = ap + static_cast<std::int64_t>(i) * k;
            const double* brow = bp + static_cast<std::int64_t>(j) * k;
            for (int kk = 0; kk < k; ++kk) s += arow[kk] * brow[kk];
            op[i * n + j] = s;
        }
    Value* y = g->make(std::move(out), a->needs_grad || b->needs_grad);
    if (y->needs_grad) {
        y->pull = [a, b, m, k, n](Value& self) {
            const double* gp = self.grad.data();
            const double* ap2 = a->val.data();
            const double* bp2 = b->val.data();
            if (a->needs_grad) {
                ensure_grad(a);
                double* da = a->grad.data();
                // dA = G * B
                for (int i = 0; i < m; ++i)
                    for (int j = 0; j < n; ++j) {
                        const double gv = gp[i * n + j];
                        for (int kk = 0; kk < k; ++kk) da[i * k + kk] += gv * bp2[j * k + kk];
                    }
            }
            if (b->needs_grad) {
                ensure_grad(b);
                double* db = b->grad.data();
                // dB = G^T * A
                for (int j = 0; j < n; ++j)
                    for (int i = 0; i < m; ++i) {
                        const double gv = gp[i * n + j];
                        for (int kk = 0; kk < k; ++kk) db[j * k + kk] += gv * ap2[i * k + kk];
                    }
            }
        };
    }
    return y;
}

Value* softmax_rows(Value* a) {
    Graph* g = a->graph;
    const int m = a->val.dim(0), n = a->val.dim(1);
    Tensor out({m, n});
    const double* ap = a->val.data();
    double* op = out.data();
    for (int i = 0; i < m; ++i) {
        const double* row = ap + static_cast<std::int64_t>(i) * n;
        double mx = row[0];
        for (int j = 1; j < n; ++j) mx = std::max(mx, row[j]);
        double z = 0.0;
        for (int j = 0; j < n; ++j) z += std::exp(row[j] - mx);
        for (int j = 0; j < n; ++j) op[i * n + j] = std::exp(row[j] - mx) / z;
    }
    Value* y = g->make(std::move(out), a->needs_grad);
    if (a->needs_grad) {
        y->pull = [a, m, n](Value& self) {
            ensure_grad(a);
            const double* gp = self.grad.data();
            const double* yp = self.val.data();
            double* da = a->grad.data();
            for (int i = 0; i < m; ++i) {
                double dot = 0.0;
                for (int j = 0; j < n; ++j) dot += gp[i * n + j] * yp[i * n + j];
                for (int j = 0; j < n; ++j) da[i * n + j] += yp[i * n + j] * (gp[i * n + j] - dot);
            }
        };
    }
    return y;
}

namespace {

struct ConvDims {
    int ci, h, w;     // input
    int co, kh, kw;   // kernel
    int ho, wo;       // output
    int stride, pad;
};

inline void conv_bounds(int out_dim, int in_dim, int stride, int pad, int kidx, int& lo, int& hi) {
    // Output rows for which in = out*stride - pad + kidx lands inside [0, in_dim).
    lo = 0;
    while (lo < out_dim && lo * stride - pad + kidx < 0) ++lo;
    hi = out_dim;
    while (hi > lo && (hi - 1) * stride - pad + kidx >= in_dim) --hi;
}

} // namespace

Value* conv2d(Value* x, Value* w, Value* b, int stride, int pad) {
    Graph* g = x->graph;
    ConvDims d;
    d.ci = x->val.dim(0);
    d.h = x->val.dim(1);
    d.w = x->val.dim(2);
    d.co = w->val.dim(0);
    d.kh = w->val.dim(2);
    d.kw = w->val.dim(3);
    d.stride = stride;
    d.pad = pad;
    if (w->val.dim(1) != d.ci) throw InvalidArgument("conv2d: channel mismatch");
    d.ho = (d.h + 2 * pad - d.kh) / stride + 1;
    d.wo = (d.w + 2 * pad - d.kw) / stride + 1;

    Tensor out({d.co, d.ho, d.wo});
    const double* xp = x->val.data();
    const double* wp = w->val.data();
    double* op = out.data();
    const std::int64_t in_hw = static_cast<std::int64_t>(d.h) * d.w;
    const std::int64_t out_hw = static_cast<std::int64_t>(d.ho) * d.wo;

    if (b) {
        const double* bp = b->val.data();
        for (int co = 0; co < d.co; ++co)
            for (std::int64_t i = 0; i < out_hw; ++i) op[co * out_hw + i] = bp[co];
    }
    for (int co = 0; co < d.co; ++co)
        for (int ci = 0; ci < d.ci; ++ci)
            for (int kh = 0; kh < d.kh; ++kh) {
                int ho_lo, ho_hi;
                conv_bounds(d.ho, d.h, stride, pad, kh, ho_lo, ho_hi);
                for (int kw = 0; kw < d.kw; ++kw) {
                    int wo_lo, wo_hi;
                    conv_bounds(d.wo, d.w, stride, pad, kw, wo_lo, wo_hi);
                    const double wv = wp[((static_cast<std::int64_t>(co) * d.ci + ci) * d.kh + kh) * d.kw + kw];
                    if (wv == 0.0) continue;
                    for (int ho = ho_lo; ho < ho_hi; ++ho) {
                        const int hi = ho * stride - pad + kh;
                        const double* xrow = xp + ci * in_hw + static_cast<std::int64_t>(hi) * d.w - pad + kw;
                        double* orow = op + co * out_hw + static_cast<std::int64_t>(ho) * d.wo;
                        for (int wo = wo_lo; wo < wo_hi; ++wo) orow[wo] += wv * xrow[wo * stride];
                    }
                }
            }

    const bool ng = x->needs_grad || w->needs_grad || (b && b->needs_grad);
    Value* y = g->make(std::move(out), ng);
    if (ng) {
        y->pull = [x, w, b, d, in_hw, out_hw](Value& self) {
            const double* gp = self.grad.data();
            const double* xp2 = x->val.data();
            const double* wp2 = w->val.data();
            if (b && b->needs_grad) {
                ensure_grad(b);
                double* db = b->grad.data();
                for (int co = 0; co < d.co; ++co) {
                    double s = 0.0;
                    for (std::int64_t i = 0; i < out_hw; ++i) s += gp[co * out_hw + i];
                    db[co] += s;
                }
            }
            for (int co = 0; co < d.co; ++co)
                for (int ci = 0; ci < d.ci; ++ci)
                    for (int kh = 0; kh < d.kh; ++kh) {
                        int ho_lo, ho_hi;
                        conv_bounds(d.ho, d.h, d.stride, d.pad, kh, ho_lo, ho_hi);
                        for (int kw = 0; kw < d.kw; ++kw) {
                            int wo_lo, wo_hi;
                            conv_bounds(d.wo, d.w, d.stride, d.pad, kw, wo_lo, wo_hi);
                            const std::int64_t widx =
                                ((static_cast<std::int64_t>(co) * d.ci + ci) * d.kh + kh) * d.kw + kw;
                            const double wv = wp2[widx];
                            double wsum = 0.0;
                            for (int ho = ho_lo; ho < ho_hi; ++ho) {
                                const int hi = ho * d.stride - d.pad + kh;
                                const double* grow = gp + co * out_hw + static_cast<std::int64_t>(ho) * d.wo;
                                const std::int64_t xoff = ci * in_hw + static_cast<std::int64_t>(hi) * d.w - d.pad + kw;
                                if (x->needs_grad) {
                                    ensure_grad(x);
                                    double* dxrow = x->grad.data() + xoff;
                                    for (int wo = wo_lo; wo < wo_hi; ++wo) dxrow[wo * d.stride] += wv * grow[wo];
                                }
                                if (w->needs_grad) {
                                    const double* xrow = xp2 + xoff;
                                    for (int wo = wo_lo; wo < wo_hi; ++wo) wsum += grow[wo] * xrow[wo * d.stride];
                                }
                            }
                            if (w->needs_grad) {
                                ensure_grad(w);
                                w->grad.data()[widx] += wsum;
                            }
                        }
                    }
        };
    }
    return y;
}

Value* conv_transpose2d(Value* x, Value* w, Value* b, int stride, int pad) {
    Graph* g = x->graph;
    const int ci = x->val.dim(0), h = x->val.dim(1), ww = x->val.dim(2);
    const int co = w->val.dim(1), kh = w->val.dim(2), kw = w->val.dim(3);
    if (w->val.dim(0) != ci) throw InvalidArgument("conv_transpose2d: channel mismatch");
    const int ho = (h - 1) * stride - 2 * pad + kh;
    const int wo = (ww - 1) * stride - 2 * pad + kw;

    Tensor out({co, ho, wo});
    const double* xp = x->val.data();
    const double* wp = w->val.data();
    double* op = out.data();
    const std::int64_t in_hw = static_cast<std::int64_t>(h) * ww;
    const std::int64_t out_hw = static_cast<std::int64_t>(ho) * wo;

    if (b) {
        const double* bp = b->val.data();
        for (int c = 0; c < co; ++c)
            for (std::int64_t i = 0; i < out_hw; ++i) op[c * out_hw + i] = bp[c];
    }
    for (int c_in = 0; c_in < ci; ++c_in)
        for (int c_out = 0; c_out < co; ++c_out)
            for (int ki = 0; ki < kh; ++ki)
                for (int kj = 0; kj < kw; ++kj) {
                    const double wv = wp[((static_cast<std::int64_t>(c_in) * co + c_out) * kh + ki) * kw + kj];
                    if (wv == 0.0) continue;
                    for (int hi = 0; hi < h; ++hi) {
                        const int oh = hi * stride - pad + ki;
                        if (oh < 0 || oh >= ho) continue;
                        const double* xrow = xp + c_in * in_hw + static_cast<std::int64_t>(hi) * ww;
                        double* orow = op + c_out * out_hw + static_cast<std::int64_t>(oh) * wo;
                        for (int wi = 0; wi < ww; ++wi) {
                            const int ow = wi * stride - pad + kj;
                            if (ow < 0 || ow >= wo) continue;
                            orow[ow] += wv * xrow[wi];
                        }
                    }
                }

    const bool ng = x->needs_grad || w->needs_grad || (b && b->needs_grad);
    Value* y = g->make(std::move(out), ng);
    if (ng) {
        y->pull = [x, w, b, ci, co, kh, kw, h, ww, ho, wo, stride, pad, in_hw, out_hw](Value& self) {
            const double* gp = self.grad.data();
            const double* xp2 = x->val.data();
            const double* wp2 = w->val.data();
            if (b && b->needs_grad) {
                ensure_grad(b);
                double* db = b->grad.data();
                for (int c = 0; c < co; ++c) {
                    double s = 0.0;
                    for (std::int64_t i = 0; i < out_hw; ++i) s += gp[c * out_hw + i];
                    db[c] += s;
                }
            }
            if (x->needs_grad) ensure_grad(x);
            if (w->needs_grad) ensure_grad(w);
            for (int c_in = 0; c_in < ci; ++c_in)
                for (int c_out = 0; c_out < co; ++c_out)
                    for (int ki = 0; ki < kh; ++ki)
                        for (int kj = 0; kj < kw; ++kj) {
                            const std::int64_t widx =
                                ((static_cast<std::int64_t>(c_in) * co + c_out) * kh + ki) * kw + kj;
                            const double wv = wp2[widx];
                            double wsum = 0.0;
                            for (int hi = 0; hi < h; ++hi) {
                                const int oh = hi * stride - pad + ki;
                                if (oh < 0 || oh >= ho) continue;
                                const double* grow = gp + c_out * out_hw + static_cast<std::int64_t>(oh) * wo;
                                const std::int64_t xoff = c_in * in_hw + static_cast<std::int64_t>(hi) * ww;
                                for (int wi = 0; wi < ww; ++wi) {
                                    const int ow = wi * stride - pad + kj;
                                    if (ow < 0 || ow >= wo) continue;
                                    if (x->needs_grad) x->grad.data()[xoff + wi] += wv * grow[ow];
                                    wsum += xp2[xoff + wi] * grow[ow];
                                }
                            }
                            if (w->needs_grad) w->grad.data()[widx] += wsum;
                        }
        };
    }
    return y;
}

Value* depthwise_valid(Value* x, const Tensor& kernel) {
    Graph* g = x->graph;
    const int c = x->val.dim(0), h = x->val.dim(1), w = x->val.dim(2);
    const int kh = kernel.dim(0), kw = kernel.dim(1);
    const int ho = h - kh + 1, wo = w - kw + 1;
    if (ho <= 0 || wo <= 0) throw InvalidArgument("depthwise_valid: kernel larger than input");

    Tensor out({c, ho, wo});
    const double* xp = x->val.data();
    const double* kp = kernel.data();
    double* op = out.data();
    const std::int64_t in_hw = static_cast<std::int64_t>(h) * w;
    const std::int64_t out_hw = static_cast<std::int64_t>(ho) * wo;
    for (int ci = 0; ci < c; ++ci)
        for (int ki = 0; ki < kh; ++ki)
            for (int kj = 0; kj < kw; ++kj) {
                const double kv = kp[ki * kw + kj];
                for (int i = 0; i < ho; ++i) {
                    const double* xrow = xp + ci * in_hw + static_cast<std::int64_t>(i + ki) * w + kj;
                    double* orow = op + ci * out_hw + static_cast<std::int64_t>(i) * wo;
                    for (int j = 0; j < wo; ++j) orow[j] += kv * xrow[j];
                }
            }

    Value* y = g->make(std::move(out), x->needs_grad);
    if (x->needs_grad) {
        Tensor k = kernel; // shared storage, read-only
        y->pull = [x, k, c, h, w, kh, kw, ho, wo, in_hw, out_hw](Value& self) {
            ensure_grad(x);
            const double* gp = self.grad.data();
            const double* kp2 = k.data();
            double* dx = x->grad.data();
            for (int ci = 0; ci < c; ++ci)
                for (int ki = 0; ki < kh; ++ki)
                    for (int kj = 0; kj < kw; ++kj) {
                        const double kv = kp2[ki * kw + kj];
                        for (int i = 0; i < ho; ++i) {
                            double* dxrow = dx + ci * in_hw + static_cast<std::int64_t>(i + ki) * w + kj;
                            const double* grow = gp + ci * out_hw + static_cast<std::int64_t>(i) * wo;
                            for (int j = 0; j < wo; ++j) dxrow[j] += kv * grow[j];
                        }
                    }
        };
    }
    return y;
}

Value* avg_pool2(Value* x) {
    Graph* g = x->graph;
    const int c = x->val.dim(0), h = x->val.dim(1), w = x->val.dim(2);
    const int ho = h / 2, wo = w / 2;
    Tensor out({c, ho, wo});
    const double* xp = x->val.data();
    double* op = out.data();
    const std::int64_t in_hw = static_cast<std::int64_t>(h) * w;
    const std::int64_t out_hw = static_cast<std::int64_t>(ho) * wo;
    for (int ci = 0; ci < c; ++ci)
        for (int i = 0; i < ho; ++i)
            for (int j = 0; j < wo; ++j) {
                const double* p = xp + ci * in_hw + static_cast<std::int64_t>(2 * i) * w + 2 * j;
                op[ci * out_hw + i * wo + j] = 0.25 * (p[0] + p[1] + p[w] + p[w + 1]);
            }
    Value* y = g->make(std::move(out), x->needs_grad);
    if (x->needs_grad) {
        y->pull = [x, c, h, w, ho, wo, in_hw, out_hw](Value& self) {
            ensure_grad(x);
            const double* gp = self.grad.data();
            double* dx = x->grad.data();
            for (int ci = 0; ci < c; ++ci)
                for (int i = 0; i < ho; ++i)
                    for (int j = 0; j < wo; ++j) {
                        const double gv = 0.25 * gp[ci * out_hw + i * wo + j];
                        double* p = dx + ci * in_hw + static_cast<std::int64_t>(2 * i) * w + 2 * j;
                        p[0] += gv;
                        p[1] += gv;
                        p[w] += gv;
                        p[w + 1] += gv;
                    }
        };
    }
    return y;
}

} // namespace gencodec::ag
