#pragma once

#include <deque>
#include <functional>
#include <vector>

#include "gencodec/tensor.hpp"

namespace gencodec::ag {

class Graph;

// One node of a reverse-mode tape. `pull` propagates grad to the parents.
struct Value {
    Tensor val;
    Tensor grad; // undefined until first touched during backward
    bool needs_grad = false;
    Graph* graph = nullptr;
    std::function<void(Value&)> pull;
};

// Arena of tape nodes in creation order. One graph per loss evaluation;
// graphs are thread-confined, parallelism happens across graphs.
class Graph {
public:
    Graph() = default;
    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    Value* make(Tensor val, bool needs_grad);
    // Shares the tensor's storage; no copy.
    Value* leaf(const Tensor& t, bool needs_grad = false);

    // Seeds d(root)/d(root) = 1 (root must be a single-element tensor) and
    // runs the tape backwards.
    void backward(Value* root);

    std::size_t size() const { return nodes_.size(); }

private:
    std::deque<Value> nodes_;
};

void ensure_grad(Value* v);

// ---- elementwise binary; rhs may be same-shape, [1], [C,1,1] against
// ---- [C,H,W], or [N] against [M,N]
Value* add(Value* a, Value* b);
Value* sub(Value* a, Value* b);
Value* mul(Value* a, Value* b);
Value* div(Value* a, Value* b);

Value* add_scalar(Value* a, double s);
Value* mul_scalar(Value* a, double s);

// ---- elementwise unary
Value* neg(Value* a);
Value* exp_op(Value* a);
Value* log_op(Value* a);
Value* sqrt_op(Value* a);
Value* erf_op(Value* a);
Value* abs_op(Value* a);
Value* square(Value* a);
Value* pow_scalar(Value* a, double p);
Value* sigmoid(Value* a);
Value* silu(Value* a);
Value* relu(Value* a);
Value* leaky_relu(Value* a, double slope);
Value* tanh_op(Value* a);
Value* clamp_min(Value* a, double lo);
Value* clamp(Value* a, double lo, double hi);
// Forward rounds half away from zero; backward is the identity.
Value* round_ste(Value* a);

// ---- reductions / shape
Value* sum_all(Value* a);  // -> [1]
Value* mean_all(Value* a); // -> [1]
Value* mean_hw(Value* a);  // [C,H,W] -> [C,1,1]
Value* reshape(Value* a, std::vector<int> shape);
Value* crop_hw(Value* a, int h, int w);      // top-left spatial crop of [C,H,W]
Value* concat_ch(Value* a, Value* b);        // [Ca,H,W]+[Cb,H,W]
Value* slice_ch(Value* a, int c0, int c1);   // channels [c0,c1)
Value* chw_to_tokens(Value* a);              // [C,H,W] -> [HW,C]
Value* tokens_to_chw(Value* a, int c, int h, int w);

// ---- linear algebra
Value* matmul(Value* a, Value* b);    // [m,k]x[k,n]
Value* matmul_nt(Value* a, Value* b); // [m,k]x[n,k]^T -> [m,n]
Value* softmax_rows(Value* a);

// ---- convolution (CHW, zero padding)
Value* conv2d(Value* x, Value* w, Value* b, int stride, int pad);
Value* conv_transpose2d(Value* x, Value* w, Value* b, int stride, int pad);
// Per-channel valid correlation with a fixed (non-learned) 2-d kernel.
Value* depthwise_valid(Value* x, const Tensor& kernel);
Value* avg_pool2(Value* x);

} // namespace gencodec::ag
