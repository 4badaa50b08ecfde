#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "gencodec/autograd.hpp"
#include "gencodec/rng.hpp"
#include "gencodec/tensor.hpp"

namespace gencodec::nn {

struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;   // lazily allocated by the first accumulate
    Tensor adam_m; // optimizer state, lazily allocated
    Tensor adam_v;
    bool trainable = true;
};

using ParamPtr = std::shared_ptr<Parameter>;

// Ordered, named registry. Registration order is the canonical order for
// checkpoints and optimizer sweeps.
class ParamStore {
public:
    ParamPtr add(const std::string& name, Tensor init, bool trainable = true);
    const std::vector<ParamPtr>& all() const { return params_; }
    ParamPtr find(const std::string& name) const;
    std::int64_t count() const; // total scalar parameters
    void zero_grad();
    void freeze(); // marks every parameter non-trainable

private:
    std::vector<ParamPtr> params_;
    std::unordered_map<std::string, std::size_t> index_;
};

// Per-graph parameter leaves. Forward passes fetch leaves through the
// binding; after backward, accumulate_grads() folds leaf gradients into
// Parameter::grad in a fixed order (deterministic across thread schedules).
class Binding {
public:
    explicit Binding(ag::Graph& g) : g_(&g) {}

    ag::Value* operator()(const ParamPtr& p);
    ag::Graph& graph() { return *g_; }
    void accumulate_grads();

private:
    ag::Graph* g_;
    std::vector<std::pair<Parameter*, ag::Value*>> entries_;
    std::unordered_map<Parameter*, std::size_t> index_;
};

// ---- initializers
Tensor he_normal(CounterRng& rng, std::vector<int> shape, std::int64_t fan_in, double gain = 1.0);
Tensor normal_init(CounterRng& rng, std::vector<int> shape, double stddev);

// ---- layers (value types holding shared parameters)

struct Conv2d {
    ParamPtr w, b;
    int stride = 1, pad = 1;

    Conv2d() = default;
    Conv2d(ParamStore& ps, const std::string& name, int cin, int cout, int k, int stride, int pad,
           CounterRng& rng, double gain = 1.0);
    ag::Value* operator()(Binding& bind, ag::Value* x) const;
};

struct ConvT2d {
    ParamPtr w, b; // w: [cin, cout, k, k]
    int stride = 2, pad = 1;

    ConvT2d() = default;
    ConvT2d(ParamStore& ps, const std::string& name, int cin, int cout, int k, int stride, int pad,
            CounterRng& rng, double gain = 1.0);
    ag::Value* operator()(Binding& bind, ag::Value* x) const;
};

struct Linear {
    ParamPtr w, b; // w: [out, in]

    Linear() = default;
    Linear(ParamStore& ps, const std::string& name, int in, int out, CounterRng& rng, double gain = 1.0);
    ag::Value* operator()(Binding& bind, ag::Value* x) const; // x: [m, in]
};

// Per-channel RMS normalization over the spatial extent with a learned gain.
struct ChannelNorm {
    ParamPtr gain; // [C,1,1]

    ChannelNorm() = default;
    ChannelNorm(ParamStore& ps, const std::string& name, int channels);
    ag::Value* operator()(Binding& bind, ag::Value* x) const;
};

// norm -> silu -> conv3x3 -> (+time) -> norm -> silu -> conv(k2) with a
// residual skip (1x1 projection when channel counts differ). k2=1 gives the
// cheap bottleneck variant used by the adapter branches.
struct ResBlock {
    ChannelNorm n1, n2;
    Conv2d c1, c2, skip;
    Linear emb; // projects [1, temb] -> [1, cout]
    bool has_skip = false;
    bool has_emb = false;

    ResBlock() = default;
    ResBlock(ParamStore& ps, const std::string& name, int cin, int cout, CounterRng& rng,
             int temb_dim = 0, int k2 = 3);
    ag::Value* operator()(Binding& bind, ag::Value* x, ag::Value* temb = nullptr) const;
};

// ---- optimizer

class Adam {
public:
    explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void step(ParamStore& ps);

    double lr() const { return lr_; }
    void set_lr(double lr) { lr_ = lr; }

private:
    double lr_, beta1_, beta2_, eps_;
    std::int64_t t_ = 0;
};

// ---- misc

// Runs fn(i) for i in [0, n) on up to `threads` workers (0 = hardware count).
void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& fn, int threads = 0);

} // namespace gencodec::nn
