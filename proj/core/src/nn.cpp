#include "gencodec/nn.hpp"

#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

#include "gencodec/errors.hpp"

namespace gencodec::nn {

ParamPtr ParamStore::add(const std::string& name, Tensor init, bool trainable) {
    if (index_.count(name)) throw InvalidArgument("duplicate parameter name: " + name);
    auto p = std::make_shared<Parameter>();
    p->name = name;
    p->value = std::move(init);
    p->trainable = trainable;
    index_[name] = params_.size();
    params_.push_back(p);
    return p;
}

ParamPtr ParamStore::find(const std::string& name) const {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : params_[it->second];
}

std::int64_t ParamStore::count() const {
    std::int64_t n = 0;
    for (const auto& p : params_) n += p->value.numel();
    return n;
}

void ParamStore::zero_grad() {
    for (const auto& p : params_)
        if (p->grad.defined()) p->grad.zero();
}

void ParamStore::freeze() {
    for (const auto& p : params_) p->trainable = false;
}

ag::Value* Binding::operator()(const ParamPtr& p) {
    auto it = index_.find(p.get());
    if (it != index_.end()) return entries_[it->second].second;
    ag::Value* leaf = g_->leaf(p->value, p->trainable);
    index_[p.get()] = entries_.size();
    entries_.emplace_back(p.get(), leaf);
    return leaf;
}

void Binding::accumulate_grads() {
    for (auto& [param, leaf] : entries_) {
        if (!param->trainable || !leaf->grad.defined()) continue;
        if (!param->grad.defined()) param->grad = Tensor::zeros(param->value.shape());
        param->grad.add_(leaf->grad);
    }
}

Tensor he_normal(CounterRng& rng, std::vector<int> shape, std::int64_t fan_in, double gain) {
    const double stddev = gain * std::sqrt(2.0 / static_cast<double>(fan_in));
    return normal_init(rng, std::move(shape), stddev);
}

Tensor normal_init(CounterRng& rng, std::vector<int> shape, double stddev) {
    Tensor t(std::move(shape));
    double* p = t.data();
    const std::int64_t n = t.numel();
    for (std::int64_t i = 0; i < n; ++i) p[i] = stddev * rng.normal();
    return t;
}

Conv2d::Conv2d(ParamStore& ps, const std::string& name, int cin, int cout, int k, int stride_,
               int pad_, CounterRng& rng, double gain)
    : stride(stride_), pad(pad_) {
    w = ps.add(name + ".w", he_normal(rng, {cout, cin, k, k}, static_cast<std::int64_t>(cin) * k * k, gain));
    b = ps.add(name + ".b", Tensor::zeros({cout}));
}

ag::Value* Conv2d::operator()(Binding& bind, ag::Value* x) const {
    return ag::conv2d(x, bind(w), bind(b), stride, pad);
}

ConvT2d::ConvT2d(ParamStore& ps, const std::string& name, int cin, int cout, int k, int stride_,
                 int pad_, CounterRng& rng, double gain)
    : stride(stride_), pad(pad_) {
    w = ps.add(name + ".w", he_normal(rng, {cin, cout, k, k}, static_cast<std::int64_t>(cin) * k * k, gain));
    b = ps.add(name + ".b", Tensor::zeros({cout}));
}

ag::Value* ConvT2d::operator()(Binding& bind, ag::Value* x) const {
    return ag::conv_transpose2d(x, bind(w), bind(b), stride, pad);
}

Linear::Linear(ParamStore& ps, const std::string& name, int in, int out, CounterRng& rng, double gain) {
    w = ps.add(name + ".w", he_normal(rng, {out, in}, in, gain));
    b = ps.add(name + ".b", Tensor::zeros({out}));
}

ag::Value* Linear::operator()(Binding& bind, ag::Value* x) const {
    return ag::add(ag::matmul_nt(x, bind(w)), bind(b));
}

ChannelNorm::ChannelNorm(ParamStore& ps, const std::string& name, int channels) {
    gain = ps.add(name + ".gain", Tensor::full({channels, 1, 1}, 1.0));
}

ag::Value* ChannelNorm::operator()(Binding& bind, ag::Value* x) const {
    ag::Value* ms = ag::add_scalar(ag::mean_hw(ag::square(x)), 1e-5);
    ag::Value* normed = ag::div(x, ag::sqrt_op(ms));
    return ag::mul(normed, bind(gain));
}

ResBlock::ResBlock(ParamStore& ps, const std::string& name, int cin, int cout, CounterRng& rng,
                   int temb_dim, int k2) {
    n1 = ChannelNorm(ps, name + ".n1", cin);
    c1 = Conv2d(ps, name + ".c1", cin, cout, 3, 1, 1, rng);
    n2 = ChannelNorm(ps, name + ".n2", cout);
    c2 = Conv2d(ps, name + ".c2", cout, cout, k2, 1, k2 / 2, rng, 0.5);
    has_skip = cin != cout;
    if (has_skip) skip = Conv2d(ps, name + ".skip", cin, cout, 1, 1, 0, rng);
    has_emb = temb_dim > 0;
    if (has_emb) emb = Linear(ps, name + ".emb", temb_dim, cout, rng, 0.5);
}

ag::Value* ResBlock::operator()(Binding& bind, ag::Value* x, ag::Value* temb) const {
    ag::Value* h = c1(bind, ag::silu(n1(bind, x)));
    if (has_emb && temb) {
        ag::Value* e = emb(bind, temb); // [1, cout]
        h = ag::add(h, ag::reshape(e, {h->val.dim(0), 1, 1}));
    }
    h = c2(bind, ag::silu(n2(bind, h)));
    ag::Value* s = has_skip ? skip(bind, x) : x;
    return ag::add(s, h);
}

void Adam::step(ParamStore& ps) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (const auto& p : ps.all()) {
        if (!p->trainable || !p->grad.defined()) continue;
        if (!p->adam_m.defined()) {
            p->adam_m = Tensor::zeros(p->value.shape());
            p->adam_v = Tensor::zeros(p->value.shape());
        }
        double* v = p->value.data();
        double* g = p->grad.data();
        double* m = p->adam_m.data();
        double* s = p->adam_v.data();
        const std::int64_t n = p->value.numel();
        for (std::int64_t i = 0; i < n; ++i) {
            m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
            s[i] = beta2_ * s[i] + (1.0 - beta2_) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = s[i] / bc2;
            v[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
        }
    }
}

void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& fn, int threads) {
    if (n <= 0) return;
    int workers = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
    if (workers < 1) workers = 1;
    workers = static_cast<int>(std::min<std::int64_t>(workers, n));
    if (workers == 1) {
        for (std::int64_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::int64_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    std::exception_ptr error;
    std::mutex error_mutex;
    for (int t = 0; t < workers; ++t) {
        pool.emplace_back([&]() {
            for (;;) {
                const std::int64_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lk(error_mutex);
                    if (!error) error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

} // namespace gencodec::nn
