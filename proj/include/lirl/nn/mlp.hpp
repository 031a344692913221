#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

namespace lirl {

template <typename T>
struct AdamState {
    std::vector<T> m, v;
    long long step = 0;
    double lr = 1e-3, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

    AdamState() = default;
    explicit AdamState(std::size_t n_params, double lr_ = 1e-3)
        : m(n_params, T(0)), v(n_params, T(0)), lr(lr_) {}

    void save(std::ostream& os) const;
    static AdamState load(std::istream& is);
};

// Fully connected net with tanh hidden layers and a linear output. Parameters
// live in one flat buffer ([W0 | b0 | W1 | b1 | ...], weights row-major
// [in x out]) so the optimizer, clipping, checkpoints and soft updates all
// operate on a single array. Transposed weights are cached per layer for the
// backward data path and refreshed whenever parameters change.
template <typename T>
class Mlp {
  public:
    Mlp() = default;
    Mlp(std::vector<int> sizes, std::uint64_t seed);  // He-uniform weights, zero biases

    const std::vector<int>& sizes() const { return sizes_; }
    int input_dim() const { return sizes_.front(); }
    int output_dim() const { return sizes_.back(); }
    int layer_count() const { return static_cast<int>(sizes_.size()) - 1; }

    std::vector<T>& params() { return params_; }
    const std::vector<T>& params() const { return params_; }
    std::vector<T>& grads() { return grads_; }
    const std::vector<T>& grads() const { return grads_; }
    std::size_t weight_offset(int layer) const { return w_off_[layer]; }
    std::size_t bias_offset(int layer) const { return b_off_[layer]; }

    // Call after writing params() directly (tests); updates transpose caches.
    void params_changed();

    // x is [batch x input_dim] row-major; y gets [batch x output_dim].
    // Activations are cached for the next backward call.
    void forward(const T* x, int batch, T* y);
    std::vector<T> forward1(const std::vector<T>& x);

    // dy is [batch x output_dim] upstream gradient for the cached forward.
    // When want_param_grads, grads() is overwritten with dL/dparams. When
    // dx != nullptr, writes dL/dx restricted to input columns
    // [dx_lo, dx_hi) as [batch x (dx_hi - dx_lo)]; dx_hi = -1 means all.
    void backward(const T* dy, bool want_param_grads, T* dx = nullptr, int dx_lo = 0,
                  int dx_hi = -1);

    double grad_norm() const;
    void clip_grads(double max_norm);
    void adam(AdamState<T>& st);  // throws on non-finite gradients
    void soft_update_from(const Mlp<T>& online, T tau);

    void save(std::ostream& os) const;
    static Mlp<T> load(std::istream& is);

  private:
    void init_layout();
    void refresh_transposes();
    const T* wt_slice(int lo, int hi);

    std::vector<int> sizes_;
    std::vector<std::size_t> w_off_, b_off_;
    std::vector<T> params_, grads_;
    std::vector<std::vector<T>> wt_;  // per layer [out x in]

    std::vector<std::vector<T>> acts_;  // acts_[0] = input copy
    int batch_ = 0;
    std::vector<T> scratch_;

    std::vector<T> wt0_slice_;  // layer-0 transpose column slice cache
    int slice_lo_ = -1, slice_hi_ = -1;
    std::uint64_t version_ = 0, slice_version_ = ~0ull;
};

}  // namespace lirl
