#include "lirl/nn/mlp.hpp"

#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "lirl/core/rng.hpp"
#include "lirl/kernels/kernels.hpp"

namespace lirl {

namespace {

// float goes through the dispatched SIMD table, double through the scalar
// twins; overload resolution picks the lane per instantiation
inline void k_gemm_nn(const float* a, const float* b, float* c, int m, int n, int k,
                      bool acc) {
    kernels::ops().gemm_nn(a, b, c, m, n, k, acc);
}
inline void k_gemm_nn(const double* a, const double* b, double* c, int m, int n, int k,
                      bool acc) {
    kernels::f64::gemm_nn(a, b, c, m, n, k, acc);
}
inline void k_gemm_tn(const float* a, const float* b, float* c, int m, int n, int k,
                      bool acc) {
    kernels::ops().gemm_tn(a, b, c, m, n, k, acc);
}
inline void k_gemm_tn(const double* a, const double* b, double* c, int m, int n, int k,
                      bool acc) {
    kernels::f64::gemm_tn(a, b, c, m, n, k, acc);
}
inline void k_add_bias_rows(float* y, const float* b, int m, int n) {
    kernels::ops().add_bias_rows(y, b, m, n);
}
inline void k_add_bias_rows(double* y, const double* b, int m, int n) {
    kernels::f64::add_bias_rows(y, b, m, n);
}
inline void k_col_sums(const float* dy, float* db, int m, int n, bool acc) {
    kernels::ops().col_sums(dy, db, m, n, acc);
}
inline void k_col_sums(const double* dy, double* db, int m, int n, bool acc) {
    kernels::f64::col_sums(dy, db, m, n, acc);
}
inline void k_tanh_fwd(float* y, int n) { kernels::ops().tanh_fwd(y, n); }
inline void k_tanh_fwd(double* y, int n) { kernels::tanh_forward(y, n); }
inline void k_tanh_backward(float* dp, const float* a, const float* da, int n) {
    kernels::ops().tanh_backward(dp, a, da, n);
}
inline void k_tanh_backward(double* dp, const double* a, const double* da, int n) {
    kernels::f64::tanh_backward(dp, a, da, n);
}
inline void k_scale(float a, float* x, int n) { kernels::ops().scale(a, x, n); }
inline void k_scale(double a, double* x, int n) { kernels::f64::scale(a, x, n); }
inline double k_sumsq(const float* x, int n) { return kernels::ops().sumsq(x, n); }
inline double k_sumsq(const double* x, int n) { return kernels::f64::sumsq(x, n); }
inline void k_adam(float* p, const float* g, float* m, float* v, int n, float lr,
                   float b1, float b2, float eps, float bc1, float bc2) {
    kernels::ops().adam_step(p, g, m, v, n, lr, b1, b2, eps, bc1, bc2);
}
inline void k_adam(double* p, const double* g, double* m, double* v, int n, double lr,
                   double b1, double b2, double eps, double bc1, double bc2) {
    kernels::f64::adam_step(p, g, m, v, n, lr, b1, b2, eps, bc1, bc2);
}
inline void k_soft_update(float* t, const float* s, float tau, int n) {
    kernels::ops().soft_update(t, s, tau, n);
}
inline void k_soft_update(double* t, const double* s, double tau, int n) {
    kernels::f64::soft_update(t, s, tau, n);
}

constexpr char kNetMagic[8] = {'L', 'I', 'R', 'L', 'N', 'E', 'T', '1'};
constexpr char kAdamMagic[8] = {'L', 'I', 'R', 'L', 'A', 'D', 'M', '1'};

template <typename V>
void write_raw(std::ostream& os, const V& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
template <typename V>
void read_raw(std::istream& is, V& v) {
    is.read(reinterpret_cast<char*>(&v), sizeof(v));
}

}  // namespace

template <typename T>
void Mlp<T>::init_layout() {
    if (sizes_.size() < 2) throw std::runtime_error("mlp needs at least two layer sizes");
    for (int s : sizes_)
        if (s < 1) throw std::runtime_error("mlp layer sizes must be positive");
    std::size_t off = 0;
    w_off_.clear();
    b_off_.clear();
    for (int l = 0; l < layer_count(); ++l) {
        w_off_.push_back(off);
        off += static_cast<std::size_t>(sizes_[l]) * sizes_[l + 1];
        b_off_.push_back(off);
        off += sizes_[l + 1];
    }
    params_.assign(off, T(0));
    grads_.assign(off, T(0));
    wt_.assign(layer_count(), {});
    acts_.assign(sizes_.size(), {});
}

template <typename T>
Mlp<T>::Mlp(std::vector<int> sizes, std::uint64_t seed) : sizes_(std::move(sizes)) {
    init_layout();
    Rng rng(seed);
    for (int l = 0; l < layer_count(); ++l) {
        const double limit = std::sqrt(6.0 / sizes_[l]);
        T* w = params_.data() + w_off_[l];
        const std::size_t n = static_cast<std::size_t>(sizes_[l]) * sizes_[l + 1];
        for (std::size_t i = 0; i < n; ++i) w[i] = static_cast<T>(rng.uniform(-limit, limit));
    }
    refresh_transposes();
}

template <typename T>
void Mlp<T>::refresh_transposes() {
    ++version_;
    for (int l = 0; l < layer_count(); ++l) {
        const int in = sizes_[l], out = sizes_[l + 1];
        wt_[l].resize(static_cast<std::size_t>(in) * out);
        const T* w = params_.data() + w_off_[l];
        for (int i = 0; i < in; ++i)
            for (int o = 0; o < out; ++o) wt_[l][static_cast<std::size_t>(o) * in + i] = w[i * out + o];
    }
}

template <typename T>
void Mlp<T>::params_changed() {
    refresh_transposes();
}

template <typename T>
const T* Mlp<T>::wt_slice(int lo, int hi) {
    const int in = sizes_[0], out = sizes_[1];
    if (lo == 0 && hi == in) return wt_[0].data();
    if (slice_lo_ != lo || slice_hi_ != hi || slice_version_ != version_) {
        wt0_slice_.resize(static_cast<std::size_t>(out) * (hi - lo));
        const T* w = params_.data() + w_off_[0];
        for (int o = 0; o < out; ++o)
            for (int i = lo; i < hi; ++i)
                wt0_slice_[static_cast<std::size_t>(o) * (hi - lo) + (i - lo)] =
                    w[static_cast<std::size_t>(i) * out + o];
        slice_lo_ = lo;
        slice_hi_ = hi;
        slice_version_ = version_;
    }
    return wt0_slice_.data();
}

template <typename T>
void Mlp<T>::forward(const T* x, int batch, T* y) {
    if (batch < 1) throw std::runtime_error("mlp forward: empty batch");
    batch_ = batch;
    acts_[0].assign(x, x + static_cast<std::size_t>(batch) * sizes_[0]);
    for (int l = 0; l < layer_count(); ++l) {
        const int in = sizes_[l], out = sizes_[l + 1];
        acts_[l + 1].resize(static_cast<std::size_t>(batch) * out);
        k_gemm_nn(acts_[l].data(), params_.data() + w_off_[l], acts_[l + 1].data(), batch,
                  out, in, false);
        k_add_bias_rows(acts_[l + 1].data(), params_.data() + b_off_[l], batch, out);
        if (l + 1 < layer_count()) k_tanh_fwd(acts_[l + 1].data(), batch * out);
    }
    std::memcpy(y, acts_.back().data(),
                sizeof(T) * static_cast<std::size_t>(batch) * sizes_.back());
}

template <typename T>
std::vector<T> Mlp<T>::forward1(const std::vector<T>& x) {
    if (static_cast<int>(x.size()) != sizes_[0])
        throw std::runtime_error("mlp forward: input size mismatch");
    std::vector<T> y(sizes_.back());
    forward(x.data(), 1, y.data());
    return y;
}

template <typename T>
void Mlp<T>::backward(const T* dy, bool want_param_grads, T* dx, int dx_lo, int dx_hi) {
    if (batch_ < 1) throw std::runtime_error("mlp backward: no cached forward");
    const int batch = batch_;
    std::vector<T>& cur = scratch_;
    cur.assign(dy, dy + static_cast<std::size_t>(batch) * sizes_.back());
    std::vector<T> prev;
    for (int l = layer_count() - 1; l >= 0; --l) {
        const int in = sizes_[l], out = sizes_[l + 1];
        if (want_param_grads) {
            k_gemm_tn(acts_[l].data(), cur.data(), grads_.data() + w_off_[l], in, out,
                      batch, false);
            k_col_sums(cur.data(), grads_.data() + b_off_[l], batch, out, false);
        }
        if (l > 0) {
            prev.resize(static_cast<std::size_t>(batch) * in);
            k_gemm_nn(cur.data(), wt_[l].data(), prev.data(), batch, in, out, false);
            // hidden activation is tanh; fold its derivative in place
            k_tanh_backward(prev.data(), acts_[l].data(), prev.data(), batch * in);
            cur.swap(prev);
        } else if (dx != nullptr) {
            if (dx_hi < 0) dx_hi = in;
            if (dx_lo < 0 || dx_hi > in || dx_lo >= dx_hi)
                throw std::runtime_error("mlp backward: bad input-gradient slice");
            k_gemm_nn(cur.data(), wt_slice(dx_lo, dx_hi), dx, batch, dx_hi - dx_lo, out,
                      false);
        }
    }
}

template <typename T>
double Mlp<T>::grad_norm() const {
    return std::sqrt(k_sumsq(grads_.data(), static_cast<int>(grads_.size())));
}

template <typename T>
void Mlp<T>::clip_grads(double max_norm) {
    const double norm = grad_norm();
    if (!std::isfinite(norm)) return;  // leave for adam() to reject, not silently zero
    if (norm > max_norm && norm > 0.0)
        k_scale(static_cast<T>(max_norm / norm), grads_.data(),
                static_cast<int>(grads_.size()));
}

template <typename T>
void Mlp<T>::adam(AdamState<T>& st) {
    if (st.m.size() != params_.size())
        throw std::runtime_error("adam state does not match parameter count");
    const double sq = k_sumsq(grads_.data(), static_cast<int>(grads_.size()));
    if (!std::isfinite(sq)) throw std::runtime_error("non-finite gradient in adam step");
    st.step += 1;
    const double bc1 = 1.0 / (1.0 - std::pow(st.beta1, static_cast<double>(st.step)));
    const double bc2 = 1.0 / (1.0 - std::pow(st.beta2, static_cast<double>(st.step)));
    k_adam(params_.data(), grads_.data(), st.m.data(), st.v.data(),
           static_cast<int>(params_.size()), static_cast<T>(st.lr),
           static_cast<T>(st.beta1), static_cast<T>(st.beta2), static_cast<T>(st.eps),
           static_cast<T>(bc1), static_cast<T>(bc2));
    refresh_transposes();
}

template <typename T>
void Mlp<T>::soft_update_from(const Mlp<T>& online, T tau) {
    if (online.params_.size() != params_.size())
        throw std::runtime_error("soft update: parameter count mismatch");
    k_soft_update(params_.data(), online.params_.data(), tau,
                  static_cast<int>(params_.size()));
    refresh_transposes();
}

template <typename T>
void Mlp<T>::save(std::ostream& os) const {
    os.write(kNetMagic, sizeof(kNetMagic));
    const std::uint32_t dtype = sizeof(T);
    write_raw(os, dtype);
    const std::uint32_t n = static_cast<std::uint32_t>(sizes_.size());
    write_raw(os, n);
    for (int s : sizes_) {
        const std::int32_t v = s;
        write_raw(os, v);
    }
    os.write(reinterpret_cast<const char*>(params_.data()), sizeof(T) * params_.size());
}

template <typename T>
Mlp<T> Mlp<T>::load(std::istream& is) {
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kNetMagic, sizeof(magic)) != 0)
        throw std::runtime_error("bad network checkpoint header");
    std::uint32_t dtype = 0, n = 0;
    read_raw(is, dtype);
    if (dtype != sizeof(T)) throw std::runtime_error("checkpoint dtype mismatch");
    read_raw(is, n);
    if (n < 2 || n > 64) throw std::runtime_error("corrupt checkpoint layer count");
    Mlp<T> net;
    net.sizes_.resize(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        std::int32_t v = 0;
        read_raw(is, v);
        net.sizes_[i] = v;
    }
    net.init_layout();
    is.read(reinterpret_cast<char*>(net.params_.data()), sizeof(T) * net.params_.size());
    if (!is) throw std::runtime_error("truncated network checkpoint");
    net.refresh_transposes();
    return net;
}

template <typename T>
void AdamState<T>::save(std::ostream& os) const {
    os.write(kAdamMagic, sizeof(kAdamMagic));
    const std::uint64_t n = m.size();
    write_raw(os, n);
    write_raw(os, step);
    write_raw(os, lr);
    write_raw(os, beta1);
    write_raw(os, beta2);
    write_raw(os, eps);
    os.write(reinterpret_cast<const char*>(m.data()), sizeof(T) * m.size());
    os.write(reinterpret_cast<const char*>(v.data()), sizeof(T) * v.size());
}

template <typename T>
AdamState<T> AdamState<T>::load(std::istream& is) {
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kAdamMagic, sizeof(magic)) != 0)
        throw std::runtime_error("bad optimizer checkpoint header");
    std::uint64_t n = 0;
    AdamState st;
    read_raw(is, n);
    read_raw(is, st.step);
    read_raw(is, st.lr);
    read_raw(is, st.beta1);
    read_raw(is, st.beta2);
    read_raw(is, st.eps);
    st.m.resize(n);
    st.v.resize(n);
    is.read(reinterpret_cast<char*>(st.m.data()), sizeof(T) * n);
    is.read(reinterpret_cast<char*>(st.v.data()), sizeof(T) * n);
    if (!is) throw std::runtime_error("truncated optimizer checkpoint");
    return st;
}

template class Mlp<float>;
template class Mlp<double>;
template struct AdamState<float>;
template struct AdamState<double>;

}  // namespace lirl
