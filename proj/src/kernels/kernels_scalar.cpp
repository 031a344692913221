#include "lirl/kernels/kernels.hpp"

#include <bit>
#include <cmath>

#include "scalar_impl.hpp"

namespace lirl::kernels {

namespace {
using namespace detail;

void s_gemm_nt(const float* A, const float* B, float* C, int M, int N, int K, bool acc) {
    gemm_nt_ref(A, B, C, M, N, K, acc);
}
void s_gemm_nn(const float* A, const float* B, float* C, int M, int N, int K, bool acc) {
    gemm_nn_ref(A, B, C, M, N, K, acc);
}
void s_gemm_tn(const float* A, const float* B, float* C, int M, int N, int K, bool acc) {
    gemm_tn_ref(A, B, C, M, N, K, acc);
}
void s_add_bias_rows(float* Y, const float* b, int M, int N) { add_bias_rows_ref(Y, b, M, N); }
void s_col_sums(const float* dY, float* db, int M, int N, bool acc) { col_sums_ref(dY, db, M, N, acc); }
// tanh(x) = sign(x)*(1-e)/(1+e) with e = exp(-2|x|); exp is the classic
// degree-5 polynomial with a split-ln2 range reduction (~1 ulp on this
// range). Vector lanes implement the identical formula.
float tanh_poly(float x) {
    float ax = std::fabs(x);
    if (ax > 9.01f) ax = 9.01f;
    const float t = -2.0f * ax;
    const float fx = std::floor(t * 1.44269504f + 0.5f);
    float r = t - fx * 0.693359375f;
    r -= fx * -2.12194440e-4f;
    const float z = r * r;
    float p = 1.9875691500e-4f;
    p = p * r + 1.3981999507e-3f;
    p = p * r + 8.3334519073e-3f;
    p = p * r + 4.1665795894e-2f;
    p = p * r + 1.6666665459e-1f;
    p = p * r + 5.0000001201e-1f;
    p = p * z + r + 1.0f;
    const float e = p * std::bit_cast<float>((int(fx) + 127) << 23);
    return std::copysign((1.0f - e) / (1.0f + e), x);
}

void s_tanh_fwd(float* y, int n) {
    for (int i = 0; i < n; ++i) y[i] = tanh_poly(y[i]);
}

void s_tanh_backward(float* dpre, const float* act, const float* dact, int n) {
    tanh_backward_ref(dpre, act, dact, n);
}
void s_axpy(float a, const float* x, float* y, int n) { axpy_ref(a, x, y, n); }
void s_scale(float a, float* x, int n) { scale_ref(a, x, n); }
double s_sumsq(const float* x, int n) { return sumsq_ref(x, n); }
void s_adam_step(float* p, const float* g, float* m, float* v, int n,
                 float lr, float b1, float b2, float eps, float bc1, float bc2) {
    adam_step_ref(p, g, m, v, n, lr, b1, b2, eps, bc1, bc2);
}
void s_soft_update(float* t, const float* s, float tau, int n) { soft_update_ref(t, s, tau, n); }

}  // namespace

const Ops& ops_scalar() {
    static const Ops table = {
        s_gemm_nt, s_gemm_nn, s_gemm_tn, s_add_bias_rows, s_col_sums,
        s_tanh_fwd, s_tanh_backward, s_axpy, s_scale, s_sumsq,
        s_adam_step, s_soft_update,
    };
    return table;
}

void tanh_forward(float* y, int n) { ops().tanh_fwd(y, n); }
void tanh_forward(double* y, int n) {
    for (int i = 0; i < n; ++i) y[i] = std::tanh(y[i]);
}

namespace f64 {

void gemm_nt(const double* A, const double* B, double* C, int M, int N, int K, bool acc) {
    detail::gemm_nt_ref(A, B, C, M, N, K, acc);
}
void gemm_nn(const double* A, const double* B, double* C, int M, int N, int K, bool acc) {
    detail::gemm_nn_ref(A, B, C, M, N, K, acc);
}
void gemm_tn(const double* A, const double* B, double* C, int M, int N, int K, bool acc) {
    detail::gemm_tn_ref(A, B, C, M, N, K, acc);
}
void add_bias_rows(double* Y, const double* b, int M, int N) { detail::add_bias_rows_ref(Y, b, M, N); }
void col_sums(const double* dY, double* db, int M, int N, bool acc) { detail::col_sums_ref(dY, db, M, N, acc); }
void tanh_backward(double* dpre, const double* act, const double* dact, int n) {
    detail::tanh_backward_ref(dpre, act, dact, n);
}
void axpy(double a, const double* x, double* y, int n) { detail::axpy_ref(a, x, y, n); }
void scale(double a, double* x, int n) { detail::scale_ref(a, x, n); }
double sumsq(const double* x, int n) { return detail::sumsq_ref(x, n); }
void adam_step(double* p, const double* g, double* m, double* v, int n,
               double lr, double b1, double b2, double eps, double bc1, double bc2) {
    detail::adam_step_ref(p, g, m, v, n, lr, b1, b2, eps, bc1, bc2);
}
void soft_update(double* target, const double* src, double tau, int n) {
    detail::soft_update_ref(target, src, tau, n);
}

}  // namespace f64

}  // namespace lirl::kernels
