#pragma once

#include <cmath>

// Reference implementations, shared by the scalar f32 lane and the f64 twins.

namespace lirl::kernels::detail {

template <typename T>
void gemm_nt_ref(const T* A, const T* B, T* C, int M, int N, int K, bool acc) {
    for (int i = 0; i < M; ++i) {
        for (int j = 0; j < N; ++j) {
            T s = acc ? C[i * N + j] : T(0);
            const T* a = A + i * K;
            const T* b = B + j * K;
            for (int k = 0; k < K; ++k) s += a[k] * b[k];
            C[i * N + j] = s;
        }
    }
}

template <typename T>
void gemm_nn_ref(const T* A, const T* B, T* C, int M, int N, int K, bool acc) {
    for (int i = 0; i < M; ++i) {
        T* c = C + i * N;
        if (!acc)
            for (int j = 0; j < N; ++j) c[j] = T(0);
        for (int k = 0; k < K; ++k) {
            const T a = A[i * K + k];
            const T* b = B + k * N;
            for (int j = 0; j < N; ++j) c[j] += a * b[j];
        }
    }
}

template <typename T>
void gemm_tn_ref(const T* A, const T* B, T* C, int M, int N, int K, bool acc) {
    if (!acc)
        for (int i = 0; i < M * N; ++i) C[i] = T(0);
    for (int k = 0; k < K; ++k) {
        const T* b = B + k * N;
        for (int i = 0; i < M; ++i) {
            const T a = A[k * M + i];
            T* c = C + i * N;
            for (int j = 0; j < N; ++j) c[j] += a * b[j];
        }
    }
}

template <typename T>
void add_bias_rows_ref(T* Y, const T* b, int M, int N) {
    for (int i = 0; i < M; ++i)
        for (int j = 0; j < N; ++j) Y[i * N + j] += b[j];
}

template <typename T>
void col_sums_ref(const T* dY, T* db, int M, int N, bool acc) {
    if (!acc)
        for (int j = 0; j < N; ++j) db[j] = T(0);
    for (int i = 0; i < M; ++i)
        for (int j = 0; j < N; ++j) db[j] += dY[i * N + j];
}

template <typename T>
void tanh_backward_ref(T* dpre, const T* act, const T* dact, int n) {
    for (int i = 0; i < n; ++i) dpre[i] = dact[i] * (T(1) - act[i] * act[i]);
}

template <typename T>
void axpy_ref(T a, const T* x, T* y, int n) {
    for (int i = 0; i < n; ++i) y[i] += a * x[i];
}

template <typename T>
void scale_ref(T a, T* x, int n) {
    for (int i = 0; i < n; ++i) x[i] *= a;
}

template <typename T>
double sumsq_ref(const T* x, int n) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += double(x[i]) * double(x[i]);
    return s;
}

template <typename T>
void adam_step_ref(T* p, const T* g, T* m, T* v, int n,
                   T lr, T b1, T b2, T eps, T bc1, T bc2) {
    for (int i = 0; i < n; ++i) {
        m[i] = b1 * m[i] + (T(1) - b1) * g[i];
        v[i] = b2 * v[i] + (T(1) - b2) * g[i] * g[i];
        const T mhat = m[i] * bc1;
        const T vhat = v[i] * bc2;
        p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

template <typename T>
void soft_update_ref(T* target, const T* src, T tau, int n) {
    for (int i = 0; i < n; ++i) target[i] = (T(1) - tau) * target[i] + tau * src[i];
}

}  // namespace lirl::kernels::detail
