#include "lirl/kernels/kernels.hpp"

#include <immintrin.h>

#include <cmath>

// AVX2+FMA lane. Compiled with -mavx2 -mfma; only reachable through the
// dispatch table after the CPUID check.

namespace lirl::kernels {

namespace {

inline float hadd8(__m256 v) {
    __m128 lo = _mm256_castps256_ps128(v);
    __m128 hi = _mm256_extractf128_ps(v, 1);
    __m128 s = _mm_add_ps(lo, hi);
    s = _mm_add_ps(s, _mm_movehl_ps(s, s));
    s = _mm_add_ss(s, _mm_shuffle_ps(s, s, 0x55));
    return _mm_cvtss_f32(s);
}

// C[MxN] (+)= A[MxK] * B[NxK]^T, dot-product form, 4x2 register tile.
void v_gemm_nt(const float* A, const float* B, float* C, int M, int N, int K, bool acc) {
    const int kv = K & ~7;
    int i = 0;
    for (; i + 4 <= M; i += 4) {
        const float* a0 = A + (i + 0) * K;
        const float* a1 = A + (i + 1) * K;
        const float* a2 = A + (i + 2) * K;
        const float* a3 = A + (i + 3) * K;
        int j = 0;
        for (; j + 2 <= N; j += 2) {
            const float* b0 = B + (j + 0) * K;
            const float* b1 = B + (j + 1) * K;
            __m256 c00 = _mm256_setzero_ps(), c01 = _mm256_setzero_ps();
            __m256 c10 = _mm256_setzero_ps(), c11 = _mm256_setzero_ps();
            __m256 c20 = _mm256_setzero_ps(), c21 = _mm256_setzero_ps();
            __m256 c30 = _mm256_setzero_ps(), c31 = _mm256_setzero_ps();
            for (int k = 0; k < kv; k += 8) {
                const __m256 vb0 = _mm256_loadu_ps(b0 + k);
                const __m256 vb1 = _mm256_loadu_ps(b1 + k);
                const __m256 va0 = _mm256_loadu_ps(a0 + k);
                const __m256 va1 = _mm256_loadu_ps(a1 + k);
                const __m256 va2 = _mm256_loadu_ps(a2 + k);
                const __m256 va3 = _mm256_loadu_ps(a3 + k);
                c00 = _mm256_fmadd_ps(va0, vb0, c00);
                c01 = _mm256_fmadd_ps(va0, vb1, c01);
                c10 = _mm256_fmadd_ps(va1, vb0, c10);
                c11 = _mm256_fmadd_ps(va1, vb1, c11);
                c20 = _mm256_fmadd_ps(va2, vb0, c20);
                c21 = _mm256_fmadd_ps(va2, vb1, c21);
                c30 = _mm256_fmadd_ps(va3, vb0, c30);
                c31 = _mm256_fmadd_ps(va3, vb1, c31);
            }
            float s[8] = {hadd8(c00), hadd8(c01), hadd8(c10), hadd8(c11),
                          hadd8(c20), hadd8(c21), hadd8(c30), hadd8(c31)};
            for (int k = kv; k < K; ++k) {
                s[0] += a0[k] * b0[k];
                s[1] += a0[k] * b1[k];
                s[2] += a1[k] * b0[k];
                s[3] += a1[k] * b1[k];
                s[4] += a2[k] * b0[k];
                s[5] += a2[k] * b1[k];
                s[6] += a3[k] * b0[k];
                s[7] += a3[k] * b1[k];
            }
            for (int r = 0; r < 4; ++r)
                for (int c = 0; c < 2; ++c) {
                    float* dst = C + (i + r) * N + j + c;
                    *dst = (acc ? *dst : 0.0f) + s[r * 2 + c];
                }
        }
        for (; j < N; ++j) {
            const float* b0 = B + j * K;
            const float* as[4] = {a0, a1, a2, a3};
            for (int r = 0; r < 4; ++r) {
                __m256 cv = _mm256_setzero_ps();
                for (int k = 0; k < kv; k += 8)
                    cv = _mm256_fmadd_ps(_mm256_loadu_ps(as[r] + k), _mm256_loadu_ps(b0 + k), cv);
                float s = hadd8(cv);
                for (int k = kv; k < K; ++k) s += as[r][k] * b0[k];
                float* dst = C + (i + r) * N + j;
                *dst = (acc ? *dst : 0.0f) + s;
            }
        }
    }
    for (; i < M; ++i) {
        const float* a0 = A + i * K;
        for (int j = 0; j < N; ++j) {
            const float* b0 = B + j * K;
            __m256 cv = _mm256_setzero_ps();
            for (int k = 0; k < kv; k += 8)
                cv = _mm256_fmadd_ps(_mm256_loadu_ps(a0 + k), _mm256_loadu_ps(b0 + k), cv);
            float s = hadd8(cv);
            for (int k = kv; k < K; ++k) s += a0[k] * b0[k];
            float* dst = C + i * N + j;
            *dst = (acc ? *dst : 0.0f) + s;
        }
    }
}

// Shared inner block for gemm_nn / gemm_tn: two output rows, NV vectors of 8
// columns held in registers across the K loop. a_stride distinguishes the
// A-indexing of the two variants (1 for nn, M for tn).
template <int NV, int ROWS>
inline void nn_block(const float* a0, const float* a1, long a_stride, const float* B,
                     float* c0, float* c1, int K, int N, bool acc) {
    __m256 r0[NV], r1[NV];
    for (int v = 0; v < NV; ++v) {
        r0[v] = acc ? _mm256_loadu_ps(c0 + 8 * v) : _mm256_setzero_ps();
        if (ROWS == 2) r1[v] = acc ? _mm256_loadu_ps(c1 + 8 * v) : _mm256_setzero_ps();
    }
    for (int k = 0; k < K; ++k) {
        const __m256 va0 = _mm256_set1_ps(a0[k * a_stride]);
        const __m256 va1 = (ROWS == 2) ? _mm256_set1_ps(a1[k * a_stride]) : _mm256_setzero_ps();
        const float* b = B + long(k) * N;
        for (int v = 0; v < NV; ++v) {
            const __m256 vb = _mm256_loadu_ps(b + 8 * v);
            r0[v] = _mm256_fmadd_ps(va0, vb, r0[v]);
            if (ROWS == 2) r1[v] = _mm256_fmadd_ps(va1, vb, r1[v]);
        }
    }
    for (int v = 0; v < NV; ++v) {
        _mm256_storeu_ps(c0 + 8 * v, r0[v]);
        if (ROWS == 2) _mm256_storeu_ps(c1 + 8 * v, r1[v]);
    }
}

template <int ROWS>
inline void nn_row_pair(const float* a0, const float* a1, long a_stride, const float* B,
                        float* c0, float* c1, int K, int N, bool acc) {
    int j = 0;
    for (; j + 32 <= N; j += 32)
        nn_block<4, ROWS>(a0, a1, a_stride, B + j, c0 + j, c1 + j, K, N, acc);
    for (; j + 16 <= N; j += 16)
        nn_block<2, ROWS>(a0, a1, a_stride, B + j, c0 + j, c1 + j, K, N, acc);
    for (; j + 8 <= N; j += 8)
        nn_block<1, ROWS>(a0, a1, a_stride, B + j, c0 + j, c1 + j, K, N, acc);
    if (j < N) {
        for (int jj = j; jj < N; ++jj) {
            float s0 = acc ? c0[jj] : 0.0f;
            float s1 = (ROWS == 2) ? (acc ? c1[jj] : 0.0f) : 0.0f;
            for (int k = 0; k < K; ++k) {
                const float b = B[long(k) * N + jj];
                s0 += a0[k * a_stride] * b;
                if (ROWS == 2) s1 += a1[k * a_stride] * b;
            }
            c0[jj] = s0;
            if (ROWS == 2) c1[jj] = s1;
        }
    }
}

// K is blocked so the active B slice stays L1-resident while every output
// row pair streams over it.
constexpr int kKBlock = 80;

// C[MxN] (+)= A[MxK] * B[KxN]
void v_gemm_nn(const float* A, const float* B, float* C, int M, int N, int K, bool acc) {
    for (int k0 = 0; k0 < K; k0 += kKBlock) {
        const int kb = K - k0 < kKBlock ? K - k0 : kKBlock;
        const bool a = acc || k0 > 0;
        const float* Bk = B + long(k0) * N;
        int i = 0;
        for (; i + 2 <= M; i += 2)
            nn_row_pair<2>(A + long(i) * K + k0, A + long(i + 1) * K + k0, 1, Bk,
                           C + long(i) * N, C + long(i + 1) * N, kb, N, a);
        if (i < M)
            nn_row_pair<1>(A + long(i) * K + k0, nullptr, 1, Bk,
                           C + long(i) * N, nullptr, kb, N, a);
    }
}

// C[MxN] (+)= A[KxM]^T * B[KxN]
void v_gemm_tn(const float* A, const float* B, float* C, int M, int N, int K, bool acc) {
    for (int k0 = 0; k0 < K; k0 += kKBlock) {
        const int kb = K - k0 < kKBlock ? K - k0 : kKBlock;
        const bool a = acc || k0 > 0;
        const float* Ak = A + long(k0) * M;
        const float* Bk = B + long(k0) * N;
        int m = 0;
        for (; m + 2 <= M; m += 2)
            nn_row_pair<2>(Ak + m, Ak + m + 1, M, Bk,
                           C + long(m) * N, C + long(m + 1) * N, kb, N, a);
        if (m < M)
            nn_row_pair<1>(Ak + m, nullptr, M, Bk, C + long(m) * N, nullptr, kb, N, a);
    }
}

void v_add_bias_rows(float* Y, const float* b, int M, int N) {
    const int nv = N & ~7;
    for (int i = 0; i < M; ++i) {
        float* y = Y + long(i) * N;
        int j = 0;
        for (; j < nv; j += 8)
            _mm256_storeu_ps(y + j, _mm256_add_ps(_mm256_loadu_ps(y + j), _mm256_loadu_ps(b + j)));
        for (; j < N; ++j) y[j] += b[j];
    }
}

void v_col_sums(const float* dY, float* db, int M, int N, bool acc) {
    if (!acc)
        for (int j = 0; j < N; ++j) db[j] = 0.0f;
    const int nv = N & ~7;
    for (int i = 0; i < M; ++i) {
        const float* r = dY + long(i) * N;
        int j = 0;
        for (; j < nv; j += 8)
            _mm256_storeu_ps(db + j, _mm256_add_ps(_mm256_loadu_ps(db + j), _mm256_loadu_ps(r + j)));
        for (; j < N; ++j) db[j] += r[j];
    }
}

// Same formula as the scalar lane: tanh(x) = sign(x)*(1-e)/(1+e),
// e = exp(-2|x|) via degree-5 polynomial with split-ln2 reduction.
inline __m256 tanh8(__m256 x) {
    const __m256 signbit = _mm256_set1_ps(-0.0f);
    __m256 ax = _mm256_andnot_ps(signbit, x);
    ax = _mm256_min_ps(ax, _mm256_set1_ps(9.01f));
    const __m256 t = _mm256_mul_ps(ax, _mm256_set1_ps(-2.0f));
    const __m256 fx = _mm256_floor_ps(
        _mm256_fmadd_ps(t, _mm256_set1_ps(1.44269504f), _mm256_set1_ps(0.5f)));
    __m256 r = _mm256_fnmadd_ps(fx, _mm256_set1_ps(0.693359375f), t);
    r = _mm256_fnmadd_ps(fx, _mm256_set1_ps(-2.12194440e-4f), r);
    const __m256 z = _mm256_mul_ps(r, r);
    __m256 p = _mm256_set1_ps(1.9875691500e-4f);
    p = _mm256_fmadd_ps(p, r, _mm256_set1_ps(1.3981999507e-3f));
    p = _mm256_fmadd_ps(p, r, _mm256_set1_ps(8.3334519073e-3f));
    p = _mm256_fmadd_ps(p, r, _mm256_set1_ps(4.1665795894e-2f));
    p = _mm256_fmadd_ps(p, r, _mm256_set1_ps(1.6666665459e-1f));
    p = _mm256_fmadd_ps(p, r, _mm256_set1_ps(5.0000001201e-1f));
    p = _mm256_add_ps(_mm256_fmadd_ps(p, z, r), _mm256_set1_ps(1.0f));
    const __m256i n = _mm256_cvttps_epi32(fx);
    const __m256 pw = _mm256_castsi256_ps(
        _mm256_slli_epi32(_mm256_add_epi32(n, _mm256_set1_epi32(127)), 23));
    const __m256 e = _mm256_mul_ps(p, pw);
    const __m256 one = _mm256_set1_ps(1.0f);
    const __m256 y = _mm256_div_ps(_mm256_sub_ps(one, e), _mm256_add_ps(one, e));
    return _mm256_or_ps(y, _mm256_and_ps(x, signbit));
}

void v_tanh_fwd(float* y, int n) {
    const int nv = n & ~7;
    int i = 0;
    for (; i < nv; i += 8) _mm256_storeu_ps(y + i, tanh8(_mm256_loadu_ps(y + i)));
    if (i < n) {
        alignas(32) float buf[8] = {};
        for (int j = i; j < n; ++j) buf[j - i] = y[j];
        _mm256_store_ps(buf, tanh8(_mm256_load_ps(buf)));
        for (int j = i; j < n; ++j) y[j] = buf[j - i];
    }
}

void v_tanh_backward(float* dpre, const float* act, const float* dact, int n) {
    const __m256 one = _mm256_set1_ps(1.0f);
    const int nv = n & ~7;
    int i = 0;
    for (; i < nv; i += 8) {
        const __m256 a = _mm256_loadu_ps(act + i);
        const __m256 d = _mm256_loadu_ps(dact + i);
        _mm256_storeu_ps(dpre + i, _mm256_mul_ps(d, _mm256_fnmadd_ps(a, a, one)));
    }
    for (; i < n; ++i) dpre[i] = dact[i] * (1.0f - act[i] * act[i]);
}

void v_axpy(float a, const float* x, float* y, int n) {
    const __m256 va = _mm256_set1_ps(a);
    const int nv = n & ~7;
    int i = 0;
    for (; i < nv; i += 8)
        _mm256_storeu_ps(y + i, _mm256_fmadd_ps(va, _mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
    for (; i < n; ++i) y[i] += a * x[i];
}

void v_scale(float a, float* x, int n) {
    const __m256 va = _mm256_set1_ps(a);
    const int nv = n & ~7;
    int i = 0;
    for (; i < nv; i += 8)
        _mm256_storeu_ps(x + i, _mm256_mul_ps(va, _mm256_loadu_ps(x + i)));
    for (; i < n; ++i) x[i] *= a;
}

double v_sumsq(const float* x, int n) {
    // accumulate in f64 so the clip threshold sees the same value every lane
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    const int nv = n & ~7;
    int i = 0;
    for (; i < nv; i += 8) {
        const __m256 v = _mm256_loadu_ps(x + i);
        const __m256d lo = _mm256_cvtps_pd(_mm256_castps256_ps128(v));
        const __m256d hi = _mm256_cvtps_pd(_mm256_extractf128_ps(v, 1));
        acc0 = _mm256_fmadd_pd(lo, lo, acc0);
        acc1 = _mm256_fmadd_pd(hi, hi, acc1);
    }
    const __m256d t = _mm256_add_pd(acc0, acc1);
    __m128d s = _mm_add_pd(_mm256_castpd256_pd128(t), _mm256_extractf128_pd(t, 1));
    s = _mm_add_sd(s, _mm_unpackhi_pd(s, s));
    double out = _mm_cvtsd_f64(s);
    for (; i < n; ++i) out += double(x[i]) * double(x[i]);
    return out;
}

void v_adam_step(float* p, const float* g, float* m, float* v, int n,
                 float lr, float b1, float b2, float eps, float bc1, float bc2) {
    const __m256 vb1 = _mm256_set1_ps(b1), v1mb1 = _mm256_set1_ps(1.0f - b1);
    const __m256 vb2 = _mm256_set1_ps(b2), v1mb2 = _mm256_set1_ps(1.0f - b2);
    const __m256 vlr = _mm256_set1_ps(lr), veps = _mm256_set1_ps(eps);
    const __m256 vbc1 = _mm256_set1_ps(bc1), vbc2 = _mm256_set1_ps(bc2);
    const int nv = n & ~7;
    int i = 0;
    for (; i < nv; i += 8) {
        const __m256 vg = _mm256_loadu_ps(g + i);
        __m256 vm = _mm256_fmadd_ps(v1mb1, vg, _mm256_mul_ps(vb1, _mm256_loadu_ps(m + i)));
        __m256 vv = _mm256_fmadd_ps(v1mb2, _mm256_mul_ps(vg, vg),
                                    _mm256_mul_ps(vb2, _mm256_loadu_ps(v + i)));
        _mm256_storeu_ps(m + i, vm);
        _mm256_storeu_ps(v + i, vv);
        const __m256 mhat = _mm256_mul_ps(vm, vbc1);
        const __m256 den = _mm256_add_ps(_mm256_sqrt_ps(_mm256_mul_ps(vv, vbc2)), veps);
        const __m256 upd = _mm256_div_ps(_mm256_mul_ps(vlr, mhat), den);
        _mm256_storeu_ps(p + i, _mm256_sub_ps(_mm256_loadu_ps(p + i), upd));
    }
    for (; i < n; ++i) {
        m[i] = b1 * m[i] + (1.0f - b1) * g[i];
        v[i] = b2 * v[i] + (1.0f - b2) * g[i] * g[i];
        p[i] -= lr * (m[i] * bc1) / (std::sqrt(v[i] * bc2) + eps);
    }
}

void v_soft_update(float* t, const float* s, float tau, int n) {
    const __m256 vt = _mm256_set1_ps(tau), v1mt = _mm256_set1_ps(1.0f - tau);
    const int nv = n & ~7;
    int i = 0;
    for (; i < nv; i += 8)
        _mm256_storeu_ps(t + i, _mm256_fmadd_ps(vt, _mm256_loadu_ps(s + i),
                                                _mm256_mul_ps(v1mt, _mm256_loadu_ps(t + i))));
    for (; i < n; ++i) t[i] = (1.0f - tau) * t[i] + tau * s[i];
}

}  // namespace

const Ops* detail_avx2_table() {
    static const Ops table = {
        v_gemm_nt, v_gemm_nn, v_gemm_tn, v_add_bias_rows, v_col_sums,
        v_tanh_fwd, v_tanh_backward, v_axpy, v_scale, v_sumsq,
        v_adam_step, v_soft_update,
    };
    return &table;
}

}  // namespace lirl::kernels
