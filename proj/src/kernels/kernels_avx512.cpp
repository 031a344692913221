#include "lirl/kernels/kernels.hpp"

#include <immintrin.h>

#include <cmath>

// AVX-512F lane. K/N tails use masked loads instead of scalar remainders.

namespace lirl::kernels {

namespace {

inline __mmask16 tail_mask(int rem) { return __mmask16((1u << rem) - 1u); }

// C[MxN] (+)= A[MxK] * B[NxK]^T, 4x2 dot tile, masked K tail.
void v_gemm_nt(const float* A, const float* B, float* C, int M, int N, int K, bool acc) {
    const int kv = K & ~15;
    const __mmask16 km = tail_mask(K - kv);
    int i = 0;
    for (; i + 4 <= M; i += 4) {
        const float* a0 = A + long(i + 0) * K;
        const float* a1 = A + long(i + 1) * K;
        const float* a2 = A + long(i + 2) * K;
        const float* a3 = A + long(i + 3) * K;
        int j = 0;
        for (; j + 2 <= N; j += 2) {
            const float* b0 = B + long(j + 0) * K;
            const float* b1 = B + long(j + 1) * K;
            __m512 c00 = _mm512_setzero_ps(), c01 = _mm512_setzero_ps();
            __m512 c10 = _mm512_setzero_ps(), c11 = _mm512_setzero_ps();
            __m512 c20 = _mm512_setzero_ps(), c21 = _mm512_setzero_ps();
            __m512 c30 = _mm512_setzero_ps(), c31 = _mm512_setzero_ps();
            for (int k = 0; k < kv; k += 16) {
                const __m512 vb0 = _mm512_loadu_ps(b0 + k);
                const __m512 vb1 = _mm512_loadu_ps(b1 + k);
                const __m512 va0 = _mm512_loadu_ps(a0 + k);
                const __m512 va1 = _mm512_loadu_ps(a1 + k);
                const __m512 va2 = _mm512_loadu_ps(a2 + k);
                const __m512 va3 = _mm512_loadu_ps(a3 + k);
                c00 = _mm512_fmadd_ps(va0, vb0, c00);
                c01 = _mm512_fmadd_ps(va0, vb1, c01);
                c10 = _mm512_fmadd_ps(va1, vb0, c10);
                c11 = _mm512_fmadd_ps(va1, vb1, c11);
                c20 = _mm512_fmadd_ps(va2, vb0, c20);
                c21 = _mm512_fmadd_ps(va2, vb1, c21);
                c30 = _mm512_fmadd_ps(va3, vb0, c30);
                c31 = _mm512_fmadd_ps(va3, vb1, c31);
            }
            if (kv < K) {
                const __m512 vb0 = _mm512_maskz_loadu_ps(km, b0 + kv);
                const __m512 vb1 = _mm512_maskz_loadu_ps(km, b1 + kv);
                const __m512 va0 = _mm512_maskz_loadu_ps(km, a0 + kv);
                const __m512 va1 = _mm512_maskz_loadu_ps(km, a1 + kv);
                const __m512 va2 = _mm512_maskz_loadu_ps(km, a2 + kv);
                const __m512 va3 = _mm512_maskz_loadu_ps(km, a3 + kv);
                c00 = _mm512_fmadd_ps(va0, vb0, c00);
                c01 = _mm512_fmadd_ps(va0, vb1, c01);
                c10 = _mm512_fmadd_ps(va1, vb0, c10);
                c11 = _mm512_fmadd_ps(va1, vb1, c11);
                c20 = _mm512_fmadd_ps(va2, vb0, c20);
                c21 = _mm512_fmadd_ps(va2, vb1, c21);
                c30 = _mm512_fmadd_ps(va3, vb0, c30);
                c31 = _mm512_fmadd_ps(va3, vb1, c31);
            }
            const float s[8] = {
                _mm512_reduce_add_ps(c00), _mm512_reduce_add_ps(c01),
                _mm512_reduce_add_ps(c10), _mm512_reduce_add_ps(c11),
                _mm512_reduce_add_ps(c20), _mm512_reduce_add_ps(c21),
                _mm512_reduce_add_ps(c30), _mm512_reduce_add_ps(c31)};
            for (int r = 0; r < 4; ++r)
                for (int c = 0; c < 2; ++c) {
                    float* dst = C + long(i + r) * N + j + c;
                    *dst = (acc ? *dst : 0.0f) + s[r * 2 + c];
                }
        }
        for (; j < N; ++j) {
            const float* b0 = B + long(j) * K;
            const float* as[4] = {a0, a1, a2, a3};
            for (int r = 0; r < 4; ++r) {
                __m512 cv = _mm512_setzero_ps();
                for (int k = 0; k < kv; k += 16)
                    cv = _mm512_fmadd_ps(_mm512_loadu_ps(as[r] + k), _mm512_loadu_ps(b0 + k), cv);
                if (kv < K)
                    cv = _mm512_fmadd_ps(_mm512_maskz_loadu_ps(km, as[r] + kv),
                                         _mm512_maskz_loadu_ps(km, b0 + kv), cv);
                float* dst = C + long(i + r) * N + j;
                *dst = (acc ? *dst : 0.0f) + _mm512_reduce_add_ps(cv);
            }
        }
    }
    for (; i < M; ++i) {
        const float* a0 = A + long(i) * K;
        for (int j = 0; j < N; ++j) {
            const float* b0 = B + long(j) * K;
            __m512 cv = _mm512_setzero_ps();
            for (int k = 0; k < kv; k += 16)
                cv = _mm512_fmadd_ps(_mm512_loadu_ps(a0 + k), _mm512_loadu_ps(b0 + k), cv);
            if (kv < K)
                cv = _mm512_fmadd_ps(_mm512_maskz_loadu_ps(km, a0 + kv),
                                     _mm512_maskz_loadu_ps(km, b0 + kv), cv);
            float* dst = C + long(i) * N + j;
            *dst = (acc ? *dst : 0.0f) + _mm512_reduce_add_ps(cv);
        }
    }
}

// Two output rows, NV 16-wide column vectors in registers across the K loop.
// MASKED guards the last vector so N tails stay in SIMD.
template <int NV, int ROWS, bool MASKED>
inline void nn_block(const float* a0, const float* a1, long a_stride, const float* B,
                     float* c0, float* c1, int K, int N, bool acc, __mmask16 tm) {
    __m512 r0[NV], r1[NV];
    for (int v = 0; v < NV; ++v) {
        const bool last = MASKED && v == NV - 1;
        if (acc) {
            r0[v] = last ? _mm512_maskz_loadu_ps(tm, c0 + 16 * v) : _mm512_loadu_ps(c0 + 16 * v);
            if (ROWS == 2)
                r1[v] = last ? _mm512_maskz_loadu_ps(tm, c1 + 16 * v) : _mm512_loadu_ps(c1 + 16 * v);
        } else {
            r0[v] = _mm512_setzero_ps();
            if (ROWS == 2) r1[v] = _mm512_setzero_ps();
        }
    }
    for (int k = 0; k < K; ++k) {
        const __m512 va0 = _mm512_set1_ps(a0[k * a_stride]);
        const __m512 va1 = (ROWS == 2) ? _mm512_set1_ps(a1[k * a_stride]) : _mm512_setzero_ps();
        const float* b = B + long(k) * N;
        for (int v = 0; v < NV; ++v) {
            const bool last = MASKED && v == NV - 1;
            const __m512 vb = last ? _mm512_maskz_loadu_ps(tm, b + 16 * v)
                                   : _mm512_loadu_ps(b + 16 * v);
            r0[v] = _mm512_fmadd_ps(va0, vb, r0[v]);
            if (ROWS == 2) r1[v] = _mm512_fmadd_ps(va1, vb, r1[v]);
        }
    }
    for (int v = 0; v < NV; ++v) {
        const bool last = MASKED && v == NV - 1;
        if (last) {
            _mm512_mask_storeu_ps(c0 + 16 * v, tm, r0[v]);
            if (ROWS == 2) _mm512_mask_storeu_ps(c1 + 16 * v, tm, r1[v]);
        } else {
            _mm512_storeu_ps(c0 + 16 * v, r0[v]);
            if (ROWS == 2) _mm512_storeu_ps(c1 + 16 * v, r1[v]);
        }
    }
}

template <int ROWS>
inline void nn_row_pair(const float* a0, const float* a1, long a_stride, const float* B,
                        float* c0, float* c1, int K, int N, bool acc) {
    int j = 0;
    for (; j + 64 <= N; j += 64)
        nn_block<4, ROWS, false>(a0, a1, a_stride, B + j, c0 + j, c1 + j, K, N, acc, 0);
    for (; j + 32 <= N; j += 32)
        nn_block<2, ROWS, false>(a0, a1, a_stride, B + j, c0 + j, c1 + j, K, N, acc, 0);
    for (; j + 16 <= N; j += 16)
        nn_block<1, ROWS, false>(a0, a1, a_stride, B + j, c0 + j, c1 + j, K, N, acc, 0);
    if (j < N)
        nn_block<1, ROWS, true>(a0, a1, a_stride, B + j, c0 + j, c1 + j, K, N, acc,
                                tail_mask(N - j));
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
    const int nv = N & ~15;
    const __mmask16 tm = tail_mask(N - nv);
    for (int i = 0; i < M; ++i) {
        float* y = Y + long(i) * N;
        int j = 0;
        for (; j < nv; j += 16)
            _mm512_storeu_ps(y + j, _mm512_add_ps(_mm512_loadu_ps(y + j), _mm512_loadu_ps(b + j)));
        if (j < N)
            _mm512_mask_storeu_ps(y + j, tm,
                                  _mm512_add_ps(_mm512_maskz_loadu_ps(tm, y + j),
                                                _mm512_maskz_loadu_ps(tm, b + j)));
    }
}

void v_col_sums(const float* dY, float* db, int M, int N, bool acc) {
    if (!acc)
        for (int j = 0; j < N; ++j) db[j] = 0.0f;
    const int nv = N & ~15;
    const __mmask16 tm = tail_mask(N - nv);
    for (int i = 0; i < M; ++i) {
        const float* r = dY + long(i) * N;
        int j = 0;
        for (; j < nv; j += 16)
            _mm512_storeu_ps(db + j, _mm512_add_ps(_mm512_loadu_ps(db + j), _mm512_loadu_ps(r + j)));
        if (j < N)
            _mm512_mask_storeu_ps(db + j, tm,
                                  _mm512_add_ps(_mm512_maskz_loadu_ps(tm, db + j),
                                                _mm512_maskz_loadu_ps(tm, r + j)));
    }
}

// Same formula as the scalar lane: tanh(x) = sign(x)*(1-e)/(1+e),
// e = exp(-2|x|) via degree-5 polynomial with split-ln2 reduction.
// Bit ops go through epi32 casts: or_ps/and_ps need AVX-512DQ.
inline __m512 tanh16(__m512 x) {
    const __m512i signbit = _mm512_set1_epi32(int(0x80000000u));
    __m512 ax = _mm512_abs_ps(x);
    ax = _mm512_min_ps(ax, _mm512_set1_ps(9.01f));
    const __m512 t = _mm512_mul_ps(ax, _mm512_set1_ps(-2.0f));
    const __m512 fx = _mm512_roundscale_ps(
        _mm512_fmadd_ps(t, _mm512_set1_ps(1.44269504f), _mm512_set1_ps(0.5f)),
        _MM_FROUND_TO_NEG_INF | _MM_FROUND_NO_EXC);
    __m512 r = _mm512_fnmadd_ps(fx, _mm512_set1_ps(0.693359375f), t);
    r = _mm512_fnmadd_ps(fx, _mm512_set1_ps(-2.12194440e-4f), r);
    const __m512 z = _mm512_mul_ps(r, r);
    __m512 p = _mm512_set1_ps(1.9875691500e-4f);
    p = _mm512_fmadd_ps(p, r, _mm512_set1_ps(1.3981999507e-3f));
    p = _mm512_fmadd_ps(p, r, _mm512_set1_ps(8.3334519073e-3f));
    p = _mm512_fmadd_ps(p, r, _mm512_set1_ps(4.1665795894e-2f));
    p = _mm512_fmadd_ps(p, r, _mm512_set1_ps(1.6666665459e-1f));
    p = _mm512_fmadd_ps(p, r, _mm512_set1_ps(5.0000001201e-1f));
    p = _mm512_add_ps(_mm512_fmadd_ps(p, z, r), _mm512_set1_ps(1.0f));
    const __m512i n = _mm512_cvttps_epi32(fx);
    const __m512 pw = _mm512_castsi512_ps(
        _mm512_slli_epi32(_mm512_add_epi32(n, _mm512_set1_epi32(127)), 23));
    const __m512 e = _mm512_mul_ps(p, pw);
    const __m512 one = _mm512_set1_ps(1.0f);
    const __m512 y = _mm512_div_ps(_mm512_sub_ps(one, e), _mm512_add_ps(one, e));
    const __m512i sign = _mm512_and_epi32(_mm512_castps_si512(x), signbit);
    return _mm512_castsi512_ps(_mm512_or_epi32(_mm512_castps_si512(y), sign));
}

void v_tanh_fwd(float* y, int n) {
    const int nv = n & ~15;
    int i = 0;
    for (; i < nv; i += 16) _mm512_storeu_ps(y + i, tanh16(_mm512_loadu_ps(y + i)));
    if (i < n) {
        const __mmask16 tm = tail_mask(n - i);
        _mm512_mask_storeu_ps(y + i, tm, tanh16(_mm512_maskz_loadu_ps(tm, y + i)));
    }
}

void v_tanh_backward(float* dpre, const float* act, const float* dact, int n) {
    const __m512 one = _mm512_set1_ps(1.0f);
    const int nv = n & ~15;
    int i = 0;
    for (; i < nv; i += 16) {
        const __m512 a = _mm512_loadu_ps(act + i);
        const __m512 d = _mm512_loadu_ps(dact + i);
        _mm512_storeu_ps(dpre + i, _mm512_mul_ps(d, _mm512_fnmadd_ps(a, a, one)));
    }
    if (i < n) {
        const __mmask16 tm = tail_mask(n - i);
        const __m512 a = _mm512_maskz_loadu_ps(tm, act + i);
        const __m512 d = _mm512_maskz_loadu_ps(tm, dact + i);
        _mm512_mask_storeu_ps(dpre + i, tm, _mm512_mul_ps(d, _mm512_fnmadd_ps(a, a, one)));
    }
}

void v_axpy(float a, const float* x, float* y, int n) {
    const __m512 va = _mm512_set1_ps(a);
    const int nv = n & ~15;
    int i = 0;
    for (; i < nv; i += 16)
        _mm512_storeu_ps(y + i, _mm512_fmadd_ps(va, _mm512_loadu_ps(x + i), _mm512_loadu_ps(y + i)));
    if (i < n) {
        const __mmask16 tm = tail_mask(n - i);
        _mm512_mask_storeu_ps(y + i, tm,
                              _mm512_fmadd_ps(va, _mm512_maskz_loadu_ps(tm, x + i),
                                              _mm512_maskz_loadu_ps(tm, y + i)));
    }
}

void v_scale(float a, float* x, int n) {
    const __m512 va = _mm512_set1_ps(a);
    const int nv = n & ~15;
    int i = 0;
    for (; i < nv; i += 16)
        _mm512_storeu_ps(x + i, _mm512_mul_ps(va, _mm512_loadu_ps(x + i)));
    if (i < n) {
        const __mmask16 tm = tail_mask(n - i);
        _mm512_mask_storeu_ps(x + i, tm, _mm512_mul_ps(va, _mm512_maskz_loadu_ps(tm, x + i)));
    }
}

double v_sumsq(const float* x, int n) {
    __m512d acc0 = _mm512_setzero_pd();
    __m512d acc1 = _mm512_setzero_pd();
    const int nv = n & ~15;
    int i = 0;
    for (; i < nv; i += 16) {
        const __m512 v = _mm512_loadu_ps(x + i);
        const __m512d lo = _mm512_cvtps_pd(_mm512_castps512_ps256(v));
        // extractf32x8 needs AVX-512DQ; bitcast through f64 lanes instead
        const __m256 hi8 = _mm256_castpd_ps(_mm512_extractf64x4_pd(_mm512_castps_pd(v), 1));
        const __m512d hi = _mm512_cvtps_pd(hi8);
        acc0 = _mm512_fmadd_pd(lo, lo, acc0);
        acc1 = _mm512_fmadd_pd(hi, hi, acc1);
    }
    double out = _mm512_reduce_add_pd(_mm512_add_pd(acc0, acc1));
    for (; i < n; ++i) out += double(x[i]) * double(x[i]);
    return out;
}

void v_adam_step(float* p, const float* g, float* m, float* v, int n,
                 float lr, float b1, float b2, float eps, float bc1, float bc2) {
    const __m512 vb1 = _mm512_set1_ps(b1), v1mb1 = _mm512_set1_ps(1.0f - b1);
    const __m512 vb2 = _mm512_set1_ps(b2), v1mb2 = _mm512_set1_ps(1.0f - b2);
    const __m512 vlr = _mm512_set1_ps(lr), veps = _mm512_set1_ps(eps);
    const __m512 vbc1 = _mm512_set1_ps(bc1), vbc2 = _mm512_set1_ps(bc2);
    const int nv = n & ~15;
    int i = 0;
    for (; i < nv; i += 16) {
        const __m512 vg = _mm512_loadu_ps(g + i);
        __m512 vm = _mm512_fmadd_ps(v1mb1, vg, _mm512_mul_ps(vb1, _mm512_loadu_ps(m + i)));
        __m512 vv = _mm512_fmadd_ps(v1mb2, _mm512_mul_ps(vg, vg),
                                    _mm512_mul_ps(vb2, _mm512_loadu_ps(v + i)));
        _mm512_storeu_ps(m + i, vm);
        _mm512_storeu_ps(v + i, vv);
        const __m512 mhat = _mm512_mul_ps(vm, vbc1);
        const __m512 den = _mm512_add_ps(_mm512_sqrt_ps(_mm512_mul_ps(vv, vbc2)), veps);
        const __m512 upd = _mm512_div_ps(_mm512_mul_ps(vlr, mhat), den);
        _mm512_storeu_ps(p + i, _mm512_sub_ps(_mm512_loadu_ps(p + i), upd));
    }
    for (; i < n; ++i) {
        m[i] = b1 * m[i] + (1.0f - b1) * g[i];
        v[i] = b2 * v[i] + (1.0f - b2) * g[i] * g[i];
        p[i] -= lr * (m[i] * bc1) / (std::sqrt(v[i] * bc2) + eps);
    }
}

void v_soft_update(float* t, const float* s, float tau, int n) {
    const __m512 vt = _mm512_set1_ps(tau), v1mt = _mm512_set1_ps(1.0f - tau);
    const int nv = n & ~15;
    int i = 0;
    for (; i < nv; i += 16)
        _mm512_storeu_ps(t + i, _mm512_fmadd_ps(vt, _mm512_loadu_ps(s + i),
                                                _mm512_mul_ps(v1mt, _mm512_loadu_ps(t + i))));
    if (i < n) {
        const __mmask16 tm = tail_mask(n - i);
        _mm512_mask_storeu_ps(t + i, tm,
                              _mm512_fmadd_ps(vt, _mm512_maskz_loadu_ps(tm, s + i),
                                              _mm512_mul_ps(v1mt, _mm512_maskz_loadu_ps(tm, t + i))));
    }
}

}  // namespace

const Ops* detail_avx512_table() {
    static const Ops table = {
        v_gemm_nt, v_gemm_nn, v_gemm_tn, v_add_bias_rows, v_col_sums,
        v_tanh_fwd, v_tanh_backward, v_axpy, v_scale, v_sumsq,
        v_adam_step, v_soft_update,
    };
    return &table;
}

}  // namespace lirl::kernels
