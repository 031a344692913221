#pragma once

// Dense fp32 kernels used by the neural nets. Every operation has a scalar
// reference implementation plus AVX2 and AVX-512 variants; the active lane is
// picked once at startup from CPUID and can be overridden for testing.
//
// Layout conventions: all matrices are row-major, contiguous.
//   gemm_nt:  C[MxN] (+)= A[MxK] * B[NxK]^T
//   gemm_nn:  C[MxN] (+)= A[MxK] * B[KxN]
//   gemm_tn:  C[MxN] (+)= A[KxM]^T * B[KxN]

#include <cstddef>
#include <optional>
#include <string>

namespace lirl::kernels {

enum class Backend { Scalar, Avx2, Avx512 };

struct Ops {
    void (*gemm_nt)(const float*, const float*, float*, int, int, int, bool);
    void (*gemm_nn)(const float*, const float*, float*, int, int, int, bool);
    void (*gemm_tn)(const float*, const float*, float*, int, int, int, bool);
    void (*add_bias_rows)(float*, const float*, int, int);
    void (*col_sums)(const float*, float*, int, int, bool);
    void (*tanh_fwd)(float*, int);
    void (*tanh_backward)(float*, const float*, const float*, int);
    void (*axpy)(float, const float*, float*, int);
    void (*scale)(float, float*, int);
    double (*sumsq)(const float*, int);
    void (*adam_step)(float*, const float*, float*, float*, int,
                      float, float, float, float, float, float);
    void (*soft_update)(float*, const float*, float, int);
};

// Active function table (auto-detected; see force_backend).
const Ops& ops();

Backend active_backend();
const char* backend_name(Backend b);

// Force a specific lane (tests); nullopt restores auto-detection.
// Throws if the requested lane is not supported by this CPU.
void force_backend(std::optional<Backend> b);

bool cpu_has_avx2();
bool cpu_has_avx512();

// Per-lane tables for equivalence tests.
const Ops& ops_scalar();
const Ops* ops_avx2();    // nullptr if unsupported on this CPU
const Ops* ops_avx512();  // nullptr if unsupported on this CPU

// The fp32 tanh uses a polynomial exp approximation (max abs error < 1e-6,
// same formula in every lane); std::tanh is far too slow for the training
// loop. The f64 overload keeps std::tanh so finite-difference gradient
// checks see an activation whose derivative is exactly 1 - tanh^2.
void tanh_forward(float* y, int n);
void tanh_forward(double* y, int n);

// Scalar double-precision twins for the parts of the code that run in f64
// (gradient checking instantiations). No SIMD lanes exist for these.
namespace f64 {
void gemm_nt(const double* A, const double* B, double* C, int M, int N, int K, bool acc);
void gemm_nn(const double* A, const double* B, double* C, int M, int N, int K, bool acc);
void gemm_tn(const double* A, const double* B, double* C, int M, int N, int K, bool acc);
void add_bias_rows(double* Y, const double* b, int M, int N);
void col_sums(const double* dY, double* db, int M, int N, bool acc);
void tanh_backward(double* dpre, const double* act, const double* dact, int n);
void axpy(double a, const double* x, double* y, int n);
void scale(double a, double* x, int n);
double sumsq(const double* x, int n);
void adam_step(double* p, const double* g, double* m, double* v, int n,
               double lr, double b1, double b2, double eps, double bc1, double bc2);
void soft_update(double* target, const double* src, double tau, int n);
}  // namespace f64

}  // namespace lirl::kernels
