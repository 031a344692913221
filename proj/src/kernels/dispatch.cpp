#include "lirl/kernels/kernels.hpp"

#include <stdexcept>

namespace lirl::kernels {

// Raw tables defined in the per-lane translation units. Calling these is safe
// on any CPU: the getters only hand out a pointer, no SIMD code runs.
const Ops* detail_avx2_table();
const Ops* detail_avx512_table();

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

bool cpu_has_avx512() {
#if defined(__x86_64__) || defined(__i386__)
    return __builtin_cpu_supports("avx512f");
#else
    return false;
#endif
}

const Ops* ops_avx2() { return cpu_has_avx2() ? detail_avx2_table() : nullptr; }
const Ops* ops_avx512() { return cpu_has_avx512() ? detail_avx512_table() : nullptr; }

namespace {

Backend detect() {
    if (cpu_has_avx512()) return Backend::Avx512;
    if (cpu_has_avx2()) return Backend::Avx2;
    return Backend::Scalar;
}

const Ops& table_for(Backend b) {
    switch (b) {
        case Backend::Avx512: return *detail_avx512_table();
        case Backend::Avx2: return *detail_avx2_table();
        default: return ops_scalar();
    }
}

Backend g_backend = detect();
const Ops* g_ops = &table_for(g_backend);

}  // namespace

const Ops& ops() { return *g_ops; }

Backend active_backend() { return g_backend; }

const char* backend_name(Backend b) {
    switch (b) {
        case Backend::Avx512: return "avx512";
        case Backend::Avx2: return "avx2";
        default: return "scalar";
    }
}

void force_backend(std::optional<Backend> b) {
    const Backend want = b.value_or(detect());
    if (want == Backend::Avx512 && !cpu_has_avx512())
        throw std::runtime_error("avx512 backend not supported on this CPU");
    if (want == Backend::Avx2 && !cpu_has_avx2())
        throw std::runtime_error("avx2 backend not supported on this CPU");
    g_backend = want;
    g_ops = &table_for(want);
}

}  // namespace lirl::kernels
