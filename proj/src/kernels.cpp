#include "catgnn/kernels.hpp"

#include <atomic>
#include <cmath>
#include <cstring>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace catgnn::kernels {

namespace {

std::atomic<Mode> g_mode{Mode::kParallel};

// Below this many output elements the parallel dispatch falls through to the
// serial loop; spawning a team costs more than the work saves.
constexpr std::size_t kParGrain = 16 * 1024;

inline bool go_parallel(std::size_t work) {
#ifdef _OPENMP
    return g_mode.load(std::memory_order_relaxed) == Mode::kParallel && work >= kParGrain;
#else
    (void)work;
    return false;
#endif
}

inline void gemm_nn_row(int i, const double* a, const double* b, double* c, int k, int m) {
    double* ci = c + static_cast<std::size_t>(i) * m;
    for (int j = 0; j < m; ++j) ci[j] = 0.0;
    const double* ai = a + static_cast<std::size_t>(i) * k;
    for (int p = 0; p < k; ++p) {
        const double av = ai[p];
        const double* bp = b + static_cast<std::size_t>(p) * m;
        for (int j = 0; j < m; ++j) ci[j] += av * bp[j];
    }
}

inline void gemm_nt_row(int i, const double* a, const double* b, double* c, int k, int m) {
    const double* ai = a + static_cast<std::size_t>(i) * k;
    double* ci = c + static_cast<std::size_t>(i) * m;
    for (int j = 0; j < m; ++j) {
        const double* bj = b + static_cast<std::size_t>(j) * k;
        double acc = 0.0;
        for (int p = 0; p < k; ++p) acc += ai[p] * bj[p];
        ci[j] = acc;
    }
}

}  // namespace

void set_mode(Mode m) { g_mode.store(m, std::memory_order_relaxed); }

Mode mode() { return g_mode.load(std::memory_order_relaxed); }

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

void gemm_nn(const double* a, const double* b, double* c, int n, int k, int m) {
    const std::size_t work = static_cast<std::size_t>(n) * k * m;
    if (go_parallel(work)) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
        for (int i = 0; i < n; ++i) gemm_nn_row(i, a, b, c, k, m);
#endif
    } else {
        for (int i = 0; i < n; ++i) gemm_nn_row(i, a, b, c, k, m);
    }
}

void gemm_nt(const double* a, const double* b, double* c, int n, int k, int m) {
    const std::size_t work = static_cast<std::size_t>(n) * k * m;
    if (go_parallel(work)) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
        for (int i = 0; i < n; ++i) gemm_nt_row(i, a, b, c, k, m);
#endif
    } else {
        for (int i = 0; i < n; ++i) gemm_nt_row(i, a, b, c, k, m);
    }
}

void gemm_tn(const double* a, const double* b, double* c, int n, int k, int m) {
    // C[k x m] = A^T B with A n x k, B n x m. Parallel over rows of C; each
    // row i reads column i of A, so there are no write conflicts.
    auto row = [&](int i) {
        double* ci = c + static_cast<std::size_t>(i) * m;
        for (int j = 0; j < m; ++j) ci[j] = 0.0;
        for (int r = 0; r < n; ++r) {
            const double av = a[static_cast<std::size_t>(r) * k + i];
            const double* br = b + static_cast<std::size_t>(r) * m;
            for (int j = 0; j < m; ++j) ci[j] += av * br[j];
        }
    };
    const std::size_t work = static_cast<std::size_t>(n) * k * m;
    if (go_parallel(work)) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
        for (int i = 0; i < k; ++i) row(i);
#endif
    } else {
        for (int i = 0; i < k; ++i) row(i);
    }
}

void add(const double* a, const double* b, double* out, std::size_t n) {
    if (go_parallel(n)) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
        for (long long i = 0; i < static_cast<long long>(n); ++i) out[i] = a[i] + b[i];
#endif
    } else {
        for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
    }
}

void scale(const double* a, double c, double* out, std::size_t n) {
    if (go_parallel(n)) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
        for (long long i = 0; i < static_cast<long long>(n); ++i) out[i] = a[i] * c;
#endif
    } else {
        for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * c;
    }
}

void add_row_bias(const double* a, const double* bias, double* out, int n, int m) {
    const std::size_t work = static_cast<std::size_t>(n) * m;
    auto row = [&](int i) {
        const double* ai = a + static_cast<std::size_t>(i) * m;
        double* oi = out + static_cast<std::size_t>(i) * m;
        for (int j = 0; j < m; ++j) oi[j] = ai[j] + bias[j];
    };
    if (go_parallel(work)) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
        for (int i = 0; i < n; ++i) row(i);
#endif
    } else {
        for (int i = 0; i < n; ++i) row(i);
    }
}

void leaky_relu(const double* a, double slope, double* out, std::size_t n) {
    if (go_parallel(n)) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
        for (long long i = 0; i < static_cast<long long>(n); ++i)
            out[i] = a[i] > 0.0 ? a[i] : slope * a[i];
#endif
    } else {
        for (std::size_t i = 0; i < n; ++i) out[i] = a[i] > 0.0 ? a[i] : slope * a[i];
    }
}

void leaky_relu_grad(const double* a, const double* up, double slope, double* grad,
                     std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) grad[i] += up[i] * (a[i] > 0.0 ? 1.0 : slope);
}

void elu(const double* a, double* out, std::size_t n) {
    if (go_parallel(n)) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
        for (long long i = 0; i < static_cast<long long>(n); ++i)
            out[i] = a[i] > 0.0 ? a[i] : std::expm1(a[i]);
#endif
    } else {
        for (std::size_t i = 0; i < n; ++i) out[i] = a[i] > 0.0 ? a[i] : std::expm1(a[i]);
    }
}

void elu_grad(const double* a, const double* up, double* grad, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) grad[i] += up[i] * (a[i] > 0.0 ? 1.0 : std::exp(a[i]));
}

void sigmoid(const double* a, double* out, std::size_t n) {
    auto sig = [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
    };
    if (go_parallel(n)) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
        for (long long i = 0; i < static_cast<long long>(n); ++i) out[i] = sig(a[i]);
#endif
    } else {
        for (std::size_t i = 0; i < n; ++i) out[i] = sig(a[i]);
    }
}

void segment_softmax(const double* scores, const int* offsets, int n_seg, double* out) {
    auto seg = [&](int s) {
        const int lo = offsets[s], hi = offsets[s + 1];
        if (lo == hi) return;
        double mx = scores[lo];
        for (int e = lo + 1; e < hi; ++e) mx = std::max(mx, scores[e]);
        double z = 0.0;
        for (int e = lo; e < hi; ++e) {
            out[e] = std::exp(scores[e] - mx);
            z += out[e];
        }
        const double inv = 1.0 / z;
        for (int e = lo; e < hi; ++e) out[e] *= inv;
    };
    const std::size_t work = n_seg ? static_cast<std::size_t>(offsets[n_seg]) : 0;
    if (go_parallel(work)) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
        for (int s = 0; s < n_seg; ++s) seg(s);
#endif
    } else {
        for (int s = 0; s < n_seg; ++s) seg(s);
    }
}

void weighted_segment_sum(const double* w, const double* v, int d, const int* offsets,
                          int n_seg, double* out) {
    auto seg = [&](int s) {
        double* os = out + static_cast<std::size_t>(s) * d;
        for (int j = 0; j < d; ++j) os[j] = 0.0;
        for (int e = offsets[s]; e < offsets[s + 1]; ++e) {
            const double we = w[e];
            const double* ve = v + static_cast<std::size_t>(e) * d;
            for (int j = 0; j < d; ++j) os[j] += we * ve[j];
        }
    };
    const std::size_t work =
        n_seg ? static_cast<std::size_t>(offsets[n_seg]) * d : 0;
    if (go_parallel(work)) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
        for (int s = 0; s < n_seg; ++s) seg(s);
#endif
    } else {
        for (int s = 0; s < n_seg; ++s) seg(s);
    }
}

void gather_rows(const double* src, int d, std::span<const int> idx, double* out) {
    const int n = static_cast<int>(idx.size());
    const std::size_t work = static_cast<std::size_t>(n) * d;
    auto row = [&](int i) {
        std::memcpy(out + static_cast<std::size_t>(i) * d,
                    src + static_cast<std::size_t>(idx[i]) * d, sizeof(double) * d);
    };
    if (go_parallel(work)) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
        for (int i = 0; i < n; ++i) row(i);
#endif
    } else {
        for (int i = 0; i < n; ++i) row(i);
    }
}

void scatter_add_rows(const double* src, int d, std::span<const int> idx, double* out) {
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const double* si = src + i * d;
        double* oi = out + static_cast<std::size_t>(idx[i]) * d;
        for (int j = 0; j < d; ++j) oi[j] += si[j];
    }
}

double dot(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

double sum(const double* a, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i];
    return acc;
}

bool all_finite(const double* a, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
        if (!std::isfinite(a[i])) return false;
    return true;
}

}  // namespace catgnn::kernels
