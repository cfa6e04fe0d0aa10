#pragma once

#include <cstddef>
#include <span>

namespace catgnn::kernels {

// Execution mode for the dense kernels. Parallel uses OpenMP when compiled
// in; each output element is still computed by exactly one thread with the
// same inner-loop order as the serial path, so results are bit-identical
// across modes and thread counts.
enum class Mode { kSerial, kParallel };

void set_mode(Mode m);
Mode mode();
int max_threads();

// C[n x m] = A[n x k] * B[k x m]
void gemm_nn(const double* a, const double* b, double* c, int n, int k, int m);
// C[n x m] = A[n x k] * B[m x k]^T
void gemm_nt(const double* a, const double* b, double* c, int n, int k, int m);
// C[k x m] = A[n x k]^T * B[n x m]
void gemm_tn(const double* a, const double* b, double* c, int n, int k, int m);

void add(const double* a, const double* b, double* out, std::size_t n);
void scale(const double* a, double c, double* out, std::size_t n);
// out[i,:] += g[i] broadcast is not needed; row-broadcast add of a 1 x m bias:
void add_row_bias(const double* a, const double* bias, double* out, int n, int m);

void leaky_relu(const double* a, double slope, double* out, std::size_t n);
void leaky_relu_grad(const double* a, const double* up, double slope, double* grad,
                     std::size_t n);
void elu(const double* a, double* out, std::size_t n);
void elu_grad(const double* a, const double* up, double* grad, std::size_t n);
void sigmoid(const double* a, double* out, std::size_t n);

// Softmax within each contiguous segment. offsets has n_seg+1 entries;
// segment s covers [offsets[s], offsets[s+1]).
void segment_softmax(const double* scores, const int* offsets, int n_seg, double* out);

// out[s,:] = sum over e in segment s of w[e] * v[e,:]; out is n_seg x d.
void weighted_segment_sum(const double* w, const double* v, int d, const int* offsets,
                          int n_seg, double* out);

// rows of `out` are rows `idx[i]` of `src` (src is n x d, out is idx.size() x d)
void gather_rows(const double* src, int d, std::span<const int> idx, double* out);
// out[idx[i],:] += src[i,:]; serial only (scatter has write conflicts)
void scatter_add_rows(const double* src, int d, std::span<const int> idx, double* out);

double dot(const double* a, const double* b, std::size_t n);
double sum(const double* a, std::size_t n);
bool all_finite(const double* a, std::size_t n);

}  // namespace catgnn::kernels
