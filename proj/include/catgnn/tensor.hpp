#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "catgnn/error.hpp"

namespace catgnn {

class Tape;

// Dense row-major matrix of 64-bit floats. A Tensor is a cheap handle: the
// value buffer is shared, and `node >= 0` marks it as tracked on `tape`.
// Untracked tensors are immutable values and safe to share across threads.
struct Tensor {
    int rows = 0;
    int cols = 0;
    std::shared_ptr<std::vector<double>> data;
    int node = -1;
    Tape* tape = nullptr;

    Tensor() = default;
    Tensor(int r, int c);
    Tensor(int r, int c, std::vector<double> values);
    static Tensor scalar(double v);
    static Tensor zeros(int r, int c);
    static Tensor from_row(std::span<const double> v);

    std::size_t size() const { return static_cast<std::size_t>(rows) * cols; }
    bool tracked() const { return node >= 0; }
    double& at(int r, int c) { return (*data)[static_cast<std::size_t>(r) * cols + c]; }
    double at(int r, int c) const { return (*data)[static_cast<std::size_t>(r) * cols + c]; }
    double item() const;
    const double* ptr() const { return data->data(); }
    double* ptr() { return data->data(); }
    std::span<const double> values() const { return {data->data(), size()}; }

    // Deep copy of the values; result is untracked.
    Tensor detached_copy() const;
};

// Records every primitive op of one forward pass in execution order and
// replays locally stored partials in reverse. One tape per training step,
// confined to a single thread.
class Tape {
  public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    // Marks `t` as a leaf tracked by this tape; returns a tracked handle
    // sharing the same value buffer.
    Tensor leaf(const Tensor& t);

    // Runs reverse-mode accumulation from a scalar loss. Gradients for all
    // tracked tensors become available through grad(); untracked tensors
    // never receive one.
    void backward(const Tensor& loss);

    // Gradient of the last backward() w.r.t. a tracked tensor (zeros if the
    // tensor did not influence the loss).
    Tensor grad(const Tensor& t) const;

    std::size_t num_nodes() const { return nodes_.size(); }

    // --- internal plumbing used by the op layer ---
    using BackFn = std::function<void(Tape&, const std::vector<double>&)>;
    int record(std::size_t out_size, BackFn fn);
    std::vector<double>& grad_buffer(int node);
    bool has_grad(int node) const;

  private:
    struct Node {
        std::size_t out_size;
        BackFn back;
    };
    std::vector<Node> nodes_;
    std::vector<std::vector<double>> grads_;
    bool ran_backward_ = false;
};

// Reverse-mode primitives. Each op computes eagerly, validates that every
// output value is finite, and records a backward closure when any input is
// tracked.
namespace ops {

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
Tensor add_row_bias(const Tensor& a, const Tensor& bias);
Tensor concat_cols(const Tensor& a, const Tensor& b);
Tensor leaky_relu(const Tensor& a, double slope);
Tensor elu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor dropout(const Tensor& a, double rate, std::uint64_t seed, bool training);
Tensor sum_all(const Tensor& a);
Tensor gather_rows(const Tensor& a, std::vector<int> idx);

// Softmax normalized independently within each contiguous segment given by
// offsets (n_seg+1 entries). Input must be a column vector.
Tensor segment_softmax(const Tensor& scores, std::vector<int> offsets);

// out[s,:] = sum_e w[e] * v[e,:] per segment; w is a column vector aligned
// with the rows of v.
Tensor weighted_segment_sum(const Tensor& w, const Tensor& v, std::vector<int> offsets);

// Mean binary cross-entropy with logits over masked entries. logits/targets
// are column vectors; mask selects the entries that contribute.
Tensor bce_with_logits(const Tensor& logits, const Tensor& targets,
                       const std::vector<std::uint8_t>& mask);

// sum of squares over a parameter list
Tensor l2_norm_sq(std::span<const Tensor> params);

}  // namespace ops

struct GradCheckReport {
    std::vector<double> rel_errors;  // flattened over all coordinates of all inputs
    double max_rel_error = 0.0;
    bool pass = false;
};

// Central finite-difference check of d f / d point against the tape gradient.
// f must be deterministic and scalar-valued. Relative error uses
// |a-b| / max(|a|,|b|,1e-3), so near-zero coordinates are compared absolutely.
GradCheckReport grad_check(const std::function<Tensor(Tape&, std::span<const Tensor>)>& f,
                           std::span<const Tensor> point, double step, double tol);

}  // namespace catgnn
