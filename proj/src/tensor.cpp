#include "catgnn/tensor.hpp"

#include <cmath>
#include <random>

#include "catgnn/kernels.hpp"

namespace catgnn {

namespace {

void require_finite(const Tensor& t, const char* op) {
    if (!kernels::all_finite(t.ptr(), t.size()))
        throw NumericsError(std::string("non-finite value produced by ") + op);
}

Tape* common_tape(std::initializer_list<const Tensor*> ts) {
    Tape* tape = nullptr;
    for (const Tensor* t : ts) {
        if (!t->tracked()) continue;
        if (tape == nullptr) tape = t->tape;
        else if (tape != t->tape)
            throw ContractError("operands tracked on different tapes");
    }
    return tape;
}

void accumulate(Tape& tape, int node, const double* g, std::size_t n) {
    auto& buf = tape.grad_buffer(node);
    for (std::size_t i = 0; i < n; ++i) buf[i] += g[i];
}

}  // namespace

Tensor::Tensor(int r, int c)
    : rows(r), cols(c), data(std::make_shared<std::vector<double>>(static_cast<std::size_t>(r) * c, 0.0)) {}

Tensor::Tensor(int r, int c, std::vector<double> values) : rows(r), cols(c) {
    if (values.size() != static_cast<std::size_t>(r) * c)
        throw ShapeError("tensor init: value count does not match shape");
    data = std::make_shared<std::vector<double>>(std::move(values));
}

Tensor Tensor::scalar(double v) { return Tensor(1, 1, {v}); }

Tensor Tensor::zeros(int r, int c) { return Tensor(r, c); }

Tensor Tensor::from_row(std::span<const double> v) {
    return Tensor(1, static_cast<int>(v.size()), std::vector<double>(v.begin(), v.end()));
}

double Tensor::item() const {
    if (rows != 1 || cols != 1) throw ShapeError("item() on non-scalar tensor");
    return (*data)[0];
}

Tensor Tensor::detached_copy() const {
    Tensor out(rows, cols, *data);
    return out;
}

Tensor Tape::leaf(const Tensor& t) {
    Tensor out = t;
    out.tape = this;
    out.node = record(t.size(), nullptr);
    return out;
}

int Tape::record(std::size_t out_size, BackFn fn) {
    nodes_.push_back({out_size, std::move(fn)});
    return static_cast<int>(nodes_.size()) - 1;
}

std::vector<double>& Tape::grad_buffer(int node) {
    if (grads_[node].empty()) grads_[node].assign(nodes_[node].out_size, 0.0);
    return grads_[node];
}

bool Tape::has_grad(int node) const { return !grads_[node].empty(); }

void Tape::backward(const Tensor& loss) {
    if (!loss.tracked() || loss.tape != this)
        throw ContractError("backward: loss is not tracked on this tape");
    if (loss.rows != 1 || loss.cols != 1)
        throw ContractError("backward: loss must be a scalar");
    grads_.assign(nodes_.size(), {});
    grad_buffer(loss.node)[0] = 1.0;
    for (int id = static_cast<int>(nodes_.size()) - 1; id >= 0; --id) {
        if (grads_[id].empty()) continue;  // node does not influence the loss
        if (nodes_[id].back) nodes_[id].back(*this, grads_[id]);
    }
    ran_backward_ = true;
}

Tensor Tape::grad(const Tensor& t) const {
    if (!ran_backward_) throw ContractError("grad() before backward()");
    if (!t.tracked() || t.tape != this) throw ContractError("grad() of untracked tensor");
    Tensor g(t.rows, t.cols);
    if (!grads_[t.node].empty()) *g.data = grads_[t.node];
    return g;
}

namespace ops {

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.cols != b.rows) throw ShapeError("matmul: inner dimensions differ");
    Tensor out(a.rows, b.cols);
    kernels::gemm_nn(a.ptr(), b.ptr(), out.ptr(), a.rows, a.cols, b.cols);
    require_finite(out, "matmul");
    if (Tape* tape = common_tape({&a, &b})) {
        out.tape = tape;
        const int an = a.node, bn = b.node;
        auto ad = a.data, bd = b.data;
        const int n = a.rows, k = a.cols, m = b.cols;
        out.node = tape->record(out.size(), [=](Tape& tp, const std::vector<double>& up) {
            if (an >= 0) {
                std::vector<double> ga(static_cast<std::size_t>(n) * k);
                kernels::gemm_nt(up.data(), bd->data(), ga.data(), n, m, k);
                accumulate(tp, an, ga.data(), ga.size());
            }
            if (bn >= 0) {
                std::vector<double> gb(static_cast<std::size_t>(k) * m);
                kernels::gemm_tn(ad->data(), up.data(), gb.data(), n, k, m);
                accumulate(tp, bn, gb.data(), gb.size());
            }
        });
    }
    return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
    if (a.rows != b.rows || a.cols != b.cols) throw ShapeError("add: shape mismatch");
    Tensor out(a.rows, a.cols);
    kernels::add(a.ptr(), b.ptr(), out.ptr(), out.size());
    require_finite(out, "add");
    if (Tape* tape = common_tape({&a, &b})) {
        out.tape = tape;
        const int an = a.node, bn = b.node;
        out.node = tape->record(out.size(), [=](Tape& tp, const std::vector<double>& up) {
            if (an >= 0) accumulate(tp, an, up.data(), up.size());
            if (bn >= 0) accumulate(tp, bn, up.data(), up.size());
        });
    }
    return out;
}

Tensor scale(const Tensor& a, double c) {
    Tensor out(a.rows, a.cols);
    kernels::scale(a.ptr(), c, out.ptr(), out.size());
    require_finite(out, "scale");
    if (Tape* tape = common_tape({&a})) {
        out.tape = tape;
        const int an = a.node;
        out.node = tape->record(out.size(), [=](Tape& tp, const std::vector<double>& up) {
            std::vector<double> g(up.size());
            kernels::scale(up.data(), c, g.data(), up.size());
            accumulate(tp, an, g.data(), g.size());
        });
    }
    return out;
}

Tensor add_row_bias(const Tensor& a, const Tensor& bias) {
    if (bias.rows != 1 || bias.cols != a.cols) throw ShapeError("add_row_bias: bias must be 1 x cols");
    Tensor out(a.rows, a.cols);
    kernels::add_row_bias(a.ptr(), bias.ptr(), out.ptr(), a.rows, a.cols);
    require_finite(out, "add_row_bias");
    if (Tape* tape = common_tape({&a, &bias})) {
        out.tape = tape;
        const int an = a.node, bn = bias.node;
        const int n = a.rows, m = a.cols;
        out.node = tape->record(out.size(), [=](Tape& tp, const std::vector<double>& up) {
            if (an >= 0) accumulate(tp, an, up.data(), up.size());
            if (bn >= 0) {
                std::vector<double> g(m, 0.0);
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < m; ++j) g[j] += up[static_cast<std::size_t>(i) * m + j];
                accumulate(tp, bn, g.data(), g.size());
            }
        });
    }
    return out;
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
    if (a.rows != b.rows) throw ShapeError("concat_cols: row counts differ");
    Tensor out(a.rows, a.cols + b.cols);
    for (int i = 0; i < a.rows; ++i) {
        double* oi = out.ptr() + static_cast<std::size_t>(i) * out.cols;
        const double* ai = a.ptr() + static_cast<std::size_t>(i) * a.cols;
        const double* bi = b.ptr() + static_cast<std::size_t>(i) * b.cols;
        std::copy(ai, ai + a.cols, oi);
        std::copy(bi, bi + b.cols, oi + a.cols);
    }
    require_finite(out, "concat_cols");
    if (Tape* tape = common_tape({&a, &b})) {
        out.tape = tape;
        const int an = a.node, bn = b.node;
        const int n = a.rows, ac = a.cols, bc = b.cols;
        out.node = tape->record(out.size(), [=](Tape& tp, const std::vector<double>& up) {
            const int oc = ac + bc;
            if (an >= 0) {
                std::vector<double> g(static_cast<std::size_t>(n) * ac);
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < ac; ++j)
                        g[static_cast<std::size_t>(i) * ac + j] = up[static_cast<std::size_t>(i) * oc + j];
                accumulate(tp, an, g.data(), g.size());
            }
            if (bn >= 0) {
                std::vector<double> g(static_cast<std::size_t>(n) * bc);
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < bc; ++j)
                        g[static_cast<std::size_t>(i) * bc + j] = up[static_cast<std::size_t>(i) * oc + ac + j];
                accumulate(tp, bn, g.data(), g.size());
            }
        });
    }
    return out;
}

Tensor leaky_relu(const Tensor& a, double slope) {
    Tensor out(a.rows, a.cols);
    kernels::leaky_relu(a.ptr(), slope, out.ptr(), out.size());
    require_finite(out, "leaky_relu");
    if (Tape* tape = common_tape({&a})) {
        out.tape = tape;
        const int an = a.node;
        auto ad = a.data;
        out.node = tape->record(out.size(), [=](Tape& tp, const std::vector<double>& up) {
            auto& buf = tp.grad_buffer(an);
            kernels::leaky_relu_grad(ad->data(), up.data(), slope, buf.data(), up.size());
        });
    }
    return out;
}

Tensor elu(const Tensor& a) {
    Tensor out(a.rows, a.cols);
    kernels::elu(a.ptr(), out.ptr(), out.size());
    require_finite(out, "elu");
    if (Tape* tape = common_tape({&a})) {
        out.tape = tape;
        const int an = a.node;
        auto ad = a.data;
        out.node = tape->record(out.size(), [=](Tape& tp, const std::vector<double>& up) {
            auto& buf = tp.grad_buffer(an);
            kernels::elu_grad(ad->data(), up.data(), buf.data(), up.size());
        });
    }
    return out;
}

Tensor sigmoid(const Tensor& a) {
    Tensor out(a.rows, a.cols);
    kernels::sigmoid(a.ptr(), out.ptr(), out.size());
    require_finite(out, "sigmoid");
    if (Tape* tape = common_tape({&a})) {
        out.tape = tape;
        const int an = a.node;
        auto od = out.data;
        out.node = tape->record(out.size(), [=](Tape& tp, const std::vector<double>& up) {
            auto& buf = tp.grad_buffer(an);
            const auto& s = *od;
            for (std::size_t i = 0; i < up.size(); ++i) buf[i] += up[i] * s[i] * (1.0 - s[i]);
        });
    }
    return out;
}

Tensor dropout(const Tensor& a, double rate, std::uint64_t seed, bool training) {
    if (rate < 0.0 || rate >= 1.0) throw InvalidInput("dropout rate must be in [0, 1)");
    if (!training || rate == 0.0) {
        if (!a.tracked()) return a;
        // identity op keeps the tape wiring trivial
        return scale(a, 1.0);
    }
    Tensor out(a.rows, a.cols);
    auto mask = std::make_shared<std::vector<double>>(a.size());
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double keep = 1.0 - rate;
    const double inv_keep = 1.0 / keep;
    for (std::size_t i = 0; i < a.size(); ++i) {
        (*mask)[i] = unif(rng) < keep ? inv_keep : 0.0;
        (*out.data)[i] = (*a.data)[i] * (*mask)[i];
    }
    require_finite(out, "dropout");
    if (Tape* tape = common_tape({&a})) {
        out.tape = tape;
        const int an = a.node;
        out.node = tape->record(out.size(), [=](Tape& tp, const std::vector<double>& up) {
            auto& buf = tp.grad_buffer(an);
            for (std::size_t i = 0; i < up.size(); ++i) buf[i] += up[i] * (*mask)[i];
        });
    }
    return out;
}

Tensor sum_all(const Tensor& a) {
    Tensor out = Tensor::scalar(kernels::sum(a.ptr(), a.size()));
    require_finite(out, "sum_all");
    if (Tape* tape = common_tape({&a})) {
        out.tape = tape;
        const int an = a.node;
        const std::size_t n = a.size();
        out.node = tape->record(1, [=](Tape& tp, const std::vector<double>& up) {
            auto& buf = tp.grad_buffer(an);
            for (std::size_t i = 0; i < n; ++i) buf[i] += up[0];
        });
    }
    return out;
}

Tensor gather_rows(const Tensor& a, std::vector<int> idx) {
    for (int i : idx)
        if (i < 0 || i >= a.rows) throw IndexError("gather_rows: row index out of range");
    Tensor out(static_cast<int>(idx.size()), a.cols);
    kernels::gather_rows(a.ptr(), a.cols, idx, out.ptr());
    if (Tape* tape = common_tape({&a})) {
        out.tape = tape;
        const int an = a.node;
        auto ids = std::make_shared<std::vector<int>>(std::move(idx));
        const int d = a.cols;
        out.node = tape->record(out.size(), [=](Tape& tp, const std::vector<double>& up) {
            auto& buf = tp.grad_buffer(an);
            kernels::scatter_add_rows(up.data(), d, *ids, buf.data());
        });
    }
    return out;
}

Tensor segment_softmax(const Tensor& scores, std::vector<int> offsets) {
    if (scores.cols != 1) throw ShapeError("segment_softmax: scores must be a column vector");
    const int n_seg = static_cast<int>(offsets.size()) - 1;
    if (n_seg < 1 || offsets.front() != 0 || offsets.back() != scores.rows)
        throw SegmentError("segment_softmax: offsets do not cover the scores");
    for (int s = 0; s < n_seg; ++s) {
        if (offsets[s + 1] < offsets[s]) throw SegmentError("segment_softmax: offsets not sorted");
        if (offsets[s + 1] == offsets[s]) throw SegmentError("segment_softmax: empty segment");
    }
    Tensor out(scores.rows, 1);
    kernels::segment_softmax(scores.ptr(), offsets.data(), n_seg, out.ptr());
    require_finite(out, "segment_softmax");
    if (Tape* tape = common_tape({&scores})) {
        out.tape = tape;
        const int sn = scores.node;
        auto od = out.data;
        auto offs = std::make_shared<std::vector<int>>(std::move(offsets));
        out.node = tape->record(out.size(), [=](Tape& tp, const std::vector<double>& up) {
            // ds_i = a_i * (up_i - sum_j a_j up_j) within each segment
            auto& buf = tp.grad_buffer(sn);
            const auto& a = *od;
            for (std::size_t s = 0; s + 1 < offs->size(); ++s) {
                double inner = 0.0;
                for (int e = (*offs)[s]; e < (*offs)[s + 1]; ++e) inner += a[e] * up[e];
                for (int e = (*offs)[s]; e < (*offs)[s + 1]; ++e) buf[e] += a[e] * (up[e] - inner);
            }
        });
    }
    return out;
}

Tensor weighted_segment_sum(const Tensor& w, const Tensor& v, std::vector<int> offsets) {
    if (w.cols != 1 || w.rows != v.rows)
        throw ShapeError("weighted_segment_sum: weights must be a column vector aligned with values");
    const int n_seg = static_cast<int>(offsets.size()) - 1;
    if (n_seg < 1 || offsets.front() != 0 || offsets.back() != v.rows)
        throw SegmentError("weighted_segment_sum: offsets do not cover the values");
    for (int s = 0; s < n_seg; ++s)
        if (offsets[s + 1] < offsets[s]) throw SegmentError("weighted_segment_sum: offsets not sorted");
    Tensor out(n_seg, v.cols);
    kernels::weighted_segment_sum(w.ptr(), v.ptr(), v.cols, offsets.data(), n_seg, out.ptr());
    require_finite(out, "weighted_segment_sum");
    if (Tape* tape = common_tape({&w, &v})) {
        out.tape = tape;
        const int wn = w.node, vn = v.node;
        auto wd = w.data, vd = v.data;
        const int d = v.cols;
        auto offs = std::make_shared<std::vector<int>>(std::move(offsets));
        out.node = tape->record(out.size(), [=](Tape& tp, const std::vector<double>& up) {
            for (std::size_t s = 0; s + 1 < offs->size(); ++s) {
                const double* us = up.data() + s * d;
                for (int e = (*offs)[s]; e < (*offs)[s + 1]; ++e) {
                    const double* ve = vd->data() + static_cast<std::size_t>(e) * d;
                    if (wn >= 0) {
                        auto& wb = tp.grad_buffer(wn);
                        wb[e] += kernels::dot(us, ve, d);
                    }
                    if (vn >= 0) {
                        auto& vb = tp.grad_buffer(vn);
                        double* ge = vb.data() + static_cast<std::size_t>(e) * d;
                        const double we = (*wd)[e];
                        for (int j = 0; j < d; ++j) ge[j] += we * us[j];
                    }
                }
            }
        });
    }
    return out;
}

Tensor bce_with_logits(const Tensor& logits, const Tensor& targets,
                       const std::vector<std::uint8_t>& mask) {
    if (logits.cols != 1 || targets.cols != 1 || logits.rows != targets.rows)
        throw ShapeError("bce_with_logits: logits/targets must be aligned column vectors");
    if (mask.size() != static_cast<std::size_t>(logits.rows))
        throw ShapeError("bce_with_logits: mask length mismatch");
    std::size_t n_masked = 0;
    double total = 0.0;
    for (int i = 0; i < logits.rows; ++i) {
        if (!mask[i]) continue;
        ++n_masked;
        const double z = (*logits.data)[i];
        const double y = (*targets.data)[i];
        // stable form of -(y log s(z) + (1-y) log(1 - s(z)))
        total += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
    }
    if (n_masked == 0) throw InvalidInput("bce_with_logits: mask selects no entries");
    Tensor out = Tensor::scalar(total / static_cast<double>(n_masked));
    require_finite(out, "bce_with_logits");
    if (Tape* tape = common_tape({&logits, &targets})) {
        out.tape = tape;
        const int ln = logits.node, tn = targets.node;
        auto ld = logits.data, td = targets.data;
        auto mk = std::make_shared<std::vector<std::uint8_t>>(mask);
        const double inv_n = 1.0 / static_cast<double>(n_masked);
        out.node = tape->record(1, [=](Tape& tp, const std::vector<double>& up) {
            const double u = up[0] * inv_n;
            for (std::size_t i = 0; i < mk->size(); ++i) {
                if (!(*mk)[i]) continue;
                const double z = (*ld)[i];
                double s;
                kernels::sigmoid(&z, &s, 1);
                if (ln >= 0) tp.grad_buffer(ln)[i] += u * (s - (*td)[i]);
                if (tn >= 0) tp.grad_buffer(tn)[i] += u * (-z);
            }
        });
    }
    return out;
}

Tensor l2_norm_sq(std::span<const Tensor> params) {
    double total = 0.0;
    for (const Tensor& p : params) total += kernels::dot(p.ptr(), p.ptr(), p.size());
    Tensor out = Tensor::scalar(total);
    require_finite(out, "l2_norm_sq");
    Tape* tape = nullptr;
    for (const Tensor& p : params) {
        if (!p.tracked()) continue;
        if (tape == nullptr) tape = p.tape;
        else if (tape != p.tape) throw ContractError("l2_norm_sq: mixed tapes");
    }
    if (tape) {
        out.tape = tape;
        struct In {
            int node;
            std::shared_ptr<std::vector<double>> data;
        };
        auto ins = std::make_shared<std::vector<In>>();
        for (const Tensor& p : params)
            if (p.tracked()) ins->push_back({p.node, p.data});
        out.node = tape->record(1, [=](Tape& tp, const std::vector<double>& up) {
            for (const In& in : *ins) {
                auto& buf = tp.grad_buffer(in.node);
                for (std::size_t i = 0; i < in.data->size(); ++i)
                    buf[i] += up[0] * 2.0 * (*in.data)[i];
            }
        });
    }
    return out;
}

}  // namespace ops

GradCheckReport grad_check(const std::function<Tensor(Tape&, std::span<const Tensor>)>& f,
                           std::span<const Tensor> point, double step, double tol) {
    // analytic gradients
    std::vector<Tensor> work;
    work.reserve(point.size());
    for (const Tensor& p : point) work.push_back(p.detached_copy());
    Tape tape;
    std::vector<Tensor> tracked;
    tracked.reserve(work.size());
    for (Tensor& w : work) tracked.push_back(tape.leaf(w));
    Tensor loss = f(tape, tracked);
    tape.backward(loss);
    std::vector<Tensor> analytic;
    analytic.reserve(tracked.size());
    for (const Tensor& t : tracked) analytic.push_back(tape.grad(t));

    GradCheckReport report;
    report.pass = true;
    Tape dummy;
    for (std::size_t pi = 0; pi < work.size(); ++pi) {
        for (std::size_t i = 0; i < work[pi].size(); ++i) {
            const double orig = (*work[pi].data)[i];
            (*work[pi].data)[i] = orig + step;
            const double up = f(dummy, work).item();
            (*work[pi].data)[i] = orig - step;
            const double down = f(dummy, work).item();
            (*work[pi].data)[i] = orig;
            const double fd = (up - down) / (2.0 * step);
            const double an = (*analytic[pi].data)[i];
            const double rel = std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-3});
            report.rel_errors.push_back(rel);
            report.max_rel_error = std::max(report.max_rel_error, rel);
        }
    }
    report.pass = report.max_rel_error < tol;
    return report;
}

}  // namespace catgnn
