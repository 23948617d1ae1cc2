#include "lskt/numerics/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lskt/numerics/errors.hpp"

namespace lskt {

namespace {

void require_rank(const Var& v, std::size_t rank, const char* op) {
    if (v.value().rank() != rank) {
        throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got shape " +
                             shape_to_string(v.shape()));
    }
}

void require_same_shape(const Var& a, const Var& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw DimensionError(std::string(op) + ": shape mismatch " + shape_to_string(a.shape()) + " vs " +
                             shape_to_string(b.shape()));
    }
}

void add_into(Tensor* dst, const Tensor& src) {
    if (dst == nullptr) return;
    auto d = dst->data();
    auto s = src.data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

// C += A·B with A [m,k], B [k,n]; loop order keeps the summation order fixed.
void gemm_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = c + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = a[i * k + p];
            if (av == 0.0) continue;
            const double* brow = b + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

} // namespace

Var matmul(const Var& a, const Var& b) {
    require_rank(a, 2, "matmul");
    require_rank(b, 2, "matmul");
    const Tensor& A = a.value();
    const Tensor& B = b.value();
    const std::size_t m = A.dim(0), k = A.dim(1), n = B.dim(1);
    if (B.dim(0) != k) {
        throw DimensionError("matmul: inner dimensions differ, " + shape_to_string(A.shape()) + " · " +
                             shape_to_string(B.shape()));
    }
    Tensor C({m, n}, 0.0);
    gemm_acc(A.data().data(), B.data().data(), C.data().data(), m, k, n);
    return a.graph().record(std::move(C), {a, b}, [a, b, m, k, n](Graph& g, const Tensor& dC) {
        const Tensor& A = a.value();
        const Tensor& B = b.value();
        if (Tensor* dA = g.grad_slot(a)) {
            // dA[i,p] += Σ_j dC[i,j] B[p,j]
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t p = 0; p < k; ++p) {
                    double acc = 0.0;
                    for (std::size_t j = 0; j < n; ++j) acc += dC[i * n + j] * B[p * n + j];
                    (*dA)[i * k + p] += acc;
                }
            }
        }
        if (Tensor* dB = g.grad_slot(b)) {
            // dB[p,j] += Σ_i A[i,p] dC[i,j]
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t p = 0; p < k; ++p) {
                    const double av = A[i * k + p];
                    if (av == 0.0) continue;
                    for (std::size_t j = 0; j < n; ++j) (*dB)[p * n + j] += av * dC[i * n + j];
                }
            }
        }
    });
}

Var linear(const Var& x, const Var& weight, const Var& bias) { return add_row(matmul(x, weight), bias); }

Var transpose(const Var& a) {
    require_rank(a, 2, "transpose");
    const Tensor& A = a.value();
    const std::size_t r = A.dim(0), c = A.dim(1);
    Tensor T({c, r});
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) T[j * r + i] = A[i * c + j];
    return a.graph().record(std::move(T), {a}, [a, r, c](Graph& g, const Tensor& dT) {
        if (Tensor* dA = g.grad_slot(a)) {
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < c; ++j) (*dA)[i * c + j] += dT[j * r + i];
        }
    });
}

Var add(const Var& a, const Var& b) {
    require_same_shape(a, b, "add");
    Tensor out = a.value();
    auto o = out.data();
    auto bv = b.value().data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] += bv[i];
    return a.graph().record(std::move(out), {a, b}, [a, b](Graph& g, const Tensor& d) {
        add_into(g.grad_slot(a), d);
        add_into(g.grad_slot(b), d);
    });
}

Var sub(const Var& a, const Var& b) {
    require_same_shape(a, b, "sub");
    Tensor out = a.value();
    auto o = out.data();
    auto bv = b.value().data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] -= bv[i];
    return a.graph().record(std::move(out), {a, b}, [a, b](Graph& g, const Tensor& d) {
        add_into(g.grad_slot(a), d);
        if (Tensor* db = g.grad_slot(b)) {
            for (std::size_t i = 0; i < d.size(); ++i) (*db)[i] -= d[i];
        }
    });
}

Var mul(const Var& a, const Var& b) {
    require_same_shape(a, b, "mul");
    Tensor out = a.value();
    auto o = out.data();
    auto bv = b.value().data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] *= bv[i];
    return a.graph().record(std::move(out), {a, b}, [a, b](Graph& g, const Tensor& d) {
        if (Tensor* da = g.grad_slot(a)) {
            const Tensor& B = b.value();
            for (std::size_t i = 0; i < d.size(); ++i) (*da)[i] += d[i] * B[i];
        }
        if (Tensor* db = g.grad_slot(b)) {
            const Tensor& A = a.value();
            for (std::size_t i = 0; i < d.size(); ++i) (*db)[i] += d[i] * A[i];
        }
    });
}

Var scale(const Var& a, double factor) {
    Tensor out = a.value();
    for (double& v : out.data()) v *= factor;
    return a.graph().record(std::move(out), {a}, [a, factor](Graph& g, const Tensor& d) {
        if (Tensor* da = g.grad_slot(a)) {
            for (std::size_t i = 0; i < d.size(); ++i) (*da)[i] += d[i] * factor;
        }
    });
}

Var add_row(const Var& a, const Var& bias) {
    require_rank(bias, 1, "add_row");
    const std::size_t w = a.value().last_dim();
    if (a.value().rank() == 0 || bias.value().dim(0) != w) {
        throw DimensionError("add_row: bias " + shape_to_string(bias.shape()) + " does not match " +
                             shape_to_string(a.shape()));
    }
    Tensor out = a.value();
    const Tensor& b = bias.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i % w];
    return a.graph().record(std::move(out), {a, bias}, [a, bias, w](Graph& g, const Tensor& d) {
        add_into(g.grad_slot(a), d);
        if (Tensor* db = g.grad_slot(bias)) {
            for (std::size_t i = 0; i < d.size(); ++i) (*db)[i % w] += d[i];
        }
    });
}

Var mul_col(const Var& a, const Var& column) {
    require_rank(a, 2, "mul_col");
    require_rank(column, 2, "mul_col");
    const std::size_t rows = a.value().dim(0), w = a.value().dim(1);
    if (column.value().dim(0) != rows || column.value().dim(1) != 1) {
        throw DimensionError("mul_col: column " + shape_to_string(column.shape()) + " does not match " +
                             shape_to_string(a.shape()));
    }
    Tensor out = a.value();
    const Tensor& s = column.value();
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < w; ++j) out[r * w + j] *= s[r];
    return a.graph().record(std::move(out), {a, column}, [a, column, rows, w](Graph& g, const Tensor& d) {
        if (Tensor* da = g.grad_slot(a)) {
            const Tensor& s = column.value();
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t j = 0; j < w; ++j) (*da)[r * w + j] += d[r * w + j] * s[r];
        }
        if (Tensor* ds = g.grad_slot(column)) {
            const Tensor& A = a.value();
            for (std::size_t r = 0; r < rows; ++r) {
                double acc = 0.0;
                for (std::size_t j = 0; j < w; ++j) acc += d[r * w + j] * A[r * w + j];
                (*ds)[r] += acc;
            }
        }
    });
}

Var repeat_cols(const Var& column, std::size_t width) {
    require_rank(column, 2, "repeat_cols");
    if (column.value().dim(1) != 1) {
        throw DimensionError("repeat_cols: expected [L,1], got " + shape_to_string(column.shape()));
    }
    const std::size_t rows = column.value().dim(0);
    Tensor out({rows, width});
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < width; ++j) out[r * width + j] = column.value()[r];
    return column.graph().record(std::move(out), {column}, [column, rows, width](Graph& g, const Tensor& d) {
        if (Tensor* dc = g.grad_slot(column)) {
            for (std::size_t r = 0; r < rows; ++r) {
                double acc = 0.0;
                for (std::size_t j = 0; j < width; ++j) acc += d[r * width + j];
                (*dc)[r] += acc;
            }
        }
    });
}

Var concat_last(const Var& a, const Var& b) {
    const Tensor& A = a.value();
    const Tensor& B = b.value();
    if (A.rank() == 0 || A.rank() != B.rank() ||
        !std::equal(A.shape().begin(), A.shape().end() - 1, B.shape().begin())) {
        throw DimensionError("concat_last: leading dimensions differ, " + shape_to_string(A.shape()) + " vs " +
                             shape_to_string(B.shape()));
    }
    const std::size_t outer = A.outer_size(), wa = A.last_dim(), wb = B.last_dim();
    Shape shape = A.shape();
    shape.back() = wa + wb;
    Tensor out(shape);
    for (std::size_t r = 0; r < outer; ++r) {
        std::copy_n(A.data().begin() + r * wa, wa, out.data().begin() + r * (wa + wb));
        std::copy_n(B.data().begin() + r * wb, wb, out.data().begin() + r * (wa + wb) + wa);
    }
    return a.graph().record(std::move(out), {a, b}, [a, b, outer, wa, wb](Graph& g, const Tensor& d) {
        if (Tensor* da = g.grad_slot(a)) {
            for (std::size_t r = 0; r < outer; ++r)
                for (std::size_t j = 0; j < wa; ++j) (*da)[r * wa + j] += d[r * (wa + wb) + j];
        }
        if (Tensor* db = g.grad_slot(b)) {
            for (std::size_t r = 0; r < outer; ++r)
                for (std::size_t j = 0; j < wb; ++j) (*db)[r * wb + j] += d[r * (wa + wb) + wa + j];
        }
    });
}

Var concat_rows(const std::vector<Var>& parts) {
    if (parts.empty()) throw ContractError("concat_rows: no inputs");
    const std::size_t w = parts.front().value().last_dim();
    std::size_t rows = 0;
    for (const Var& p : parts) {
        require_rank(p, 2, "concat_rows");
        if (p.value().dim(1) != w) {
            throw DimensionError("concat_rows: column mismatch " + shape_to_string(parts.front().shape()) +
                                 " vs " + shape_to_string(p.shape()));
        }
        rows += p.value().dim(0);
    }
    Tensor out({rows, w});
    std::size_t offset = 0;
    for (const Var& p : parts) {
        std::copy(p.value().data().begin(), p.value().data().end(), out.data().begin() + offset);
        offset += p.value().size();
    }
    return parts.front().graph().record(std::move(out), parts, [parts](Graph& g, const Tensor& d) {
        std::size_t off = 0;
        for (const Var& p : parts) {
            const std::size_t n = p.value().size();
            if (Tensor* dp = g.grad_slot(p)) {
                for (std::size_t i = 0; i < n; ++i) (*dp)[i] += d[off + i];
            }
            off += n;
        }
    });
}

Var slice_rows(const Var& a, std::size_t begin, std::size_t end) {
    require_rank(a, 2, "slice_rows");
    const std::size_t rows = a.value().dim(0), w = a.value().dim(1);
    if (begin > end || end > rows) {
        throw DimensionError("slice_rows: range [" + std::to_string(begin) + "," + std::to_string(end) +
                             ") outside " + shape_to_string(a.shape()));
    }
    Tensor out({end - begin, w});
    std::copy(a.value().data().begin() + begin * w, a.value().data().begin() + end * w, out.data().begin());
    return a.graph().record(std::move(out), {a}, [a, begin, end, w](Graph& g, const Tensor& d) {
        if (Tensor* da = g.grad_slot(a)) {
            for (std::size_t i = 0; i < (end - begin) * w; ++i) (*da)[begin * w + i] += d[i];
        }
    });
}

Var gather_rows(const Var& table, std::span<const std::size_t> indices) {
    const Tensor& T = table.value();
    if (T.rank() != 1 && T.rank() != 2) {
        throw DimensionError("gather_rows: table must be rank 1 or 2, got " + shape_to_string(T.shape()));
    }
    const std::size_t n = T.dim(0);
    const std::size_t w = T.rank() == 2 ? T.dim(1) : 1;
    Tensor out({indices.size(), w});
    for (std::size_t r = 0; r < indices.size(); ++r) {
        if (indices[r] >= n) {
            throw VocabularyError("index " + std::to_string(indices[r]) + " outside vocabulary of size " +
                                  std::to_string(n));
        }
        std::copy_n(T.data().begin() + indices[r] * w, w, out.data().begin() + r * w);
    }
    std::vector<std::size_t> idx(indices.begin(), indices.end());
    return table.graph().record(std::move(out), {table}, [table, idx = std::move(idx), w](Graph& g, const Tensor& d) {
        if (Tensor* dt = g.grad_slot(table)) {
            for (std::size_t r = 0; r < idx.size(); ++r)
                for (std::size_t j = 0; j < w; ++j) (*dt)[idx[r] * w + j] += d[r * w + j];
        }
    });
}

Var relu(const Var& x) {
    Tensor out = x.value();
    if (auto* trace = x.graph().activation_trace()) {
        for (double v : out.data()) trace->push_back(v > 0.0);
    }
    for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
    return x.graph().record(std::move(out), {x}, [x](Graph& g, const Tensor& d) {
        if (Tensor* dx = g.grad_slot(x)) {
            const Tensor& X = x.value();
            for (std::size_t i = 0; i < d.size(); ++i)
                if (X[i] > 0.0) (*dx)[i] += d[i];
        }
    });
}

Var sigmoid(const Var& x) {
    Tensor out = x.value();
    for (double& v : out.data()) {
        // Branches keep exp() from overflowing for large |v|.
        if (v >= 0.0) {
            v = 1.0 / (1.0 + std::exp(-v));
        } else {
            const double e = std::exp(v);
            v = e / (1.0 + e);
        }
    }
    Tensor saved = out;
    return x.graph().record(std::move(out), {x}, [x, s = std::move(saved)](Graph& g, const Tensor& d) {
        if (Tensor* dx = g.grad_slot(x)) {
            for (std::size_t i = 0; i < d.size(); ++i) (*dx)[i] += d[i] * s[i] * (1.0 - s[i]);
        }
    });
}

Var dropout(const Var& x, double rate, bool train_mode, Rng* rng) {
    if (rate < 0.0 || rate >= 1.0) throw ContractError("dropout rate must lie in [0,1)");
    if (!train_mode || rate == 0.0) return x;
    if (rng == nullptr) throw ContractError("dropout in train mode needs an RNG");
    const double keep_scale = 1.0 / (1.0 - rate);
    Tensor mask(x.shape());
    for (double& m : mask.data()) m = rng->uniform() < rate ? 0.0 : keep_scale;
    Tensor out = x.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
    return x.graph().record(std::move(out), {x}, [x, mask = std::move(mask)](Graph& g, const Tensor& d) {
        if (Tensor* dx = g.grad_slot(x)) {
            for (std::size_t i = 0; i < d.size(); ++i) (*dx)[i] += d[i] * mask[i];
        }
    });
}

Var elementwise(Elementwise kind, const Var& x, double rate, bool train_mode, Rng* rng) {
    switch (kind) {
        case Elementwise::relu: return relu(x);
        case Elementwise::sigmoid: return sigmoid(x);
        case Elementwise::dropout: return dropout(x, rate, train_mode, rng);
    }
    throw ContractError("unknown elementwise kind");
}

Var layer_norm(const Var& x, const Var& gain, const Var& bias) {
    const Tensor& X = x.value();
    const std::size_t D = X.last_dim();
    if (X.rank() == 0 || D == 0) throw DimensionError("layer_norm: empty last axis");
    if (gain.shape() != Shape{D} || bias.shape() != Shape{D}) {
        throw DimensionError("layer_norm: gain/bias must be [" + std::to_string(D) + "], got " +
                             shape_to_string(gain.shape()) + " and " + shape_to_string(bias.shape()));
    }
    const std::size_t rows = X.outer_size();
    Tensor xhat(X.shape());
    std::vector<double> inv_std(rows);
    Tensor out(X.shape());
    const Tensor& G = gain.value();
    const Tensor& B = bias.value();
    for (std::size_t r = 0; r < rows; ++r) {
        const double* xr = X.data().data() + r * D;
        double mu = 0.0;
        for (std::size_t j = 0; j < D; ++j) mu += xr[j];
        mu /= static_cast<double>(D);
        double var = 0.0;
        for (std::size_t j = 0; j < D; ++j) var += (xr[j] - mu) * (xr[j] - mu);
        var /= static_cast<double>(D);
        inv_std[r] = 1.0 / std::sqrt(var + kLayerNormEps);
        for (std::size_t j = 0; j < D; ++j) {
            const double h = (xr[j] - mu) * inv_std[r];
            xhat[r * D + j] = h;
            out[r * D + j] = h * G[j] + B[j];
        }
    }
    return x.graph().record(
        std::move(out), {x, gain, bias},
        [x, gain, bias, rows, D, xhat = std::move(xhat), inv_std = std::move(inv_std)](Graph& g, const Tensor& d) {
            if (Tensor* dg = g.grad_slot(gain)) {
                for (std::size_t r = 0; r < rows; ++r)
                    for (std::size_t j = 0; j < D; ++j) (*dg)[j] += d[r * D + j] * xhat[r * D + j];
            }
            if (Tensor* db = g.grad_slot(bias)) {
                for (std::size_t r = 0; r < rows; ++r)
                    for (std::size_t j = 0; j < D; ++j) (*db)[j] += d[r * D + j];
            }
            if (Tensor* dx = g.grad_slot(x)) {
                const Tensor& G = gain.value();
                const double inv_d = 1.0 / static_cast<double>(D);
                for (std::size_t r = 0; r < rows; ++r) {
                    double mean_dh = 0.0, mean_dh_h = 0.0;
                    for (std::size_t j = 0; j < D; ++j) {
                        const double dh = d[r * D + j] * G[j];
                        mean_dh += dh;
                        mean_dh_h += dh * xhat[r * D + j];
                    }
                    mean_dh *= inv_d;
                    mean_dh_h *= inv_d;
                    for (std::size_t j = 0; j < D; ++j) {
                        const double dh = d[r * D + j] * G[j];
                        (*dx)[r * D + j] += inv_std[r] * (dh - mean_dh - xhat[r * D + j] * mean_dh_h);
                    }
                }
            }
        });
}

Var weight_norm(const Var& direction, const Var& magnitude) {
    if (magnitude.value().size() != 1) {
        throw DimensionError("weight_norm: magnitude must be a scalar, got " + shape_to_string(magnitude.shape()));
    }
    const Tensor& V = direction.value();
    double sq = 0.0;
    for (double v : V.data()) sq += v * v;
    const double norm = std::sqrt(sq + kWeightNormEps);
    const double m = magnitude.value()[0];
    Tensor out = V;
    for (double& v : out.data()) v *= m / norm;
    return direction.graph().record(
        std::move(out), {direction, magnitude}, [direction, magnitude, norm](Graph& g, const Tensor& d) {
            const Tensor& V = direction.value();
            double v_dot_d = 0.0;
            for (std::size_t i = 0; i < d.size(); ++i) v_dot_d += V[i] * d[i];
            if (Tensor* dm = g.grad_slot(magnitude)) (*dm)[0] += v_dot_d / norm;
            if (Tensor* dv = g.grad_slot(direction)) {
                const double m = magnitude.value()[0];
                const double coef = m / norm;
                const double proj = v_dot_d / (norm * norm);
                for (std::size_t i = 0; i < d.size(); ++i) (*dv)[i] += coef * (d[i] - V[i] * proj);
            }
        });
}

Var causal_conv1d(const Var& y, const Var& kernel, std::size_t dilation) {
    require_rank(y, 2, "causal_conv1d");
    require_rank(kernel, 3, "causal_conv1d");
    if (dilation == 0) throw ContractError("causal_conv1d: dilation must be >= 1");
    const Tensor& Y = y.value();
    const Tensor& K = kernel.value();
    const std::size_t L = Y.dim(0), din = Y.dim(1);
    const std::size_t M = K.dim(0), dout = K.dim(2);
    if (M == 0) throw ContractError("causal_conv1d: kernel length must be >= 1");
    if (K.dim(1) != din) {
        throw DimensionError("causal_conv1d: input width " + shape_to_string(Y.shape()) + " vs kernel " +
                             shape_to_string(K.shape()));
    }
    Tensor out({L, dout}, 0.0);
    for (std::size_t t = 0; t < L; ++t) {
        for (std::size_t m = 0; m < M; ++m) {
            if (m * dilation > t) break;
            const double* yr = Y.data().data() + (t - m * dilation) * din;
            const double* tap = K.data().data() + (M - 1 - m) * din * dout;
            gemm_acc(yr, tap, out.data().data() + t * dout, 1, din, dout);
        }
    }
    return y.graph().record(std::move(out), {y, kernel}, [y, kernel, L, din, dout, M, dilation](Graph& g, const Tensor& d) {
        const Tensor& Y = y.value();
        const Tensor& K = kernel.value();
        Tensor* dy = g.grad_slot(y);
        Tensor* dk = g.grad_slot(kernel);
        for (std::size_t t = 0; t < L; ++t) {
            const double* dr = d.data().data() + t * dout;
            for (std::size_t m = 0; m < M; ++m) {
                if (m * dilation > t) break;
                const std::size_t src = t - m * dilation;
                const std::size_t tap = (M - 1 - m) * din * dout;
                for (std::size_t i = 0; i < din; ++i) {
                    const double* krow = K.data().data() + tap + i * dout;
                    if (dy) {
                        double acc = 0.0;
                        for (std::size_t o = 0; o < dout; ++o) acc += krow[o] * dr[o];
                        (*dy)[src * din + i] += acc;
                    }
                    if (dk) {
                        const double yv = Y[src * din + i];
                        if (yv == 0.0) continue;
                        double* dkrow = dk->data().data() + tap + i * dout;
                        for (std::size_t o = 0; o < dout; ++o) dkrow[o] += yv * dr[o];
                    }
                }
            }
        }
    });
}

Var masked_softmax(const Var& logits, const Mask& mask) {
    const Tensor& Z = logits.value();
    if (mask.size() != Z.size()) {
        throw DimensionError("masked_softmax: mask has " + std::to_string(mask.size()) + " entries for shape " +
                             shape_to_string(Z.shape()));
    }
    const std::size_t w = Z.last_dim();
    const std::size_t rows = Z.size() / std::max<std::size_t>(w, 1);
    Tensor out(Z.shape(), 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        double mx = -std::numeric_limits<double>::infinity();
        bool any = false;
        for (std::size_t j = 0; j < w; ++j) {
            if (mask[r * w + j]) {
                mx = std::max(mx, Z[r * w + j]);
                any = true;
            }
        }
        if (!any) throw ContractError("masked_softmax: empty attention window (all positions masked)");
        double total = 0.0;
        for (std::size_t j = 0; j < w; ++j) {
            if (mask[r * w + j]) {
                const double e = std::exp(Z[r * w + j] - mx);
                out[r * w + j] = e;
                total += e;
            }
        }
        for (std::size_t j = 0; j < w; ++j) out[r * w + j] /= total;
    }
    Tensor saved = out;
    return logits.graph().record(std::move(out), {logits}, [logits, rows, w, s = std::move(saved)](Graph& g, const Tensor& d) {
        if (Tensor* dz = g.grad_slot(logits)) {
            for (std::size_t r = 0; r < rows; ++r) {
                double dot = 0.0;
                for (std::size_t j = 0; j < w; ++j) dot += s[r * w + j] * d[r * w + j];
                for (std::size_t j = 0; j < w; ++j) {
                    // Masked entries have s == 0 and receive nothing.
                    (*dz)[r * w + j] += s[r * w + j] * (d[r * w + j] - dot);
                }
            }
        }
    });
}

Var sum(const Var& x) {
    double total = 0.0;
    for (double v : x.value().data()) total += v;
    return x.graph().record(Tensor::scalar(total), {x}, [x](Graph& g, const Tensor& d) {
        if (Tensor* dx = g.grad_slot(x)) {
            for (double& v : dx->data()) v += d[0];
        }
    });
}

Var mean(const Var& x) {
    const std::size_t n = x.value().size();
    if (n == 0) throw ContractError("mean of an empty tensor");
    return scale(sum(x), 1.0 / static_cast<double>(n));
}

} // namespace lskt
