#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "lskt/numerics/graph.hpp"
#include "lskt/numerics/rng.hpp"

namespace lskt {

// 1 = keep, 0 = masked. Same flat layout as the tensor it masks.
using Mask = std::vector<std::uint8_t>;

inline constexpr double kLayerNormEps = 1e-5;
inline constexpr double kWeightNormEps = 1e-12;

// ---- linear algebra -------------------------------------------------------

Var matmul(const Var& a, const Var& b);   // [m,k]·[k,n]
Var transpose(const Var& a);              // 2-D only
Var linear(const Var& x, const Var& weight, const Var& bias);  // x·W + b

// ---- elementwise / broadcasting ------------------------------------------

Var add(const Var& a, const Var& b);      // same shape
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);      // Hadamard
Var scale(const Var& a, double factor);
Var add_row(const Var& a, const Var& bias);       // [..,D] + [D]
Var mul_col(const Var& a, const Var& column);     // [L,D] ⊙ [L,1] broadcast across D
Var repeat_cols(const Var& column, std::size_t width);  // [L,1] -> [L,width]

// ---- shape ----------------------------------------------------------------

// Concatenates along the last axis; leading dimensions must agree.
Var concat_last(const Var& a, const Var& b);
// Stacks 2-D tensors with equal column counts vertically.
Var concat_rows(const std::vector<Var>& parts);
Var slice_rows(const Var& a, std::size_t begin, std::size_t end);
// Row lookup; a rank-1 table of length N is treated as [N,1].
Var gather_rows(const Var& table, std::span<const std::size_t> indices);

// ---- nonlinearities -------------------------------------------------------

Var relu(const Var& x);
Var sigmoid(const Var& x);
// Train mode: zero each element with probability `rate`, scale survivors by
// 1/(1-rate). Eval mode or rate 0: identity (returns x itself).
Var dropout(const Var& x, double rate, bool train_mode, Rng* rng);

enum class Elementwise { relu, sigmoid, dropout };
Var elementwise(Elementwise kind, const Var& x, double rate = 0.0, bool train_mode = false,
                Rng* rng = nullptr);

// ---- normalization --------------------------------------------------------

Var layer_norm(const Var& x, const Var& gain, const Var& bias);
// magnitude · direction / ||direction||₂ over all elements of direction.
Var weight_norm(const Var& direction, const Var& magnitude);

// ---- sequence ops ---------------------------------------------------------

// out[t] = Σ_m kernel[M-1-m] applied to y[t - m·dilation]; positions before 0
// read as zero. y: [L,Din], kernel: [M,Din,Dout].
Var causal_conv1d(const Var& y, const Var& kernel, std::size_t dilation);

// Softmax along the last axis restricted to unmasked entries; masked entries
// are exactly 0. Every row needs one unmasked entry.
Var masked_softmax(const Var& logits, const Mask& mask);

// ---- reductions -----------------------------------------------------------

Var sum(const Var& x);
Var mean(const Var& x);

} // namespace lskt
