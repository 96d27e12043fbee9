//
// Copyright 2026 The attnlab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <vector>

#include "attnlab/tensor.hpp"

namespace attnlab {

// Every kernel registers a gradient rule on the tape when recording is
// enabled and an input requires a gradient. Shape contracts are enforced
// with ContractError; numeric-domain problems raise NumericError.

/// (m x k) . (k x n) -> (m x n)
Tensor matmul(const Tensor& a, const Tensor& b);

/// (m x k) . (n x k)^T -> (m x n); avoids materializing the transpose.
Tensor matmul_nt(const Tensor& a, const Tensor& b);

Tensor add(const Tensor& a, const Tensor& b);

/// (n x m) + bias(m) broadcast over rows. The only broadcast in the library.
Tensor add_row_broadcast(const Tensor& x, const Tensor& bias);

Tensor scale(const Tensor& x, double c);

/// Row-wise softmax with max-shift; rejects non-finite input.
Tensor softmax_rows(const Tensor& logits);

/// Row-wise layer normalization with affine parameters gamma/beta (length d).
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  double eps = 1e-5);

/// Rows of `table` (V x d) selected by ids -> (n x d). Backward scatter-adds.
Tensor embedding_gather(const Tensor& table, const std::vector<int>& ids);

/// Row i of (n x d) as a (1 x d) tensor.
Tensor pick_row(const Tensor& x, int row);

/// Columns [c0, c0+width) of (n x d).
Tensor slice_cols(const Tensor& x, int c0, int width);

/// Horizontal concatenation of equal-row-count matrices.
Tensor concat_cols(const std::vector<Tensor>& parts);

Tensor gelu(const Tensor& x);

/// Cross entropy of a single logit row ({C} or {1 x C}) against class id.
Tensor cross_entropy(const Tensor& logits, int target);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

/// Mean of scalar tensors as a single node (batch loss aggregation).
Tensor mean_of(const std::vector<Tensor>& scalars);

/// min(x, cap) for a scalar; gradient is zero once the cap binds.
Tensor min_const(const Tensor& x, double cap);

// Mean column mass received by a trigger span of a row-stochastic (n x n)
// attention matrix, under subtoken merging: span columns are summed, span
// rows averaged into one merged row, and the mean is taken over the
// n - len + 1 merged positions. Result is in [0, 1].
Tensor trigger_column_mass(const Tensor& attention, int span_begin, int span_end);

/// Tape-free variant of trigger_column_mass over a raw row-major matrix.
double trigger_column_mass_value(const std::vector<double>& attention, int n,
                                 int span_begin, int span_end);

}  // namespace attnlab
