#pragma once

#include "ticketlab/tensor.hpp"

namespace ticketlab::similarity {

// Outputs of one network on the shared probe set: rows = examples,
// cols = class scores.
using ProbeOutputs = Tensor;

// Frobenius norm of (a - b) divided by sqrt(rows).
double l2_distance(const ProbeOutputs& a, const ProbeOutputs& b);

// Linear centered kernel alignment:
//   CKA = |Yc' Xc|_F^2 / (|Xc' Xc|_F |Yc' Yc|_F)
// with column-mean-centered Xc, Yc. Invariant to isotropic scaling and
// orthogonal transforms of either argument.
double linear_cka(const ProbeOutputs& a, const ProbeOutputs& b);

}  // namespace ticketlab::similarity
