#pragma once

#include "memdes/types.hpp"

namespace memdes {

struct PencilResult {
  double value = kNaN;
  /// Normalized so vᴴBv = 1.
  CVector vector;
  /// False when A is not positive definite on the null space of B, so the
  /// Rayleigh quotient is unbounded below.
  bool bounded = true;
  Index null_dim = 0;
  /// Next eigenvalue, for detecting a degenerate minimum.
  double second = kInf;
  CVector second_vector;
};

/// Smallest λ of A v = λ B v with A Hermitian and B Hermitian PSD. The null
/// space of B (eigenvalues below 1e-10·‖B‖) is eliminated by a Schur
/// complement, so λ is the minimum of vᴴAv / vᴴBv. Throws DomainError when
/// B vanishes.
PencilResult hermitian_pencil_min_eig(const CMatrix& A, const CMatrix& B);

}  // namespace memdes
