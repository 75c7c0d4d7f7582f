#pragma once

#include "memdes/opgen.hpp"
#include "memdes/types.hpp"

#include <random>

namespace memdes::test {

// Small hand-built bundle: Z = R0 + jX, no W unless given.
inline OperatorBundle make_bundle(const CMatrix& R0, const CMatrix& X, const CVector& V, const Mask& fixed) {
  OperatorBundle b;
  b.n_dof = R0.rows();
  b.R0 = R0;
  b.X = X;
  b.Z = R0 + cplx(0, 1) * X;
  b.V.push_back(V);
  b.fixed_mask = fixed;
  b.controllable_mask.resize(fixed.size());
  for (std::size_t i = 0; i < fixed.size(); ++i) b.controllable_mask[i] = fixed[i] ? 0 : 1;
  return b;
}

inline OperatorBundle random_bundle(Index n, std::uint64_t seed, Index chip = 0, double loss = 0.1) {
  RandomPassiveParams p;
  p.n = n;
  p.seed = seed;
  p.chip_count = chip;
  p.loss_fraction = loss;
  return gen_random_passive(p);
}

inline Word random_word(Index n, std::mt19937_64& rng, double fill = 0.5) {
  std::bernoulli_distribution coin(fill);
  Word w = Word::zeros(n);
  for (auto& b : w.bits) b = coin(rng) ? 1 : 0;
  return w;
}

inline double rel_err(const CVector& a, const CVector& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }

}  // namespace memdes::test
