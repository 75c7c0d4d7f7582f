#include "memdes/pencil.hpp"

#include "memdes/errors.hpp"

#include <cmath>

namespace memdes {

PencilResult hermitian_pencil_min_eig(const CMatrix& A, const CMatrix& B) {
  if (A.rows() != A.cols() || B.rows() != B.cols() || A.rows() != B.rows())
    throw DomainError("pencil matrices must be square and of equal size");
  const Index n = A.rows();
  PencilResult out;
  if (n == 0) throw DomainError("empty pencil");

  const Eigen::SelfAdjointEigenSolver<CMatrix> be(B);
  const Eigen::VectorXd& bl = be.eigenvalues();
  const double bnorm = bl.cwiseAbs().maxCoeff();
  if (!(bnorm > 0.0)) throw DomainError("B vanishes");
  const double tol = 1e-10 * bnorm;

  std::vector<Index> r, z;
  for (Index i = 0; i < n; ++i) (bl(i) > tol ? r : z).push_back(i);
  out.null_dim = static_cast<Index>(z.size());

  const CMatrix Ur = be.eigenvectors()(Eigen::all, r);
  const Eigen::VectorXd scale = bl(r).cwiseSqrt().cwiseInverse();
  // Range coordinates x with vᴴBv = ‖x‖².
  CMatrix Ar = scale.asDiagonal() * (Ur.adjoint() * A * Ur) * scale.asDiagonal();
  CMatrix lift = Ur * scale.asDiagonal();

  if (!z.empty()) {
    const CMatrix Un = be.eigenvectors()(Eigen::all, z);
    const CMatrix Ann = Un.adjoint() * A * Un;
    const CMatrix Anr = Un.adjoint() * A * lift;
    const Eigen::SelfAdjointEigenSolver<CMatrix> ne(Ann);
    const double anorm = std::max(A.cwiseAbs().maxCoeff(), 1e-300);
    if (ne.eigenvalues().minCoeff() <= 1e-12 * anorm) {
      out.bounded = false;
      out.value = -kInf;
      return out;
    }
    // Minimizing over the null component y gives y = −Ann⁻¹ Anr x.
    const CMatrix K = ne.eigenvectors() * ne.eigenvalues().cwiseInverse().asDiagonal() * ne.eigenvectors().adjoint();
    Ar -= Anr.adjoint() * K * Anr;
    lift -= Un * (K * Anr);
  }

  Ar = 0.5 * (Ar + Ar.adjoint()).eval();
  const Eigen::SelfAdjointEigenSolver<CMatrix> ae(Ar);
  out.value = ae.eigenvalues()(0);
  out.vector = lift * ae.eigenvectors().col(0);
  if (Ar.rows() > 1) {
    out.second = ae.eigenvalues()(1);
    out.second_vector = lift * ae.eigenvectors().col(1);
  }
  return out;
}

}  // namespace memdes
