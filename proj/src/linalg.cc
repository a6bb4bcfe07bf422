#include "dcsynth/linalg.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dcsynth/errors.h"

namespace dcsynth {

SymMat::SymMat(const Mat& m) {
  if (m.rows() != m.cols()) {
    throw ValidationError("SymMat requires a square matrix");
  }
  m_ = 0.5 * (m + m.transpose());
}

SymEigen SymEigenDecompose(const SymMat& s) {
  if (!s.matrix().allFinite()) {
    throw ValidationError("SymEigenDecompose: non-finite entries");
  }
  Eigen::SelfAdjointEigenSolver<Mat> solver(s.matrix());
  if (solver.info() != Eigen::Success) {
    throw NumericalError("symmetric eigensolver did not converge");
  }
  return {solver.eigenvalues(), solver.eigenvectors()};
}

PsdClass ClassifyPsd(const SymMat& s, double tol) {
  if (!(tol > 0)) throw ValidationError("ClassifyPsd: tol must be positive");
  if (s.dim() == 0) return {PsdKind::kPositiveDefinite, 0.0};
  const double min_eig = SymEigenDecompose(s).values(0);
  if (min_eig > tol) return {PsdKind::kPositiveDefinite, min_eig};
  if (min_eig >= -tol) return {PsdKind::kPositiveSemidefinite, min_eig};
  return {PsdKind::kIndefinite, min_eig};
}

Svd ComputeSvd(const Mat& b) {
  if (!b.allFinite()) throw ValidationError("ComputeSvd: non-finite entries");
  Eigen::JacobiSVD<Mat> svd(b, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return {svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

SymMat SolveLyapunov(const Mat& a, const SymMat& q) {
  const int n = static_cast<int>(a.rows());
  if (a.cols() != n || q.dim() != n) {
    throw ValidationError("SolveLyapunov: dimension mismatch");
  }
  const int n2 = n * n;
  // Column-major vec: vec(A X) = (I (x) A) vec(X), vec(X A') = (A (x) I) vec(X).
  Mat kron = Mat::Zero(n2, n2);
  for (int j = 0; j < n; ++j) {
    kron.block(j * n, j * n, n, n) += a;
    for (int i = 0; i < n; ++i) {
      kron.block(i * n, j * n, n, n).diagonal().array() += a(i, j);
    }
  }
  Eigen::FullPivLU<Mat> lu(kron);
  lu.setThreshold(1e-12);
  if (!lu.isInvertible()) {
    throw NoUniqueSolutionError(
        "Lyapunov equation is singular: eigenvalues of A sum to zero");
  }
  Vec rhs = -Eigen::Map<const Vec>(q.matrix().data(), n2);
  Vec sol = lu.solve(rhs);
  Mat x = Eigen::Map<const Mat>(sol.data(), n, n);
  SymMat result(x);
  const double residual =
      (a * result.matrix() + result.matrix() * a.transpose() + q.matrix())
          .norm();
  if (!(residual <= 1e-8 * std::max(1.0, q.matrix().norm()) *
                        std::max(1.0, lu.rcond() > 0 ? 1.0 : 1.0) *
                        std::max(1.0, a.norm() * result.matrix().norm()))) {
    std::ostringstream msg;
    msg << "Lyapunov solve lost accuracy (residual " << residual << ")";
    throw NoUniqueSolutionError(msg.str());
  }
  return result;
}

bool IsHurwitz(const Mat& a, std::string* diagnostic) {
  if (!a.allFinite()) {
    if (diagnostic) *diagnostic = "non-finite entries";
    return false;
  }
  try {
    const SymMat x = SolveLyapunov(a, SymMat::Identity(static_cast<int>(a.rows())));
    const PsdClass c = ClassifyPsd(x, 1e-12 * std::max(1.0, x.matrix().norm()));
    if (c.kind != PsdKind::kPositiveDefinite) {
      if (diagnostic) {
        std::ostringstream msg;
        msg << "Lyapunov solution not positive definite (min eigenvalue "
            << c.min_eigenvalue << ")";
        *diagnostic = msg.str();
      }
      return false;
    }
    return true;
  } catch (const NumericalError& e) {
    if (diagnostic) *diagnostic = e.what();
    return false;
  }
}

SymMat SymSqrt(const SymMat& s, double tol) {
  const PsdClass c = ClassifyPsd(s, tol);
  if (c.kind == PsdKind::kIndefinite) {
    throw DomainError("SymSqrt: matrix is indefinite");
  }
  SymEigen e = SymEigenDecompose(s);
  Vec root = e.values.cwiseMax(0.0).cwiseSqrt();
  return SymMat(e.vectors * root.asDiagonal() * e.vectors.transpose());
}

Mat BlockDiag(const std::vector<Mat>& blocks) {
  Eigen::Index rows = 0, cols = 0;
  for (const Mat& b : blocks) {
    rows += b.rows();
    cols += b.cols();
  }
  Mat out = Mat::Zero(rows, cols);
  Eigen::Index r = 0, c = 0;
  for (const Mat& b : blocks) {
    out.block(r, c, b.rows(), b.cols()) = b;
    r += b.rows();
    c += b.cols();
  }
  return out;
}

}  // namespace dcsynth
