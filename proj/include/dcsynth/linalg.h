#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace dcsynth {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

inline constexpr double kDefaultTol = 1e-9;

/// Dense symmetric matrix. The stored matrix is exactly symmetric: the
/// constructor mirrors the average of the two triangles.
class SymMat {
 public:
  SymMat() = default;
  explicit SymMat(const Mat& m);
  static SymMat Identity(int n) { return SymMat(Mat::Identity(n, n)); }
  static SymMat Zero(int n) { return SymMat(Mat::Zero(n, n)); }

  int dim() const { return static_cast<int>(m_.rows()); }
  const Mat& matrix() const { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }

  friend SymMat operator+(const SymMat& a, const SymMat& b) {
    return SymMat(a.m_ + b.m_);
  }
  friend SymMat operator-(const SymMat& a, const SymMat& b) {
    return SymMat(a.m_ - b.m_);
  }
  friend SymMat operator*(double s, const SymMat& a) { return SymMat(s * a.m_); }

 private:
  Mat m_;
};

enum class PsdKind { kPositiveDefinite, kPositiveSemidefinite, kIndefinite };

struct PsdClass {
  PsdKind kind;
  double min_eigenvalue;
};

struct SymEigen {
  Vec values;   // ascending
  Mat vectors;  // orthogonal, columns are eigenvectors
};

struct Svd {
  Mat u;
  Vec singular_values;  // descending
  Mat v;
};

SymEigen SymEigenDecompose(const SymMat& s);

/// PositiveDefinite iff min eigenvalue > tol, PositiveSemidefinite iff it lies
/// in [-tol, tol], Indefinite otherwise.
PsdClass ClassifyPsd(const SymMat& s, double tol = kDefaultTol);

Svd ComputeSvd(const Mat& b);

/// Solves A X + X A' + Q = 0 through the Kronecker system
/// (I (x) A + A (x) I) vec(X) = -vec(Q). Practical up to n of about 30.
/// Throws NoUniqueSolutionError when two eigenvalues of A sum to zero.
SymMat SolveLyapunov(const Mat& a, const SymMat& q);

/// Lyapunov test: A is Hurwitz iff A X + X A' + I = 0 has a positive definite
/// solution. On failure `diagnostic` (if given) explains why.
bool IsHurwitz(const Mat& a, std::string* diagnostic = nullptr);

/// Principal square root of a PSD matrix. Throws DomainError on indefinite
/// input.
SymMat SymSqrt(const SymMat& s, double tol = kDefaultTol);

/// Block-diagonal concatenation.
Mat BlockDiag(const std::vector<Mat>& blocks);

}  // namespace dcsynth
