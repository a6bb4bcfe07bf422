#pragma once

#include <map>
#include <string>
#include <vector>

#include "dcsynth/linalg.h"

namespace dcsynth {

/// Handle to a matrix variable of an SdpProblem. Symmetric variables are
/// parametrized by their upper triangle, rectangular ones by all entries.
class Var {
 public:
  Var() = default;
  int id() const { return id_; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool symmetric() const { return symmetric_; }
  int offset() const { return offset_; }
  int num_params() const {
    return symmetric_ ? rows_ * (rows_ + 1) / 2 : rows_ * cols_;
  }

 private:
  friend class SdpProblem;
  int id_ = -1;
  int rows_ = 0;
  int cols_ = 0;
  bool symmetric_ = false;
  int offset_ = 0;
};

/// Affine matrix-valued function of the problem variables:
/// vec(E) = constant + sum_v coeff_v * params_v (column-major vec).
class MatExpr {
 public:
  MatExpr() = default;
  MatExpr(const Var& v);  // NOLINT(runtime/explicit)
  static MatExpr Constant(const Mat& c);
  static MatExpr Zero(int rows, int cols);
  /// Block assembly; blocks in a row share a height, blocks in a column a
  /// width.
  static MatExpr Blocks(const std::vector<std::vector<MatExpr>>& blocks);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  MatExpr Transpose() const;

  MatExpr& operator+=(const MatExpr& o);
  MatExpr& operator-=(const MatExpr& o);
  friend MatExpr operator+(MatExpr a, const MatExpr& b) { return a += b; }
  friend MatExpr operator-(MatExpr a, const MatExpr& b) { return a -= b; }
  friend MatExpr operator-(const MatExpr& a) { return -1.0 * a; }
  friend MatExpr operator*(double s, const MatExpr& a);
  friend MatExpr operator*(const Mat& l, const MatExpr& a);
  friend MatExpr operator*(const MatExpr& a, const Mat& r);

  const Vec& constant() const { return constant_; }
  const std::map<int, Mat>& coeffs() const { return coeffs_; }
  /// Evaluates the expression at a full parameter vector.
  Mat Evaluate(const Vec& x, const std::map<int, int>& offsets) const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  Vec constant_;
  std::map<int, Mat> coeffs_;  // keyed by variable id
};

enum class SdpStatus { kOptimal, kInfeasible, kUnbounded, kNumericalLimit };

const char* ToString(SdpStatus s);

struct SdpOptions {
  double gap_tol = 1e-8;
  double feas_tol = 1e-8;
  double infeas_tol = 1e-8;
  int max_iter = 100;
  /// When the full tolerances cannot be reached (stalled progress or a
  /// numerical breakdown), the last iterate meeting these is accepted as
  /// Optimal with `reduced_accuracy` set.
  double reduced_feas_tol = 1e-6;
  double reduced_gap_tol = 1e-6;
  /// Post-hoc check of Optimal solutions against the problem data.
  bool validate = true;
  double validate_psd_tol = 1e-7;
};

class SdpSolution;

/// minimize   sum_k Tr(C_k E_k) + sum_l (rho_l/2) ||F_l - T_l||_F^2
/// subject to equalities G_j = 0 and LMIs H_i >= margin_i I,
/// with E, F, G, H affine in the matrix variables.
class SdpProblem {
 public:
  Var AddSymmetric(int n);
  /// Symmetric variable with the constraint V >= margin I.
  Var AddPsd(int n, double margin = 0.0);
  Var AddFree(int rows, int cols);

  /// Every entry of e equals zero.
  void AddEquality(const MatExpr& e);
  /// Upper triangle of a symmetric-valued e equals zero.
  void AddSymmetricEquality(const MatExpr& e);
  /// Symmetric part of e minus margin I is positive semidefinite.
  void AddLmi(const MatExpr& e, double margin = 0.0);
  /// Adds Tr(C E).
  void AddTraceObjective(const Mat& c, const MatExpr& e);
  /// Adds (rho/2) ||E - T||_F^2.
  void AddProximal(const MatExpr& e, const Mat& target, double rho);

  int num_params() const { return num_params_; }
  const std::vector<int>& lmi_dims() const { return lmi_dims_; }

  /// Standard conic data: minimize x'Px/2 + q'x + c0 subject to
  /// A x + s = b, s in {0}^p x S^{k_1} x ... (svec with sqrt(2) scaling).
  struct Conic {
    Mat p, a;
    Vec q, b;
    double c0 = 0.0;
    int num_zero = 0;
    std::vector<int> psd_dims;
  };
  Conic Compile() const;

  const std::map<int, int>& offsets() const { return offsets_; }

 private:
  Var NewVar(int rows, int cols, bool symmetric);
  /// Dense row block of the expression: coefficient rows x num_params.
  Mat DenseCoeff(const MatExpr& e) const;

  int num_params_ = 0;
  int num_vars_ = 0;
  std::map<int, int> offsets_;
  struct Lmi {
    MatExpr expr;
    double margin;
  };
  struct Proximal {
    MatExpr expr;
    Mat target;
    double rho;
  };
  struct Trace {
    Mat c;
    MatExpr expr;
  };
  std::vector<MatExpr> eq_exprs_;
  std::vector<bool> eq_upper_;  // only the upper triangle is constrained
  std::vector<Lmi> lmis_;
  std::vector<int> lmi_dims_;
  std::vector<Proximal> proximal_;
  std::vector<Trace> traces_;

 public:
  /// Same constraints, empty objective.
  SdpProblem WithoutObjective() const;
};

class SdpSolution {
 public:
  SdpStatus status = SdpStatus::kNumericalLimit;
  Vec x;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  int iterations = 0;
  double gap = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  std::string diagnostic;
  bool reduced_accuracy = false;

  bool optimal() const { return status == SdpStatus::kOptimal; }
  Mat Value(const Var& v) const;
  Mat Value(const MatExpr& e) const;

 private:
  friend SdpSolution SolveSdp(const SdpProblem& p, const SdpOptions& opts);
  friend SdpSolution SolveEqualityQp(const SdpProblem& p);
  std::map<int, int> offsets_;
};

/// Homogeneous self-dual interior-point method with Nesterov-Todd scaling and
/// a Mehrotra predictor-corrector.
SdpSolution SolveSdp(const SdpProblem& p, const SdpOptions& opts = {});

struct FeasibilityResult {
  bool feasible = false;
  /// True when neither feasibility nor infeasibility could be certified.
  bool indeterminate = false;
  SdpSolution solution;
};

/// Solves the constraints of `p` with its objective dropped.
FeasibilityResult CheckFeasible(const SdpProblem& p, const SdpOptions& opts = {});

/// Solves a problem with only equality constraints and a positive definite
/// quadratic objective through its KKT system. Throws ValidationError if
/// the problem has LMIs and NumericalError if the KKT matrix is singular.
SdpSolution SolveEqualityQp(const SdpProblem& p);

/// Upper-triangle scaled vectorization of a symmetric matrix and its inverse.
Vec Svec(const Mat& s);
Mat Smat(const Vec& v, int n);

}  // namespace dcsynth
