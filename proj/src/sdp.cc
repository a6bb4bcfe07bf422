#include "dcsynth/sdp.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include "dcsynth/errors.h"

namespace dcsynth {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;

int SvecLen(int k) { return k * (k + 1) / 2; }

/// Row permutation taking vec(E) to vec(E') for an r x c matrix.
Mat TransposeRows(const Mat& coeff, int r, int c) {
  Mat out(coeff.rows(), coeff.cols());
  for (int j = 0; j < c; ++j) {
    for (int i = 0; i < r; ++i) out.row(j + i * c) = coeff.row(i + j * r);
  }
  return out;
}

Vec TransposeVec(const Vec& v, int r, int c) {
  Vec out(v.size());
  for (int j = 0; j < c; ++j) {
    for (int i = 0; i < r; ++i) out(j + i * c) = v(i + j * r);
  }
  return out;
}

}  // namespace

Vec Svec(const Mat& s) {
  const int k = static_cast<int>(s.rows());
  Vec v(SvecLen(k));
  int t = 0;
  for (int j = 0; j < k; ++j) {
    for (int i = 0; i <= j; ++i) {
      v(t++) = i == j ? s(i, i) : kSqrt2 * 0.5 * (s(i, j) + s(j, i));
    }
  }
  return v;
}

Mat Smat(const Vec& v, int k) {
  if (v.size() != SvecLen(k)) throw ValidationError("Smat: length mismatch");
  Mat s(k, k);
  int t = 0;
  for (int j = 0; j < k; ++j) {
    for (int i = 0; i <= j; ++i) {
      const double val = i == j ? v(t) : v(t) / kSqrt2;
      s(i, j) = val;
      s(j, i) = val;
      ++t;
    }
  }
  return s;
}

const char* ToString(SdpStatus s) {
  switch (s) {
    case SdpStatus::kOptimal: return "Optimal";
    case SdpStatus::kInfeasible: return "Infeasible";
    case SdpStatus::kUnbounded: return "Unbounded";
    case SdpStatus::kNumericalLimit: return "NumericalLimit";
  }
  return "Unknown";
}

// ---------------------------------------------------------------- MatExpr

MatExpr::MatExpr(const Var& v) : rows_(v.rows()), cols_(v.cols()) {
  constant_ = Vec::Zero(rows_ * cols_);
  Mat coeff = Mat::Zero(rows_ * cols_, v.num_params());
  if (v.symmetric()) {
    int t = 0;
    for (int j = 0; j < cols_; ++j) {
      for (int i = 0; i <= j; ++i) {
        coeff(i + j * rows_, t) = 1.0;
        coeff(j + i * rows_, t) = 1.0;
        ++t;
      }
    }
  } else {
    coeff.setIdentity();
  }
  coeffs_[v.id()] = std::move(coeff);
}

MatExpr MatExpr::Constant(const Mat& c) {
  MatExpr e;
  e.rows_ = static_cast<int>(c.rows());
  e.cols_ = static_cast<int>(c.cols());
  e.constant_ = Eigen::Map<const Vec>(c.data(), c.size());
  return e;
}

MatExpr MatExpr::Zero(int rows, int cols) {
  return Constant(Mat::Zero(rows, cols));
}

MatExpr MatExpr::Transpose() const {
  MatExpr e;
  e.rows_ = cols_;
  e.cols_ = rows_;
  e.constant_ = TransposeVec(constant_, rows_, cols_);
  for (const auto& [id, c] : coeffs_) e.coeffs_[id] = TransposeRows(c, rows_, cols_);
  return e;
}

MatExpr& MatExpr::operator+=(const MatExpr& o) {
  if (rows_ != o.rows_ || cols_ != o.cols_) {
    throw ValidationError("MatExpr: shape mismatch in addition");
  }
  constant_ += o.constant_;
  for (const auto& [id, c] : o.coeffs_) {
    auto it = coeffs_.find(id);
    if (it == coeffs_.end()) {
      coeffs_[id] = c;
    } else {
      it->second += c;
    }
  }
  return *this;
}

MatExpr& MatExpr::operator-=(const MatExpr& o) { return *this += -1.0 * o; }

MatExpr operator*(double s, const MatExpr& a) {
  MatExpr e = a;
  e.constant_ *= s;
  for (auto& [id, c] : e.coeffs_) c *= s;
  return e;
}

MatExpr operator*(const Mat& l, const MatExpr& a) {
  if (l.cols() != a.rows_) throw ValidationError("MatExpr: shape mismatch in product");
  MatExpr e;
  e.rows_ = static_cast<int>(l.rows());
  e.cols_ = a.cols_;
  const int r = a.rows_, c = a.cols_;
  Mat cm = Eigen::Map<const Mat>(a.constant_.data(), r, c);
  Mat prod = l * cm;
  e.constant_ = Eigen::Map<const Vec>(prod.data(), prod.size());
  for (const auto& [id, coeff] : a.coeffs_) {
    const Eigen::Index np = coeff.cols();
    // Column t of coeff is vec of an r x c matrix; laid side by side they
    // form an r x (c * np) matrix.
    Mat stacked = l * Eigen::Map<const Mat>(coeff.data(), r, c * np);
    e.coeffs_[id] = Eigen::Map<const Mat>(stacked.data(), e.rows_ * c, np);
  }
  return e;
}

MatExpr operator*(const MatExpr& a, const Mat& rm) {
  return (rm.transpose() * a.Transpose()).Transpose();
}

MatExpr MatExpr::Blocks(const std::vector<std::vector<MatExpr>>& blocks) {
  if (blocks.empty() || blocks[0].empty()) throw ValidationError("MatExpr: empty block layout");
  std::vector<int> heights, widths;
  for (const auto& row : blocks) {
    if (row.size() != blocks[0].size()) throw ValidationError("MatExpr: ragged block layout");
    heights.push_back(row[0].rows());
  }
  for (const auto& b : blocks[0]) widths.push_back(b.cols());
  int total_r = 0, total_c = 0;
  for (int h : heights) total_r += h;
  for (int w : widths) total_c += w;
  MatExpr e;
  e.rows_ = total_r;
  e.cols_ = total_c;
  e.constant_ = Vec::Zero(total_r * total_c);
  int r0 = 0;
  for (size_t a = 0; a < blocks.size(); ++a) {
    int c0 = 0;
    for (size_t b = 0; b < blocks[a].size(); ++b) {
      const MatExpr& blk = blocks[a][b];
      if (blk.rows() != heights[a] || blk.cols() != widths[b]) {
        throw ValidationError("MatExpr: inconsistent block sizes");
      }
      for (int j = 0; j < blk.cols(); ++j) {
        for (int i = 0; i < blk.rows(); ++i) {
          const int dst = (r0 + i) + (c0 + j) * total_r;
          const int src = i + j * blk.rows();
          e.constant_(dst) = blk.constant_(src);
          for (const auto& [id, coeff] : blk.coeffs_) {
            auto it = e.coeffs_.find(id);
            if (it == e.coeffs_.end()) {
              it = e.coeffs_.emplace(id, Mat::Zero(total_r * total_c, coeff.cols())).first;
            }
            it->second.row(dst) = coeff.row(src);
          }
        }
      }
      c0 += widths[b];
    }
    r0 += heights[a];
  }
  return e;
}

Mat MatExpr::Evaluate(const Vec& x, const std::map<int, int>& offsets) const {
  Vec v = constant_;
  for (const auto& [id, coeff] : coeffs_) {
    v += coeff * x.segment(offsets.at(id), coeff.cols());
  }
  return Eigen::Map<const Mat>(v.data(), rows_, cols_);
}

// ---------------------------------------------------------------- SdpProblem

Var SdpProblem::NewVar(int rows, int cols, bool symmetric) {
  if (rows < 1 || cols < 1) throw ValidationError("variable dimensions must be positive");
  Var v;
  v.id_ = num_vars_++;
  v.rows_ = rows;
  v.cols_ = cols;
  v.symmetric_ = symmetric;
  v.offset_ = num_params_;
  offsets_[v.id_] = num_params_;
  num_params_ += v.num_params();
  return v;
}

Var SdpProblem::AddSymmetric(int n) { return NewVar(n, n, true); }

Var SdpProblem::AddPsd(int n, double margin) {
  Var v = NewVar(n, n, true);
  AddLmi(MatExpr(v), margin);
  return v;
}

Var SdpProblem::AddFree(int rows, int cols) { return NewVar(rows, cols, false); }

void SdpProblem::AddEquality(const MatExpr& e) {
  eq_exprs_.push_back(e);
  eq_upper_.push_back(false);
}

void SdpProblem::AddSymmetricEquality(const MatExpr& e) {
  if (e.rows() != e.cols()) throw ValidationError("symmetric equality needs a square expression");
  eq_exprs_.push_back(e);
  eq_upper_.push_back(true);
}

void SdpProblem::AddLmi(const MatExpr& e, double margin) {
  if (e.rows() != e.cols()) throw ValidationError("LMI needs a square expression");
  lmis_.push_back({e, margin});
  lmi_dims_.push_back(e.rows());
}

void SdpProblem::AddTraceObjective(const Mat& c, const MatExpr& e) {
  if (c.rows() != e.cols() || c.cols() != e.rows()) {
    throw ValidationError("trace objective: shape mismatch");
  }
  traces_.push_back({c, e});
}

void SdpProblem::AddProximal(const MatExpr& e, const Mat& target, double rho) {
  if (target.rows() != e.rows() || target.cols() != e.cols()) {
    throw ValidationError("proximal term: target shape mismatch");
  }
  if (!(rho >= 0)) throw ValidationError("proximal weight must be nonnegative");
  proximal_.push_back({e, target, rho});
}

SdpProblem SdpProblem::WithoutObjective() const {
  SdpProblem p = *this;
  p.traces_.clear();
  p.proximal_.clear();
  return p;
}

Mat SdpProblem::DenseCoeff(const MatExpr& e) const {
  Mat g = Mat::Zero(e.rows() * e.cols(), num_params_);
  for (const auto& [id, c] : e.coeffs()) {
    g.middleCols(offsets_.at(id), c.cols()) += c;
  }
  return g;
}

SdpProblem::Conic SdpProblem::Compile() const {
  Conic k;
  const int np = num_params_;
  std::vector<Vec> a_rows;
  std::vector<double> b_vals;
  for (size_t t = 0; t < eq_exprs_.size(); ++t) {
    const MatExpr& e = eq_exprs_[t];
    const Mat g = DenseCoeff(e);
    for (int j = 0; j < e.cols(); ++j) {
      for (int i = 0; i < e.rows(); ++i) {
        if (eq_upper_[t] && i > j) continue;
        const int idx = i + j * e.rows();
        a_rows.push_back(g.row(idx).transpose());
        b_vals.push_back(-e.constant()(idx));
      }
    }
  }
  k.num_zero = static_cast<int>(a_rows.size());
  for (const Lmi& lmi : lmis_) {
    const int d = lmi.expr.rows();
    Mat g = DenseCoeff(lmi.expr);
    g = 0.5 * (g + TransposeRows(g, d, d));
    const Vec c = 0.5 * (lmi.expr.constant() + TransposeVec(lmi.expr.constant(), d, d));
    for (int j = 0; j < d; ++j) {
      for (int i = 0; i <= j; ++i) {
        const int idx = i + j * d;
        const double w = i == j ? 1.0 : kSqrt2;
        a_rows.push_back(-w * g.row(idx).transpose());
        b_vals.push_back(w * (c(idx) - (i == j ? lmi.margin : 0.0)));
      }
    }
    k.psd_dims.push_back(d);
  }
  const int m = static_cast<int>(a_rows.size());
  k.a.resize(m, np);
  k.b.resize(m);
  for (int r = 0; r < m; ++r) {
    k.a.row(r) = a_rows[r].transpose();
    k.b(r) = b_vals[r];
  }
  k.p = Mat::Zero(np, np);
  k.q = Vec::Zero(np);
  for (const Trace& t : traces_) {
    const Mat ct = t.c.transpose();
    const Vec w = Eigen::Map<const Vec>(ct.data(), ct.size());
    k.q += DenseCoeff(t.expr).transpose() * w;
    k.c0 += w.dot(t.expr.constant());
  }
  for (const Proximal& pr : proximal_) {
    const Mat g = DenseCoeff(pr.expr);
    const Vec d = pr.expr.constant() - Eigen::Map<const Vec>(pr.target.data(), pr.target.size());
    k.p += pr.rho * g.transpose() * g;
    k.q += pr.rho * g.transpose() * d;
    k.c0 += 0.5 * pr.rho * d.squaredNorm();
  }
  return k;
}

// ---------------------------------------------------------------- solution

Mat SdpSolution::Value(const Var& v) const {
  return Value(MatExpr(v));
}

Mat SdpSolution::Value(const MatExpr& e) const {
  if (x.size() == 0) throw NumericalError("SdpSolution has no primal values");
  return e.Evaluate(x, offsets_);
}

// ---------------------------------------------------------------- solver

namespace {

struct ConeBlock {
  int offset;
  int dim;
  int len;
};

/// Nesterov-Todd scaling of one PSD block: R' Z R = inv(R) S inv(R)' = diag(lambda).
struct NtScaling {
  Mat r;
  Mat rinv;
  Vec lambda;
  Mat h;  // svec matrix of X -> G X G, G = R R'
};

bool ComputeScaling(const Mat& s, const Mat& z, NtScaling* out) {
  Eigen::LLT<Mat> ls(s), lz(z);
  if (ls.info() != Eigen::Success || lz.info() != Eigen::Success) return false;
  const Mat l_s = ls.matrixL();
  const Mat l_z = lz.matrixL();
  Eigen::JacobiSVD<Mat> svd(l_z.transpose() * l_s, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec lam = svd.singularValues();
  if (!(lam.minCoeff() > 0) || !lam.allFinite()) return false;
  const Vec isq = lam.cwiseSqrt().cwiseInverse();
  out->lambda = lam;
  out->r = l_s * svd.matrixV() * isq.asDiagonal();
  out->rinv = isq.asDiagonal() * svd.matrixU().transpose() * l_z.transpose();
  const Mat g = out->r * out->r.transpose();
  const int k = static_cast<int>(s.rows());
  const int len = SvecLen(k);
  out->h.resize(len, len);
  for (int t = 0; t < len; ++t) {
    Vec e = Vec::Zero(len);
    e(t) = 1.0;
    const Mat u = Smat(e, k);
    out->h.col(t) = Svec(g * u * g);
  }
  return true;
}

/// Largest alpha with V + alpha dV PSD (infinity when unbounded).
double MaxStep(const Mat& v, const Mat& dv) {
  Eigen::LLT<Mat> llt(v);
  if (llt.info() != Eigen::Success) return 0.0;
  const auto l = llt.matrixL();
  Mat m = l.solve(dv);
  m = l.solve(m.transpose()).transpose();
  m = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(m, Eigen::EigenvaluesOnly);
  const double mn = es.eigenvalues()(0);
  if (mn >= 0) return std::numeric_limits<double>::infinity();
  return -1.0 / mn;
}

double InfNorm(const Vec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

class HsdSolver {
 public:
  HsdSolver(const SdpProblem::Conic& k, const SdpOptions& opts) : k_(k), opts_(opts) {
    nx_ = static_cast<int>(k.a.cols());
    m_ = static_cast<int>(k.a.rows());
    int off = k.num_zero;
    for (int d : k.psd_dims) {
      cones_.push_back({off, d, SvecLen(d)});
      off += SvecLen(d);
      degree_ += d;
    }
  }

  SdpSolution Run();

 private:
  Mat ConeMat(const Vec& v, const ConeBlock& c) const {
    return Smat(v.segment(c.offset, c.len), c.dim);
  }
  bool Factor();
  Vec SolveKkt(const Vec& rhs) const;
  void Initialize();
  double StepLength(const Vec& dx, const Vec& ds, const Vec& dz, double dtau,
                    double dkappa) const;

  const SdpProblem::Conic& k_;
  const SdpOptions& opts_;
  int nx_ = 0;
  int m_ = 0;
  int degree_ = 0;
  std::vector<ConeBlock> cones_;
  std::vector<NtScaling> scal_;
  Mat kkt_;
  // Refinement residuals are formed in extended precision; near the optimum
  // the scaled KKT matrix is too ill-conditioned for double residuals.
  Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic> kkt_ext_;
  Eigen::PartialPivLU<Mat> lu_;

  Vec x_, s_, z_;
  double tau_ = 1.0, kappa_ = 1.0;
};

bool HsdSolver::Factor() {
  const int n = nx_ + m_;
  kkt_ = Mat::Zero(n, n);
  kkt_.topLeftCorner(nx_, nx_) = k_.p;
  kkt_.topRightCorner(nx_, m_) = k_.a.transpose();
  kkt_.bottomLeftCorner(m_, nx_) = k_.a;
  for (size_t c = 0; c < cones_.size(); ++c) {
    const ConeBlock& cb = cones_[c];
    kkt_.block(nx_ + cb.offset, nx_ + cb.offset, cb.len, cb.len) = -scal_[c].h;
  }
  Mat reg = kkt_;
  const double delta = 1e-9 + 1e-13 * kkt_.diagonal().cwiseAbs().maxCoeff();
  reg.diagonal().head(nx_).array() += delta;
  reg.diagonal().tail(m_).array() -= delta;
  lu_.compute(reg);
  kkt_ext_ = kkt_.cast<long double>();
  return true;
}

Vec HsdSolver::SolveKkt(const Vec& rhs) const {
  Vec sol = lu_.solve(rhs);
  double prev = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 10; ++it) {
    const Vec res = (rhs.cast<long double>() - kkt_ext_ * sol.cast<long double>()).cast<double>();
    const double nr = InfNorm(res);
    if (!(nr < prev) || nr <= 1e-15 * std::max(1.0, InfNorm(rhs))) break;
    prev = nr;
    sol += lu_.solve(res);
  }
  return sol;
}

void HsdSolver::Initialize() {
  const int n = nx_ + m_;
  kkt_ = Mat::Zero(n, n);
  kkt_.topLeftCorner(nx_, nx_) = k_.p;
  kkt_.topRightCorner(nx_, m_) = k_.a.transpose();
  kkt_.bottomLeftCorner(m_, nx_) = k_.a;
  kkt_.bottomRightCorner(m_, m_).diagonal().tail(m_ - k_.num_zero).setConstant(-1.0);
  Mat reg = kkt_;
  reg.diagonal().head(nx_).array() += 1e-8;
  reg.diagonal().tail(m_).array() -= 1e-8;
  lu_.compute(reg);
  kkt_ext_ = kkt_.cast<long double>();

  Vec rhs = Vec::Zero(n);
  rhs.tail(m_) = k_.b;
  Vec sol = SolveKkt(rhs);
  x_ = sol.head(nx_);
  s_ = -sol.tail(m_);
  s_.head(k_.num_zero).setZero();

  rhs.setZero();
  rhs.head(nx_) = -k_.q;
  sol = SolveKkt(rhs);
  z_ = sol.tail(m_);

  for (const ConeBlock& c : cones_) {
    for (Vec* v : {&s_, &z_}) {
      Mat mtx = ConeMat(*v, c);
      Eigen::SelfAdjointEigenSolver<Mat> es(mtx, Eigen::EigenvaluesOnly);
      const double shift = -es.eigenvalues()(0);
      if (shift >= 0) mtx += (1.0 + shift) * Mat::Identity(c.dim, c.dim);
      v->segment(c.offset, c.len) = Svec(mtx);
    }
  }
  tau_ = 1.0;
  kappa_ = 1.0;
}

double HsdSolver::StepLength(const Vec& /*dx*/, const Vec& ds, const Vec& dz,
                             double dtau, double dkappa) const {
  double alpha = std::numeric_limits<double>::infinity();
  if (dtau < 0) alpha = std::min(alpha, -tau_ / dtau);
  if (dkappa < 0) alpha = std::min(alpha, -kappa_ / dkappa);
  for (const ConeBlock& c : cones_) {
    alpha = std::min(alpha, MaxStep(ConeMat(s_, c), ConeMat(ds, c)));
    alpha = std::min(alpha, MaxStep(ConeMat(z_, c), ConeMat(dz, c)));
  }
  return alpha;
}

SdpSolution HsdSolver::Run() {
  SdpSolution sol;
  std::optional<SdpSolution> reduced;
  Initialize();
  const double nb = InfNorm(k_.b), nq = InfNorm(k_.q);
  int iter = 0;
  for (;; ++iter) {
    // Residuals and termination.
    const Vec px = k_.p * x_;
    const double xpx = x_.dot(px);
    const Vec r1 = px + k_.a.transpose() * z_ + k_.q * tau_;
    const Vec r2 = k_.a * x_ + s_ - k_.b * tau_;
    const double r3 = k_.q.dot(x_) + k_.b.dot(z_) + xpx / tau_ + kappa_;

    const Vec xb = x_ / tau_, sb = s_ / tau_, zb = z_ / tau_;
    const double pres = InfNorm(r2) / tau_ / std::max(1.0, nb + InfNorm(xb) + InfNorm(sb));
    const double dres = InfNorm(r1) / tau_ / std::max(1.0, nq + InfNorm(xb) + InfNorm(zb));
    const double pobj = 0.5 * xpx / (tau_ * tau_) + k_.q.dot(xb);
    const double dobj = -0.5 * xpx / (tau_ * tau_) - k_.b.dot(zb);
    const double gap = std::abs(pobj - dobj);
    sol.iterations = iter;
    sol.primal_residual = pres;
    sol.dual_residual = dres;
    sol.gap = gap;
    sol.primal_objective = pobj + k_.c0;
    sol.dual_objective = dobj + k_.c0;
    sol.x = xb;

    if (pres <= opts_.feas_tol && dres <= opts_.feas_tol &&
        (gap <= opts_.gap_tol ||
         gap <= opts_.gap_tol * std::min(std::abs(pobj), std::abs(dobj)))) {
      sol.status = SdpStatus::kOptimal;
      return sol;
    }
    const double mu_now = (s_.dot(z_) + tau_ * kappa_) / (degree_ + 1);
    if (pres <= opts_.reduced_feas_tol && dres <= opts_.reduced_feas_tol &&
        (gap <= opts_.reduced_gap_tol ||
         gap <= opts_.reduced_gap_tol * std::min(std::abs(pobj), std::abs(dobj)))) {
      reduced = sol;
      reduced->status = SdpStatus::kOptimal;
      reduced->reduced_accuracy = true;
      reduced->diagnostic = "reduced accuracy";
      // Complementarity is exhausted while the residuals no longer move.
      if (mu_now <= 1e-14 * std::max(1.0, std::abs(pobj))) return *reduced;
    }
    const double btz = k_.b.dot(z_);
    if (btz < 0 && InfNorm(k_.a.transpose() * z_) <= -opts_.infeas_tol * btz &&
        tau_ < kappa_) {
      sol.status = SdpStatus::kInfeasible;
      sol.diagnostic = "primal infeasibility certificate found";
      return sol;
    }
    const double qtx = k_.q.dot(x_);
    if (qtx < 0 && InfNorm(px) <= -opts_.infeas_tol * qtx &&
        InfNorm(k_.a * x_ + s_) <= -opts_.infeas_tol * qtx && tau_ < kappa_) {
      sol.status = SdpStatus::kUnbounded;
      sol.diagnostic = "dual infeasibility certificate found";
      return sol;
    }
    if (iter >= opts_.max_iter) {
      if (reduced) return *reduced;
      sol.status = SdpStatus::kNumericalLimit;
      sol.diagnostic = "iteration limit reached";
      return sol;
    }

    // Scaling and factorization.
    scal_.assign(cones_.size(), NtScaling{});
    for (size_t c = 0; c < cones_.size(); ++c) {
      if (!ComputeScaling(ConeMat(s_, cones_[c]), ConeMat(z_, cones_[c]), &scal_[c])) {
        if (reduced) return *reduced;
        sol.status = SdpStatus::kNumericalLimit;
        sol.diagnostic = "lost positive definiteness of the iterates";
        return sol;
      }
    }
    Factor();
    const double mu = (s_.dot(z_) + tau_ * kappa_) / (degree_ + 1);

    Vec rhs1(nx_ + m_);
    rhs1.head(nx_) = -k_.q;
    rhs1.tail(m_) = k_.b;
    const Vec sol1 = SolveKkt(rhs1);
    const Vec dx1 = sol1.head(nx_), dz1 = sol1.tail(m_);
    const Vec c_vec = k_.q + 2.0 * px / tau_;
    const double den = c_vec.dot(dx1) + k_.b.dot(dz1) - xpx / (tau_ * tau_) - kappa_ / tau_;

    // One Newton direction for a given centering target. `ds_target` holds,
    // per cone, the scaled complementarity right-hand side (diagonal basis).
    struct Dir {
      Vec dx, dz, ds;
      double dtau, dkappa;
    };
    auto direction = [&](double eta, const std::vector<Mat>& ds_target, double dk) {
      Vec rhs(nx_ + m_);
      rhs.head(nx_) = -eta * r1;
      Vec top = -eta * r2;
      std::vector<Mat> u(cones_.size());
      for (size_t c = 0; c < cones_.size(); ++c) {
        const ConeBlock& cb = cones_[c];
        const Vec& lam = scal_[c].lambda;
        Mat uc(cb.dim, cb.dim);
        for (int i = 0; i < cb.dim; ++i) {
          for (int j = 0; j < cb.dim; ++j) {
            uc(i, j) = 2.0 * ds_target[c](i, j) / (lam(i) + lam(j));
          }
        }
        u[c] = uc;
        top.segment(cb.offset, cb.len) -= Svec(scal_[c].r * uc * scal_[c].r.transpose());
      }
      rhs.tail(m_) = top;
      const Vec sol2 = SolveKkt(rhs);
      const double num = -eta * r3 - c_vec.dot(sol2.head(nx_)) - k_.b.dot(sol2.tail(m_)) -
                         dk / tau_;
      Dir d;
      d.dtau = num / den;
      d.dx = sol2.head(nx_) + d.dtau * dx1;
      d.dz = sol2.tail(m_) + d.dtau * dz1;
      d.ds = Vec::Zero(m_);
      for (size_t c = 0; c < cones_.size(); ++c) {
        const ConeBlock& cb = cones_[c];
        d.ds.segment(cb.offset, cb.len) =
            Svec(scal_[c].r * u[c] * scal_[c].r.transpose()) -
            scal_[c].h * d.dz.segment(cb.offset, cb.len);
      }
      d.dkappa = (dk - kappa_ * d.dtau) / tau_;
      return d;
    };

    // Predictor.
    std::vector<Mat> target(cones_.size());
    for (size_t c = 0; c < cones_.size(); ++c) {
      target[c] = -scal_[c].lambda.cwiseAbs2().asDiagonal().toDenseMatrix();
    }
    const Dir aff = direction(1.0, target, -tau_ * kappa_);
    const double alpha_aff = std::min(1.0, StepLength(aff.dx, aff.ds, aff.dz, aff.dtau, aff.dkappa));
    const double sigma = std::pow(1.0 - alpha_aff, 3);

    // Corrector.
    for (size_t c = 0; c < cones_.size(); ++c) {
      const ConeBlock& cb = cones_[c];
      const Mat ws = scal_[c].rinv * ConeMat(aff.ds, cb) * scal_[c].rinv.transpose();
      const Mat wz = scal_[c].r.transpose() * ConeMat(aff.dz, cb) * scal_[c].r;
      target[c] += sigma * mu * Mat::Identity(cb.dim, cb.dim) - 0.5 * (ws * wz + wz * ws);
    }
    const Dir d = direction(1.0 - sigma, target,
                            -tau_ * kappa_ + sigma * mu - aff.dtau * aff.dkappa);
    const double alpha = std::min(1.0, 0.99 * StepLength(d.dx, d.ds, d.dz, d.dtau, d.dkappa));
    if (!(alpha > 1e-12) || !d.dx.allFinite()) {
      if (reduced) return *reduced;
      sol.status = SdpStatus::kNumericalLimit;
      sol.diagnostic = "step length collapsed";
      return sol;
    }
    x_ += alpha * d.dx;
    s_ += alpha * d.ds;
    z_ += alpha * d.dz;
    tau_ += alpha * d.dtau;
    kappa_ += alpha * d.dkappa;
    s_.head(k_.num_zero).setZero();
  }
}

/// Independent re-check of an Optimal point against the conic data.
std::string Validate(const SdpProblem::Conic& k, const SdpSolution& sol,
                     const SdpOptions& opts) {
  std::ostringstream why;
  const bool r = sol.reduced_accuracy;
  const double feas_tol = r ? opts.reduced_feas_tol : opts.feas_tol;
  const double gap_tol = r ? opts.reduced_gap_tol : opts.gap_tol;
  const Vec slack = k.b - k.a * sol.x;
  const double scale = std::max(1.0, InfNorm(k.b) + InfNorm(sol.x));
  const double eq_res = InfNorm(slack.head(k.num_zero));
  if (eq_res > 10 * feas_tol * scale) {
    why << "equality residual " << eq_res << " too large";
    return why.str();
  }
  int off = k.num_zero;
  for (int d : k.psd_dims) {
    const Mat s = Smat(slack.segment(off, SvecLen(d)), d);
    off += SvecLen(d);
    Eigen::SelfAdjointEigenSolver<Mat> es(s, Eigen::EigenvaluesOnly);
    const double psd_tol =
        std::max(10 * feas_tol * scale, opts.validate_psd_tol * std::max(1.0, s.norm()));
    if (es.eigenvalues()(0) < -psd_tol) {
      why << "LMI slack has eigenvalue " << es.eigenvalues()(0);
      return why.str();
    }
  }
  const double tol = 10 * gap_tol *
                     std::max(1.0, std::min(std::abs(sol.primal_objective - k.c0),
                                            std::abs(sol.dual_objective - k.c0)));
  if (std::abs(sol.primal_objective - sol.dual_objective) > tol) {
    why << "duality gap " << std::abs(sol.primal_objective - sol.dual_objective)
        << " too large";
    return why.str();
  }
  return {};
}

}  // namespace

SdpSolution SolveSdp(const SdpProblem& p, const SdpOptions& opts) {
  const SdpProblem::Conic k = p.Compile();
  if (!k.a.allFinite() || !k.b.allFinite() || !k.q.allFinite() || !k.p.allFinite()) {
    throw ValidationError("SDP data has non-finite entries");
  }
  HsdSolver solver(k, opts);
  SdpSolution sol = solver.Run();
  sol.offsets_ = p.offsets();
  if (sol.status == SdpStatus::kOptimal && opts.validate) {
    const std::string why = Validate(k, sol, opts);
    if (!why.empty()) {
      sol.status = SdpStatus::kNumericalLimit;
      sol.diagnostic = "self-validation failed: " + why;
    }
  }
  return sol;
}

SdpSolution SolveEqualityQp(const SdpProblem& p) {
  const SdpProblem::Conic k = p.Compile();
  if (!k.psd_dims.empty()) throw ValidationError("SolveEqualityQp: problem has LMIs");
  const int n = static_cast<int>(k.a.cols()), m = k.num_zero;
  Mat kkt = Mat::Zero(n + m, n + m);
  kkt.topLeftCorner(n, n) = k.p;
  kkt.topRightCorner(n, m) = k.a.transpose();
  kkt.bottomLeftCorner(m, n) = k.a;
  Vec rhs(n + m);
  rhs.head(n) = -k.q;
  rhs.tail(m) = k.b;
  Eigen::FullPivLU<Mat> lu(kkt);
  if (!lu.isInvertible()) throw NumericalError("SolveEqualityQp: singular KKT system");
  const Vec sol = lu.solve(rhs);
  SdpSolution out;
  out.x = sol.head(n);
  out.offsets_ = p.offsets();
  out.status = SdpStatus::kOptimal;
  out.primal_objective = 0.5 * out.x.dot(k.p * out.x) + k.q.dot(out.x) + k.c0;
  out.dual_objective = out.primal_objective;
  out.primal_residual = InfNorm(k.a * out.x - k.b);
  return out;
}

FeasibilityResult CheckFeasible(const SdpProblem& p, const SdpOptions& opts) {
  FeasibilityResult r;
  r.solution = SolveSdp(p.WithoutObjective(), opts);
  r.feasible = r.solution.status == SdpStatus::kOptimal;
  r.indeterminate = r.solution.status == SdpStatus::kNumericalLimit ||
                    r.solution.status == SdpStatus::kUnbounded;
  return r;
}

}  // namespace dcsynth
