#pragma once

#include <string>
#include <vector>

#include "dcsynth/sdp.h"
#include "dcsynth/system_model.h"

namespace dcsynth {

enum class SynthStatus {
  kSuccess,
  kInfeasible,        // the SDP has no (strictly) feasible point
  kNotStabilizing,    // a gain was produced but the closed loop is not Hurwitz
  kNumericalFailure,  // solver limit or ill-conditioned recovery
};

const char* ToString(SynthStatus s);

struct SynthesisResult {
  SynthStatus status = SynthStatus::kNumericalFailure;
  std::string message;
  /// Block gains; for the unstructured solve this holds the diagonal blocks.
  DecentralizedController controller;
  /// Global gain (block diagonal except for the unstructured solve).
  Mat gain;
  /// Lyapunov and auxiliary blocks (one dense block for the unstructured solve).
  std::vector<Mat> x, y, z;
  /// Upper bound on the squared H2 norm reported by the SDP.
  double objective = 0.0;
  /// Gramian-certified H2 norm of the closed loop.
  double h2 = 0.0;
  int iterations = 0;

  bool ok() const { return status == SynthStatus::kSuccess; }
};

struct SynthOptions {
  SdpOptions sdp;
  /// Strict inequalities are closed as ">= margin_scale * max(1, data norm)".
  double margin_scale = 1e-6;
};

/// Margin used for X > 0 and F(X, Z) > 0.
double StrictMargin(const InterconnectedSystem& sys, double margin_scale = 1e-6);

/// Block-diagonal Lyapunov restriction: minimize sum Tr(Q_i X_i) + Tr(R_i Y_i)
/// subject to F(X, Z) > 0, [[Y_i, Z_i], [Z_i', X_i]] >= 0, X_i > 0.
SynthesisResult SolveRestriction(const InterconnectedSystem& sys,
                                 const SynthOptions& opts = {});

/// Same SDP with dense X, Y, Z: the H2-optimal centralized state feedback.
SynthesisResult SolveUnstructuredH2(const InterconnectedSystem& sys,
                                    const SynthOptions& opts = {});

/// Diagonal blocks of the centralized optimal gain.
SynthesisResult TruncatedLqr(const InterconnectedSystem& sys,
                             const SynthOptions& opts = {});

/// Per-subsystem optimal gains computed with the couplings ignored.
SynthesisResult LocalizedLqr(const InterconnectedSystem& sys,
                             const SynthOptions& opts = {});

/// H2 norm from d to z = [Q^{1/2} x; -R^{1/2} K x] under u = -K x. Throws
/// DomainError when A - BK is not Hurwitz.
double H2Norm(const InterconnectedSystem& sys, const Mat& global_gain);
double H2Norm(const InterconnectedSystem& sys, const DecentralizedController& k);

/// K = Z X^{-1} through a factorization of X'. Throws NumericalError when
/// X is too badly conditioned.
Mat RecoverGain(const Mat& z, const Mat& x);

/// Fills `h2` and the Hurwitz-based status of a result whose gain is set.
void Certify(const InterconnectedSystem& sys, SynthesisResult* result);

}  // namespace dcsynth
