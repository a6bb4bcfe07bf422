#include "dcsynth/system_model.h"

#include <algorithm>
#include <string>

#include "dcsynth/errors.h"

namespace dcsynth {

namespace {

std::string Sub(int i) { return "subsystem " + std::to_string(i + 1); }

void CheckShape(const Mat& x, int rows, int cols, const std::string& what) {
  if (x.rows() != rows || x.cols() != cols) {
    throw ValidationError(what + " has shape " + std::to_string(x.rows()) +
                          "x" + std::to_string(x.cols()) + ", expected " +
                          std::to_string(rows) + "x" + std::to_string(cols));
  }
  if (!x.allFinite()) throw ValidationError(what + " has non-finite entries");
}

}  // namespace

BlockPartition::BlockPartition(std::vector<int> n, std::vector<int> m,
                               std::vector<int> q)
    : n_(std::move(n)), m_(std::move(m)), q_(std::move(q)) {
  if (n_.empty()) throw ValidationError("partition needs at least one subsystem");
  if (m_.size() != n_.size() || q_.size() != n_.size()) {
    throw ValidationError("partition lists n, m, q differ in length");
  }
  for (size_t i = 0; i < n_.size(); ++i) {
    if (n_[i] < 1 || m_[i] < 1 || q_[i] < 1) {
      throw ValidationError("partition sizes must be >= 1");
    }
    n_off_.push_back(n_off_.back() + n_[i]);
    m_off_.push_back(m_off_.back() + m_[i]);
    q_off_.push_back(q_off_.back() + q_[i]);
  }
}

InterconnectedSystem::InterconnectedSystem(
    std::vector<SubsystemModel> subsystems,
    std::vector<CouplingBlock> couplings)
    : subsystems_(std::move(subsystems)), couplings_(std::move(couplings)) {
  std::vector<int> n, m, q;
  for (const SubsystemModel& s : subsystems_) {
    n.push_back(static_cast<int>(s.a.rows()));
    m.push_back(static_cast<int>(s.b.cols()));
    q.push_back(static_cast<int>(s.m.cols()));
  }
  partition_ = BlockPartition(n, m, q);
  for (int i = 0; i < num_subsystems(); ++i) {
    const SubsystemModel& s = subsystems_[i];
    CheckShape(s.a, n[i], n[i], Sub(i) + " A");
    CheckShape(s.b, n[i], m[i], Sub(i) + " B");
    CheckShape(s.m, n[i], q[i], Sub(i) + " M");
    CheckShape(s.q.matrix(), n[i], n[i], Sub(i) + " Q");
    CheckShape(s.r.matrix(), m[i], m[i], Sub(i) + " R");
    if (ClassifyPsd(s.q).kind == PsdKind::kIndefinite) {
      throw ValidationError("Q_" + std::to_string(i + 1) +
                            " not positive semidefinite");
    }
    if (ClassifyPsd(s.r).kind != PsdKind::kPositiveDefinite) {
      throw ValidationError("R_" + std::to_string(i + 1) +
                            " not positive definite");
    }
  }
  std::sort(couplings_.begin(), couplings_.end(),
            [](const CouplingBlock& x, const CouplingBlock& y) {
              return std::pair(x.target, x.source) < std::pair(y.target, y.source);
            });
  std::vector<Edge> edges;
  for (const CouplingBlock& c : couplings_) {
    const std::string name = "coupling A_" + std::to_string(c.target + 1) +
                             "," + std::to_string(c.source + 1);
    if (c.target < 0 || c.target >= num_subsystems() || c.source < 0 ||
        c.source >= num_subsystems()) {
      throw ValidationError(name + " references a missing subsystem");
    }
    if (c.target == c.source) {
      throw ValidationError(name + " is a diagonal block");
    }
    CheckShape(c.a, n[c.target], n[c.source], name);
    if (c.a.isZero(0.0)) {
      throw ValidationError(name + " is zero; omit the coupling instead");
    }
    edges.emplace_back(c.source, c.target);
  }
  plant_graph_ = DirectedGraph(num_subsystems(), edges);
}

const Mat* InterconnectedSystem::Coupling(int target, int source) const {
  auto it = std::lower_bound(
      couplings_.begin(), couplings_.end(), std::pair(target, source),
      [](const CouplingBlock& c, const std::pair<int, int>& key) {
        return std::pair(c.target, c.source) < key;
      });
  if (it == couplings_.end() || it->target != target || it->source != source) {
    return nullptr;
  }
  return &it->a;
}

Mat InterconnectedSystem::CouplingOrZero(int target, int source) const {
  const Mat* a = Coupling(target, source);
  if (a) return *a;
  return Mat::Zero(partition_.state_sizes().at(target),
                   partition_.state_sizes().at(source));
}

GlobalMatrices AssembleGlobal(const InterconnectedSystem& sys) {
  const BlockPartition& p = sys.partition();
  const int n = p.total_states();
  GlobalMatrices g;
  g.a = Mat::Zero(n, n);
  g.b = Mat::Zero(n, p.total_inputs());
  g.m = Mat::Zero(n, p.total_disturbances());
  Mat q = Mat::Zero(n, n);
  Mat r = Mat::Zero(p.total_inputs(), p.total_inputs());
  for (int i = 0; i < sys.num_subsystems(); ++i) {
    const SubsystemModel& s = sys.subsystem(i);
    const int ni = p.state_sizes()[i], mi = p.input_sizes()[i];
    g.a.block(p.state_offset(i), p.state_offset(i), ni, ni) = s.a;
    g.b.block(p.state_offset(i), p.input_offset(i), ni, mi) = s.b;
    g.m.block(p.state_offset(i), p.disturbance_offset(i), ni,
              p.disturbance_sizes()[i]) = s.m;
    q.block(p.state_offset(i), p.state_offset(i), ni, ni) = s.q.matrix();
    r.block(p.input_offset(i), p.input_offset(i), mi, mi) = s.r.matrix();
  }
  for (const CouplingBlock& c : sys.couplings()) {
    g.a.block(p.state_offset(c.target), p.state_offset(c.source), c.a.rows(),
              c.a.cols()) = c.a;
  }
  g.q = SymMat(q);
  g.r = SymMat(r);
  return g;
}

Mat GlobalGain(const InterconnectedSystem& sys, const DecentralizedController& k) {
  const BlockPartition& p = sys.partition();
  if (static_cast<int>(k.gains.size()) != sys.num_subsystems()) {
    throw ValidationError("controller has wrong number of gains");
  }
  Mat out = Mat::Zero(p.total_inputs(), p.total_states());
  for (int i = 0; i < sys.num_subsystems(); ++i) {
    CheckShape(k.gains[i], p.input_sizes()[i], p.state_sizes()[i],
               "gain K_" + std::to_string(i + 1));
    out.block(p.input_offset(i), p.state_offset(i), k.gains[i].rows(),
              k.gains[i].cols()) = k.gains[i];
  }
  return out;
}

Mat ClosedLoop(const InterconnectedSystem& sys, const DecentralizedController& k) {
  const GlobalMatrices g = AssembleGlobal(sys);
  return g.a - g.b * GlobalGain(sys, k);
}

}  // namespace dcsynth
