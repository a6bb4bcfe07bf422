#include "dcsynth/chordal.h"

#include <algorithm>
#include <string>

#include "dcsynth/errors.h"

namespace dcsynth {

namespace {

int CliqueDim(const std::vector<int>& clique, const std::vector<int>& sizes) {
  int d = 0;
  for (int v : clique) d += sizes.at(v);
  return d;
}

/// Offsets of each member block inside the clique matrix.
std::vector<int> LocalOffsets(const std::vector<int>& clique,
                              const std::vector<int>& sizes) {
  std::vector<int> off{0};
  for (int v : clique) off.push_back(off.back() + sizes.at(v));
  return off;
}

int Position(const std::vector<int>& clique, int v) {
  return static_cast<int>(std::find(clique.begin(), clique.end(), v) - clique.begin());
}

Mat PseudoInverse(const Mat& s, double tol) {
  SymEigen e = SymEigenDecompose(SymMat(s));
  const double cut = tol * std::max(1.0, e.values.cwiseAbs().maxCoeff());
  Vec inv = Vec::Zero(e.values.size());
  for (Eigen::Index k = 0; k < e.values.size(); ++k) {
    if (e.values(k) > cut) inv(k) = 1.0 / e.values(k);
  }
  return e.vectors * inv.asDiagonal() * e.vectors.transpose();
}

}  // namespace

SparseBlockSym::SparseBlockSym(std::vector<int> block_sizes, UndirectedGraph support,
                               const Mat& dense)
    : sizes_(std::move(block_sizes)), support_(std::move(support)) {
  const std::vector<int> off = BlockOffsets(sizes_);
  if (support_.num_nodes() != static_cast<int>(sizes_.size())) {
    throw ValidationError("support graph does not match the block partition");
  }
  if (dense.rows() != off.back() || dense.cols() != off.back()) {
    throw ValidationError("SparseBlockSym: dense matrix has wrong size");
  }
  dense_ = 0.5 * (dense + dense.transpose());
  for (int i = 0; i < support_.num_nodes(); ++i) {
    for (int j = i + 1; j < support_.num_nodes(); ++j) {
      if (support_.HasEdge(i, j)) continue;
      if (!dense_.block(off[i], off[j], sizes_[i], sizes_[j]).isZero(0.0)) {
        throw ValidationError("nonzero block (" + std::to_string(i + 1) + "," +
                              std::to_string(j + 1) + ") outside the support");
      }
    }
  }
}

Mat SparseBlockSym::Block(int i, int j) const {
  const std::vector<int> off = BlockOffsets(sizes_);
  return dense_.block(off.at(i), off.at(j), sizes_.at(i), sizes_.at(j));
}

SparseBlockSym Compose(const CliqueSplit& split, const ChordalStructure& cs,
                       const std::vector<int>& block_sizes) {
  if (split.size() != cs.cliques.size()) {
    throw ValidationError("Compose: one matrix per clique required");
  }
  const int n = BlockOffsets(block_sizes).back();
  Mat sum = Mat::Zero(n, n);
  for (size_t k = 0; k < split.size(); ++k) {
    sum += Inflate(split[k], cs.cliques[k], block_sizes);
  }
  return SparseBlockSym(block_sizes, cs.graph, sum);
}

CliqueSplit EqualSplit(const SparseBlockSym& x, const ChordalStructure& cs) {
  const std::vector<int>& sizes = x.block_sizes();
  CliqueSplit split;
  for (const auto& clique : cs.cliques) {
    const std::vector<int> loc = LocalOffsets(clique, sizes);
    Mat xk(loc.back(), loc.back());
    for (size_t a = 0; a < clique.size(); ++a) {
      for (size_t b = 0; b < clique.size(); ++b) {
        const int i = clique[a], j = clique[b];
        const double share =
            i == j ? static_cast<double>(cs.node_cliques[i].size())
                   : static_cast<double>(cs.EdgeCliques(i, j).size());
        xk.block(loc[a], loc[b], sizes[i], sizes[j]) = x.Block(i, j) / share;
      }
    }
    split.push_back(0.5 * (xk + xk.transpose()));
  }
  return split;
}

CliqueSplit DecomposePsd(const SparseBlockSym& x, const ChordalStructure& cs,
                         double tol) {
  const std::vector<int>& sizes = x.block_sizes();
  const int nb = static_cast<int>(sizes.size());
  if (cs.graph.num_nodes() != nb) {
    throw ValidationError("DecomposePsd: structure does not match partition");
  }
  for (const Edge& e : x.support().Edges()) {
    if (!cs.graph.HasEdge(e.first, e.second)) {
      throw DomainError("DecomposePsd: support is not covered by the chordal graph");
    }
  }
  const double scale = std::max(1.0, x.dense().norm());
  if (ClassifyPsd(SymMat(x.dense()), tol * scale).kind == PsdKind::kIndefinite) {
    throw DomainError("DecomposePsd: matrix is not positive semidefinite");
  }

  CliqueSplit split = EqualSplit(x, cs);
  bool all_psd = true;
  for (const Mat& xk : split) {
    if (ClassifyPsd(SymMat(xk), tol * scale).kind == PsdKind::kIndefinite) {
      all_psd = false;
      break;
    }
  }
  if (all_psd) return split;

  // Block LDL' sweep: eliminating v peels off a PSD term supported on v and
  // its later neighbours, which lie in one clique.
  const std::vector<int> off = BlockOffsets(sizes);
  Mat rest = x.dense();
  split.assign(cs.cliques.size(), Mat());
  for (size_t k = 0; k < cs.cliques.size(); ++k) {
    const int d = CliqueDim(cs.cliques[k], sizes);
    split[k] = Mat::Zero(d, d);
  }
  std::vector<int> pos(nb);
  for (int k = 0; k < nb; ++k) pos[cs.elimination_order[k]] = k;
  for (int v : cs.elimination_order) {
    std::vector<int> members{v};
    for (int w : cs.graph.Neighbors(v)) {
      if (pos[w] > pos[v]) members.push_back(w);
    }
    std::sort(members.begin(), members.end());
    int owner = -1;
    for (int k : cs.node_cliques[v]) {
      const auto& c = cs.cliques[k];
      if (std::includes(c.begin(), c.end(), members.begin(), members.end())) {
        owner = k;
        break;
      }
    }
    if (owner < 0) throw NumericalError("DecomposePsd: no clique covers an elimination step");
    const std::vector<int> loc = LocalOffsets(members, sizes);
    Mat col(loc.back(), sizes[v]);
    for (size_t a = 0; a < members.size(); ++a) {
      const int w = members[a];
      col.block(loc[a], 0, sizes[w], sizes[v]) =
          rest.block(off[w], off[v], sizes[w], sizes[v]);
    }
    const Mat pivot = rest.block(off[v], off[v], sizes[v], sizes[v]);
    const Mat term = col * PseudoInverse(pivot, tol) * col.transpose();
    // The diagonal and v-row of the term are taken verbatim from `rest`, so
    // the eliminated block is cleared exactly.
    const std::vector<int>& clique = cs.cliques[owner];
    const std::vector<int> cloc = LocalOffsets(clique, sizes);
    for (size_t a = 0; a < members.size(); ++a) {
      for (size_t b = 0; b < members.size(); ++b) {
        const int i = members[a], j = members[b];
        Mat blk = term.block(loc[a], loc[b], sizes[i], sizes[j]);
        if (i == v || j == v) blk = rest.block(off[i], off[j], sizes[i], sizes[j]);
        const int pa = Position(clique, i), pb = Position(clique, j);
        split[owner].block(cloc[pa], cloc[pb], sizes[i], sizes[j]) += blk;
        rest.block(off[i], off[j], sizes[i], sizes[j]) -= blk;
      }
    }
  }
  for (Mat& xk : split) xk = 0.5 * (xk + xk.transpose());
  for (const Mat& xk : split) {
    if (ClassifyPsd(SymMat(xk), std::max(tol, 1e-7) * scale).kind ==
        PsdKind::kIndefinite) {
      throw NumericalError("DecomposePsd: sweep could not certify PSD clique terms");
    }
  }
  return split;
}

Mat BuildFDiagonal(const SubsystemModel& s, const Mat& x, const Mat& z) {
  const Mat g = s.a * x - s.b * z;
  return -g - g.transpose() - s.m * s.m.transpose();
}

Mat BuildFOffDiagonal(const Mat& a_ij, const Mat& a_ji, const Mat& x_i,
                      const Mat& x_j) {
  return -(a_ij * x_j + x_i * a_ji.transpose());
}

SparseBlockSym BuildF(const InterconnectedSystem& sys, const std::vector<Mat>& x,
                      const std::vector<Mat>& z) {
  const int nsub = sys.num_subsystems();
  const BlockPartition& p = sys.partition();
  if (static_cast<int>(x.size()) != nsub || static_cast<int>(z.size()) != nsub) {
    throw ValidationError("BuildF: one X and one Z block per subsystem required");
  }
  for (int i = 0; i < nsub; ++i) {
    const int ni = p.state_sizes()[i], mi = p.input_sizes()[i];
    if (x[i].rows() != ni || x[i].cols() != ni || z[i].rows() != mi || z[i].cols() != ni) {
      throw ValidationError("BuildF: block " + std::to_string(i + 1) +
                            " does not match the partition");
    }
  }
  const int n = p.total_states();
  Mat f = Mat::Zero(n, n);
  for (int i = 0; i < nsub; ++i) {
    f.block(p.state_offset(i), p.state_offset(i), x[i].rows(), x[i].cols()) =
        BuildFDiagonal(sys.subsystem(i), x[i], z[i]);
  }
  const UndirectedGraph support = UndirectedClosure(sys.plant_graph());
  for (const auto& [i, j] : support.Edges()) {
    const Mat fij = BuildFOffDiagonal(sys.CouplingOrZero(i, j),
                                      sys.CouplingOrZero(j, i), x[i], x[j]);
    f.block(p.state_offset(i), p.state_offset(j), fij.rows(), fij.cols()) = fij;
    f.block(p.state_offset(j), p.state_offset(i), fij.cols(), fij.rows()) =
        fij.transpose();
  }
  return SparseBlockSym(p.state_sizes(), support, f);
}

CliqueBlockLayout CliqueBlocks(const ChordalStructure& cs) {
  CliqueBlockLayout layout;
  for (const auto& clique : cs.cliques) {
    CliqueBlockLayout::Clique c;
    c.nodes = clique;
    for (int i : clique) {
      (cs.IsOverlapNode(i) ? c.shared_nodes : c.exclusive_nodes).push_back(i);
    }
    for (size_t a = 0; a < clique.size(); ++a) {
      for (size_t b = a + 1; b < clique.size(); ++b) {
        const Edge e{clique[a], clique[b]};
        (cs.IsOverlapEdge(e.first, e.second) ? c.shared_edges : c.exclusive_edges)
            .push_back(e);
      }
    }
    layout.cliques.push_back(std::move(c));
  }
  return layout;
}

}  // namespace dcsynth
