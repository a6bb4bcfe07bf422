#pragma once

#include <vector>

#include "dcsynth/graph.h"
#include "dcsynth/linalg.h"
#include "dcsynth/system_model.h"

namespace dcsynth {

/// Symmetric block matrix whose off-diagonal blocks vanish outside the
/// support graph. Stored densely; the dimensions involved are small.
class SparseBlockSym {
 public:
  SparseBlockSym() = default;
  /// Throws ValidationError if `dense` has a nonzero block outside `support`.
  SparseBlockSym(std::vector<int> block_sizes, UndirectedGraph support,
                 const Mat& dense);

  const std::vector<int>& block_sizes() const { return sizes_; }
  const UndirectedGraph& support() const { return support_; }
  const Mat& dense() const { return dense_; }
  Mat Block(int i, int j) const;

 private:
  std::vector<int> sizes_;
  UndirectedGraph support_;
  Mat dense_;
};

/// One dense symmetric matrix per clique, sized by the clique's blocks.
using CliqueSplit = std::vector<Mat>;

SparseBlockSym Compose(const CliqueSplit& split, const ChordalStructure& cs,
                       const std::vector<int>& block_sizes);

/// Splits a PSD matrix with chordal support into PSD clique terms that sum
/// back to it. The equal split of every shared block is tried first; if a
/// clique term comes out indefinite, a block LDL' sweep along the
/// elimination order produces the terms instead.
CliqueSplit DecomposePsd(const SparseBlockSym& x, const ChordalStructure& cs,
                         double tol = 1e-9);

/// Equal split of every shared block among the cliques containing it.
CliqueSplit EqualSplit(const SparseBlockSym& x, const ChordalStructure& cs);

/// F(X, Z) = -(AX - BZ) - (AX - BZ)' - MM' for block-diagonal X, Z.
SparseBlockSym BuildF(const InterconnectedSystem& sys, const std::vector<Mat>& x,
                      const std::vector<Mat>& z);

/// Diagonal block F_ii.
Mat BuildFDiagonal(const SubsystemModel& s, const Mat& x, const Mat& z);
/// Off-diagonal block F_ij = -(A_ij X_j + X_i A_ji').
Mat BuildFOffDiagonal(const Mat& a_ij, const Mat& a_ji, const Mat& x_i,
                      const Mat& x_j);

/// Ownership of the blocks of F among the cliques.
struct CliqueBlockLayout {
  struct Clique {
    std::vector<int> nodes;
    std::vector<int> exclusive_nodes;  // C_k \ N_0
    std::vector<int> shared_nodes;     // C_k cap N_0
    std::vector<Edge> exclusive_edges; // edges of C_k outside E_0
    std::vector<Edge> shared_edges;    // edges of C_k in E_0
  };
  std::vector<Clique> cliques;
};

CliqueBlockLayout CliqueBlocks(const ChordalStructure& cs);

}  // namespace dcsynth
