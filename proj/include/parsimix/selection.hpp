#ifndef PARSIMIX_SELECTION_HPP
#define PARSIMIX_SELECTION_HPP

#include <optional>
#include <string>
#include <vector>

#include "parsimix/em.hpp"
#include "parsimix/types.hpp"

namespace parsimix {

// 2*loglik - df*log(n); larger is better.
double bic(double loglik, int df, std::size_t n);

// bic + 2 * sum_i log z[i, labels[i]]. Throws InvalidInput when any
// assigned-cluster probability is exactly zero.
double icl(double bic_value, const Responsibilities& z, const std::vector<int>& labels);

struct SelectionEntry {
  std::string code;
  int K = 0;
  bool available = false;  // false: named-only code, failed cell, or (by default) nonconverged
  bool converged = false;
  double bic = 0.0;
  double icl = 0.0;
  double loglik = 0.0;
  int df = 0;
  std::string note;  // failure reason or "named-only"
};

struct SelectionTable {
  std::vector<SelectionEntry> entries;   // ranked by BIC descending, unavailable last
  int best_index = -1;                   // highest-BIC available entry
  std::vector<double> bic_diffs;         // top-3 BIC differences relative to best
  std::optional<FitResult> best_fit;

  const SelectionEntry& best() const { return entries.at(best_index); }
};

// Fits every (code, K) cell; named-only codes are listed as unavailable
// rather than dropped. Individual cell failures never abort the grid.
// Cells at the same K share initial partitions (they depend only on
// seed, K, restart index).
SelectionTable grid_search(const DataMatrix& x, const std::vector<std::string>& codes,
                           int k_min, int k_max, const std::optional<PriorSpec>& prior,
                           const EmControl& control,
                           bool include_nonconverged = false);

// Components whose MAP-partition share falls below the threshold
// (conventionally 5-8%). Informational only.
std::vector<int> small_class_warning(const FitResult& result, double threshold = 0.05);

}  // namespace parsimix

#endif
