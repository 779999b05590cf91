#ifndef PARSIMIX_DIAGNOSTICS_HPP
#define PARSIMIX_DIAGNOSTICS_HPP

#include <vector>

#include "parsimix/types.hpp"

namespace parsimix {

// Per-class summary of a vector of per-case values grouped by MAP label.
struct ClassSummary {
  int label = 0;  // 1..K
  int count = 0;
  double mean = 0.0;
  double sd = 0.0;
  double min = 0.0;
  double max = 0.0;
};

struct DiagnosticsReport {
  double entropy_total = 0.0;        // in [0, 1]
  bool k1_convention = false;        // K = 1: entropy defined as 1 by convention
  std::vector<double> case_entropy;  // E_i per observation
  std::vector<ClassSummary> class_entropy_summary;
  std::vector<ClassSummary> avepp_summary;
  std::vector<int> avepp_flags;     // classes with mean MAP probability < 0.8
  std::vector<int> entropy_flags;   // classes with mean entropy < 0.6 (informational)
};

// Normalized entropy E = 1 + sum_ik z log z / (n log K), 0*log(0) = 0.
// K = 1 returns 1 by convention.
double entropy_total(const Responsibilities& z);

// Case contributions E_i = 1 + sum_k z_ik log z_ik / log K.
std::vector<double> entropy_contributions(const Responsibilities& z);

// Per-class mean of the max-row probability among MAP members; empty
// classes are omitted.
std::vector<ClassSummary> avepp(const Responsibilities& z, const std::vector<int>& labels);

std::vector<ClassSummary> summarize_by_class(const std::vector<double>& values,
                                             const std::vector<int>& labels, int K);

DiagnosticsReport diagnose(const Responsibilities& z, const std::vector<int>& labels);

// Histogram plot data: 21 bins over [0, 1.05].
struct Histogram {
  std::vector<double> edges;   // 22 edges
  std::vector<int> counts;     // 21 bins
};

Histogram entropy_histogram(const std::vector<double>& values);

}  // namespace parsimix

#endif
