#ifndef PARSIMIX_BOOTSTRAP_HPP
#define PARSIMIX_BOOTSTRAP_HPP

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "parsimix/em.hpp"
#include "parsimix/types.hpp"

namespace parsimix {

enum class BootType { Bs, Pb, Wlbs };

BootType parse_boot_type(const std::string& s);
std::string boot_type_name(BootType t);

struct BootstrapRun {
  BootType type = BootType::Bs;
  int nboot = 0;
  ModelSpec model;
  MixtureParameters reference;
  std::vector<MixtureParameters> replicates;  // label-aligned to the reference
  int n_failed = 0;
  std::uint64_t seed = 0;
};

// One resample draw. Bs: n rows with replacement. Pb: n rows simulated
// from the fitted mixture. Wlbs: data untouched, weights filled with a
// flat Dirichlet draw scaled to sum n.
struct Resample {
  Matrix rows;     // bs / pb
  Vector weights;  // wlbs only
};

Resample resample(const DataMatrix& x, const FitResult& fit, BootType type,
                  std::mt19937_64& rng);

// Refits the reference model on nboot resamples. Each replicate runs a
// single EM chain initialized at the reference parameters, then is
// label-aligned to the reference. Throws SingularityError when more
// than 20% of replicates fail.
BootstrapRun bootstrap_fit(const DataMatrix& x, const FitResult& fit, BootType type,
                           int nboot, std::uint64_t seed);

// Percentile interval per scalar parameter (mixing proportions, means,
// covariance diagonals). Quantiles use linear interpolation between
// order statistics at h = (B-1)p + 1.
struct CiTable {
  double level = 0.95;
  Matrix pro;      // 2 x K rows: lower, upper
  Matrix mean_lo;  // d x K
  Matrix mean_hi;
  Matrix var_lo;   // d x K covariance diagonals
  Matrix var_hi;
};

CiTable percentile_ci(const BootstrapRun& run, double level = 0.95);

// Quantile of a sample with the interpolation convention above.
double quantile(std::vector<double> values, double p);

}  // namespace parsimix

#endif
