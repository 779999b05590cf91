#ifndef PARSIMIX_EM_HPP
#define PARSIMIX_EM_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "parsimix/covmodels.hpp"
#include "parsimix/prior.hpp"
#include "parsimix/types.hpp"

namespace parsimix {

enum class InitStrategy { KmeansPP, RandomPartition, GivenPartition };

struct EmControl {
  double rel_tol = 1e-8;
  int max_iter = 1000;
  int n_restarts = 32;
  InitStrategy init_strategy = InitStrategy::KmeansPP;
  std::uint64_t seed = 0;
  std::vector<int> given_partition;  // used with GivenPartition, labels in 0..K-1
};

// n x K table of log(pi_k phi_d(x_i; mu_k, Sigma_k)), Cholesky-based.
// Throws SingularityError on a non-PD covariance.
Matrix log_density_components(const DataMatrix& x, const MixtureParameters& params);

struct EStepResult {
  Responsibilities z;
  double loglik;
};

// Log-sum-exp stabilized responsibilities and observed-data
// log-likelihood. With case weights w, loglik = sum_i w_i log f(x_i).
EStepResult e_step(const DataMatrix& x, const MixtureParameters& params);
EStepResult e_step_weighted(const DataMatrix& x, const MixtureParameters& params,
                            const Vector& case_weights);

// Initial hard partition (labels 0..K-1), deterministic in
// (control.seed, restart_index). kmeans++ runs D^2 seeding followed by
// at most 25 Lloyd iterations.
std::vector<int> initialize(const DataMatrix& x, int K, const EmControl& control,
                            int restart_index);

// argmax per row, lowest index on ties; labels in 1..K.
std::vector<int> map_classify(const Responsibilities& z);

// Full fit: n_restarts EM chains, best final objective wins (ties go to
// the lowest restart index). Throws SingularityError only if every
// chain degenerates. Nonconvergence is reported, not thrown.
FitResult fit(const DataMatrix& x, const ModelSpec& spec,
              const std::optional<PriorSpec>& prior, const EmControl& control);

// Single EM chain started from given parameters; used by bootstrap
// replicates. Optional per-observation weights (weighted likelihood).
FitResult fit_from(const DataMatrix& x, const ModelSpec& spec,
                   const std::optional<PriorSpec>& prior,
                   const MixtureParameters& start, const EmControl& control,
                   const Vector* case_weights = nullptr);

}  // namespace parsimix

#endif
