#ifndef PARSIMIX_PRIOR_HPP
#define PARSIMIX_PRIOR_HPP

#include <string>

#include "parsimix/covmodels.hpp"
#include "parsimix/types.hpp"

namespace parsimix {

// Default hyperparameters: mu_p = column means, kappa_p = 0.1,
// nu_p = d + 2, lambda_p = S / K^(2/d) with S the sample covariance
// (denominator n). Throws InvalidInput if S is rank-deficient.
PriorSpec default_prior(const DataMatrix& x, int K);

// Posterior-mode parameter updates: shrunk means
// (nk*xbar_k + kappa*mu_p)/(nk + kappa), covariance updates from the
// regularized scatters lambda_p + shrink_k + W_k projected onto the
// code's structure, weights nk/n. Exact coordinate-ascent maximizer of
// complete-data log-likelihood + log_prior for every fitted code.
MixtureParameters map_mstep(const SufficientStats& stats, const PriorSpec& prior,
                            const std::string& code, double n);

// Log prior density of the parameters, normalizing constants included.
// The inverse-Wishart term is counted once per distinct covariance
// matrix: per component for varying-covariance codes, once when
// shared_cov is set (EII/EEI/EEE). The Gaussian mean term is always per
// component. Throws SingularityError on singular covariances.
double log_prior(const MixtureParameters& params, const PriorSpec& prior,
                 bool shared_cov = false);

}  // namespace parsimix

#endif
