#ifndef PARSIMIX_TYPES_HPP
#define PARSIMIX_TYPES_HPP

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

namespace parsimix {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Absolute tolerance for probability checks (row sums, simplex sums).
inline constexpr double kProbTol = 1e-12;

// n x d table of finite observations. Ingestion rejects missing or
// non-finite entries, so a constructed DataMatrix is always clean.
struct DataMatrix {
  Matrix values;                          // n x d
  std::vector<std::string> column_names;  // size d

  Eigen::Index n() const { return values.rows(); }
  Eigen::Index d() const { return values.cols(); }

  // Throws InvalidInput on non-finite entries, empty data, or a
  // column-name/column-count mismatch.
  void validate() const;
};

// Covariance parameterization code plus component count.
struct ModelSpec {
  std::string code;  // three letters over {E,V,I}, member of the 14-model family
  int K = 1;
};

struct MixtureParameters {
  Vector pro;               // K mixing proportions
  Matrix mean;              // d x K, column k = mu_k
  std::vector<Matrix> cov;  // K matrices, d x d

  int K() const { return static_cast<int>(pro.size()); }
  Eigen::Index d() const { return mean.rows(); }
};

// Row-stochastic n x K table of posterior membership probabilities.
struct Responsibilities {
  Matrix z;

  Eigen::Index n() const { return z.rows(); }
  int K() const { return static_cast<int>(z.cols()); }
};

// Conjugate prior hyperparameters: Gaussian on means (shrinkage kappa_p
// toward mu_p), inverse Wishart (nu_p, lambda_p) on covariances, uniform
// on the mixing proportions.
struct PriorSpec {
  Vector mu_p;
  double kappa_p = 0.1;
  double nu_p = 0.0;
  Matrix lambda_p;
};

struct FitResult {
  ModelSpec model;
  MixtureParameters params;
  double loglik = 0.0;  // log-likelihood at the MLE (or at the MAP mode when a prior was used)
  int df = 0;
  double bic = 0.0;
  double icl = 0.0;
  Responsibilities z;
  std::vector<int> classification;  // labels in 1..K, argmax_k z[i,k], lowest-index ties
  int iterations = 0;
  bool converged = false;
  std::optional<PriorSpec> prior_used;
  std::uint64_t seed = 0;
};

// Component matching for label switching: finds the permutation p
// minimizing sum_k |ref_mean_k - cand_mean_{p(k)}|. Exhaustive for
// K <= 8, greedy nearest-mean above. perm[k] = index into candidate.
std::vector<int> match_components(const Matrix& reference_means,
                                  const Matrix& candidate_means);

// Applies a component permutation to every per-component field.
MixtureParameters permute_components(const MixtureParameters& params,
                                     const std::vector<int>& perm);

// Returns candidate with components relabeled to best match the
// reference means; pro, mean, cov, z columns, and classification labels
// are permuted consistently. loglik/bic/icl/df are unchanged.
FitResult align_labels(const MixtureParameters& reference, FitResult candidate);

}  // namespace parsimix

#endif
