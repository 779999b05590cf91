#ifndef PARSIMIX_COVMODELS_HPP
#define PARSIMIX_COVMODELS_HPP

#include <string>
#include <vector>

#include "parsimix/types.hpp"

namespace parsimix {

// Per-axis constraint of a covariance code: equal across components,
// varying, or identity (spherical shape / axis-aligned orientation).
enum class Axis { Equal, Varying, Identity };

struct ModelConstraints {
  std::string code;
  Axis volume;
  Axis shape;
  Axis orientation;
  bool fitted;  // false for the four rotation-coupled codes (EVE, VVE, VEE, EVV)

  bool diagonal() const { return orientation == Axis::Identity; }
  bool spherical() const { return shape == Axis::Identity; }
  bool equal_covariance() const;  // all K matrices identical
};

// The ten codes with closed-form (or simple fixed-point) M-steps.
const std::vector<std::string>& fitted_model_codes();
// All fourteen codes of the family.
const std::vector<std::string>& all_model_codes();

// Throws InvalidInput for non-members, listing the valid codes.
ModelConstraints parse_model_code(const std::string& code);

// Number of independent parameters: (K-1) weights + K*d means +
// volume/shape/orientation accounting for the covariance factors.
int count_free_params(const std::string& code, int d, int K);

// Volume/shape/orientation factorization of a single SPD matrix:
// sigma = lambda * U * diag(delta) * U^T with prod(delta) = 1 and
// delta in decreasing order.
struct CovDecomposition {
  double lambda;  // |sigma|^(1/d)
  Vector delta;   // normalized eigenvalues, decreasing, det 1
  Matrix orient;  // orthogonal, columns matched to delta
};

CovDecomposition decompose_covariance(const Matrix& sigma);
Matrix compose_covariance(const CovDecomposition& dec);

// Weighted EM sufficient statistics.
struct SufficientStats {
  Vector nk;              // K effective counts sum_i z_ik
  Matrix xbar;            // d x K weighted means
  std::vector<Matrix> W;  // K weighted scatter matrices

  int K() const { return static_cast<int>(nk.size()); }
  Eigen::Index d() const { return xbar.rows(); }
};

SufficientStats compute_stats(const Matrix& x, const Matrix& z);
SufficientStats compute_stats_weighted(const Matrix& x, const Matrix& z,
                                       const Vector& case_weights);

// Constrained complete-data ML covariance update for a fitted-set code.
// Throws SingularityError on degenerate stats (nk ~ 0 or a required
// determinant/trace <= 0), naming the offending component.
std::vector<Matrix> mstep_covariance(const std::string& code,
                                     const SufficientStats& stats, double n);

// SPD check used everywhere: smallest eigenvalue > 1e-10 * trace / d.
bool is_positive_definite(const Matrix& sigma);

}  // namespace parsimix

#endif
