#include "parsimix/prior.hpp"

#include <Eigen/Cholesky>
#include <cmath>

#include "parsimix/errors.hpp"

namespace parsimix {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

double log_det_spd(const Matrix& m, const char* what) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success)
    throw SingularityError(std::string(what) + ": matrix is not positive definite");
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    logdet += 2.0 * std::log(llt.matrixL()(i, i));
  return logdet;
}

double log_multivariate_gamma(double a, int d) {
  double acc = 0.25 * d * (d - 1) * std::log(M_PI);
  for (int j = 1; j <= d; ++j) acc += std::lgamma(a + 0.5 * (1.0 - j));
  return acc;
}

// log inverse-Wishart(nu, Lambda) density at sigma, normalized.
double log_inv_wishart(const Matrix& sigma, double nu, const Matrix& lambda) {
  const int d = static_cast<int>(sigma.rows());
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success)
    throw SingularityError("log_prior: singular covariance");
  const double logdet_sigma = log_det_spd(sigma, "log_prior covariance");
  const double logdet_lambda = log_det_spd(lambda, "log_prior scale");
  const double tr = llt.solve(lambda).trace();
  return 0.5 * nu * logdet_lambda - 0.5 * nu * d * std::log(2.0) -
         log_multivariate_gamma(0.5 * nu, d) -
         0.5 * (nu + d + 1.0) * logdet_sigma - 0.5 * tr;
}

// log N(mu | mu_p, sigma / kappa).
double log_gaussian_mean(const Vector& mu, const Vector& mu_p, double kappa,
                         const Matrix& sigma) {
  const int d = static_cast<int>(mu.size());
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success)
    throw SingularityError("log_prior: singular covariance");
  const double logdet = log_det_spd(sigma, "log_prior covariance");
  const Vector diff = mu - mu_p;
  const double quad = diff.dot(llt.solve(diff));
  return -0.5 * d * kLog2Pi + 0.5 * d * std::log(kappa) - 0.5 * logdet -
         0.5 * kappa * quad;
}

}  // namespace

PriorSpec default_prior(const DataMatrix& x, int K) {
  x.validate();
  if (K < 1) throw InvalidInput("default_prior requires K >= 1");
  const auto n = x.n();
  const auto d = x.d();
  if (n <= d) throw InvalidInput("default_prior requires n > d for a sample covariance");

  PriorSpec prior;
  prior.mu_p = x.values.colwise().mean();
  prior.kappa_p = 0.1;
  prior.nu_p = static_cast<double>(d) + 2.0;

  Matrix centered = x.values.rowwise() - prior.mu_p.transpose();
  Matrix S = (centered.transpose() * centered) / static_cast<double>(n);
  S = 0.5 * (S + S.transpose());
  if (!is_positive_definite(S))
    throw InvalidInput(
        "sample covariance is rank-deficient; remove constant or collinear columns");
  prior.lambda_p = S / std::pow(static_cast<double>(K), 2.0 / static_cast<double>(d));
  return prior;
}

MixtureParameters map_mstep(const SufficientStats& stats, const PriorSpec& prior,
                            const std::string& code, double n) {
  const ModelConstraints mc = parse_model_code(code);
  if (!mc.fitted) throw InvalidInput("model " + code + " is not in the fitted set");
  const int K = stats.K();
  const int d = static_cast<int>(stats.d());

  MixtureParameters params;
  params.pro = stats.nk / n;
  params.mean = Matrix(d, K);
  for (int k = 0; k < K; ++k)
    params.mean.col(k) =
        (stats.nk[k] * stats.xbar.col(k) + prior.kappa_p * prior.mu_p) /
        (stats.nk[k] + prior.kappa_p);

  // Regularized scatters: lambda_p + shrink outer product + W_k, with
  // inverse-Wishart posterior-mode denominators folded into effective
  // counts so the standard constrained update applies unchanged.
  SufficientStats reg;
  reg.xbar = stats.xbar;
  reg.nk = Vector(K);
  reg.W.resize(K);
  double reg_n = 0.0;

  std::vector<Matrix> shrink(K);
  for (int k = 0; k < K; ++k) {
    const Vector diff = stats.xbar.col(k) - prior.mu_p;
    const double w = prior.kappa_p * stats.nk[k] / (prior.kappa_p + stats.nk[k]);
    shrink[k] = w * diff * diff.transpose();
  }

  if (mc.equal_covariance()) {
    // One inverse-Wishart block for the shared matrix: pooled numerator
    // lambda_p + sum_k(shrink_k + W_k), denominator nu_p + d + 1 + K + n.
    const double m = prior.nu_p + d + 1.0 + K + n;
    for (int k = 0; k < K; ++k) {
      reg.W[k] = stats.W[k] + shrink[k] + prior.lambda_p / K;
      reg.nk[k] = stats.nk[k] + (m - n) / K;
    }
    reg_n = m;
  } else {
    for (int k = 0; k < K; ++k) {
      reg.W[k] = stats.W[k] + shrink[k] + prior.lambda_p;
      reg.nk[k] = prior.nu_p + stats.nk[k] + d + 2.0;
      reg_n += reg.nk[k];
    }
  }

  params.cov = mstep_covariance(code, reg, reg_n);
  return params;
}

double log_prior(const MixtureParameters& params, const PriorSpec& prior, bool shared_cov) {
  const int K = params.K();
  double total = 0.0;
  for (int k = 0; k < K; ++k)
    total += log_gaussian_mean(params.mean.col(k), prior.mu_p, prior.kappa_p, params.cov[k]);
  if (shared_cov) {
    total += log_inv_wishart(params.cov[0], prior.nu_p, prior.lambda_p);
  } else {
    for (int k = 0; k < K; ++k)
      total += log_inv_wishart(params.cov[k], prior.nu_p, prior.lambda_p);
  }
  return total;
}

}  // namespace parsimix
