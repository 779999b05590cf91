#include "parsimix/em.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "parsimix/errors.hpp"
#include "parsimix/parallel.hpp"
#include "parsimix/rng.hpp"

namespace parsimix {

namespace {

constexpr double kEmptyClusterEps = 1e-10;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct ChainResult {
  bool failed = true;
  std::string failure;
  MixtureParameters params;
  Responsibilities z;
  double loglik = kNegInf;
  double objective = kNegInf;
  int iterations = 0;
  bool converged = false;
};

Matrix one_hot(const std::vector<int>& labels, int K) {
  Matrix z = Matrix::Zero(static_cast<Eigen::Index>(labels.size()), K);
  for (std::size_t i = 0; i < labels.size(); ++i) z(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
  return z;
}

MixtureParameters ml_mstep(const SufficientStats& stats, const std::string& code, double n) {
  MixtureParameters params;
  params.pro = stats.nk / n;
  params.mean = stats.xbar;
  params.cov = mstep_covariance(code, stats, n);
  return params;
}

// One full EM chain. Starts either from a hard partition (start == null)
// or from given parameters. weights == null means unweighted.
ChainResult run_chain(const DataMatrix& x, const ModelSpec& spec,
                      const std::optional<PriorSpec>& prior, const EmControl& control,
                      const std::vector<int>* partition, const MixtureParameters* start,
                      const Vector* weights) {
  ChainResult result;
  const double n = weights ? weights->sum() : static_cast<double>(x.n());
  const bool shared_cov = parse_model_code(spec.code).equal_covariance();
  Vector unit;
  if (!weights) {
    unit = Vector::Ones(x.n());
    weights = &unit;
  }

  try {
    Matrix z;
    MixtureParameters params;
    if (start) {
      params = *start;
    } else {
      z = one_hot(*partition, spec.K);
    }

    double prev_objective = kNegInf;
    for (int iter = 1; iter <= control.max_iter; ++iter) {
      if (start == nullptr || iter > 1) {
        // M-step (on the initial hard partition for iter 1).
        SufficientStats stats = compute_stats_weighted(x.values, z, *weights);
        if (!prior && stats.nk.minCoeff() < kEmptyClusterEps)
          throw SingularityError(spec.code + ": component collapsed to zero weight");
        params = prior ? map_mstep(stats, *prior, spec.code, n)
                       : ml_mstep(stats, spec.code, n);
      }

      EStepResult es = e_step_weighted(x, params, *weights);
      z = es.z.z;
      double objective = es.loglik;
      if (prior) objective += log_prior(params, *prior, shared_cov);

      result.params = params;
      result.z = es.z;
      result.loglik = es.loglik;
      result.objective = objective;
      result.iterations = iter;
      if (iter > 1 &&
          std::abs(objective - prev_objective) / (1.0 + std::abs(objective)) <
              control.rel_tol) {
        result.converged = true;
        break;
      }
      prev_objective = objective;
    }
    result.failed = false;
  } catch (const SingularityError& e) {
    result.failed = true;
    result.failure = e.what();
  }
  return result;
}

FitResult finalize(const DataMatrix& x, const ModelSpec& spec,
                   const std::optional<PriorSpec>& prior, const EmControl& control,
                   ChainResult chain) {
  FitResult fit;
  fit.model = spec;
  fit.params = std::move(chain.params);
  fit.z = std::move(chain.z);
  fit.loglik = chain.loglik;
  fit.iterations = chain.iterations;
  fit.converged = chain.converged;
  fit.prior_used = prior;
  fit.seed = control.seed;
  fit.df = count_free_params(spec.code, static_cast<int>(x.d()), spec.K);
  const double n = static_cast<double>(x.n());
  fit.bic = 2.0 * fit.loglik - fit.df * std::log(n);
  fit.classification = map_classify(fit.z);
  double entropy_term = 0.0;
  for (Eigen::Index i = 0; i < fit.z.n(); ++i) {
    const double p = fit.z.z(i, fit.classification[static_cast<std::size_t>(i)] - 1);
    if (p <= 0.0) throw SingularityError("assigned-cluster probability is zero");
    entropy_term += std::log(p);
  }
  fit.icl = fit.bic + 2.0 * entropy_term;
  return fit;
}

}  // namespace

Matrix log_density_components(const DataMatrix& x, const MixtureParameters& params) {
  const auto n = x.n();
  const auto d = x.d();
  const int K = params.K();
  if (params.mean.rows() != d)
    throw InvalidInput("parameter dimension does not match data dimension");

  Matrix out(n, K);
  const double base = -0.5 * static_cast<double>(d) * std::log(2.0 * M_PI);
  for (int k = 0; k < K; ++k) {
    const Matrix& sigma = params.cov[k];
    if (!is_positive_definite(sigma))
      throw SingularityError("component " + std::to_string(k + 1) +
                             " covariance is not positive definite");
    Eigen::LLT<Matrix> llt(sigma);
    if (llt.info() != Eigen::Success)
      throw SingularityError("component " + std::to_string(k + 1) +
                             " covariance Cholesky failed");
    double logdet = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
    const double log_pi_k = params.pro[k] > 0.0 ? std::log(params.pro[k]) : kNegInf;

    Matrix centered = x.values.rowwise() - params.mean.col(k).transpose();
    // rows of solve(L, centered^T) give the whitened residuals
    Matrix whitened = llt.matrixL().solve(centered.transpose());
    Vector quad = whitened.colwise().squaredNorm();
    out.col(k) = (base - 0.5 * logdet - 0.5 * quad.array() + log_pi_k).matrix();
  }
  return out;
}

EStepResult e_step(const DataMatrix& x, const MixtureParameters& params) {
  Vector unit = Vector::Ones(x.n());
  return e_step_weighted(x, params, unit);
}

EStepResult e_step_weighted(const DataMatrix& x, const MixtureParameters& params,
                            const Vector& case_weights) {
  Matrix logdens = log_density_components(x, params);
  const auto n = logdens.rows();
  const int K = static_cast<int>(logdens.cols());

  EStepResult result;
  result.z.z = Matrix(n, K);
  result.loglik = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double m = logdens.row(i).maxCoeff();
    if (!std::isfinite(m))
      throw SingularityError("observation " + std::to_string(i + 1) +
                             " has zero density under every component");
    const double sum_exp = (logdens.row(i).array() - m).exp().sum();
    const double lse = m + std::log(sum_exp);
    result.z.z.row(i) = (logdens.row(i).array() - lse).exp();
    result.z.z.row(i) /= result.z.z.row(i).sum();
    result.loglik += case_weights[i] * lse;
  }
  return result;
}

std::vector<int> initialize(const DataMatrix& x, int K, const EmControl& control,
                            int restart_index) {
  const auto n = x.n();
  if (K > n) throw InvalidInput("cannot initialize more clusters than observations");
  if (K < 1) throw InvalidInput("K must be at least 1");
  if (K == 1) return std::vector<int>(static_cast<std::size_t>(n), 0);

  const std::uint64_t stream =
      (static_cast<std::uint64_t>(K) << 32) ^ static_cast<std::uint64_t>(restart_index);
  std::mt19937_64 rng = make_engine(control.seed, stream);

  if (control.init_strategy == InitStrategy::GivenPartition) {
    if (static_cast<Eigen::Index>(control.given_partition.size()) != n)
      throw InvalidInput("given partition length does not match n");
    return control.given_partition;
  }

  if (control.init_strategy == InitStrategy::RandomPartition) {
    std::vector<int> labels(static_cast<std::size_t>(n));
    std::uniform_int_distribution<int> pick(0, K - 1);
    for (;;) {
      std::vector<int> counts(K, 0);
      for (auto& l : labels) {
        l = pick(rng);
        ++counts[l];
      }
      if (*std::min_element(counts.begin(), counts.end()) > 0) return labels;
    }
  }

  // kmeans++: D^2-weighted seeding followed by at most 25 Lloyd rounds.
  Matrix centers(x.d(), K);
  std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
  centers.col(0) = x.values.row(first(rng));
  Vector dist2 = (x.values.rowwise() - centers.col(0).transpose()).rowwise().squaredNorm();
  for (int k = 1; k < K; ++k) {
    const double total = dist2.sum();
    Eigen::Index chosen = 0;
    if (total > 0) {
      std::uniform_real_distribution<double> u(0.0, total);
      double target = u(rng);
      double acc = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += dist2[i];
        if (acc >= target) {
          chosen = i;
          break;
        }
      }
    } else {
      chosen = first(rng);
    }
    centers.col(k) = x.values.row(chosen);
    dist2 = dist2.cwiseMin(
        (x.values.rowwise() - centers.col(k).transpose()).rowwise().squaredNorm());
  }

  std::vector<int> labels(static_cast<std::size_t>(n), 0);
  for (int round = 0; round < 25; ++round) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double best_dist = (x.values.row(i).transpose() - centers.col(0)).squaredNorm();
      for (int k = 1; k < K; ++k) {
        const double dist = (x.values.row(i).transpose() - centers.col(k)).squaredNorm();
        if (dist < best_dist) {
          best_dist = dist;
          best = k;
        }
      }
      if (labels[static_cast<std::size_t>(i)] != best) {
        labels[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
    }
    // recompute centers; reseed an emptied cluster with the point
    // farthest from its current center
    std::vector<int> counts(K, 0);
    Matrix sums = Matrix::Zero(x.d(), K);
    for (Eigen::Index i = 0; i < n; ++i) {
      const int k = labels[static_cast<std::size_t>(i)];
      ++counts[k];
      sums.col(k) += x.values.row(i).transpose();
    }
    for (int k = 0; k < K; ++k) {
      if (counts[k] > 0) {
        centers.col(k) = sums.col(k) / counts[k];
      } else {
        Eigen::Index farthest = 0;
        double max_dist = -1.0;
        for (Eigen::Index i = 0; i < n; ++i) {
          const int c = labels[static_cast<std::size_t>(i)];
          const double dist = (x.values.row(i).transpose() - centers.col(c)).squaredNorm();
          if (dist > max_dist && counts[c] > 1) {
            max_dist = dist;
            farthest = i;
          }
        }
        --counts[labels[static_cast<std::size_t>(farthest)]];
        labels[static_cast<std::size_t>(farthest)] = k;
        counts[k] = 1;
        centers.col(k) = x.values.row(farthest);
        changed = true;
      }
    }
    if (!changed && round > 0) break;
  }
  return labels;
}

std::vector<int> map_classify(const Responsibilities& z) {
  std::vector<int> labels(static_cast<std::size_t>(z.n()));
  for (Eigen::Index i = 0; i < z.n(); ++i) {
    int best = 0;
    for (int k = 1; k < z.K(); ++k)
      if (z.z(i, k) > z.z(i, best)) best = k;
    labels[static_cast<std::size_t>(i)] = best + 1;
  }
  return labels;
}

FitResult fit(const DataMatrix& x, const ModelSpec& spec,
              const std::optional<PriorSpec>& prior, const EmControl& control) {
  x.validate();
  const ModelConstraints mc = parse_model_code(spec.code);
  if (!mc.fitted)
    throw InvalidInput("model " + spec.code + " is not in the fitted set");
  if (spec.K < 1 || spec.K > x.n())
    throw InvalidInput("K must be in [1, n]");
  if (control.rel_tol <= 0 || control.max_iter < 1 || control.n_restarts < 1)
    throw InvalidInput("invalid EM control settings");

  const int n_restarts = spec.K == 1 ? 1 : control.n_restarts;
  std::vector<ChainResult> chains(static_cast<std::size_t>(n_restarts));
  parallel_for(n_restarts, [&](int r) {
    std::vector<int> partition = initialize(x, spec.K, control, r);
    chains[static_cast<std::size_t>(r)] =
        run_chain(x, spec, prior, control, &partition, nullptr, nullptr);
  });

  int best = -1;
  for (int r = 0; r < n_restarts; ++r) {
    const auto& chain = chains[static_cast<std::size_t>(r)];
    if (chain.failed) continue;
    if (best < 0 || chain.objective > chains[static_cast<std::size_t>(best)].objective)
      best = r;
  }
  if (best < 0) {
    std::string detail = chains[0].failure;
    throw SingularityError("all " + std::to_string(n_restarts) +
                           " EM chains degenerated (" + detail +
                           "); a conjugate prior (--prior default) usually fixes this");
  }
  return finalize(x, spec, prior, control, std::move(chains[static_cast<std::size_t>(best)]));
}

FitResult fit_from(const DataMatrix& x, const ModelSpec& spec,
                   const std::optional<PriorSpec>& prior, const MixtureParameters& start,
                   const EmControl& control, const Vector* case_weights) {
  x.validate();
  ChainResult chain =
      run_chain(x, spec, prior, control, nullptr, &start, case_weights);
  if (chain.failed)
    throw SingularityError("EM chain degenerated: " + chain.failure);
  return finalize(x, spec, prior, control, std::move(chain));
}

}  // namespace parsimix
