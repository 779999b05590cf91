#include "parsimix/bootstrap.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>

#include "parsimix/errors.hpp"
#include "parsimix/parallel.hpp"
#include "parsimix/rng.hpp"

namespace parsimix {

BootType parse_boot_type(const std::string& s) {
  if (s == "bs") return BootType::Bs;
  if (s == "pb") return BootType::Pb;
  if (s == "wlbs") return BootType::Wlbs;
  throw InvalidInput("unknown bootstrap type \"" + s + "\"; valid: bs, pb, wlbs");
}

std::string boot_type_name(BootType t) {
  switch (t) {
    case BootType::Bs: return "bs";
    case BootType::Pb: return "pb";
    case BootType::Wlbs: return "wlbs";
  }
  return "bs";
}

Resample resample(const DataMatrix& x, const FitResult& fit, BootType type,
                  std::mt19937_64& rng) {
  const auto n = x.n();
  const auto d = x.d();
  Resample out;

  switch (type) {
    case BootType::Bs: {
      out.rows = Matrix(n, d);
      std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
      for (Eigen::Index i = 0; i < n; ++i) out.rows.row(i) = x.values.row(pick(rng));
      break;
    }
    case BootType::Pb: {
      const MixtureParameters& params = fit.params;
      const int K = params.K();
      std::vector<Matrix> chol(static_cast<std::size_t>(K));
      for (int k = 0; k < K; ++k) {
        Eigen::LLT<Matrix> llt(params.cov[static_cast<std::size_t>(k)]);
        if (llt.info() != Eigen::Success)
          throw SingularityError("parametric bootstrap: covariance not PD");
        chol[static_cast<std::size_t>(k)] = llt.matrixL();
      }
      std::vector<double> cumulative(static_cast<std::size_t>(K));
      double acc = 0.0;
      for (int k = 0; k < K; ++k) {
        acc += params.pro[k];
        cumulative[static_cast<std::size_t>(k)] = acc;
      }
      std::uniform_real_distribution<double> u(0.0, 1.0);
      std::normal_distribution<double> gauss(0.0, 1.0);
      out.rows = Matrix(n, d);
      for (Eigen::Index i = 0; i < n; ++i) {
        const double target = u(rng) * acc;
        int k = 0;
        while (k + 1 < K && cumulative[static_cast<std::size_t>(k)] < target) ++k;
        Vector noise(d);
        for (Eigen::Index j = 0; j < d; ++j) noise[j] = gauss(rng);
        out.rows.row(i) =
            (params.mean.col(k) + chol[static_cast<std::size_t>(k)] * noise).transpose();
      }
      break;
    }
    case BootType::Wlbs: {
      // flat Dirichlet via unit exponentials, scaled to sum n
      std::exponential_distribution<double> expo(1.0);
      out.weights = Vector(n);
      double total = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        out.weights[i] = expo(rng);
        total += out.weights[i];
      }
      out.weights *= static_cast<double>(n) / total;
      break;
    }
  }
  return out;
}

BootstrapRun bootstrap_fit(const DataMatrix& x, const FitResult& fit, BootType type,
                           int nboot, std::uint64_t seed) {
  if (nboot < 1) throw InvalidInput("nboot must be >= 1");
  if (!fit.converged)
    throw InvalidInput("bootstrap requires a converged reference fit");

  BootstrapRun run;
  run.type = type;
  run.nboot = nboot;
  run.model = fit.model;
  run.reference = fit.params;
  run.seed = seed;
  run.replicates.resize(static_cast<std::size_t>(nboot));

  EmControl control;
  control.seed = seed;

  std::vector<char> ok(static_cast<std::size_t>(nboot), 0);
  parallel_for(nboot, [&](int b) {
    // per-replicate stream split from the master seed
    std::mt19937_64 rng = make_engine(seed, static_cast<std::uint64_t>(b));
    try {
      Resample draw = resample(x, fit, type, rng);
      FitResult replicate;
      if (type == BootType::Wlbs) {
        replicate = fit_from(x, fit.model, fit.prior_used, fit.params, control,
                             &draw.weights);
      } else {
        DataMatrix sample{std::move(draw.rows), x.column_names};
        replicate = fit_from(sample, fit.model, fit.prior_used, fit.params, control);
      }
      replicate = align_labels(fit.params, std::move(replicate));
      run.replicates[static_cast<std::size_t>(b)] = std::move(replicate.params);
      ok[static_cast<std::size_t>(b)] = 1;
    } catch (const SingularityError&) {
      ok[static_cast<std::size_t>(b)] = 0;
    }
  });

  // drop failed slots, preserving order
  std::vector<MixtureParameters> kept;
  kept.reserve(static_cast<std::size_t>(nboot));
  for (int b = 0; b < nboot; ++b)
    if (ok[static_cast<std::size_t>(b)])
      kept.push_back(std::move(run.replicates[static_cast<std::size_t>(b)]));
  run.n_failed = nboot - static_cast<int>(kept.size());
  run.replicates = std::move(kept);

  if (run.n_failed > nboot / 5)
    throw SingularityError("bootstrap: " + std::to_string(run.n_failed) + " of " +
                           std::to_string(nboot) +
                           " replicates failed; the reference fit is too fragile");
  return run;
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw InvalidInput("quantile of empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = h - std::floor(h);
  return values[lo] + frac * (values[hi] - values[lo]);
}

CiTable percentile_ci(const BootstrapRun& run, double level) {
  if (run.replicates.size() < 2)
    throw InvalidInput("percentile_ci needs at least 2 successful replicates");
  const double alpha = (1.0 - level) / 2.0;
  const int K = run.reference.K();
  const int d = static_cast<int>(run.reference.d());

  CiTable ci;
  ci.level = level;
  ci.pro = Matrix(2, K);
  ci.mean_lo = Matrix(d, K);
  ci.mean_hi = Matrix(d, K);
  ci.var_lo = Matrix(d, K);
  ci.var_hi = Matrix(d, K);

  std::vector<double> draws(run.replicates.size());
  for (int k = 0; k < K; ++k) {
    for (std::size_t b = 0; b < run.replicates.size(); ++b) draws[b] = run.replicates[b].pro[k];
    ci.pro(0, k) = quantile(draws, alpha);
    ci.pro(1, k) = quantile(draws, 1.0 - alpha);
    for (int j = 0; j < d; ++j) {
      for (std::size_t b = 0; b < run.replicates.size(); ++b)
        draws[b] = run.replicates[b].mean(j, k);
      ci.mean_lo(j, k) = quantile(draws, alpha);
      ci.mean_hi(j, k) = quantile(draws, 1.0 - alpha);
      for (std::size_t b = 0; b < run.replicates.size(); ++b)
        draws[b] = run.replicates[b].cov[static_cast<std::size_t>(k)](j, j);
      ci.var_lo(j, k) = quantile(draws, alpha);
      ci.var_hi(j, k) = quantile(draws, 1.0 - alpha);
    }
  }
  return ci;
}

}  // namespace parsimix
