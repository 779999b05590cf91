#include "parsimix/covmodels.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "parsimix/errors.hpp"

namespace parsimix {

namespace {

constexpr double kCountEps = 1e-10;
constexpr double kInnerTol = 1e-8;
constexpr int kInnerMaxIter = 100;

Axis axis_from_letter(char c) {
  switch (c) {
    case 'E': return Axis::Equal;
    case 'V': return Axis::Varying;
    case 'I': return Axis::Identity;
    default: throw InvalidInput(std::string("invalid constraint letter '") + c + "'");
  }
}

[[noreturn]] void throw_degenerate(const std::string& code, int k, const std::string& what) {
  std::ostringstream msg;
  msg << code << " M-step: component " << (k + 1) << " is degenerate (" << what << ")";
  throw SingularityError(msg.str());
}

void check_counts(const std::string& code, const SufficientStats& stats) {
  for (int k = 0; k < stats.K(); ++k)
    if (stats.nk[k] < kCountEps) throw_degenerate(code, k, "effective count ~ 0");
}

// Eigendecomposition sorted by decreasing eigenvalue with deterministic
// sign and tie order: sign fixed so the first entry above tolerance is
// positive; equal eigenvalues are ordered by the lexicographically
// smaller eigenvector.
void sorted_eigs(const Matrix& sym, Vector& values, Matrix& vectors) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
  if (solver.info() != Eigen::Success)
    throw SingularityError("eigendecomposition failed");
  const int d = static_cast<int>(sym.rows());
  Vector raw = solver.eigenvalues();
  Matrix vecs = solver.eigenvectors();

  const double sign_tol = 1e-12;
  for (int j = 0; j < d; ++j) {
    for (int i = 0; i < d; ++i) {
      if (std::abs(vecs(i, j)) > sign_tol) {
        if (vecs(i, j) < 0) vecs.col(j) = -vecs.col(j);
        break;
      }
    }
  }

  std::vector<int> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (raw[a] != raw[b]) return raw[a] > raw[b];
    return std::lexicographical_compare(vecs.col(a).data(), vecs.col(a).data() + d,
                                        vecs.col(b).data(), vecs.col(b).data() + d);
  });

  values = Vector(d);
  vectors = Matrix(d, d);
  for (int j = 0; j < d; ++j) {
    values[j] = raw[order[j]];
    vectors.col(j) = vecs.col(order[j]);
  }
}

Vector diag_of(const Matrix& m) { return m.diagonal(); }

double geometric_mean(const Vector& positive) {
  double acc = 0.0;
  for (double v : positive) acc += std::log(v);
  return std::exp(acc / static_cast<double>(positive.size()));
}

}  // namespace

bool ModelConstraints::equal_covariance() const {
  return volume != Axis::Varying && shape != Axis::Varying && orientation != Axis::Varying;
}

const std::vector<std::string>& fitted_model_codes() {
  static const std::vector<std::string> codes = {"EII", "VII", "EEI", "VEI", "EVI",
                                                 "VVI", "EEE", "EEV", "VEV", "VVV"};
  return codes;
}

const std::vector<std::string>& all_model_codes() {
  static const std::vector<std::string> codes = {"EII", "VII", "EEI", "VEI", "EVI",
                                                 "VVI", "EEE", "EEV", "VEV", "VVV",
                                                 "EVE", "VVE", "VEE", "EVV"};
  return codes;
}

ModelConstraints parse_model_code(const std::string& code) {
  const auto& family = all_model_codes();
  if (std::find(family.begin(), family.end(), code) == family.end()) {
    std::ostringstream msg;
    msg << "unknown model code \"" << code << "\"; valid codes:";
    for (const auto& c : family) msg << " " << c;
    throw InvalidInput(msg.str());
  }
  ModelConstraints mc;
  mc.code = code;
  mc.volume = axis_from_letter(code[0]);
  mc.shape = axis_from_letter(code[1]);
  mc.orientation = axis_from_letter(code[2]);
  const auto& fitted = fitted_model_codes();
  mc.fitted = std::find(fitted.begin(), fitted.end(), code) != fitted.end();
  return mc;
}

int count_free_params(const std::string& code, int d, int K) {
  if (d < 1 || K < 1) throw InvalidInput("count_free_params requires d >= 1 and K >= 1");
  const ModelConstraints mc = parse_model_code(code);

  auto axis_count = [K](Axis a, int per_component) {
    switch (a) {
      case Axis::Equal: return per_component;
      case Axis::Varying: return K * per_component;
      case Axis::Identity: return 0;
    }
    return 0;
  };

  const int volume = axis_count(mc.volume, 1);
  const int shape = axis_count(mc.shape, d - 1);
  const int orientation = axis_count(mc.orientation, d * (d - 1) / 2);
  return (K - 1) + K * d + volume + shape + orientation;
}

bool is_positive_definite(const Matrix& sigma) {
  if (sigma.rows() != sigma.cols()) return false;
  if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() >
      1e-8 * std::max(1.0, sigma.cwiseAbs().maxCoeff()))
    return false;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sigma, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) return false;
  const double d = static_cast<double>(sigma.rows());
  return solver.eigenvalues().minCoeff() > 1e-10 * sigma.trace() / d;
}

CovDecomposition decompose_covariance(const Matrix& sigma) {
  if (!is_positive_definite(sigma))
    throw SingularityError("decompose_covariance: input is not symmetric positive definite");
  CovDecomposition dec;
  Vector values;
  sorted_eigs(sigma, values, dec.orient);
  dec.lambda = geometric_mean(values);
  dec.delta = values / dec.lambda;
  return dec;
}

Matrix compose_covariance(const CovDecomposition& dec) {
  return dec.lambda * dec.orient * dec.delta.asDiagonal() * dec.orient.transpose();
}

SufficientStats compute_stats(const Matrix& x, const Matrix& z) {
  Vector unit = Vector::Ones(x.rows());
  return compute_stats_weighted(x, z, unit);
}

SufficientStats compute_stats_weighted(const Matrix& x, const Matrix& z,
                                       const Vector& case_weights) {
  const int n = static_cast<int>(x.rows());
  const int d = static_cast<int>(x.cols());
  const int K = static_cast<int>(z.cols());
  SufficientStats stats;
  stats.nk = Vector::Zero(K);
  stats.xbar = Matrix::Zero(d, K);
  stats.W.assign(K, Matrix::Zero(d, d));

  Matrix wz = case_weights.asDiagonal() * z;  // n x K
  stats.nk = wz.colwise().sum();
  for (int k = 0; k < K; ++k) {
    if (stats.nk[k] > 0) stats.xbar.col(k) = (x.transpose() * wz.col(k)) / stats.nk[k];
    Matrix centered = x.rowwise() - stats.xbar.col(k).transpose();
    stats.W[k] = centered.transpose() * (wz.col(k).asDiagonal() * centered);
    stats.W[k] = 0.5 * (stats.W[k] + stats.W[k].transpose());
  }
  (void)n;
  return stats;
}

namespace {

// Alternating fixed point shared by VEI (diagonal scatters) and VEV
// (per-component eigenvalue scatters): Sigma_k = lambda_k * diag(shape)
// with per-component "counts" m_k. B_k must be the diagonal of the
// relevant scatter in the shape basis.
void varying_volume_equal_shape(const std::string& code, const std::vector<Vector>& B,
                                const Vector& m, Vector& lambda, Vector& shape) {
  const int K = static_cast<int>(B.size());
  const int d = static_cast<int>(B[0].size());

  shape = Vector::Ones(d);
  lambda = Vector(K);
  double prev = 0.0;
  for (int iter = 0; iter < kInnerMaxIter; ++iter) {
    for (int k = 0; k < K; ++k) {
      double tr = (B[k].array() / shape.array()).sum();
      if (tr <= 0) throw_degenerate(code, k, "trace <= 0");
      lambda[k] = tr / (d * m[k]);
    }
    Vector pooled = Vector::Zero(d);
    for (int k = 0; k < K; ++k) pooled += B[k] / lambda[k];
    if (pooled.minCoeff() <= 0) throw_degenerate(code, 0, "shape entry <= 0");
    shape = pooled / geometric_mean(pooled);

    double crit = 0.0;
    for (int k = 0; k < K; ++k)
      crit += (B[k].array() / shape.array()).sum() / lambda[k] +
              d * m[k] * std::log(lambda[k]);
    if (iter > 0 && std::abs(crit - prev) < kInnerTol * (1.0 + std::abs(crit))) break;
    prev = crit;
  }
}

}  // namespace

std::vector<Matrix> mstep_covariance(const std::string& code, const SufficientStats& stats,
                                     double n) {
  const ModelConstraints mc = parse_model_code(code);
  if (!mc.fitted)
    throw InvalidInput("model " + code + " has no closed-form M-step (named-only code)");
  check_counts(code, stats);

  const int K = stats.K();
  const int d = static_cast<int>(stats.d());
  std::vector<Matrix> out(K, Matrix::Zero(d, d));

  if (code == "EII") {
    double tr = 0.0;
    for (const auto& W : stats.W) tr += W.trace();
    if (tr <= 0) throw_degenerate(code, 0, "pooled trace <= 0");
    const double sigsq = tr / (n * d);
    for (auto& S : out) S = sigsq * Matrix::Identity(d, d);
  } else if (code == "VII") {
    for (int k = 0; k < K; ++k) {
      const double tr = stats.W[k].trace();
      if (tr <= 0) throw_degenerate(code, k, "trace <= 0");
      out[k] = (tr / (stats.nk[k] * d)) * Matrix::Identity(d, d);
    }
  } else if (code == "EEI") {
    Vector pooled = Vector::Zero(d);
    for (const auto& W : stats.W) pooled += diag_of(W);
    if (pooled.minCoeff() <= 0) throw_degenerate(code, 0, "pooled diagonal entry <= 0");
    for (auto& S : out) S = (pooled / n).asDiagonal();
  } else if (code == "VEI") {
    std::vector<Vector> B(K);
    for (int k = 0; k < K; ++k) {
      B[k] = diag_of(stats.W[k]);
      if (B[k].minCoeff() <= 0) throw_degenerate(code, k, "diagonal entry <= 0");
    }
    Vector lambda, shape;
    varying_volume_equal_shape(code, B, stats.nk, lambda, shape);
    for (int k = 0; k < K; ++k) out[k] = (lambda[k] * shape).asDiagonal();
  } else if (code == "EVI") {
    double volume_num = 0.0;
    std::vector<Vector> shape(K);
    for (int k = 0; k < K; ++k) {
      Vector diag = diag_of(stats.W[k]);
      if (diag.minCoeff() <= 0) throw_degenerate(code, k, "diagonal entry <= 0");
      const double gm = geometric_mean(diag);
      shape[k] = diag / gm;
      volume_num += gm;
    }
    const double lambda = volume_num / n;
    for (int k = 0; k < K; ++k) out[k] = (lambda * shape[k]).asDiagonal();
  } else if (code == "VVI") {
    for (int k = 0; k < K; ++k) {
      Vector diag = diag_of(stats.W[k]);
      if (diag.minCoeff() <= 0) throw_degenerate(code, k, "diagonal entry <= 0");
      out[k] = (diag / stats.nk[k]).asDiagonal();
    }
  } else if (code == "EEE") {
    Matrix pooled = Matrix::Zero(d, d);
    for (const auto& W : stats.W) pooled += W;
    Matrix S = pooled / n;
    if (!is_positive_definite(S)) throw_degenerate(code, 0, "pooled scatter not PD");
    for (auto& out_k : out) out_k = S;
  } else if (code == "EEV" || code == "VEV") {
    std::vector<Matrix> U(K);
    std::vector<Vector> omega(K);
    for (int k = 0; k < K; ++k) {
      sorted_eigs(stats.W[k], omega[k], U[k]);
      if (omega[k].minCoeff() <= 0) throw_degenerate(code, k, "scatter not PD");
    }
    if (code == "EEV") {
      Vector A = Vector::Zero(d);
      for (int k = 0; k < K; ++k) A += omega[k];
      A /= n;
      for (int k = 0; k < K; ++k)
        out[k] = U[k] * A.asDiagonal() * U[k].transpose();
    } else {
      Vector lambda, shape;
      varying_volume_equal_shape(code, omega, stats.nk, lambda, shape);
      for (int k = 0; k < K; ++k)
        out[k] = U[k] * (lambda[k] * shape).asDiagonal() * U[k].transpose();
    }
  } else {  // VVV
    for (int k = 0; k < K; ++k) {
      Matrix S = stats.W[k] / stats.nk[k];
      if (!is_positive_definite(S)) throw_degenerate(code, k, "scatter not PD");
      out[k] = S;
    }
  }

  for (auto& S : out) S = 0.5 * (S + S.transpose());
  return out;
}

}  // namespace parsimix
