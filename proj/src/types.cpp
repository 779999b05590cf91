#include "parsimix/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "parsimix/errors.hpp"

namespace parsimix {

void DataMatrix::validate() const {
  if (values.rows() < 1 || values.cols() < 1)
    throw InvalidInput("data matrix must have at least one row and one column");
  if (static_cast<Eigen::Index>(column_names.size()) != values.cols())
    throw InvalidInput("column name count does not match column count");
  if (!values.allFinite())
    throw InvalidInput("data matrix contains non-finite entries");
}

namespace {

double permutation_cost(const Matrix& ref, const Matrix& cand, const std::vector<int>& perm) {
  double total = 0.0;
  for (int k = 0; k < static_cast<int>(perm.size()); ++k)
    total += (ref.col(k) - cand.col(perm[k])).norm();
  return total;
}

}  // namespace

std::vector<int> match_components(const Matrix& reference_means, const Matrix& candidate_means) {
  if (reference_means.rows() != candidate_means.rows() ||
      reference_means.cols() != candidate_means.cols())
    throw InvalidInput("component matching requires equal K and d");
  const int K = static_cast<int>(reference_means.cols());

  if (K <= 8) {
    std::vector<int> perm(K), best(K);
    std::iota(perm.begin(), perm.end(), 0);
    best = perm;
    double best_cost = permutation_cost(reference_means, candidate_means, perm);
    while (std::next_permutation(perm.begin(), perm.end())) {
      double cost = permutation_cost(reference_means, candidate_means, perm);
      if (cost < best_cost) {
        best_cost = cost;
        best = perm;
      }
    }
    return best;
  }

  // K > 8: greedy nearest-mean matching.
  std::vector<int> perm(K, -1);
  std::vector<bool> used(K, false);
  for (int k = 0; k < K; ++k) {
    double best_dist = std::numeric_limits<double>::infinity();
    int best_j = -1;
    for (int j = 0; j < K; ++j) {
      if (used[j]) continue;
      double dist = (reference_means.col(k) - candidate_means.col(j)).norm();
      if (dist < best_dist) {
        best_dist = dist;
        best_j = j;
      }
    }
    perm[k] = best_j;
    used[best_j] = true;
  }
  return perm;
}

MixtureParameters permute_components(const MixtureParameters& params,
                                     const std::vector<int>& perm) {
  const int K = params.K();
  MixtureParameters out;
  out.pro = Vector(K);
  out.mean = Matrix(params.mean.rows(), K);
  out.cov.resize(K);
  for (int k = 0; k < K; ++k) {
    out.pro[k] = params.pro[perm[k]];
    out.mean.col(k) = params.mean.col(perm[k]);
    out.cov[k] = params.cov[perm[k]];
  }
  return out;
}

FitResult align_labels(const MixtureParameters& reference, FitResult candidate) {
  const std::vector<int> perm = match_components(reference.mean, candidate.params.mean);
  const int K = static_cast<int>(perm.size());

  candidate.params = permute_components(candidate.params, perm);

  if (candidate.z.z.size() > 0) {
    Matrix z(candidate.z.z.rows(), K);
    for (int k = 0; k < K; ++k) z.col(k) = candidate.z.z.col(perm[k]);
    candidate.z.z = std::move(z);
  }

  // perm maps new slot -> old slot; relabel old label j to the slot now holding it.
  std::vector<int> inverse(K);
  for (int k = 0; k < K; ++k) inverse[perm[k]] = k;
  for (int& label : candidate.classification) label = inverse[label - 1] + 1;

  return candidate;
}

}  // namespace parsimix
