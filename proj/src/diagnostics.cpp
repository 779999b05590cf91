#include "parsimix/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "parsimix/errors.hpp"

namespace parsimix {

namespace {

// 0 * log(0) = 0 by convention
double xlogx(double p) { return p > 0.0 ? p * std::log(p) : 0.0; }

}  // namespace

double entropy_total(const Responsibilities& z) {
  if (z.K() == 1) return 1.0;  // no uncertainty possible
  const auto n = z.n();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (int k = 0; k < z.K(); ++k) acc += xlogx(z.z(i, k));
  return 1.0 + acc / (static_cast<double>(n) * std::log(static_cast<double>(z.K())));
}

std::vector<double> entropy_contributions(const Responsibilities& z) {
  const auto n = z.n();
  std::vector<double> out(static_cast<std::size_t>(n), 1.0);
  if (z.K() == 1) return out;
  const double log_k = std::log(static_cast<double>(z.K()));
  for (Eigen::Index i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int k = 0; k < z.K(); ++k) acc += xlogx(z.z(i, k));
    out[static_cast<std::size_t>(i)] = 1.0 + acc / log_k;
  }
  return out;
}

std::vector<ClassSummary> summarize_by_class(const std::vector<double>& values,
                                             const std::vector<int>& labels, int K) {
  if (values.size() != labels.size())
    throw InvalidInput("values and labels must have equal length");
  std::vector<ClassSummary> out;
  for (int k = 1; k <= K; ++k) {
    ClassSummary s;
    s.label = k;
    s.min = std::numeric_limits<double>::infinity();
    s.max = -std::numeric_limits<double>::infinity();
    double sum = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (labels[i] != k) continue;
      ++s.count;
      sum += values[i];
      s.min = std::min(s.min, values[i]);
      s.max = std::max(s.max, values[i]);
    }
    if (s.count == 0) continue;  // empty class omitted
    s.mean = sum / s.count;
    double ss = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i)
      if (labels[i] == k) ss += (values[i] - s.mean) * (values[i] - s.mean);
    s.sd = s.count > 1 ? std::sqrt(ss / (s.count - 1)) : 0.0;
    out.push_back(s);
  }
  return out;
}

std::vector<ClassSummary> avepp(const Responsibilities& z, const std::vector<int>& labels) {
  if (static_cast<Eigen::Index>(labels.size()) != z.n())
    throw InvalidInput("labels length does not match responsibilities");
  std::vector<double> map_prob(labels.size());
  for (Eigen::Index i = 0; i < z.n(); ++i)
    map_prob[static_cast<std::size_t>(i)] = z.z.row(i).maxCoeff();
  return summarize_by_class(map_prob, labels, z.K());
}

DiagnosticsReport diagnose(const Responsibilities& z, const std::vector<int>& labels) {
  DiagnosticsReport report;
  report.k1_convention = (z.K() == 1);
  report.entropy_total = entropy_total(z);
  report.case_entropy = entropy_contributions(z);
  report.class_entropy_summary = summarize_by_class(report.case_entropy, labels, z.K());
  report.avepp_summary = avepp(z, labels);
  for (const auto& s : report.avepp_summary)
    if (s.mean < 0.8) report.avepp_flags.push_back(s.label);
  for (const auto& s : report.class_entropy_summary)
    if (s.mean < 0.6) report.entropy_flags.push_back(s.label);
  return report;
}

Histogram entropy_histogram(const std::vector<double>& values) {
  Histogram h;
  const int bins = 21;
  const double lo = 0.0, hi = 1.05;
  const double width = (hi - lo) / bins;
  h.edges.resize(bins + 1);
  for (int b = 0; b <= bins; ++b) h.edges[static_cast<std::size_t>(b)] = lo + b * width;
  h.counts.assign(bins, 0);
  for (double v : values) {
    int b = static_cast<int>((v - lo) / width);
    b = std::clamp(b, 0, bins - 1);
    ++h.counts[static_cast<std::size_t>(b)];
  }
  return h;
}

}  // namespace parsimix
