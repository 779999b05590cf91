#include "parsimix/selection.hpp"

#include <algorithm>
#include <cmath>

#include "parsimix/errors.hpp"
#include "parsimix/parallel.hpp"

namespace parsimix {

double bic(double loglik, int df, std::size_t n) {
  if (n < 1) throw InvalidInput("bic requires n >= 1");
  return 2.0 * loglik - static_cast<double>(df) * std::log(static_cast<double>(n));
}

double icl(double bic_value, const Responsibilities& z, const std::vector<int>& labels) {
  if (static_cast<Eigen::Index>(labels.size()) != z.n())
    throw InvalidInput("labels length does not match responsibilities");
  double entropy_term = 0.0;
  for (Eigen::Index i = 0; i < z.n(); ++i) {
    const int k = labels[static_cast<std::size_t>(i)] - 1;
    if (k < 0 || k >= z.K()) throw InvalidInput("label out of range");
    const double p = z.z(i, k);
    if (p <= 0.0)
      throw InvalidInput("assigned-cluster probability is zero at observation " +
                         std::to_string(i + 1));
    entropy_term += std::log(p);
  }
  return bic_value + 2.0 * entropy_term;
}

SelectionTable grid_search(const DataMatrix& x, const std::vector<std::string>& codes,
                           int k_min, int k_max, const std::optional<PriorSpec>& prior,
                           const EmControl& control, bool include_nonconverged) {
  x.validate();
  if (k_min < 1 || k_max < k_min || k_max > x.n())
    throw InvalidInput("K range must satisfy 1 <= k_min <= k_max <= n");

  struct Cell {
    SelectionEntry entry;
    std::optional<FitResult> fit;
  };

  // named-only codes get table rows but no fit
  std::vector<std::pair<std::string, int>> fit_cells;
  std::vector<SelectionEntry> named_only;
  for (const auto& code : codes) {
    const ModelConstraints mc = parse_model_code(code);
    for (int K = k_min; K <= k_max; ++K) {
      if (mc.fitted) {
        fit_cells.emplace_back(code, K);
      } else {
        SelectionEntry entry;
        entry.code = code;
        entry.K = K;
        entry.available = false;
        entry.note = "named-only";
        named_only.push_back(entry);
      }
    }
  }

  std::vector<Cell> cells(fit_cells.size());
  parallel_for(static_cast<int>(fit_cells.size()), [&](int i) {
    const auto& [code, K] = fit_cells[static_cast<std::size_t>(i)];
    Cell& cell = cells[static_cast<std::size_t>(i)];
    cell.entry.code = code;
    cell.entry.K = K;
    std::optional<PriorSpec> cell_prior = prior;
    try {
      ModelSpec spec{code, K};
      FitResult fit_result = fit(x, spec, cell_prior, control);
      cell.entry.converged = fit_result.converged;
      cell.entry.bic = fit_result.bic;
      cell.entry.icl = fit_result.icl;
      cell.entry.loglik = fit_result.loglik;
      cell.entry.df = fit_result.df;
      cell.entry.available = fit_result.converged || include_nonconverged;
      if (!cell.entry.available) cell.entry.note = "did not converge";
      cell.fit = std::move(fit_result);
    } catch (const std::exception& e) {
      cell.entry.available = false;
      cell.entry.note = e.what();
    }
  });

  SelectionTable table;
  for (auto& cell : cells) table.entries.push_back(cell.entry);
  for (auto& entry : named_only) table.entries.push_back(entry);

  // rank: available first by BIC descending, then the rest; ties broken
  // by (code, K) so the result does not depend on input order
  std::stable_sort(table.entries.begin(), table.entries.end(),
                   [](const SelectionEntry& a, const SelectionEntry& b) {
                     if (a.available != b.available) return a.available;
                     if (a.available && a.bic != b.bic) return a.bic > b.bic;
                     if (a.code != b.code) return a.code < b.code;
                     return a.K < b.K;
                   });

  if (!table.entries.empty() && table.entries.front().available) {
    table.best_index = 0;
    const double best_bic = table.entries[0].bic;
    for (std::size_t i = 0; i < table.entries.size() && i < 3; ++i)
      if (table.entries[i].available)
        table.bic_diffs.push_back(table.entries[i].bic - best_bic);
    for (auto& cell : cells) {
      if (cell.fit && cell.entry.code == table.entries[0].code &&
          cell.entry.K == table.entries[0].K) {
        table.best_fit = std::move(cell.fit);
        break;
      }
    }
  }
  return table;
}

std::vector<int> small_class_warning(const FitResult& result, double threshold) {
  const int K = result.model.K;
  std::vector<int> counts(static_cast<std::size_t>(K), 0);
  for (int label : result.classification) ++counts[static_cast<std::size_t>(label - 1)];
  const double n = static_cast<double>(result.classification.size());
  std::vector<int> flagged;
  for (int k = 0; k < K; ++k)
    if (static_cast<double>(counts[static_cast<std::size_t>(k)]) / n < threshold)
      flagged.push_back(k + 1);
  return flagged;
}

}  // namespace parsimix
