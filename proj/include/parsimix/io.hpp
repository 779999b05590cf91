#ifndef PARSIMIX_IO_HPP
#define PARSIMIX_IO_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "parsimix/bootstrap.hpp"
#include "parsimix/diagnostics.hpp"
#include "parsimix/selection.hpp"
#include "parsimix/types.hpp"

namespace parsimix {

struct RunConfig {
  std::string input;  // path or http(s) URL
  char sep = ',';
  std::vector<std::string> columns;            // empty = all columns
  std::map<std::string, std::string> renames;  // old -> new
  std::vector<std::string> model_codes;        // empty = fitted set
  int k_min = 1;
  int k_max = 9;
  bool use_prior = true;
  double prior_kappa = 0.1;
  double prior_dof = -1.0;        // < 0: default d + 2
  double prior_scale_mult = 1.0;  // multiplies lambda_p
  std::uint64_t seed = 0;
  std::string output_dir = ".";
  std::string format = "both";  // json | csv | both
};

// Parses delimited text (local file or URL), applies column selection
// and renames, rejects non-numeric or missing cells with row-numbered
// errors.
DataMatrix ingest(const RunConfig& config);
DataMatrix parse_delimited(const std::string& text, char sep,
                           const std::vector<std::string>& columns,
                           const std::map<std::string, std::string>& renames);

struct ColumnSummary {
  std::string name;
  std::size_t n = 0;
  std::size_t n_distinct = 0;
  double mean = 0.0, sd = 0.0, min = 0.0, median = 0.0, max = 0.0;
};

std::vector<ColumnSummary> summarize(const DataMatrix& x);

// JSON artifacts (canonical, full double precision) and CSV siblings
// (display rounding to 9 significant digits). All artifacts embed the
// config, seed, and library version.
std::string library_version();

std::string fit_to_json(const FitResult& fit, const RunConfig& config);
FitResult fit_from_json(const std::string& text);
std::string selection_to_json(const SelectionTable& table, const RunConfig& config);
std::string bootstrap_to_json(const BootstrapRun& run, const CiTable& ci,
                              const RunConfig& config);
std::string diagnostics_to_json(const DiagnosticsReport& report, const RunConfig& config);
std::string summary_to_json(const std::vector<ColumnSummary>& summary,
                            const RunConfig& config);

// CSV table emitters (selection table, BIC curves in long format,
// CI tables, replicate draws in long format, per-case diagnostics).
std::string selection_to_csv(const SelectionTable& table);
std::string bic_curves_to_csv(const SelectionTable& table);
std::string summary_to_csv(const std::vector<ColumnSummary>& summary);
std::string ci_to_csv(const CiTable& ci, const std::vector<std::string>& column_names);
std::string replicates_to_csv(const BootstrapRun& run,
                              const std::vector<std::string>& column_names);
std::string fit_to_csv(const FitResult& fit, const std::vector<std::string>& column_names);
std::string diagnostics_to_csv(const DiagnosticsReport& report,
                               const std::vector<int>& labels);
std::string profile_means_to_csv(const FitResult& fit, const CiTable* ci,
                                 const std::vector<std::string>& column_names);

void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

}  // namespace parsimix

#endif
