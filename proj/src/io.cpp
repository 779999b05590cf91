#include "parsimix/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <json.hpp>

#include "parsimix/errors.hpp"

namespace parsimix {

using nlohmann::json;

std::string library_version() { return "0.1.0"; }

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_line(const std::string& line, char sep) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
    } else if (c == sep && !quoted) {
      fields.push_back(trim(field));
      field.clear();
    } else {
      field += c;
    }
  }
  fields.push_back(trim(field));
  return fields;
}

double parse_number(const std::string& field, std::size_t row, const std::string& column) {
  const std::string t = trim(field);
  if (t.empty())
    throw InvalidInput("row " + std::to_string(row) + ", column \"" + column +
                       "\": missing value");
  char* end = nullptr;
  // tolerate decimal commas, common in ;-separated exports
  std::string normalized = t;
  if (std::count(normalized.begin(), normalized.end(), ',') == 1 &&
      normalized.find('.') == std::string::npos)
    std::replace(normalized.begin(), normalized.end(), ',', '.');
  const double value = std::strtod(normalized.c_str(), &end);
  if (end == normalized.c_str() || *end != '\0' || !std::isfinite(value))
    throw InvalidInput("row " + std::to_string(row) + ", column \"" + column +
                       "\": non-numeric value \"" + t + "\"");
  return value;
}

std::string fetch_url(const std::string& url) {
  // split scheme://host/path, following up to 5 redirects
  const auto scheme_end = url.find("://");
  const auto host_start = scheme_end + 3;
  const auto path_start = url.find('/', host_start);
  const std::string origin = path_start == std::string::npos ? url : url.substr(0, path_start);
  const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

  httplib::Client client(origin);
  client.set_follow_location(true);
  client.set_connection_timeout(30);
  client.set_read_timeout(60);
  auto res = client.Get(path);
  if (!res)
    throw InvalidInput("failed to fetch \"" + url + "\": " + httplib::to_string(res.error()));
  if (res->status != 200)
    throw InvalidInput("failed to fetch \"" + url + "\": HTTP status " +
                       std::to_string(res->status));
  return res->body;
}

json params_to_json(const MixtureParameters& params) {
  json j;
  j["pro"] = std::vector<double>(params.pro.data(), params.pro.data() + params.pro.size());
  json mean = json::array();
  for (int k = 0; k < params.K(); ++k) {
    json col = json::array();
    for (Eigen::Index i = 0; i < params.mean.rows(); ++i) col.push_back(params.mean(i, k));
    mean.push_back(col);
  }
  j["mean"] = mean;  // list of K columns
  json cov = json::array();
  for (const auto& sigma : params.cov) {
    json m = json::array();
    for (Eigen::Index r = 0; r < sigma.rows(); ++r) {
      json row = json::array();
      for (Eigen::Index c = 0; c < sigma.cols(); ++c) row.push_back(sigma(r, c));
      m.push_back(row);
    }
    cov.push_back(m);
  }
  j["cov"] = cov;
  return j;
}

MixtureParameters params_from_json(const json& j) {
  MixtureParameters params;
  const auto pro = j.at("pro").get<std::vector<double>>();
  params.pro = Eigen::Map<const Vector>(pro.data(), static_cast<Eigen::Index>(pro.size()));
  const auto& mean = j.at("mean");
  const int K = static_cast<int>(mean.size());
  const int d = static_cast<int>(mean.at(0).size());
  params.mean = Matrix(d, K);
  for (int k = 0; k < K; ++k)
    for (int i = 0; i < d; ++i) params.mean(i, k) = mean.at(k).at(i).get<double>();
  for (const auto& m : j.at("cov")) {
    Matrix sigma(d, d);
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) sigma(r, c) = m.at(r).at(c).get<double>();
    params.cov.push_back(sigma);
  }
  return params;
}

json config_to_json(const RunConfig& config) {
  json j;
  j["input"] = config.input;
  j["sep"] = std::string(1, config.sep);
  j["columns"] = config.columns;
  j["renames"] = config.renames;
  j["model_codes"] = config.model_codes;
  j["k_min"] = config.k_min;
  j["k_max"] = config.k_max;
  j["prior"] = config.use_prior ? "default" : "none";
  j["prior_kappa"] = config.prior_kappa;
  j["prior_dof"] = config.prior_dof;
  j["prior_scale_mult"] = config.prior_scale_mult;
  j["seed"] = config.seed;
  return j;
}

json meta_json(const RunConfig& config) {
  json j;
  j["version"] = library_version();
  j["seed"] = config.seed;
  j["config"] = config_to_json(config);
  return j;
}

// 9 significant digits for CSV display
std::string fmt9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

DataMatrix parse_delimited(const std::string& text, char sep,
                           const std::vector<std::string>& columns,
                           const std::map<std::string, std::string>& renames) {
  std::istringstream stream(text);
  std::string line;
  if (!std::getline(stream, line)) throw InvalidInput("input is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  // strip a UTF-8 BOM if present
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line = line.substr(3);

  std::vector<std::string> header = split_line(line, sep);
  std::vector<int> selected;
  std::vector<std::string> names;
  if (columns.empty()) {
    for (std::size_t j = 0; j < header.size(); ++j) {
      selected.push_back(static_cast<int>(j));
      names.push_back(header[j]);
    }
  } else {
    for (const auto& wanted : columns) {
      auto it = std::find(header.begin(), header.end(), wanted);
      if (it == header.end())
        throw InvalidInput("column \"" + wanted +
                           "\" not found in header (check --sep and --columns)");
      selected.push_back(static_cast<int>(it - header.begin()));
      names.push_back(wanted);
    }
  }
  for (auto& name : names) {
    auto it = renames.find(name);
    if (it != renames.end()) name = it->second;
  }

  std::vector<std::vector<double>> rows;
  std::size_t row_number = 1;
  while (std::getline(stream, line)) {
    ++row_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    std::vector<std::string> fields = split_line(line, sep);
    std::vector<double> row(selected.size());
    for (std::size_t j = 0; j < selected.size(); ++j) {
      if (static_cast<std::size_t>(selected[j]) >= fields.size())
        throw InvalidInput("row " + std::to_string(row_number) + ": too few fields");
      row[j] = parse_number(fields[static_cast<std::size_t>(selected[j])], row_number,
                            names[j]);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InvalidInput("no data rows found");

  DataMatrix data;
  data.column_names = names;
  data.values = Matrix(static_cast<Eigen::Index>(rows.size()),
                       static_cast<Eigen::Index>(names.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < names.size(); ++j)
      data.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  data.validate();
  return data;
}

DataMatrix ingest(const RunConfig& config) {
  std::string text;
  if (config.input.rfind("http://", 0) == 0 || config.input.rfind("https://", 0) == 0) {
    text = fetch_url(config.input);
  } else {
    text = read_file(config.input);
  }
  return parse_delimited(text, config.sep, config.columns, config.renames);
}

std::vector<ColumnSummary> summarize(const DataMatrix& x) {
  std::vector<ColumnSummary> out;
  const auto n = x.n();
  for (Eigen::Index j = 0; j < x.d(); ++j) {
    ColumnSummary s;
    s.name = x.column_names[static_cast<std::size_t>(j)];
    s.n = static_cast<std::size_t>(n);
    std::vector<double> col(x.values.col(j).data(), x.values.col(j).data() + n);
    s.n_distinct = std::set<double>(col.begin(), col.end()).size();
    s.mean = x.values.col(j).mean();
    s.sd = std::sqrt((x.values.col(j).array() - s.mean).square().sum() /
                     static_cast<double>(n - 1));
    std::sort(col.begin(), col.end());
    s.min = col.front();
    s.max = col.back();
    s.median = n % 2 == 1 ? col[static_cast<std::size_t>(n / 2)]
                          : 0.5 * (col[static_cast<std::size_t>(n / 2 - 1)] +
                                   col[static_cast<std::size_t>(n / 2)]);
    out.push_back(s);
  }
  return out;
}

std::string fit_to_json(const FitResult& fit, const RunConfig& config) {
  json j = meta_json(config);
  j["artifact"] = "fit";
  j["model"] = fit.model.code;
  j["K"] = fit.model.K;
  j["loglik"] = fit.loglik;
  j["df"] = fit.df;
  j["bic"] = fit.bic;
  j["icl"] = fit.icl;
  j["iterations"] = fit.iterations;
  j["converged"] = fit.converged;
  j["parameters"] = params_to_json(fit.params);
  j["classification"] = fit.classification;
  json z = json::array();
  for (Eigen::Index i = 0; i < fit.z.n(); ++i) {
    json row = json::array();
    for (int k = 0; k < fit.z.K(); ++k) row.push_back(fit.z.z(i, k));
    z.push_back(row);
  }
  j["z"] = z;
  if (fit.prior_used) {
    json prior;
    prior["mu"] = std::vector<double>(fit.prior_used->mu_p.data(),
                                      fit.prior_used->mu_p.data() + fit.prior_used->mu_p.size());
    prior["kappa"] = fit.prior_used->kappa_p;
    prior["dof"] = fit.prior_used->nu_p;
    json scale = json::array();
    for (Eigen::Index r = 0; r < fit.prior_used->lambda_p.rows(); ++r) {
      json row = json::array();
      for (Eigen::Index c = 0; c < fit.prior_used->lambda_p.cols(); ++c)
        row.push_back(fit.prior_used->lambda_p(r, c));
      scale.push_back(row);
    }
    prior["scale"] = scale;
    j["prior"] = prior;
  } else {
    j["prior"] = nullptr;
  }
  return j.dump(2);
}

FitResult fit_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidInput(std::string("fit artifact is not valid JSON: ") + e.what());
  }
  if (j.value("artifact", "") != "fit")
    throw InvalidInput("JSON document is not a fit artifact");

  FitResult fit;
  fit.model.code = j.at("model").get<std::string>();
  fit.model.K = j.at("K").get<int>();
  fit.loglik = j.at("loglik").get<double>();
  fit.df = j.at("df").get<int>();
  fit.bic = j.at("bic").get<double>();
  fit.icl = j.at("icl").get<double>();
  fit.iterations = j.at("iterations").get<int>();
  fit.converged = j.at("converged").get<bool>();
  fit.params = params_from_json(j.at("parameters"));
  fit.classification = j.at("classification").get<std::vector<int>>();
  const auto& z = j.at("z");
  fit.z.z = Matrix(static_cast<Eigen::Index>(z.size()), fit.model.K);
  for (std::size_t i = 0; i < z.size(); ++i)
    for (int k = 0; k < fit.model.K; ++k)
      fit.z.z(static_cast<Eigen::Index>(i), k) = z.at(i).at(static_cast<std::size_t>(k)).get<double>();
  if (!j.at("prior").is_null()) {
    PriorSpec prior;
    const auto mu = j["prior"].at("mu").get<std::vector<double>>();
    prior.mu_p = Eigen::Map<const Vector>(mu.data(), static_cast<Eigen::Index>(mu.size()));
    prior.kappa_p = j["prior"].at("kappa").get<double>();
    prior.nu_p = j["prior"].at("dof").get<double>();
    const auto& scale = j["prior"].at("scale");
    const int d = static_cast<int>(scale.size());
    prior.lambda_p = Matrix(d, d);
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) prior.lambda_p(r, c) = scale.at(r).at(c).get<double>();
    fit.prior_used = prior;
  }
  fit.seed = j.value("seed", 0ULL);
  return fit;
}

std::string selection_to_json(const SelectionTable& table, const RunConfig& config) {
  json j = meta_json(config);
  j["artifact"] = "selection";
  json entries = json::array();
  for (const auto& e : table.entries) {
    json entry;
    entry["code"] = e.code;
    entry["K"] = e.K;
    entry["available"] = e.available;
    entry["converged"] = e.converged;
    if (e.available || e.converged) {
      entry["bic"] = e.bic;
      entry["icl"] = e.icl;
      entry["loglik"] = e.loglik;
      entry["df"] = e.df;
    }
    if (!e.note.empty()) entry["note"] = e.note;
    entries.push_back(entry);
  }
  j["entries"] = entries;
  if (table.best_index >= 0) {
    j["best"] = {{"code", table.best().code}, {"K", table.best().K},
                 {"bic", table.best().bic}};
    j["bic_diffs"] = table.bic_diffs;
  }
  return j.dump(2);
}

std::string bootstrap_to_json(const BootstrapRun& run, const CiTable& ci,
                              const RunConfig& config) {
  json j = meta_json(config);
  j["artifact"] = "bootstrap";
  j["type"] = boot_type_name(run.type);
  j["nboot"] = run.nboot;
  j["n_failed"] = run.n_failed;
  j["model"] = run.model.code;
  j["K"] = run.model.K;
  j["level"] = ci.level;
  const int K = run.reference.K();
  const int d = static_cast<int>(run.reference.d());
  json intervals = json::array();
  for (int k = 0; k < K; ++k) {
    json comp;
    comp["component"] = k + 1;
    comp["pro"] = {ci.pro(0, k), ci.pro(1, k)};
    json mean = json::array(), var = json::array();
    for (int jdx = 0; jdx < d; ++jdx) {
      mean.push_back({ci.mean_lo(jdx, k), ci.mean_hi(jdx, k)});
      var.push_back({ci.var_lo(jdx, k), ci.var_hi(jdx, k)});
    }
    comp["mean"] = mean;
    comp["variance_diagonal"] = var;
    intervals.push_back(comp);
  }
  j["intervals"] = intervals;
  j["reference"] = params_to_json(run.reference);
  return j.dump(2);
}

std::string diagnostics_to_json(const DiagnosticsReport& report, const RunConfig& config) {
  json j = meta_json(config);
  j["artifact"] = "diagnostics";
  j["entropy"] = report.entropy_total;
  j["k1_convention"] = report.k1_convention;
  auto summaries = [](const std::vector<ClassSummary>& list) {
    json out = json::array();
    for (const auto& s : list)
      out.push_back({{"class", s.label}, {"count", s.count}, {"mean", s.mean},
                     {"sd", s.sd}, {"min", s.min}, {"max", s.max}});
    return out;
  };
  j["class_entropy"] = summaries(report.class_entropy_summary);
  j["avepp"] = summaries(report.avepp_summary);
  j["avepp_flags"] = report.avepp_flags;
  j["entropy_flags"] = report.entropy_flags;
  j["case_entropy"] = report.case_entropy;
  return j.dump(2);
}

std::string summary_to_json(const std::vector<ColumnSummary>& summary,
                            const RunConfig& config) {
  json j = meta_json(config);
  j["artifact"] = "summary";
  json cols = json::array();
  for (const auto& s : summary)
    cols.push_back({{"name", s.name}, {"n", s.n}, {"n_distinct", s.n_distinct},
                    {"mean", s.mean}, {"sd", s.sd}, {"min", s.min},
                    {"median", s.median}, {"max", s.max}});
  j["columns"] = cols;
  return j.dump(2);
}

std::string selection_to_csv(const SelectionTable& table) {
  std::ostringstream out;
  out << "code,K,available,converged,bic,icl,loglik,df,note\n";
  for (const auto& e : table.entries) {
    out << e.code << ',' << e.K << ',' << (e.available ? 1 : 0) << ','
        << (e.converged ? 1 : 0) << ',';
    if (e.available || e.converged)
      out << fmt9(e.bic) << ',' << fmt9(e.icl) << ',' << fmt9(e.loglik) << ',' << e.df;
    else
      out << ",,,";
    out << ',' << e.note << '\n';
  }
  return out.str();
}

std::string bic_curves_to_csv(const SelectionTable& table) {
  std::ostringstream out;
  out << "code,K,bic\n";
  for (const auto& e : table.entries)
    if (e.available || e.converged)
      out << e.code << ',' << e.K << ',' << fmt9(e.bic) << '\n';
  return out.str();
}

std::string summary_to_csv(const std::vector<ColumnSummary>& summary) {
  std::ostringstream out;
  out << "name,n,n_distinct,mean,sd,min,median,max\n";
  for (const auto& s : summary)
    out << s.name << ',' << s.n << ',' << s.n_distinct << ',' << fmt9(s.mean) << ','
        << fmt9(s.sd) << ',' << fmt9(s.min) << ',' << fmt9(s.median) << ','
        << fmt9(s.max) << '\n';
  return out.str();
}

std::string ci_to_csv(const CiTable& ci, const std::vector<std::string>& column_names) {
  std::ostringstream out;
  out << "parameter,variable,component,lower,upper\n";
  const int K = static_cast<int>(ci.pro.cols());
  const int d = static_cast<int>(ci.mean_lo.rows());
  for (int k = 0; k < K; ++k)
    out << "pro,," << (k + 1) << ',' << fmt9(ci.pro(0, k)) << ',' << fmt9(ci.pro(1, k))
        << '\n';
  for (int k = 0; k < K; ++k)
    for (int j = 0; j < d; ++j)
      out << "mean," << column_names[static_cast<std::size_t>(j)] << ',' << (k + 1) << ','
          << fmt9(ci.mean_lo(j, k)) << ',' << fmt9(ci.mean_hi(j, k)) << '\n';
  for (int k = 0; k < K; ++k)
    for (int j = 0; j < d; ++j)
      out << "variance," << column_names[static_cast<std::size_t>(j)] << ',' << (k + 1)
          << ',' << fmt9(ci.var_lo(j, k)) << ',' << fmt9(ci.var_hi(j, k)) << '\n';
  return out.str();
}

std::string replicates_to_csv(const BootstrapRun& run,
                              const std::vector<std::string>& column_names) {
  std::ostringstream out;
  out << "replicate,parameter,variable,component,value\n";
  const int K = run.reference.K();
  const int d = static_cast<int>(run.reference.d());
  for (std::size_t b = 0; b < run.replicates.size(); ++b) {
    const auto& rep = run.replicates[b];
    for (int k = 0; k < K; ++k) {
      out << (b + 1) << ",pro,," << (k + 1) << ',' << fmt9(rep.pro[k]) << '\n';
      for (int j = 0; j < d; ++j) {
        out << (b + 1) << ",mean," << column_names[static_cast<std::size_t>(j)] << ','
            << (k + 1) << ',' << fmt9(rep.mean(j, k)) << '\n';
        out << (b + 1) << ",variance," << column_names[static_cast<std::size_t>(j)] << ','
            << (k + 1) << ',' << fmt9(rep.cov[static_cast<std::size_t>(k)](j, j)) << '\n';
      }
    }
  }
  return out.str();
}

std::string fit_to_csv(const FitResult& fit, const std::vector<std::string>& column_names) {
  std::ostringstream out;
  out << "parameter,variable,component,value\n";
  for (int k = 0; k < fit.params.K(); ++k) {
    out << "pro,," << (k + 1) << ',' << fmt9(fit.params.pro[k]) << '\n';
    for (Eigen::Index j = 0; j < fit.params.d(); ++j)
      out << "mean," << column_names[static_cast<std::size_t>(j)] << ',' << (k + 1) << ','
          << fmt9(fit.params.mean(j, k)) << '\n';
    for (Eigen::Index r = 0; r < fit.params.d(); ++r)
      for (Eigen::Index c = 0; c < fit.params.d(); ++c)
        out << "cov[" << (r + 1) << "][" << (c + 1) << "],"
            << column_names[static_cast<std::size_t>(r)] << ',' << (k + 1) << ','
            << fmt9(fit.params.cov[static_cast<std::size_t>(k)](r, c)) << '\n';
  }
  return out.str();
}

std::string diagnostics_to_csv(const DiagnosticsReport& report,
                               const std::vector<int>& labels) {
  std::ostringstream out;
  out << "case,class,entropy\n";
  for (std::size_t i = 0; i < report.case_entropy.size(); ++i)
    out << (i + 1) << ',' << labels[i] << ',' << fmt9(report.case_entropy[i]) << '\n';
  return out.str();
}

std::string profile_means_to_csv(const FitResult& fit, const CiTable* ci,
                                 const std::vector<std::string>& column_names) {
  std::ostringstream out;
  out << "profile,variable,mean,mixpro,lower,upper\n";
  for (int k = 0; k < fit.params.K(); ++k)
    for (Eigen::Index j = 0; j < fit.params.d(); ++j) {
      out << (k + 1) << ',' << column_names[static_cast<std::size_t>(j)] << ','
          << fmt9(fit.params.mean(j, k)) << ',' << fmt9(fit.params.pro[k]) << ',';
      if (ci)
        out << fmt9(ci->mean_lo(j, k)) << ',' << fmt9(ci->mean_hi(j, k));
      else
        out << ',';
      out << '\n';
    }
  return out.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot open \"" + path + "\" for writing");
  out << content;
  if (!out) throw InvalidInput("write to \"" + path + "\" failed");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot read \"" + path + "\"");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace parsimix
