#include "nbfgs/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "json.hpp"

namespace nbfgs {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_real(std::string_view key, std::string_view text) {
  const std::string buf(trim(text));
  char* end = nullptr;
  const double v = std::strtod(buf.c_str(), &end);
  if (buf.empty() || end != buf.c_str() + buf.size() || !std::isfinite(v)) {
    throw ConfigError("config: '" + std::string(key) + "' expects a real number, got '" + buf + "'");
  }
  return v;
}

template <class Int>
Int parse_integer(std::string_view key, std::string_view text) {
  const auto t = trim(text);
  Int v{};
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc{} || ptr != t.data() + t.size()) {
    throw ConfigError("config: '" + std::string(key) + "' expects an integer, got '" +
                      std::string(t) + "'");
  }
  return v;
}

std::vector<double> parse_list(std::string_view key, std::string_view text) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto item = text.substr(start, comma == std::string_view::npos ? text.npos : comma - start);
    out.push_back(parse_real(key, item));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

void apply(ExperimentConfig& c, std::string_view key, std::string_view value) {
  if (key == "dimension") c.dimension = parse_integer<std::size_t>(key, value);
  else if (key == "eigenvalues") c.eigenvalues = parse_list(key, value);
  else if (key == "rotation_seed") c.rotation_seed = parse_integer<std::uint64_t>(key, value);
  else if (key == "eps_f") c.eps_f = parse_real(key, value);
  else if (key == "eps_g") c.eps_g = parse_real(key, value);
  else if (key == "seed") c.seed = parse_integer<std::uint64_t>(key, value);
  else if (key == "c1") c.c1 = parse_real(key, value);
  else if (key == "c2") c.c2 = parse_real(key, value);
  else if (key == "l") c.l = parse_real(key, value);
  else if (key == "l_factor") c.l_factor = parse_real(key, value);
  else if (key == "grad_tol") c.grad_tol = parse_real(key, value);
  else if (key == "max_iters") c.max_iters = parse_integer<int>(key, value);
  else if (key == "max_consecutive_failures") c.max_consecutive_failures = parse_integer<int>(key, value);
  else if (key == "max_bisections") c.max_bisections = parse_integer<int>(key, value);
  else if (key == "q") c.q = parse_real(key, value);
  else if (key == "runs") c.runs = parse_integer<int>(key, value);
  else if (key == "x0") c.x0 = parse_list(key, value);
  else if (key == "out") c.out = std::string(trim(value));
  else throw ConfigError("config: unknown key '" + std::string(key) + "'");
}

std::string fmt_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_log10(std::optional<double> v) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", std::log10(*v));
  return buf;
}

nlohmann::json json_real(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

template <class T>
nlohmann::json json_opt(const std::optional<T>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

nlohmann::json json_quartiles(const std::optional<analysis::Quartiles>& q) {
  if (!q) return nullptr;
  return {{"min", q->min}, {"q1", q->q1}, {"median", q->median}, {"q3", q->q3}, {"max", q->max}};
}

double median(std::vector<double> v) { return analysis::quartiles(std::move(v)).median; }

}  // namespace

double ExperimentConfig::strong_convexity() const {
  return *std::min_element(eigenvalues.begin(), eigenvalues.end());
}

double ExperimentConfig::lipschitz() const {
  return *std::max_element(eigenvalues.begin(), eigenvalues.end());
}

double ExperimentConfig::resolved_l() const {
  if (l) return *l;
  const double derived = l_factor * eps_g / strong_convexity();
  return derived > 0.0 ? derived : kNoiselessLength;
}

Vector ExperimentConfig::resolved_x0() const {
  if (x0.size() == 1) return Vector(dimension, x0[0]);
  return Vector(x0);
}

AlgoConfig ExperimentConfig::algo_config() const {
  AlgoConfig a;
  a.l = resolved_l();
  a.grad_tol = grad_tol;
  a.max_iters = max_iters;
  a.max_consecutive_failures = max_consecutive_failures;
  a.line_search = {c1, c2, max_bisections};
  return a;
}

void ExperimentConfig::validate() const {
  if (dimension == 0) throw ConfigError("config: dimension must be >= 1");
  if (eigenvalues.size() != dimension) {
    throw ConfigError("config: expected " + std::to_string(dimension) + " eigenvalues, got " +
                      std::to_string(eigenvalues.size()));
  }
  for (double e : eigenvalues)
    if (!(e > 0.0)) throw ConfigError("config: eigenvalues must be positive");
  if (!(eps_f >= 0.0) || !(eps_g >= 0.0)) throw ConfigError("config: noise bounds must be >= 0");
  if (!(0.0 < c1 && c1 < c2 && c2 < 1.0)) throw ConfigError("config: need 0 < c1 < c2 < 1");
  if (l && !(*l > 0.0)) throw ConfigError("config: l must be positive");
  if (!l && !(l_factor > 0.0)) throw ConfigError("config: l_factor must be positive");
  if (!(grad_tol >= 0.0)) throw ConfigError("config: grad_tol must be >= 0");
  if (max_iters < 0) throw ConfigError("config: max_iters must be >= 0");
  if (max_consecutive_failures < 1) throw ConfigError("config: max_consecutive_failures must be >= 1");
  if (max_bisections < 1) throw ConfigError("config: max_bisections must be >= 1");
  if (!(q > 0.0 && q < 1.0)) throw ConfigError("config: q must lie in (0, 1)");
  if (runs < 1) throw ConfigError("config: runs must be >= 1");
  if (x0.size() != 1 && x0.size() != dimension) {
    throw ConfigError("config: x0 needs 1 or " + std::to_string(dimension) + " entries");
  }
  if (out.empty()) throw ConfigError("config: empty output prefix");
}

ExperimentConfig parse_config(std::string_view text, ExperimentConfig base) {
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    auto line = text.substr(start, end - start);
    start = end + 1;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    apply(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return base;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  const auto problem = make_quadratic(config.dimension, Vector(config.eigenvalues),
                                      config.rotation_seed);
  const AlgoConfig algo = config.algo_config();
  const Vector x0 = config.resolved_x0();
  const SymMatrix H0 = SymMatrix::identity(config.dimension);

  ExperimentResult result;
  result.runs.reserve(static_cast<std::size_t>(config.runs));
  for (int i = 0; i < config.runs; ++i) {
    const std::uint64_t seed = config.seed + static_cast<std::uint64_t>(i);
    NoisyOracle oracle(problem, NoiseModel(config.eps_f, config.eps_g, seed));
    result.runs.push_back({seed, run(x0, H0, oracle, algo, i)});
  }
  result.summary = summarize(config, result.runs);
  return result;
}

ExperimentSummary summarize(const ExperimentConfig& config, const std::vector<RunOutput>& runs) {
  ExperimentSummary summary;
  summary.l = config.resolved_l();
  summary.theory = analysis::theory_constants({.m = config.strong_convexity(),
                                               .M = config.lipschitz(),
                                               .eps_f = config.eps_f,
                                               .eps_g = config.eps_g,
                                               .l = summary.l,
                                               .c1 = config.c1,
                                               .c2 = config.c2,
                                               .q = config.q,
                                               .H0 = SymMatrix::identity(config.dimension)});

  std::vector<double> final_gaps;
  std::vector<double> all_cosines;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const RunResult& r = runs[i].result;
    RunSummary s;
    s.run_id = static_cast<int>(i);
    s.seed = runs[i].seed;
    s.status = r.status;
    s.iterations = static_cast<int>(r.records.size());
    s.final_gap = r.final_gap;
    s.final_grad_true_norm = r.final_grad_true_norm;
    s.final_cond_metric = r.final_cond_metric;
    s.f_evals = r.f_evals;
    s.g_evals = r.g_evals;

    std::uint64_t f_count = r.records.empty() ? 0 : 1;
    std::uint64_t g_count = r.records.size() + 1;
    std::vector<double> phis;
    double min_gap = r.final_gap;
    for (const IterateRecord& rec : r.records) {
      f_count += static_cast<std::uint64_t>(rec.ls_trials);
      g_count += static_cast<std::uint64_t>(rec.ls_g_evals + rec.pair_g_evals);
      if (rec.lengthened) {
        ++s.lengthening_count;
        if (!s.first_lengthening) s.first_lengthening = rec.iter;
      }
      if (rec.ls_failed) ++s.line_search_failures;
      phis.push_back(rec.phi_true);
      min_gap = std::min(min_gap, rec.gap);
      all_cosines.push_back(rec.cos_theta);
    }
    phis.push_back(r.final_phi);
    s.accounting_consistent = f_count == r.f_evals && g_count == r.g_evals;

    const auto xi = analysis::envelope_sequence(phis);
    for (std::size_t k = 0; k < phis.size(); ++k)
      if (phis[k] > xi[k] + 2.0 * config.eps_f) ++s.envelope_violations;
    s.min_gap = min_gap;

    const auto good = analysis::good_iterate_stats(r.records, summary.theory.beta1, config.q);
    s.good_iterate_bound_holds = good.all_hold;
    s.cos_theta = good.cos_theta;

    final_gaps.push_back(s.final_gap);
    if (s.first_lengthening &&
        (!summary.earliest_first_lengthening || *s.first_lengthening < *summary.earliest_first_lengthening)) {
      summary.earliest_first_lengthening = s.first_lengthening;
    }
    summary.max_min_gap = std::max(summary.max_min_gap.value_or(*s.min_gap), *s.min_gap);
    summary.runs.push_back(s);
  }
  if (!final_gaps.empty()) summary.median_final_gap = median(final_gaps);
  if (!all_cosines.empty()) summary.cos_theta = analysis::quartiles(all_cosines);
  return summary;
}

void write_csv(std::ostream& os, const std::vector<IterateRecord>& records) {
  os << kCsvHeader << '\n';
  for (const IterateRecord& r : records) {
    os << r.run_id << ',' << r.iter << ',' << fmt_real(r.f_noisy) << ',' << fmt_real(r.phi_true)
       << ',' << fmt_real(r.gap) << ',' << fmt_real(r.grad_true_norm) << ','
       << fmt_real(r.grad_noisy_norm) << ',' << fmt_real(r.cos_theta) << ','
       << fmt_real(r.cos_theta_tilde) << ',' << fmt_real(r.alpha) << ',' << r.ls_trials << ','
       << (r.ls_failed ? 1 : 0) << ',' << (r.lengthened ? 1 : 0) << ',' << fmt_real(r.cond_metric)
       << '\n';
  }
}

void write_csv(const std::vector<IterateRecord>& records, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("write_csv: cannot open " + path.string());
  write_csv(os, records);
  if (!os) throw std::runtime_error("write_csv: write failed for " + path.string());
}

std::vector<IterateRecord> read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kCsvHeader) {
    throw std::runtime_error("read_csv: missing or unexpected header");
  }
  std::vector<IterateRecord> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 14) throw std::runtime_error("read_csv: expected 14 columns");
    auto real = [&](int i) { return std::strtod(cells[i].c_str(), nullptr); };
    auto integer = [&](int i) { return std::stoi(cells[i]); };
    IterateRecord r;
    r.run_id = integer(0);
    r.iter = integer(1);
    r.f_noisy = real(2);
    r.phi_true = real(3);
    r.gap = real(4);
    r.grad_true_norm = real(5);
    r.grad_noisy_norm = real(6);
    r.cos_theta = real(7);
    r.cos_theta_tilde = real(8);
    r.alpha = real(9);
    r.ls_trials = integer(10);
    r.ls_failed = integer(11) != 0;
    r.lengthened = integer(12) != 0;
    r.cond_metric = real(13);
    out.push_back(r);
  }
  return out;
}

std::string summary_json(const ExperimentSummary& summary) {
  using nlohmann::json;
  const auto& t = summary.theory;
  json theory = {{"m_hat", t.m_hat},
                 {"M_hat", t.M_hat},
                 {"q", t.q},
                 {"beta0", t.beta0},
                 {"beta1", t.beta1},
                 {"beta1_underflow", t.beta1_underflow},
                 {"A", t.A},
                 {"B", t.B},
                 {"zeta", t.zeta},
                 {"rho", t.rho},
                 {"n1_radius", json_real(t.n1_radius)},
                 {"n1_unbounded", t.n1_unbounded},
                 {"no_lengthening_threshold", json_real(t.no_lengthening_threshold)}};
  json runs = json::array();
  for (const RunSummary& r : summary.runs) {
    runs.push_back({{"run_id", r.run_id},
                    {"seed", r.seed},
                    {"status", std::string(to_string(r.status))},
                    {"iterations", r.iterations},
                    {"min_gap", json_opt(r.min_gap)},
                    {"final_gap", r.final_gap},
                    {"final_grad_true_norm", r.final_grad_true_norm},
                    {"final_cond_metric", r.final_cond_metric},
                    {"first_lengthening", json_opt(r.first_lengthening)},
                    {"lengthening_count", r.lengthening_count},
                    {"line_search_failures", r.line_search_failures},
                    {"f_evals", r.f_evals},
                    {"g_evals", r.g_evals},
                    {"accounting_consistent", r.accounting_consistent},
                    {"envelope_violations", r.envelope_violations},
                    {"good_iterate_bound_holds", r.good_iterate_bound_holds},
                    {"cos_theta", json_quartiles(r.cos_theta)}});
  }
  json doc = {{"l", summary.l},
              {"theory", theory},
              {"runs", runs},
              {"aggregate",
               {{"median_final_gap", json_opt(summary.median_final_gap)},
                {"max_min_gap", json_opt(summary.max_min_gap)},
                {"earliest_first_lengthening", json_opt(summary.earliest_first_lengthening)},
                {"cos_theta", json_quartiles(summary.cos_theta)}}}};
  return doc.dump(2) + "\n";
}

std::string summary_text(const ExperimentSummary& summary) {
  std::ostringstream os;
  const auto& t = summary.theory;
  os << "theory: l=" << fmt_real(summary.l) << " m_hat=" << fmt_real(t.m_hat)
     << " M_hat=" << fmt_real(t.M_hat) << " beta0=" << fmt_real(t.beta0)
     << " beta1=" << fmt_real(t.beta1) << (t.beta1_underflow ? " (underflow)" : "")
     << " A=" << fmt_real(t.A) << " B=" << fmt_real(t.B) << " rho=" << fmt_real(t.rho)
     << " N1=" << (t.n1_unbounded ? std::string("unbounded") : fmt_real(t.n1_radius)) << '\n';
  os << "run  seed  status      iters  log10(min gap)  log10(final gap)  log10|grad|  "
        "first_len  cond_final\n";
  for (const RunSummary& r : summary.runs) {
    os << std::setw(3) << r.run_id << "  " << std::setw(4) << r.seed << "  " << std::left
       << std::setw(10) << to_string(r.status) << std::right << "  " << std::setw(5)
       << r.iterations << "  " << std::setw(14) << fmt_log10(r.min_gap) << "  " << std::setw(16)
       << fmt_log10(r.final_gap) << "  " << std::setw(11) << fmt_log10(r.final_grad_true_norm)
       << "  " << std::setw(9)
       << (r.first_lengthening ? std::to_string(*r.first_lengthening) : std::string("n/a"))
       << "  " << std::setprecision(4) << r.final_cond_metric << '\n';
  }
  os << "median final gap: "
     << (summary.median_final_gap ? fmt_real(*summary.median_final_gap) : std::string("n/a"))
     << "\nearliest first lengthening: "
     << (summary.earliest_first_lengthening ? std::to_string(*summary.earliest_first_lengthening)
                                            : std::string("n/a"))
     << '\n';
  if (summary.cos_theta) {
    const auto& q = *summary.cos_theta;
    os << "cos(theta) quartiles: " << fmt_real(q.min) << ' ' << fmt_real(q.q1) << ' '
       << fmt_real(q.median) << ' ' << fmt_real(q.q3) << ' ' << fmt_real(q.max) << '\n';
  }
  return os.str();
}

std::vector<std::filesystem::path> write_outputs(const ExperimentResult& result,
                                                 const std::string& prefix) {
  std::vector<std::filesystem::path> written;
  const std::filesystem::path base(prefix);
  if (base.has_parent_path()) std::filesystem::create_directories(base.parent_path());
  std::vector<IterateRecord> all;
  for (std::size_t i = 0; i < result.runs.size(); ++i) {
    char suffix[32];
    std::snprintf(suffix, sizeof suffix, "_run_%02zu.csv", i);
    const std::filesystem::path path = prefix + suffix;
    const auto& records = result.runs[i].result.records;
    write_csv(records, path);
    written.push_back(path);
    all.insert(all.end(), records.begin(), records.end());
  }
  const std::filesystem::path combined = prefix + "_all.csv";
  write_csv(all, combined);
  written.push_back(combined);
  const std::filesystem::path summary_path = prefix + "_summary.json";
  std::ofstream os(summary_path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + summary_path.string());
  os << summary_json(result.summary);
  written.push_back(summary_path);
  return written;
}

}  // namespace nbfgs
