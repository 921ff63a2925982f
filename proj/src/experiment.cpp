#include "bdpca/experiment.hpp"
#include "bdpca/aggregation.hpp"
#include "bdpca/error.hpp"
#include "bdpca/log.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

namespace bdpca {

namespace {

constexpr const char* kRhoHeader = "replicate,method,beta_used,k,rho_k";

std::string shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path);
  return out;
}

void write_matrix_csv(const Eigen::MatrixXd& m, const std::string& path) {
  std::ofstream out = open_out(path);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << shortest(m(i, j));
    out << '\n';
  }
}

struct ReplicateOutput {
  std::vector<RhoRow> rows;
  std::optional<double> cv_beta;
};

ReplicateOutput run_replicate(const ExperimentSpec& spec, const std::vector<Method>& methods, std::size_t rep) {
  const std::uint64_t rep_seed = stream_seed(spec.seed, Stream::Replicate, rep);
  const PopulationModel pop = make_population(spec.p, spec.n, spec.r, spec.distribution, rep_seed);
  const Eigen::MatrixXd truth = pop.truth();
  const std::vector<DataShard> shards = split_shards(sample_data(pop), spec.m);

  std::vector<TruncatedEig> summaries_q;
  std::vector<TruncatedEig> summaries_r;
  std::vector<double> weights;
  for (const auto& s : shards) {
    summaries_q.push_back(local_summary(s, spec.q, spec.center));
    summaries_r.push_back(summaries_q.back().leading(spec.r));
    weights.push_back(static_cast<double>(s.n()));
  }
  const std::span<const double> w = spec.weighted ? std::span<const double>(weights) : std::span<const double>();
  const Eigen::Index k_max = std::min(spec.k_max, spec.p);

  ReplicateOutput out;
  BetaConfig cfg;
  cfg.delta = spec.delta;
  for (const auto& method : methods) {
    SymMatrix sigma;
    std::optional<double> beta_used;
    switch (method.kind) {
      case Method::Kind::Beta: {
        cfg.beta = method.beta;
        sigma = beta_aggregate(summaries_q, cfg, spec.r, w).sigma_beta;
        beta_used = method.beta;
        break;
      }
      case Method::Kind::Cv: {
        if (spec.m < 2) continue;
        CvPlan plan = make_folds(spec.m, spec.cv_folds, spec.cv_seed.value_or(stream_seed(rep_seed, Stream::Folds)));
        plan.candidates = spec.candidates;
        const CvResult cv = select_beta(summaries_q, summaries_r, plan, cfg);
        cfg.beta = cv.best_beta;
        sigma = beta_aggregate(summaries_q, cfg, spec.r, w).sigma_beta;
        beta_used = cv.best_beta;
        out.cv_beta = cv.best_beta;
        break;
      }
      case Method::Kind::Fan:
        sigma = fan_aggregate(summaries_r, spec.r).sigma_beta;
        break;
    }
    const TruncatedEig est = truncated_eig(sigma, k_max);
    for (Eigen::Index k = spec.r; k <= k_max; ++k) {
      out.rows.push_back(RhoRow{rep, method.name, beta_used, k, rho_similarity(est.vectors().leftCols(k), truth)});
    }
  }
  return out;
}

}  // namespace

std::string format_beta(double beta) { return shortest(beta); }

std::vector<Method> parse_methods(const std::string& list) {
  std::vector<Method> out;
  std::stringstream ss(list);
  std::string tok;
  auto add_beta = [&out](double b) { out.push_back(Method{Method::Kind::Beta, b, "beta=" + format_beta(b)}); };
  while (std::getline(ss, tok, ',')) {
    tok.erase(std::remove_if(tok.begin(), tok.end(), [](unsigned char c) { return std::isspace(c); }), tok.end());
    if (tok.empty()) continue;
    if (tok == "all") {
      add_beta(-1);
      add_beta(0);
      add_beta(1);
      out.push_back(Method{Method::Kind::Cv, 0, "beta=cv"});
      out.push_back(Method{Method::Kind::Fan, 0, "fan"});
    } else if (tok == "cv") {
      out.push_back(Method{Method::Kind::Cv, 0, "beta=cv"});
    } else if (tok == "fan") {
      out.push_back(Method{Method::Kind::Fan, 0, "fan"});
    } else {
      double b = 0;
      const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), b);
      if (res.ec != std::errc() || res.ptr != tok.data() + tok.size() || !std::isfinite(b))
        fail(ErrorCode::InvalidInput, "unknown method '" + tok + "'");
      add_beta(b);
    }
  }
  require(!out.empty(), "no methods selected");
  std::vector<Method> unique;
  for (auto& m : out)
    if (std::none_of(unique.begin(), unique.end(), [&](const Method& u) { return u.name == m.name; }))
      unique.push_back(std::move(m));
  return unique;
}

ExperimentSpec ExperimentSpec::paper_scale() {
  ExperimentSpec s;
  s.p = 500;
  s.replicates = 100;
  return s;
}

void ExperimentSpec::validate() const {
  require(p >= 2 && n >= 1, "experiment: need p >= 2 and n >= 1");
  require(m >= 1 && static_cast<Eigen::Index>(m) <= n, "experiment: need 1 <= m <= n");
  require(r >= 1 && r <= q && q <= p, "experiment: need 1 <= r <= q <= p");
  require(r < p, "experiment: need r < p");
  require(k_max >= r, "experiment: need k_max >= r");
  require(replicates >= 1, "experiment: need at least one replicate");
  require(delta > 0, "experiment: delta must be positive");
  require(!candidates.empty(), "experiment: empty candidate set");
  require(cv_folds >= 2, "experiment: need at least two folds");
  if (n % static_cast<Eigen::Index>(m) != 0)
    info("n is not divisible by m; the last shard absorbs the remainder");
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  const std::vector<Method> methods = parse_methods(spec.methods);
  if (spec.m < 2 && std::any_of(methods.begin(), methods.end(), [](const Method& m) { return m.kind == Method::Kind::Cv; }))
    warn("cross-validation needs m >= 2; skipping beta=cv");

  std::vector<ReplicateOutput> outputs(spec.replicates);
  std::vector<std::exception_ptr> errors(spec.replicates);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t rep = next++; rep < spec.replicates; rep = next++) {
      try {
        outputs[rep] = run_replicate(spec, methods, rep);
      } catch (...) {
        errors[rep] = std::current_exception();
      }
    }
  };
  unsigned threads = spec.threads ? spec.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, spec.replicates));
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  ExperimentResult res;
  res.spec = spec;
  for (double c : spec.candidates) res.cv_counts.emplace_back(c, 0);
  for (auto& out : outputs) {
    for (auto& row : out.rows) res.rows.push_back(std::move(row));
    if (out.cv_beta) {
      for (auto& [beta, count] : res.cv_counts)
        if (beta == *out.cv_beta) {
          ++count;
          break;
        }
    }
  }

  std::map<std::pair<std::string, Eigen::Index>, std::pair<double, std::size_t>> sums;
  for (const auto& row : res.rows) {
    auto& s = sums[{row.method, row.k}];
    s.first += row.rho;
    ++s.second;
  }
  for (const auto& method : methods) {
    for (Eigen::Index k = spec.r; k <= std::min(spec.k_max, spec.p); ++k) {
      const auto it = sums.find({method.name, k});
      if (it == sums.end()) continue;
      res.mean_rho.push_back(MeanRho{method.name, k, it->second.first / static_cast<double>(it->second.second)});
    }
  }
  return res;
}

void write_rho_csv(const ExperimentResult& res, const std::string& path) {
  std::ofstream out = open_out(path);
  out << kRhoHeader << '\n';
  for (const auto& row : res.rows) {
    out << row.replicate << ',' << row.method << ',' << (row.beta_used ? format_beta(*row.beta_used) : "NA") << ','
        << row.k << ',' << shortest(row.rho) << '\n';
  }
  if (!out) fail(ErrorCode::IoError, "write failed: " + path);
}

void write_frequency_csv(const ExperimentResult& res, const std::string& path) {
  std::ofstream out = open_out(path);
  out << "dist,p,m,beta,count\n";
  for (const auto& [beta, count] : res.cv_counts) {
    out << distribution_name(res.spec.distribution) << ',' << res.spec.p << ',' << res.spec.m << ','
        << format_beta(beta) << ',' << count << '\n';
  }
  if (!out) fail(ErrorCode::IoError, "write failed: " + path);
}

void write_mean_csv(const ExperimentResult& res, const std::string& path) {
  std::ofstream out = open_out(path);
  out << "method,k,mean_rho_k\n";
  for (const auto& m : res.mean_rho) out << m.method << ',' << m.k << ',' << shortest(m.mean) << '\n';
  if (!out) fail(ErrorCode::IoError, "write failed: " + path);
}

void write_experiment_outputs(const ExperimentResult& res, const std::string& csv_path) {
  namespace fs = std::filesystem;
  const fs::path csv(csv_path);
  if (csv.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(csv.parent_path(), ec);
  }
  write_rho_csv(res, csv_path);
  write_frequency_csv(res, (csv.parent_path() / "summary_frequencies.csv").string());
  write_mean_csv(res, (csv.parent_path() / "mean_rho.csv").string());
}

std::string plot_script(const std::string& csv_path) {
  std::ifstream in(csv_path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + csv_path);
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::ParseError, csv_path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kRhoHeader) fail(ErrorCode::ParseError, csv_path + ": unexpected header '" + line + "'");

  std::vector<std::string> methods;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (fields.size() != 5) fail(ErrorCode::ParseError, csv_path + ":" + std::to_string(line_no) + ": expected 5 fields");
    if (std::find(methods.begin(), methods.end(), fields[1]) == methods.end()) methods.push_back(fields[1]);
  }
  if (methods.empty()) fail(ErrorCode::ParseError, csv_path + ": no data rows");

  std::ostringstream os;
  os << "# Mean rho_k per method; render with: gnuplot -p <this file>\n"
     << "set datafile separator \",\"\n"
     << "set xlabel \"k\"\n"
     << "set ylabel \"mean rho_k\"\n"
     << "set key bottom right\n"
     << "set grid\n"
     << "data = '" << csv_path << "'\n"
     << "plot \\\n";
  for (std::size_t i = 0; i < methods.size(); ++i) {
    // smooth unique averages the replicates sharing a k value
    os << "  data using 4:(strcol(2) eq \"" << methods[i] << "\" ? $5 : NaN) smooth unique with linespoints title \""
       << methods[i] << "\"" << (i + 1 < methods.size() ? ", \\\n" : "\n");
  }
  return os.str();
}

void emit_plot_script(const std::string& csv_path, const std::string& script_path) {
  const std::string script = plot_script(csv_path);
  std::ofstream out = open_out(script_path);
  out << script;
  if (!out) fail(ErrorCode::IoError, "write failed: " + script_path);
}

void generate_dataset(const ExperimentSpec& spec, const std::string& out_dir) {
  spec.validate();
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) fail(ErrorCode::IoError, "cannot create " + out_dir + ": " + ec.message());
  const std::uint64_t rep_seed = stream_seed(spec.seed, Stream::Replicate, 0);
  const PopulationModel pop = make_population(spec.p, spec.n, spec.r, spec.distribution, rep_seed);
  const auto shards = split_shards(sample_data(pop), spec.m);
  for (const auto& s : shards) {
    char name[32];
    std::snprintf(name, sizeof(name), "shard_%03u.bdpx", s.machine_id());
    write_shard(s, (fs::path(out_dir) / name).string());
  }
  write_matrix_csv(pop.truth(), (fs::path(out_dir) / "truth.csv").string());
  write_matrix_csv(pop.lambda, (fs::path(out_dir) / "eigenvalues.csv").string());
}

}  // namespace bdpca
