#include "bdpca/bdpca.h"

#include "CLI11.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace {

struct CliError : std::runtime_error {
  CliError(int status, const std::string& msg) : std::runtime_error(msg), status(status) {}
  int status;
};

void check(int status) {
  if (status != BDPCA_OK) {
    throw CliError(status, std::string(bdpca_status_name(status)) + ": " + bdpca_last_error());
  }
}

std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::vector<double> parse_doubles(const std::string& list) {
  std::vector<double> out;
  std::stringstream ss(list);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw CliError(BDPCA_ERR_INVALID_INPUT, "not a number: '" + tok + "'");
    }
  }
  if (out.empty()) throw CliError(BDPCA_ERR_INVALID_INPUT, "empty number list");
  return out;
}

template <class T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};

using ShardPtr = std::unique_ptr<bdpca_shard, Deleter<bdpca_shard, bdpca_shard_free>>;
using SummaryPtr = std::unique_ptr<bdpca_summary, Deleter<bdpca_summary, bdpca_summary_free>>;
using ResultPtr = std::unique_ptr<bdpca_result, Deleter<bdpca_result, bdpca_result_free>>;
using CvPtr = std::unique_ptr<bdpca_cv_result, Deleter<bdpca_cv_result, bdpca_cv_result_free>>;
using RoundPtr = std::unique_ptr<bdpca_round, Deleter<bdpca_round, bdpca_round_free>>;
using ServerPtr = std::unique_ptr<bdpca_server, Deleter<bdpca_server, bdpca_server_close>>;
using ExperimentPtr =
    std::unique_ptr<bdpca_experiment_result, Deleter<bdpca_experiment_result, bdpca_experiment_result_free>>;

std::vector<ShardPtr> load_shards(const std::vector<std::string>& paths) {
  std::vector<ShardPtr> out;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    bdpca_shard* s = nullptr;
    check(bdpca_shard_read(paths[i].c_str(), static_cast<uint32_t>(i + 1), &s));
    out.emplace_back(s);
  }
  return out;
}

std::vector<const bdpca_shard*> raw(const std::vector<ShardPtr>& shards) {
  std::vector<const bdpca_shard*> out;
  for (const auto& s : shards) out.push_back(s.get());
  return out;
}

// Shared by aggregate, select-beta and serve.
struct JobArgs {
  uint32_t r = 5;
  uint32_t q = 10;
  std::string beta = "1";
  double delta = 1e-5;
  bool center = false;
  bool weighted = false;
  uint32_t cv_folds = 5;
  uint64_t cv_seed = 0;
  std::string candidates = "-1,0,1";
  double timeout = 0;

  std::vector<double> candidate_values;

  void add(CLI::App* app, bool with_beta) {
    app->add_option("--r", r, "Target rank")->capture_default_str();
    app->add_option("--q", q, "Local truncation rank")->capture_default_str();
    if (with_beta) app->add_option("--beta", beta, "Beta value, cv, or fan")->capture_default_str();
    app->add_option("--delta", delta, "Regularization for negative beta")->capture_default_str();
    app->add_flag("--center", center, "Subtract each shard's mean");
    app->add_flag("--weighted", weighted, "Weight machines by sample count");
    app->add_option("--cv-folds", cv_folds, "Cross-validation folds")->capture_default_str();
    app->add_option("--cv-seed", cv_seed, "Fold assignment seed")->capture_default_str();
    app->add_option("--candidates", candidates, "Candidate betas for cv")->capture_default_str();
    app->add_option("--timeout", timeout, "Seconds to wait for workers (default: BDPCA_TIMEOUT_SECS or 30)");
  }

  bdpca_job job() {
    bdpca_job j;
    bdpca_job_init(&j);
    j.r = r;
    j.q = q;
    j.delta = delta;
    j.center = center;
    j.weighted = weighted;
    j.cv_folds = cv_folds;
    j.cv_seed = cv_seed;
    candidate_values = parse_doubles(candidates);
    j.candidates = candidate_values.data();
    j.n_candidates = candidate_values.size();
    if (beta == "cv") {
      j.mode = BDPCA_MODE_CV;
    } else {
      j.mode = BDPCA_MODE_FIXED;
      j.beta = parse_doubles(beta).at(0);
    }
    return j;
  }

  uint64_t timeout_ms() const { return timeout > 0 ? static_cast<uint64_t>(timeout * 1000.0) : 0; }
};

void write_result(const bdpca_result* res, const std::string& out_path) {
  size_t p = 0, r = 0;
  check(bdpca_result_dims(res, &p, &r));
  std::vector<double> values(r), vectors(p * r);
  check(bdpca_result_leading_values(res, values.data()));
  check(bdpca_result_leading_vectors(res, vectors.data()));

  std::cout << "branch: " << bdpca_result_branch(res) << "\n";
  std::cout << "leading eigenvalues:";
  for (double v : values) std::cout << ' ' << num(v);
  std::cout << "\n";
  if (bdpca_result_tie_warning(res)) std::cout << "warning: eigenvalue tie at the rank-r boundary\n";

  if (out_path.empty()) return;
  std::ofstream out(out_path);
  if (!out) throw CliError(BDPCA_ERR_IO, "cannot write " + out_path);
  // one row per coordinate, one column per leading eigenvector
  for (size_t i = 0; i < p; ++i) {
    for (size_t j = 0; j < r; ++j) out << (j ? "," : "") << num(vectors[j * p + i]);
    out << '\n';
  }
  std::cout << "wrote " << out_path << "\n";
}

void print_round(const bdpca_round* round, const std::string& out_path) {
  const size_t n = bdpca_round_contributor_count(round);
  std::cout << "contributors: " << n << " (missing " << bdpca_round_missing_count(round) << ")\n";
  for (size_t i = 0; i < n; ++i) {
    std::cout << "  machine " << bdpca_round_contributor_id(round, i) << ": " << bdpca_round_frame_bytes(round, i)
              << " bytes\n";
  }
  if (const bdpca_cv_result* cv = bdpca_round_cv(round)) {
    for (size_t i = 0; i < bdpca_cv_candidate_count(cv); ++i)
      std::cout << "  cv beta=" << num(bdpca_cv_candidate(cv, i)) << " score=" << num(bdpca_cv_score(cv, i)) << "\n";
  }
  std::cout << "beta used: " << num(bdpca_round_beta_used(round)) << "\n";
  write_result(bdpca_round_result(round), out_path);
}

int run_aggregate(JobArgs& args, const std::vector<std::string>& paths, const std::string& out) {
  const auto shards = load_shards(paths);
  if (args.beta == "fan") {
    std::vector<SummaryPtr> owned;
    std::vector<const bdpca_summary*> list;
    for (const auto& s : shards) {
      bdpca_summary* sum = nullptr;
      check(bdpca_local_summary(s.get(), args.r, args.center, &sum));
      owned.emplace_back(sum);
      list.push_back(sum);
    }
    bdpca_result* res = nullptr;
    check(bdpca_aggregate_fan(list.data(), list.size(), args.r, &res));
    ResultPtr hold(res);
    write_result(res, out);
    return 0;
  }
  const bdpca_job job = args.job();
  const auto list = raw(shards);
  bdpca_round* round = nullptr;
  check(bdpca_run_in_process(list.data(), list.size(), &job, args.timeout_ms(), &round));
  RoundPtr hold(round);
  print_round(round, out);
  return 0;
}

int run_select(JobArgs& args, const std::vector<std::string>& paths) {
  const auto shards = load_shards(paths);
  std::vector<SummaryPtr> owned;
  std::vector<const bdpca_summary*> list;
  for (const auto& s : shards) {
    bdpca_summary* sum = nullptr;
    check(bdpca_local_summary(s.get(), args.q, args.center, &sum));
    owned.emplace_back(sum);
    list.push_back(sum);
  }
  const std::vector<double> cand = parse_doubles(args.candidates);
  bdpca_cv_result* cv = nullptr;
  check(bdpca_select_beta(list.data(), list.size(), args.r, args.cv_folds, args.cv_seed, cand.data(), cand.size(),
                          args.delta, &cv));
  CvPtr hold(cv);
  std::cout << "beta,score\n";
  for (size_t i = 0; i < bdpca_cv_candidate_count(cv); ++i)
    std::cout << num(bdpca_cv_candidate(cv, i)) << ',' << num(bdpca_cv_score(cv, i)) << '\n';
  std::cout << "selected beta: " << num(bdpca_cv_best_beta(cv)) << " (" << bdpca_cv_fold_count(cv) << " folds)\n";
  return 0;
}

struct PerturbArgs {
  size_t m = 5;
  size_t p = 10;
  size_t r = 5;
  size_t l = 6;
  std::string betas = "-1,0,0.5,1,2";
  std::string ds = "0,0.1,1,10,100,1000,100000000";
  uint64_t seed = 1;
  std::string out;
};

int run_perturb(const PerturbArgs& a) {
  std::vector<double> spectra(a.m * a.p);
  check(bdpca_sample_spectra(a.m, a.p, a.r, a.seed, spectra.data()));
  std::ofstream file;
  if (!a.out.empty()) {
    file.open(a.out);
    if (!file) throw CliError(BDPCA_ERR_IO, "cannot write " + a.out);
  }
  std::ostream& os = a.out.empty() ? std::cout : file;
  os << "beta,d_l,lambda_tilde_l,tau,order_invariant\n";
  for (double beta : parse_doubles(a.betas)) {
    for (double d : parse_doubles(a.ds)) {
      bdpca_tolerance t;
      check(bdpca_perturbation_tolerance(spectra.data(), a.m, a.p, a.r, a.l, d, beta, &t));
      os << num(beta) << ',' << num(d) << ',' << num(t.lambda_tilde_l) << ',' << num(t.tau) << ','
         << (t.order_invariant ? "true" : "false") << '\n';
    }
  }
  if (!a.out.empty()) std::cout << "wrote " << a.out << "\n";
  return 0;
}

struct SimArgs {
  size_t p = 200, n = 250, m = 5, r = 5, q = 10;
  std::string dist = "gaussian";
  std::string beta = "all";
  std::string candidates = "-1,0,1";
  size_t reps = 20;
  uint64_t seed = 1;
  double delta = 1e-5;
  size_t k_max = 15;
  size_t cv_folds = 5;
  uint64_t cv_seed = 0;
  bool paper_scale = false;
  bool center = false;
  bool weighted = false;
  unsigned threads = 0;
  std::string out;

  CLI::Option* p_opt = nullptr;
  CLI::Option* reps_opt = nullptr;
  CLI::Option* cv_seed_opt = nullptr;
  std::vector<double> candidate_values;

  void add(CLI::App* app) {
    p_opt = app->add_option("--p", p, "Dimension")->capture_default_str();
    app->add_option("--n", n, "Total sample size")->capture_default_str();
    app->add_option("--m", m, "Number of machines")->capture_default_str();
    app->add_option("--r", r, "Target rank")->capture_default_str();
    app->add_option("--q", q, "Local truncation rank")->capture_default_str();
    app->add_option("--dist", dist, "Sampling distribution")
        ->check(CLI::IsMember({"gaussian", "t3"}))
        ->capture_default_str();
    app->add_option("--beta", beta, "all, cv, fan, or a list of beta values")->capture_default_str();
    app->add_option("--candidates", candidates, "Candidate betas for cv")->capture_default_str();
    reps_opt = app->add_option("--reps", reps, "Replicates")->capture_default_str();
    app->add_option("--seed", seed, "Master seed")->capture_default_str();
    app->add_option("--delta", delta, "Regularization for negative beta")->capture_default_str();
    app->add_option("--k-max", k_max, "Largest k for rho_k")->capture_default_str();
    app->add_option("--cv-folds", cv_folds, "Cross-validation folds")->capture_default_str();
    cv_seed_opt = app->add_option("--cv-seed", cv_seed, "Fixed fold seed (default: per replicate)");
    app->add_flag("--paper-scale", paper_scale, "p = 500 and 100 replicates unless given explicitly");
    app->add_flag("--center", center, "Subtract each shard's mean");
    app->add_flag("--weighted", weighted, "Weight machines by sample count");
    app->add_option("--threads", threads, "Worker threads (0: all cores)")->capture_default_str();
  }

  bdpca_experiment spec() {
    bdpca_experiment s;
    bdpca_experiment_init(&s, paper_scale ? 1 : 0);
    if (!paper_scale || p_opt->count() > 0) s.p = p;
    if (!paper_scale || reps_opt->count() > 0) s.replicates = reps;
    s.n = n;
    s.m = m;
    s.r = r;
    s.q = q;
    check(bdpca_parse_distribution(dist.c_str(), &s.distribution));
    s.methods = beta.c_str();
    candidate_values = parse_doubles(candidates);
    s.candidates = candidate_values.data();
    s.n_candidates = candidate_values.size();
    s.cv_folds = cv_folds;
    s.has_cv_seed = cv_seed_opt->count() > 0;
    s.cv_seed = cv_seed;
    s.delta = delta;
    s.k_max = k_max;
    s.seed = seed;
    s.center = center;
    s.weighted = weighted;
    s.threads = threads;
    return s;
  }
};

int run_simulate(SimArgs& a) {
  const bdpca_experiment spec = a.spec();
  const std::string out = a.out.empty() ? "results/rho.csv" : a.out;
  bdpca_experiment_result* res = nullptr;
  check(bdpca_experiment_run(&spec, &res));
  ExperimentPtr hold(res);
  check(bdpca_experiment_write(res, out.c_str()));

  std::cout << "dist=" << a.dist << " p=" << spec.p << " n=" << spec.n << " m=" << spec.m
            << " replicates=" << spec.replicates << "\n";
  if (a.beta == "all" || a.beta.find("cv") != std::string::npos) {
    std::cout << "cv selections:";
    for (size_t i = 0; i < bdpca_experiment_frequency_count(res); ++i) {
      double beta = 0;
      size_t count = 0;
      check(bdpca_experiment_frequency(res, i, &beta, &count));
      std::cout << " beta=" << num(beta) << ":" << count;
    }
    std::cout << "\n";
  }
  std::cout << "method,k,mean_rho_k\n";
  for (size_t i = 0; i < bdpca_experiment_mean_count(res); ++i) {
    const char* method = nullptr;
    size_t k = 0;
    double mean = 0;
    check(bdpca_experiment_mean(res, i, &method, &k, &mean));
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", mean);
    std::cout << method << ',' << k << ',' << buf << '\n';
  }
  std::cout << "wrote " << out << " (" << bdpca_experiment_row_count(res) << " rows)\n";
  return 0;
}

int run_gen(SimArgs& a) {
  const bdpca_experiment spec = a.spec();
  const std::string out = a.out.empty() ? "data" : a.out;
  check(bdpca_generate(&spec, out.c_str()));
  std::cout << "wrote " << spec.m << " shards to " << out << "\n";
  return 0;
}

int run_serve(JobArgs& args, uint16_t port, const std::string& bind, size_t workers, const std::string& out) {
  bdpca_server* server = nullptr;
  check(bdpca_server_open(port, bind.c_str(), &server));
  ServerPtr hold(server);
  std::cout << "listening on " << bind << ":" << bdpca_server_port(server) << " for " << workers << " workers"
            << std::endl;
  const bdpca_job job = args.job();
  bdpca_round* round = nullptr;
  check(bdpca_server_serve(server, &job, workers, args.timeout_ms(), &round));
  RoundPtr hold_round(round);
  print_round(round, out);
  return 0;
}

void log_to_stderr(int level, const char* msg, void*) {
  std::cerr << (level == BDPCA_LOG_WARNING ? "warning: " : "info: ") << msg << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed PCA with matrix beta-mean aggregation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("bdpca ") + bdpca_version());

  SimArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Run the simulation study and write rho_k CSVs");
  sim.add(simulate);
  simulate->add_option("--out", sim.out, "Output CSV (default results/rho.csv)");

  SimArgs gen_args;
  auto* gen = app.add_subcommand("gen", "Generate a synthetic population and write shard files");
  gen_args.add(gen);
  gen->add_option("--out", gen_args.out, "Output directory (default data)");

  JobArgs agg_args;
  std::vector<std::string> agg_paths;
  std::string agg_out;
  auto* aggregate = app.add_subcommand("aggregate", "Aggregate shard files in one process");
  agg_args.add(aggregate, true);
  aggregate->add_option("shards", agg_paths, "Shard files (BDPX or CSV)")->required()->check(CLI::ExistingFile);
  aggregate->add_option("--out", agg_out, "CSV of the leading eigenvectors");

  JobArgs sel_args;
  std::vector<std::string> sel_paths;
  auto* select = app.add_subcommand("select-beta", "Cross-validate beta over shard files");
  sel_args.add(select, false);
  select->add_option("shards", sel_paths, "Shard files (BDPX or CSV)")->required()->check(CLI::ExistingFile);

  PerturbArgs pert;
  auto* perturb = app.add_subcommand("perturb", "Tabulate order-invariance tolerance on sampled spectra");
  perturb->add_option("--m", pert.m, "Machines")->capture_default_str();
  perturb->add_option("--p", pert.p, "Spectrum length")->capture_default_str();
  perturb->add_option("--r", pert.r, "Target rank")->capture_default_str();
  perturb->add_option("--l", pert.l, "Perturbed eigenvalue index (1-based, > r)")->capture_default_str();
  perturb->add_option("--beta", pert.betas, "Beta values")->capture_default_str();
  perturb->add_option("--d", pert.ds, "Perturbation sizes d_l")->capture_default_str();
  perturb->add_option("--seed", pert.seed, "Spectrum seed")->capture_default_str();
  perturb->add_option("--out", pert.out, "Output CSV (default stdout)");

  JobArgs serve_args;
  uint16_t port = 7878;
  std::string bind = "127.0.0.1";
  size_t workers = 5;
  std::string serve_out;
  auto* serve = app.add_subcommand("serve", "Coordinate one aggregation round over TCP");
  serve_args.add(serve, true);
  serve->add_option("--port", port, "Listen port (0: ephemeral)")->capture_default_str();
  serve->add_option("--bind", bind, "Listen address")->capture_default_str();
  serve->add_option("--workers", workers, "Expected workers")->capture_default_str();
  serve->add_option("--out", serve_out, "CSV of the leading eigenvectors");

  std::string host = "127.0.0.1";
  uint16_t worker_port = 7878;
  std::string worker_shard;
  double worker_timeout = 0;
  uint32_t worker_id = 1;
  auto* worker = app.add_subcommand("worker", "Send one shard summary to a coordinator");
  worker->add_option("shard", worker_shard, "Shard file (BDPX or CSV)")->required()->check(CLI::ExistingFile);
  worker->add_option("--host", host, "Coordinator host")->capture_default_str();
  worker->add_option("--port", worker_port, "Coordinator port")->capture_default_str();
  worker->add_option("--id", worker_id, "Machine id for CSV shards")->capture_default_str();
  worker->add_option("--timeout", worker_timeout, "Seconds to keep retrying");

  std::string plot_csv;
  std::string plot_out;
  auto* plot = app.add_subcommand("plot-script", "Write a gnuplot script for a rho_k CSV");
  plot->add_option("csv", plot_csv, "CSV written by simulate")->required();
  plot->add_option("--out", plot_out, "Script path (default <csv>.gp)");

  CLI11_PARSE(app, argc, argv);
  bdpca_set_log_callback(log_to_stderr, nullptr);

  try {
    if (*simulate) return run_simulate(sim);
    if (*gen) return run_gen(gen_args);
    if (*aggregate) return run_aggregate(agg_args, agg_paths, agg_out);
    if (*select) return run_select(sel_args, sel_paths);
    if (*perturb) return run_perturb(pert);
    if (*serve) return run_serve(serve_args, port, bind, workers, serve_out);
    if (*worker) {
      bdpca_shard* s = nullptr;
      check(bdpca_shard_read(worker_shard.c_str(), worker_id, &s));
      ShardPtr hold(s);
      size_t bytes = 0;
      const uint64_t ms = worker_timeout > 0 ? static_cast<uint64_t>(worker_timeout * 1000.0) : 0;
      check(bdpca_worker_run(host.c_str(), worker_port, s, ms, &bytes));
      std::cout << "sent " << bytes << " bytes\n";
      return 0;
    }
    if (*plot) {
      const std::string out = plot_out.empty() ? plot_csv + ".gp" : plot_out;
      check(bdpca_emit_plot_script(plot_csv.c_str(), out.c_str()));
      std::cout << "wrote " << out << "\n";
      return 0;
    }
  } catch (const CliError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.status;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return BDPCA_ERR_INTERNAL;
  }
  return 0;
}
