#ifndef BDPCA_EXPERIMENT_HPP
#define BDPCA_EXPERIMENT_HPP

#include "bdpca/simgen.hpp"
#include "bdpca/selection.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace bdpca {

struct Method {
  enum class Kind { Beta, Cv, Fan };
  Kind kind = Kind::Beta;
  double beta = 0;  // Kind::Beta only
  std::string name; // "beta=-1", "beta=cv", "fan", ...
};

// Comma-separated list of -1, 0, 1, any other number, cv, fan, or "all"
// (= -1,0,1,cv,fan).
std::vector<Method> parse_methods(const std::string& list);

// Shortest round-trip formatting used for beta values in names and CSVs.
std::string format_beta(double beta);

struct ExperimentSpec {
  Eigen::Index p = 200;
  Eigen::Index n = 250;
  std::size_t m = 5;
  Eigen::Index r = 5;
  Eigen::Index q = 10;
  Distribution distribution = Distribution::Gaussian;
  std::string methods = "all";
  std::vector<double> candidates = kDefaultCandidates;
  std::size_t cv_folds = 5;
  std::optional<std::uint64_t> cv_seed;  // default: derived per replicate
  double delta = 1e-5;
  std::size_t replicates = 20;
  Eigen::Index k_max = 15;
  std::uint64_t seed = 1;
  bool center = false;
  bool weighted = false;
  unsigned threads = 0;  // 0: hardware concurrency

  // p = 500 and 100 replicates; other settings already match.
  static ExperimentSpec paper_scale();
  void validate() const;
};

struct RhoRow {
  std::size_t replicate = 0;
  std::string method;
  std::optional<double> beta_used;  // empty for the projection baseline
  Eigen::Index k = 0;
  double rho = 0;
};

struct MeanRho {
  std::string method;
  Eigen::Index k = 0;
  double mean = 0;
};

struct ExperimentResult {
  ExperimentSpec spec;
  std::vector<RhoRow> rows;  // replicate, then method, then k order
  std::vector<std::pair<double, std::size_t>> cv_counts;  // per candidate, in candidate order
  std::vector<MeanRho> mean_rho;  // method order, then k
};

ExperimentResult run_experiment(const ExperimentSpec& spec);

// Header: replicate,method,beta_used,k,rho_k
void write_rho_csv(const ExperimentResult& res, const std::string& path);
// Header: dist,p,m,beta,count
void write_frequency_csv(const ExperimentResult& res, const std::string& path);
// Header: method,k,mean_rho_k
void write_mean_csv(const ExperimentResult& res, const std::string& path);

// Writes the main CSV plus summary_frequencies.csv and mean_rho.csv next to it.
void write_experiment_outputs(const ExperimentResult& res, const std::string& csv_path);

// Gnuplot script drawing one mean-rho_k curve per method found in the CSV.
// Throws ParseError for an empty or malformed CSV.
std::string plot_script(const std::string& csv_path);
void emit_plot_script(const std::string& csv_path, const std::string& script_path);

// Population, shards and truth for replicate 0 of `spec`: shard_<id>.bdpx,
// truth.csv (p x r planted basis), eigenvalues.csv.
void generate_dataset(const ExperimentSpec& spec, const std::string& out_dir);

}  // namespace bdpca

#endif  // BDPCA_EXPERIMENT_HPP
