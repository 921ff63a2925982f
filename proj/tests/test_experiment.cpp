#include "doctest.h"

#include "bdpca/error.hpp"
#include "bdpca/experiment.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

using namespace bdpca;
namespace fs = std::filesystem;

namespace {

ExperimentSpec small_spec() {
  ExperimentSpec s;
  s.p = 20;
  s.n = 120;
  s.m = 4;
  s.r = 3;
  s.q = 6;
  s.replicates = 3;
  s.k_max = 8;
  s.cv_folds = 4;
  s.distribution = Distribution::StudentT3;
  s.seed = 5;
  return s;
}

fs::path temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("bdpca_exp_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::InvalidInput;
}

}  // namespace

TEST_CASE("parse_methods") {
  const auto all = parse_methods("all");
  REQUIRE(all.size() == 5);
  CHECK(all[0].name == "beta=-1");
  CHECK(all[1].name == "beta=0");
  CHECK(all[2].name == "beta=1");
  CHECK(all[3].kind == Method::Kind::Cv);
  CHECK(all[3].name == "beta=cv");
  CHECK(all[4].kind == Method::Kind::Fan);

  const auto some = parse_methods("0.5, fan,0.5,cv");
  REQUIRE(some.size() == 3);
  CHECK(some[0].beta == 0.5);
  CHECK(some[0].name == "beta=0.5");
  CHECK(some[1].name == "fan");

  CHECK(code_of([] { parse_methods("beta"); }) == ErrorCode::InvalidInput);
  CHECK(code_of([] { parse_methods(""); }) == ErrorCode::InvalidInput);
  CHECK(format_beta(-1) == "-1");
  CHECK(format_beta(0.25) == "0.25");
}

TEST_CASE("single machine at full rank and full k gives rho = 1") {
  ExperimentSpec s;
  s.p = 6;
  s.n = 40;
  s.m = 1;
  s.r = 2;
  s.q = 6;
  s.k_max = 6;
  s.replicates = 1;
  s.methods = "1";
  const ExperimentResult res = run_experiment(s);
  const auto last = std::find_if(res.rows.begin(), res.rows.end(), [](const RhoRow& r) { return r.k == 6; });
  REQUIRE(last != res.rows.end());
  CHECK(last->rho == doctest::Approx(1).epsilon(1e-12));
  CHECK(last->beta_used == 1.0);
}

TEST_CASE("rows cover replicates, methods and k; rho stays in [0, 1]") {
  const ExperimentSpec s = small_spec();
  const ExperimentResult res = run_experiment(s);
  // 5 methods, k = 3..8
  CHECK(res.rows.size() == 3 * 5 * 6);
  for (const auto& row : res.rows) {
    CHECK(row.rho >= 0);
    CHECK(row.rho <= 1 + 1e-12);
    CHECK(row.k >= 3);
    CHECK(row.k <= 8);
    CHECK(row.beta_used.has_value() == (row.method != "fan"));
  }
  std::size_t picks = 0;
  for (const auto& [beta, count] : res.cv_counts) picks += count;
  CHECK(picks == 3);
  CHECK(res.mean_rho.size() == 5 * 6);

  std::map<std::pair<std::string, Eigen::Index>, double> sums;
  for (const auto& row : res.rows) sums[{row.method, row.k}] += row.rho;
  for (const auto& m : res.mean_rho) CHECK(m.mean == doctest::Approx(sums[{m.method, m.k}] / 3).epsilon(1e-14));
}

TEST_CASE("results do not depend on the thread count") {
  ExperimentSpec a = small_spec();
  a.threads = 1;
  ExperimentSpec b = small_spec();
  b.threads = 3;
  const auto ra = run_experiment(a);
  const auto rb = run_experiment(b);
  REQUIRE(ra.rows.size() == rb.rows.size());
  for (std::size_t i = 0; i < ra.rows.size(); ++i) {
    CHECK(ra.rows[i].method == rb.rows[i].method);
    CHECK(ra.rows[i].rho == rb.rows[i].rho);
  }
}

TEST_CASE("CSV outputs and byte-identical reruns") {
  const fs::path dir = temp_dir("csv");
  const ExperimentSpec s = small_spec();
  write_experiment_outputs(run_experiment(s), (dir / "a" / "rho.csv").string());
  write_experiment_outputs(run_experiment(s), (dir / "b" / "rho.csv").string());
  for (const char* name : {"rho.csv", "summary_frequencies.csv", "mean_rho.csv"})
    CHECK(slurp(dir / "a" / name) == slurp(dir / "b" / name));

  const auto rho = lines_of(slurp(dir / "a" / "rho.csv"));
  REQUIRE(rho.size() == 1 + 90);
  CHECK(rho[0] == "replicate,method,beta_used,k,rho_k");
  const auto freq = lines_of(slurp(dir / "a" / "summary_frequencies.csv"));
  REQUIRE(freq.size() == 4);
  CHECK(freq[0] == "dist,p,m,beta,count");
  CHECK(freq[1].rfind("t3,20,4,-1,", 0) == 0);
  CHECK(lines_of(slurp(dir / "a" / "mean_rho.csv"))[0] == "method,k,mean_rho_k");
  bool fan_na = false;
  for (const auto& line : rho) fan_na = fan_na || line.find(",fan,NA,") != std::string::npos;
  CHECK(fan_na);
  fs::remove_all(dir);
}

TEST_CASE("plot script") {
  const fs::path dir = temp_dir("plot");
  ExperimentSpec s = small_spec();
  s.replicates = 1;
  const std::string csv = (dir / "rho.csv").string();
  write_experiment_outputs(run_experiment(s), csv);
  const std::string script = plot_script(csv);
  CHECK(script.find("set datafile separator \",\"") != std::string::npos);
  for (const char* m : {"beta=-1", "beta=0", "beta=1", "beta=cv", "fan"})
    CHECK(script.find("\"" + std::string(m) + "\"") != std::string::npos);

  s.methods = "0";
  const std::string one = (dir / "one.csv").string();
  write_rho_csv(run_experiment(s), one);
  const std::string single = plot_script(one);
  CHECK(single.find("beta=0") != std::string::npos);
  CHECK(single.find("fan") == std::string::npos);

  const fs::path empty = dir / "empty.csv";
  std::ofstream(empty).close();
  CHECK(code_of([&] { plot_script(empty.string()); }) == ErrorCode::ParseError);
  const fs::path header_only = dir / "header.csv";
  std::ofstream(header_only) << "replicate,method,beta_used,k,rho_k\n";
  CHECK(code_of([&] { plot_script(header_only.string()); }) == ErrorCode::ParseError);
  const fs::path junk = dir / "junk.csv";
  std::ofstream(junk) << "replicate,method,beta_used,k,rho_k\n0,fan\n";
  CHECK(code_of([&] { plot_script(junk.string()); }) == ErrorCode::ParseError);

  emit_plot_script(csv, (dir / "rho.gp").string());
  CHECK(slurp(dir / "rho.gp") == script);
  fs::remove_all(dir);
}

TEST_CASE("generate_dataset writes readable shards and the planted basis") {
  const fs::path dir = temp_dir("gen");
  const ExperimentSpec s = small_spec();
  generate_dataset(s, dir.string());
  Eigen::Index total = 0;
  for (std::uint32_t id = 1; id <= 4; ++id) {
    char name[32];
    std::snprintf(name, sizeof name, "shard_%03u.bdpx", id);
    const DataShard shard = read_shard((dir / name).string());
    CHECK(shard.machine_id() == id);
    CHECK(shard.p() == 20);
    total += shard.n();
  }
  CHECK(total == 120);
  CHECK(lines_of(slurp(dir / "truth.csv")).size() >= 20);
  CHECK(fs::exists(dir / "eigenvalues.csv"));
  fs::remove_all(dir);
}

TEST_CASE("validation and full-scale settings") {
  const ExperimentSpec full = ExperimentSpec::paper_scale();
  CHECK(full.p == 500);
  CHECK(full.replicates == 100);
  CHECK(full.q == 10);
  CHECK(full.delta == 1e-5);
  ExperimentSpec bad = small_spec();
  bad.q = 2;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = small_spec();
  bad.k_max = 2;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = small_spec();
  bad.methods = "nope";
  CHECK_THROWS_AS(run_experiment(bad), Error);
}
