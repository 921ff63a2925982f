#include "bdpca/bdpca.h"

#include "bdpca/aggregation.hpp"
#include "bdpca/cluster.hpp"
#include "bdpca/divergence.hpp"
#include "bdpca/error.hpp"
#include "bdpca/experiment.hpp"
#include "bdpca/log.hpp"
#include "bdpca/perturbation.hpp"
#include "bdpca/selection.hpp"

#include <cstring>
#include <memory>
#include <new>
#include <string>

struct bdpca_shard {
  bdpca::DataShard shard;
};

struct bdpca_summary {
  bdpca::TruncatedEig eig;
};

struct bdpca_result {
  bdpca::AggregateResult agg;
};

struct bdpca_cv_result {
  bdpca::CvResult cv;
};

struct bdpca_round {
  bdpca::CoordinatorOutcome outcome;
  bdpca_result result;
  std::unique_ptr<bdpca_cv_result> cv;
};

struct bdpca_server {
  std::unique_ptr<bdpca::TcpCoordinator> coordinator;
};

struct bdpca_experiment_result {
  bdpca::ExperimentResult res;
};

namespace {

thread_local std::string g_last_error;

int set_error(int status, const char* msg) {
  g_last_error = msg;
  return status;
}

template <class F>
int guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return BDPCA_OK;
  } catch (const bdpca::Error& e) {
    return set_error(static_cast<int>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(BDPCA_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(BDPCA_ERR_INTERNAL, e.what());
  } catch (...) {
    return set_error(BDPCA_ERR_INTERNAL, "unknown error");
  }
}

void need(const void* p, const char* what) {
  if (p == nullptr) bdpca::fail(bdpca::ErrorCode::InvalidInput, std::string(what) + " is null");
}

Eigen::Index as_index(size_t v) { return static_cast<Eigen::Index>(v); }

void copy_out(const Eigen::MatrixXd& m, double* out) { std::memcpy(out, m.data(), sizeof(double) * m.size()); }
void copy_out(const Eigen::VectorXd& v, double* out) { std::memcpy(out, v.data(), sizeof(double) * v.size()); }

std::vector<bdpca::TruncatedEig> gather(const bdpca_summary* const* summaries, size_t m) {
  need(summaries, "summaries");
  std::vector<bdpca::TruncatedEig> out;
  out.reserve(m);
  for (size_t i = 0; i < m; ++i) {
    need(summaries[i], "summary");
    out.push_back(summaries[i]->eig);
  }
  return out;
}

std::vector<double> candidate_list(const double* c, size_t n) {
  if (c == nullptr) return bdpca::kDefaultCandidates;
  return std::vector<double>(c, c + n);
}

bdpca::JobSpec to_job(const bdpca_job* job) {
  need(job, "job");
  bdpca::JobSpec j;
  j.r = job->r;
  j.q = job->q;
  if (job->mode != BDPCA_MODE_FIXED && job->mode != BDPCA_MODE_CV)
    bdpca::fail(bdpca::ErrorCode::InvalidInput, "unknown job mode");
  j.mode = job->mode == BDPCA_MODE_CV ? bdpca::JobSpec::Mode::Cv : bdpca::JobSpec::Mode::Fixed;
  j.beta = job->beta;
  j.delta = job->delta;
  j.center = job->center != 0;
  j.weighted = job->weighted != 0;
  j.cv_folds = job->cv_folds;
  j.cv_seed = job->cv_seed;
  j.candidates = candidate_list(job->candidates, job->n_candidates);
  return j;
}

std::chrono::milliseconds to_timeout(uint64_t ms) {
  return ms == 0 ? bdpca::default_timeout() : std::chrono::milliseconds(ms);
}

bdpca_round* wrap_round(bdpca::CoordinatorOutcome outcome) {
  auto round = std::make_unique<bdpca_round>();
  round->outcome = std::move(outcome);
  round->result.agg = round->outcome.result;
  if (round->outcome.cv) round->cv = std::make_unique<bdpca_cv_result>(bdpca_cv_result{*round->outcome.cv});
  return round.release();
}

bdpca::ExperimentSpec to_spec(const bdpca_experiment* s) {
  need(s, "experiment spec");
  bdpca::ExperimentSpec spec;
  spec.p = as_index(s->p);
  spec.n = as_index(s->n);
  spec.m = s->m;
  spec.r = as_index(s->r);
  spec.q = as_index(s->q);
  if (s->distribution != BDPCA_DIST_GAUSSIAN && s->distribution != BDPCA_DIST_T3)
    bdpca::fail(bdpca::ErrorCode::InvalidInput, "unknown distribution");
  spec.distribution = s->distribution == BDPCA_DIST_T3 ? bdpca::Distribution::StudentT3 : bdpca::Distribution::Gaussian;
  spec.methods = s->methods ? s->methods : "all";
  spec.candidates = candidate_list(s->candidates, s->n_candidates);
  spec.cv_folds = s->cv_folds;
  if (s->has_cv_seed) spec.cv_seed = s->cv_seed;
  spec.delta = s->delta;
  spec.replicates = s->replicates;
  spec.k_max = as_index(s->k_max);
  spec.seed = s->seed;
  spec.center = s->center != 0;
  spec.weighted = s->weighted != 0;
  spec.threads = s->threads;
  return spec;
}

struct LogTarget {
  bdpca_log_fn fn = nullptr;
  void* user = nullptr;
};

}  // namespace

extern "C" {

const char* bdpca_version(void) { return BDPCA_VERSION; }

const char* bdpca_status_name(int status) {
  if (status == BDPCA_OK) return "Ok";
  if (status == BDPCA_ERR_INTERNAL) return "Internal";
  if (status >= 1 && status <= 9) return bdpca::error_code_name(static_cast<bdpca::ErrorCode>(status));
  return "Unknown";
}

const char* bdpca_last_error(void) { return g_last_error.c_str(); }

void bdpca_set_log_callback(bdpca_log_fn fn, void* user) {
  if (fn == nullptr) {
    bdpca::set_log_sink({});
    return;
  }
  LogTarget target{fn, user};
  bdpca::set_log_sink([target](bdpca::LogLevel level, const std::string& msg) {
    target.fn(static_cast<int>(level), msg.c_str(), target.user);
  });
}

int bdpca_shard_create(size_t p, size_t n, const double* samples, uint32_t machine_id, bdpca_shard** out) {
  return guarded([&] {
    need(samples, "samples");
    need(out, "out");
    Eigen::MatrixXd x = Eigen::Map<const Eigen::MatrixXd>(samples, as_index(p), as_index(n));
    *out = new bdpca_shard{bdpca::DataShard(std::move(x), machine_id)};
  });
}

int bdpca_shard_read(const char* path, uint32_t csv_machine_id, bdpca_shard** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new bdpca_shard{bdpca::read_shard(path, csv_machine_id)};
  });
}

int bdpca_shard_write(const bdpca_shard* shard, const char* path) {
  return guarded([&] {
    need(shard, "shard");
    need(path, "path");
    bdpca::write_shard(shard->shard, path);
  });
}

int bdpca_shard_dims(const bdpca_shard* shard, size_t* p, size_t* n, uint32_t* machine_id) {
  return guarded([&] {
    need(shard, "shard");
    if (p) *p = static_cast<size_t>(shard->shard.p());
    if (n) *n = static_cast<size_t>(shard->shard.n());
    if (machine_id) *machine_id = shard->shard.machine_id();
  });
}

void bdpca_shard_free(bdpca_shard* shard) { delete shard; }

int bdpca_summary_create(size_t p, size_t q, const double* values, const double* vectors, bdpca_summary** out) {
  return guarded([&] {
    need(values, "values");
    need(vectors, "vectors");
    need(out, "out");
    Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(values, as_index(q));
    Eigen::MatrixXd g = Eigen::Map<const Eigen::MatrixXd>(vectors, as_index(p), as_index(q));
    *out = new bdpca_summary{bdpca::TruncatedEig(std::move(v), std::move(g))};
  });
}

int bdpca_local_summary(const bdpca_shard* shard, size_t q, int center, bdpca_summary** out) {
  return guarded([&] {
    need(shard, "shard");
    need(out, "out");
    *out = new bdpca_summary{bdpca::local_summary(shard->shard, as_index(q), center != 0)};
  });
}

int bdpca_summary_dims(const bdpca_summary* s, size_t* p, size_t* q) {
  return guarded([&] {
    need(s, "summary");
    if (p) *p = static_cast<size_t>(s->eig.p());
    if (q) *q = static_cast<size_t>(s->eig.q());
  });
}

int bdpca_summary_values(const bdpca_summary* s, double* out) {
  return guarded([&] {
    need(s, "summary");
    need(out, "out");
    copy_out(s->eig.values(), out);
  });
}

int bdpca_summary_vectors(const bdpca_summary* s, double* out) {
  return guarded([&] {
    need(s, "summary");
    need(out, "out");
    copy_out(s->eig.vectors(), out);
  });
}

void bdpca_summary_free(bdpca_summary* s) { delete s; }

void bdpca_beta_config_init(bdpca_beta_config* cfg) {
  if (cfg == nullptr) return;
  const bdpca::BetaConfig d;
  cfg->beta = d.beta;
  cfg->delta = d.delta;
  cfg->eigen_floor = d.eigen_floor;
}

int bdpca_aggregate_beta(const bdpca_summary* const* summaries, size_t m, const bdpca_beta_config* cfg, size_t r,
                         const double* weights, bdpca_result** out) {
  return guarded([&] {
    need(cfg, "config");
    need(out, "out");
    const auto list = gather(summaries, m);
    bdpca::BetaConfig c{cfg->beta, cfg->delta, cfg->eigen_floor};
    std::span<const double> w;
    if (weights) w = std::span<const double>(weights, m);
    *out = new bdpca_result{bdpca::beta_aggregate(list, c, as_index(r), w)};
  });
}

int bdpca_aggregate_fan(const bdpca_summary* const* summaries, size_t m, size_t r, bdpca_result** out) {
  return guarded([&] {
    need(out, "out");
    const auto list = gather(summaries, m);
    *out = new bdpca_result{bdpca::fan_aggregate(list, as_index(r))};
  });
}

int bdpca_result_dims(const bdpca_result* res, size_t* p, size_t* r) {
  return guarded([&] {
    need(res, "result");
    if (p) *p = static_cast<size_t>(res->agg.sigma_beta.dim());
    if (r) *r = static_cast<size_t>(res->agg.leading.q());
  });
}

int bdpca_result_sigma(const bdpca_result* res, double* out) {
  return guarded([&] {
    need(res, "result");
    need(out, "out");
    copy_out(res->agg.sigma_beta.matrix(), out);
  });
}

int bdpca_result_leading_values(const bdpca_result* res, double* out) {
  return guarded([&] {
    need(res, "result");
    need(out, "out");
    copy_out(res->agg.leading.values(), out);
  });
}

int bdpca_result_leading_vectors(const bdpca_result* res, double* out) {
  return guarded([&] {
    need(res, "result");
    need(out, "out");
    copy_out(res->agg.leading.vectors(), out);
  });
}

const char* bdpca_result_branch(const bdpca_result* res) {
  return res ? bdpca::branch_name(res->agg.branch) : "";
}

int bdpca_result_tie_warning(const bdpca_result* res) { return res && res->agg.tie_warning ? 1 : 0; }

void bdpca_result_free(bdpca_result* res) { delete res; }

int bdpca_divergence(const double* m1, const double* m2, size_t p, double beta, double* out) {
  return guarded([&] {
    need(m1, "m1");
    need(m2, "m2");
    need(out, "out");
    const bdpca::SymMatrix a(Eigen::Map<const Eigen::MatrixXd>(m1, as_index(p), as_index(p)));
    const bdpca::SymMatrix b(Eigen::Map<const Eigen::MatrixXd>(m2, as_index(p), as_index(p)));
    *out = bdpca::divergence(a, b, bdpca::DivergenceKind::for_beta(beta));
  });
}

int bdpca_select_beta(const bdpca_summary* const* summaries_q, size_t m, size_t r, size_t folds, uint64_t seed,
                      const double* candidates, size_t n_candidates, double delta, bdpca_cv_result** out) {
  return guarded([&] {
    need(out, "out");
    const auto sq = gather(summaries_q, m);
    std::vector<bdpca::TruncatedEig> sr;
    sr.reserve(sq.size());
    for (const auto& s : sq) sr.push_back(s.leading(as_index(r)));
    bdpca::CvPlan plan = bdpca::make_folds(m, folds, seed);
    plan.candidates = candidate_list(candidates, n_candidates);
    bdpca::BetaConfig cfg;
    cfg.delta = delta;
    *out = new bdpca_cv_result{bdpca::select_beta(sq, sr, plan, cfg)};
  });
}

size_t bdpca_cv_candidate_count(const bdpca_cv_result* cv) { return cv ? cv->cv.candidates.size() : 0; }

double bdpca_cv_candidate(const bdpca_cv_result* cv, size_t i) {
  return cv && i < cv->cv.candidates.size() ? cv->cv.candidates[i] : 0.0;
}

double bdpca_cv_score(const bdpca_cv_result* cv, size_t i) {
  return cv && i < cv->cv.scores.size() ? cv->cv.scores[i] : 0.0;
}

size_t bdpca_cv_fold_count(const bdpca_cv_result* cv) { return cv ? cv->cv.per_fold.size() : 0; }
double bdpca_cv_best_beta(const bdpca_cv_result* cv) { return cv ? cv->cv.best_beta : 0.0; }
size_t bdpca_cv_best_index(const bdpca_cv_result* cv) { return cv ? cv->cv.best_index : 0; }
void bdpca_cv_result_free(bdpca_cv_result* cv) { delete cv; }

int bdpca_perturbation_tolerance(const double* spectra, size_t m, size_t p, size_t r, size_t noise_index,
                                 double d_l, double beta, bdpca_tolerance* out) {
  return guarded([&] {
    need(spectra, "spectra");
    need(out, "out");
    bdpca::PerturbationScenario sc;
    for (size_t i = 0; i < m; ++i)
      sc.base_spectra.push_back(Eigen::Map<const Eigen::VectorXd>(spectra + i * p, as_index(p)));
    sc.r = as_index(r);
    sc.noise_index = as_index(noise_index);
    sc.d_l = d_l;
    sc.beta = beta;
    const bdpca::ToleranceReport rep = bdpca::tolerance(sc);
    out->tau = rep.tau;
    out->lambda_tilde_l = rep.lambda_tilde_l;
    out->order_invariant = rep.order_invariant ? 1 : 0;
    out->perturbed_supremum = rep.perturbed_supremum;
  });
}

int bdpca_sample_spectra(size_t m, size_t p, size_t r, uint64_t seed, double* out) {
  return guarded([&] {
    need(out, "out");
    const auto spectra = bdpca::sample_spectra(m, as_index(p), as_index(r), seed);
    for (size_t i = 0; i < spectra.size(); ++i) copy_out(spectra[i], out + i * p);
  });
}

void bdpca_job_init(bdpca_job* job) {
  if (job == nullptr) return;
  const bdpca::JobSpec d;
  job->r = d.r;
  job->q = d.q;
  job->mode = BDPCA_MODE_FIXED;
  job->beta = d.beta;
  job->delta = d.delta;
  job->center = d.center;
  job->weighted = d.weighted;
  job->cv_folds = d.cv_folds;
  job->cv_seed = d.cv_seed;
  job->candidates = nullptr;
  job->n_candidates = 0;
}

int bdpca_run_in_process(const bdpca_shard* const* shards, size_t m, const bdpca_job* job, uint64_t timeout_ms,
                         bdpca_round** out) {
  return guarded([&] {
    need(shards, "shards");
    need(out, "out");
    std::vector<bdpca::DataShard> list;
    for (size_t i = 0; i < m; ++i) {
      need(shards[i], "shard");
      list.push_back(shards[i]->shard);
    }
    *out = wrap_round(bdpca::run_in_process(list, to_job(job), to_timeout(timeout_ms)));
  });
}

const bdpca_result* bdpca_round_result(const bdpca_round* round) { return round ? &round->result : nullptr; }
const bdpca_cv_result* bdpca_round_cv(const bdpca_round* round) { return round ? round->cv.get() : nullptr; }
double bdpca_round_beta_used(const bdpca_round* round) { return round ? round->outcome.beta_used : 0.0; }

size_t bdpca_round_contributor_count(const bdpca_round* round) {
  return round ? round->outcome.machine_ids.size() : 0;
}

uint32_t bdpca_round_contributor_id(const bdpca_round* round, size_t i) {
  return round && i < round->outcome.machine_ids.size() ? round->outcome.machine_ids[i] : 0;
}

size_t bdpca_round_frame_bytes(const bdpca_round* round, size_t i) {
  return round && i < round->outcome.frame_bytes.size() ? round->outcome.frame_bytes[i] : 0;
}

size_t bdpca_round_missing_count(const bdpca_round* round) { return round ? round->outcome.missing_count : 0; }

void bdpca_round_free(bdpca_round* round) { delete round; }

int bdpca_server_open(uint16_t port, const char* bind_address, bdpca_server** out) {
  return guarded([&] {
    need(out, "out");
    auto server = std::make_unique<bdpca_server>();
    server->coordinator = std::make_unique<bdpca::TcpCoordinator>(port, bind_address ? bind_address : "127.0.0.1");
    *out = server.release();
  });
}

uint16_t bdpca_server_port(const bdpca_server* server) { return server ? server->coordinator->port() : 0; }

int bdpca_server_serve(bdpca_server* server, const bdpca_job* job, size_t expected_workers, uint64_t timeout_ms,
                       bdpca_round** out) {
  return guarded([&] {
    need(server, "server");
    need(out, "out");
    *out = wrap_round(server->coordinator->serve(to_job(job), expected_workers, to_timeout(timeout_ms)));
  });
}

void bdpca_server_close(bdpca_server* server) { delete server; }

int bdpca_worker_run(const char* host, uint16_t port, const bdpca_shard* shard, uint64_t timeout_ms,
                     size_t* frame_bytes) {
  return guarded([&] {
    need(host, "host");
    need(shard, "shard");
    const bdpca::LocalSummaryMsg sent = bdpca::run_tcp_worker(host, port, shard->shard, to_timeout(timeout_ms));
    if (frame_bytes) *frame_bytes = bdpca::encode(sent).size();
  });
}

void bdpca_experiment_init(bdpca_experiment* spec, int paper_scale) {
  if (spec == nullptr) return;
  const bdpca::ExperimentSpec d = paper_scale ? bdpca::ExperimentSpec::paper_scale() : bdpca::ExperimentSpec{};
  spec->p = static_cast<size_t>(d.p);
  spec->n = static_cast<size_t>(d.n);
  spec->m = d.m;
  spec->r = static_cast<size_t>(d.r);
  spec->q = static_cast<size_t>(d.q);
  spec->distribution = BDPCA_DIST_GAUSSIAN;
  spec->methods = "all";
  spec->candidates = nullptr;
  spec->n_candidates = 0;
  spec->cv_folds = d.cv_folds;
  spec->has_cv_seed = 0;
  spec->cv_seed = 0;
  spec->delta = d.delta;
  spec->replicates = d.replicates;
  spec->k_max = static_cast<size_t>(d.k_max);
  spec->seed = d.seed;
  spec->center = d.center;
  spec->weighted = d.weighted;
  spec->threads = d.threads;
}

int bdpca_parse_distribution(const char* name, int* out) {
  return guarded([&] {
    need(name, "name");
    need(out, "out");
    *out = bdpca::parse_distribution(name) == bdpca::Distribution::StudentT3 ? BDPCA_DIST_T3 : BDPCA_DIST_GAUSSIAN;
  });
}

int bdpca_experiment_run(const bdpca_experiment* spec, bdpca_experiment_result** out) {
  return guarded([&] {
    need(out, "out");
    *out = new bdpca_experiment_result{bdpca::run_experiment(to_spec(spec))};
  });
}

int bdpca_experiment_write(const bdpca_experiment_result* res, const char* csv_path) {
  return guarded([&] {
    need(res, "result");
    need(csv_path, "path");
    bdpca::write_experiment_outputs(res->res, csv_path);
  });
}

size_t bdpca_experiment_row_count(const bdpca_experiment_result* res) { return res ? res->res.rows.size() : 0; }

size_t bdpca_experiment_frequency_count(const bdpca_experiment_result* res) {
  return res ? res->res.cv_counts.size() : 0;
}

int bdpca_experiment_frequency(const bdpca_experiment_result* res, size_t i, double* beta, size_t* count) {
  return guarded([&] {
    need(res, "result");
    bdpca::require(i < res->res.cv_counts.size(), "frequency index out of range");
    if (beta) *beta = res->res.cv_counts[i].first;
    if (count) *count = res->res.cv_counts[i].second;
  });
}

size_t bdpca_experiment_mean_count(const bdpca_experiment_result* res) { return res ? res->res.mean_rho.size() : 0; }

int bdpca_experiment_mean(const bdpca_experiment_result* res, size_t i, const char** method, size_t* k,
                          double* mean_rho) {
  return guarded([&] {
    need(res, "result");
    bdpca::require(i < res->res.mean_rho.size(), "mean index out of range");
    const auto& row = res->res.mean_rho[i];
    if (method) *method = row.method.c_str();
    if (k) *k = static_cast<size_t>(row.k);
    if (mean_rho) *mean_rho = row.mean;
  });
}

void bdpca_experiment_result_free(bdpca_experiment_result* res) { delete res; }

int bdpca_generate(const bdpca_experiment* spec, const char* out_dir) {
  return guarded([&] {
    need(out_dir, "out_dir");
    bdpca::generate_dataset(to_spec(spec), out_dir);
  });
}

int bdpca_emit_plot_script(const char* csv_path, const char* script_path) {
  return guarded([&] {
    need(csv_path, "csv_path");
    need(script_path, "script_path");
    bdpca::emit_plot_script(csv_path, script_path);
  });
}

}  // extern "C"
