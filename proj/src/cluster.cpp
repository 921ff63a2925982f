#include "bdpca/cluster.hpp"
#include "bdpca/error.hpp"
#include "bdpca/log.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <map>
#include <thread>

namespace bdpca {

LocalSummaryMsg worker_round(const DataShard& shard, const JobSpec& job) {
  job.validate();
  require(job.q <= shard.p(), "worker_round: q exceeds p");
  const TruncatedEig summary = local_summary(shard, job.q, job.center);
  return LocalSummaryMsg::from_summary(summary, shard.machine_id(), static_cast<std::uint32_t>(shard.n()));
}

CoordinatorOutcome coordinator_round(std::vector<LocalSummaryMsg> msgs, const JobSpec& job) {
  job.validate();
  require(!msgs.empty(), "coordinator_round: no messages");
  for (const auto& m : msgs) m.validate();
  std::sort(msgs.begin(), msgs.end(),
            [](const LocalSummaryMsg& a, const LocalSummaryMsg& b) { return a.machine_id < b.machine_id; });
  for (std::size_t i = 1; i < msgs.size(); ++i)
    require(msgs[i].machine_id != msgs[i - 1].machine_id,
            "coordinator_round: duplicate message from machine " + std::to_string(msgs[i].machine_id));

  CoordinatorOutcome out;
  std::vector<TruncatedEig> summaries;
  std::vector<double> weights;
  for (const auto& m : msgs) {
    require(m.p == msgs.front().p && m.q == msgs.front().q, "coordinator_round: messages disagree on p or q");
    require(m.q == job.q, "coordinator_round: message rank differs from the announced q");
    summaries.push_back(m.to_summary());
    weights.push_back(static_cast<double>(m.n_ell));
    out.machine_ids.push_back(m.machine_id);
    out.frame_bytes.push_back(kSummaryHeaderBytes + static_cast<std::size_t>(m.q) * (m.p + 1) * 8);
  }
  const std::span<const double> w = job.weighted ? std::span<const double>(weights) : std::span<const double>();
  const auto r = static_cast<Eigen::Index>(job.r);

  BetaConfig cfg;
  cfg.delta = job.delta;
  cfg.beta = job.beta;
  if (job.mode == JobSpec::Mode::Cv) {
    require(msgs.size() >= 2, "coordinator_round: cross-validation needs at least two machines");
    CvPlan plan = make_folds(msgs.size(), job.cv_folds, job.cv_seed);
    plan.candidates = job.candidates;
    std::vector<TruncatedEig> summaries_r;
    for (const auto& s : summaries) summaries_r.push_back(s.leading(r));
    out.cv = select_beta(summaries, summaries_r, plan, cfg);
    cfg.beta = out.cv->best_beta;
  }
  out.beta_used = cfg.beta;
  out.result = beta_aggregate(summaries, cfg, r, w);
  if (out.result.tie_warning) out.warnings.emplace_back("tie between eigenvalues r and r+1 of the aggregate");
  return out;
}

void FrameQueue::push(std::vector<std::uint8_t> frame) {
  {
    std::lock_guard<std::mutex> lock(mu_);
    frames_.push_back(std::move(frame));
  }
  cv_.notify_one();
}

std::optional<std::vector<std::uint8_t>> FrameQueue::pop_until(std::chrono::steady_clock::time_point deadline) {
  std::unique_lock<std::mutex> lock(mu_);
  if (!cv_.wait_until(lock, deadline, [this] { return !frames_.empty(); })) return std::nullopt;
  auto frame = std::move(frames_.front());
  frames_.pop_front();
  return frame;
}

Collected collect_frames(FrameQueue& queue, std::size_t expected, std::chrono::milliseconds timeout,
                         std::span<const std::uint32_t> expected_ids) {
  require(expected >= 1, "collect_frames: expected at least one worker");
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  std::map<std::uint32_t, std::pair<LocalSummaryMsg, std::size_t>> received;
  std::size_t failed = 0;
  while (received.size() + failed < expected) {
    auto frame = queue.pop_until(deadline);
    if (!frame) break;
    // An empty frame marks a worker that gave up without sending.
    if (frame->empty()) {
      ++failed;
      continue;
    }
    LocalSummaryMsg msg = decode(*frame);
    const std::uint32_t id = msg.machine_id;
    if (!received.emplace(id, std::make_pair(std::move(msg), frame->size())).second)
      fail(ErrorCode::InvalidInput, "second message from machine " + std::to_string(id) + " in one round");
  }

  Collected out;
  for (auto& [id, entry] : received) {
    out.msgs.push_back(std::move(entry.first));
    out.frame_bytes.push_back(entry.second);
  }
  for (std::uint32_t id : expected_ids)
    if (!received.count(id)) out.missing_ids.push_back(id);
  out.missing_count = expected > received.size() ? expected - received.size() : 0;

  if (received.empty()) fail(ErrorCode::Timeout, "no worker reported before the timeout");
  if (out.missing_count > 0) {
    const std::string msg = "only " + std::to_string(received.size()) + " of " + std::to_string(expected) +
                            " workers reported; aggregating over the received summaries";
    warn(msg);
    out.warnings.push_back(msg);
  }
  return out;
}

CoordinatorOutcome finish_round(Collected collected, const JobSpec& job) {
  CoordinatorOutcome out = coordinator_round(collected.msgs, job);
  out.frame_bytes = std::move(collected.frame_bytes);
  out.missing_ids = std::move(collected.missing_ids);
  out.missing_count = collected.missing_count;
  out.warnings.insert(out.warnings.begin(), collected.warnings.begin(), collected.warnings.end());
  return out;
}

std::chrono::milliseconds default_timeout() {
  if (const char* env = std::getenv("BDPCA_TIMEOUT_SECS")) {
    char* end = nullptr;
    const double secs = std::strtod(env, &end);
    if (end != env && secs > 0) return std::chrono::milliseconds(static_cast<long long>(secs * 1000.0));
    warn("ignoring invalid BDPCA_TIMEOUT_SECS value '" + std::string(env) + "'");
  }
  return std::chrono::seconds(30);
}

CoordinatorOutcome run_in_process(std::span<const DataShard> shards, const JobSpec& job,
                                  std::chrono::milliseconds timeout) {
  require(!shards.empty(), "run_in_process: no shards");
  job.validate();
  FrameQueue queue;
  std::vector<std::exception_ptr> errors(shards.size());
  std::vector<std::uint32_t> ids;
  for (const auto& s : shards) ids.push_back(s.machine_id());

  // Workers only see the encoded job, as they would over a socket.
  const std::vector<std::uint8_t> announcement = encode_job(job);
  std::vector<std::thread> workers;
  workers.reserve(shards.size());
  for (std::size_t i = 0; i < shards.size(); ++i) {
    workers.emplace_back([&, i] {
      try {
        const JobSpec received = decode_job(announcement);
        queue.push(encode(worker_round(shards[i], received)));
      } catch (...) {
        errors[i] = std::current_exception();
        queue.push({});
      }
    });
  }

  std::optional<Collected> collected;
  std::exception_ptr collect_error;
  try {
    collected = collect_frames(queue, shards.size(), timeout, ids);
  } catch (...) {
    collect_error = std::current_exception();
  }
  for (auto& t : workers) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  if (collect_error) std::rethrow_exception(collect_error);
  return finish_round(std::move(*collected), job);
}

}  // namespace bdpca
