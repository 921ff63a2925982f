#ifndef BDPCA_CLUSTER_HPP
#define BDPCA_CLUSTER_HPP

#include "bdpca/aggregation.hpp"
#include "bdpca/local_pca.hpp"
#include "bdpca/selection.hpp"

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bdpca {

inline constexpr std::uint16_t kProtocolVersion = 1;

// Summary frame layout (little-endian):
//   u32 frame_length (bytes after this field)
//   "BDPC" u16 version u32 machine_id u32 p u32 q u32 n_ell
//   f64[q] values  f64[p*q] vectors (column-major)
//   u32 crc32 of the float64 payload
inline constexpr std::size_t kSummaryHeaderBytes = 4 + 4 + 2 + 4 * 4 + 4;

struct LocalSummaryMsg {
  std::uint32_t machine_id = 0;
  std::uint32_t p = 0;
  std::uint32_t q = 0;
  std::uint32_t n_ell = 0;
  std::vector<double> values;
  std::vector<double> vectors;
  std::uint32_t checksum = 0;

  static LocalSummaryMsg from_summary(const TruncatedEig& s, std::uint32_t machine_id, std::uint32_t n_ell);
  TruncatedEig to_summary() const;
  std::uint32_t compute_checksum() const;
  // Lengths, eigenvalue order and checksum; CorruptMessage on failure.
  void validate() const;

  friend bool operator==(const LocalSummaryMsg&, const LocalSummaryMsg&) = default;
};

std::vector<std::uint8_t> encode(const LocalSummaryMsg& msg);
// `frame` includes the u32 length prefix.
LocalSummaryMsg decode(std::span<const std::uint8_t> frame);

struct JobSpec {
  enum class Mode : std::uint8_t { Fixed = 0, Cv = 1 };

  std::uint32_t r = 5;
  std::uint32_t q = 10;
  Mode mode = Mode::Fixed;
  double beta = 1.0;          // used when mode == Fixed
  double delta = 1e-5;
  bool center = false;        // workers subtract the shard mean
  bool weighted = false;      // weight machines by n_ell instead of 1/m
  std::uint32_t cv_folds = 5;
  std::uint64_t cv_seed = 0;
  std::vector<double> candidates = kDefaultCandidates;
  std::uint16_t protocol_version = kProtocolVersion;

  void validate() const;
  friend bool operator==(const JobSpec&, const JobSpec&) = default;
};

// Job announcement frame: u32 length, "BDPJ", u16 version, then the fields
// of JobSpec in declared order.
std::vector<std::uint8_t> encode_job(const JobSpec& job);
JobSpec decode_job(std::span<const std::uint8_t> frame);

// Local step: covariance, top-q eigenpairs, one message.
LocalSummaryMsg worker_round(const DataShard& shard, const JobSpec& job);

struct CoordinatorOutcome {
  AggregateResult result;
  double beta_used = 0;
  std::optional<CvResult> cv;
  std::vector<std::uint32_t> machine_ids;  // contributors, ascending
  std::vector<std::uint32_t> missing_ids;  // expected but not received
  std::size_t missing_count = 0;
  std::vector<std::size_t> frame_bytes;    // per contributor, same order as machine_ids
  std::vector<std::string> warnings;
};

// Central step. Messages are sorted by machine_id before reduction so the
// result does not depend on arrival order. In cv mode the rank-r validation
// summaries are the leading r columns of each message.
CoordinatorOutcome coordinator_round(std::vector<LocalSummaryMsg> msgs, const JobSpec& job);

// Thread-safe queue of raw frames between transports and the coordinator.
class FrameQueue {
 public:
  void push(std::vector<std::uint8_t> frame);
  std::optional<std::vector<std::uint8_t>> pop_until(std::chrono::steady_clock::time_point deadline);

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::vector<std::uint8_t>> frames_;
};

struct Collected {
  std::vector<LocalSummaryMsg> msgs;
  std::vector<std::size_t> frame_bytes;  // same order as msgs
  std::vector<std::uint32_t> missing_ids;
  std::size_t missing_count = 0;
  std::vector<std::string> warnings;
};

// Pops frames until `expected` distinct machines have reported or the timeout
// lapses. A second frame from one machine is rejected (InvalidInput); a
// corrupt frame throws CorruptMessage. If `expected_ids` is non-empty it
// names the machines that should report.
Collected collect_frames(FrameQueue& queue, std::size_t expected, std::chrono::milliseconds timeout,
                         std::span<const std::uint32_t> expected_ids = {});

// Aggregation over received messages plus straggler bookkeeping.
CoordinatorOutcome finish_round(Collected collected, const JobSpec& job);

// BDPCA_TIMEOUT_SECS if set, else 30 s.
std::chrono::milliseconds default_timeout();

// In-process cluster: one thread per shard runs worker_round and posts the
// encoded frame; the caller acts as coordinator.
CoordinatorOutcome run_in_process(std::span<const DataShard> shards, const JobSpec& job,
                                  std::chrono::milliseconds timeout = default_timeout());

// TCP coordinator. Each accepted worker receives the job frame and replies
// with exactly one summary frame.
class TcpCoordinator {
 public:
  explicit TcpCoordinator(std::uint16_t port = 0, const std::string& bind_address = "127.0.0.1");
  ~TcpCoordinator();
  TcpCoordinator(const TcpCoordinator&) = delete;
  TcpCoordinator& operator=(const TcpCoordinator&) = delete;

  std::uint16_t port() const { return port_; }

  CoordinatorOutcome serve(const JobSpec& job, std::size_t expected_workers,
                           std::chrono::milliseconds timeout = default_timeout());

 private:
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
};

// Connects (retrying until the timeout), receives the job, sends one summary.
// Returns the message that was sent.
LocalSummaryMsg run_tcp_worker(const std::string& host, std::uint16_t port, const DataShard& shard,
                               std::chrono::milliseconds timeout = default_timeout());

}  // namespace bdpca

#endif  // BDPCA_CLUSTER_HPP
