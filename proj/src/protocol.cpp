#include "bdpca/bytes.hpp"
#include "bdpca/cluster.hpp"
#include "bdpca/error.hpp"

#include <zlib.h>

#include <cmath>
#include <string>

namespace bdpca {

namespace {

constexpr std::string_view kSummaryMagic = "BDPC";
constexpr std::string_view kJobMagic = "BDPJ";

std::vector<std::uint8_t> payload_bytes(const LocalSummaryMsg& msg) {
  std::vector<std::uint8_t> out;
  out.reserve((msg.values.size() + msg.vectors.size()) * 8);
  for (double v : msg.values) bytes::put_f64(out, v);
  for (double v : msg.vectors) bytes::put_f64(out, v);
  return out;
}

std::uint32_t crc32_of(std::span<const std::uint8_t> data) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks.
  constexpr std::size_t kChunk = 1u << 30;
  for (std::size_t pos = 0; pos < data.size(); pos += kChunk) {
    const std::size_t n = std::min(kChunk, data.size() - pos);
    crc = crc32(crc, data.data() + pos, static_cast<uInt>(n));
  }
  return static_cast<std::uint32_t>(crc);
}

[[noreturn]] void corrupt(std::uint32_t machine_id, const std::string& why) {
  fail(ErrorCode::CorruptMessage, "corrupt message from machine " + std::to_string(machine_id) + ": " + why);
}

bytes::Reader open_frame(std::span<const std::uint8_t> frame, std::string_view magic, const char* what) {
  bytes::Reader r(frame);
  if (!r.has(4)) fail(ErrorCode::CorruptMessage, std::string(what) + ": truncated length prefix");
  const auto length = r.uint<std::uint32_t>();
  if (r.remaining() != length) fail(ErrorCode::CorruptMessage, std::string(what) + ": frame length mismatch");
  if (!r.magic(magic)) fail(ErrorCode::CorruptMessage, std::string(what) + ": bad magic");
  if (!r.has(2)) fail(ErrorCode::CorruptMessage, std::string(what) + ": truncated header");
  const auto version = r.uint<std::uint16_t>();
  if (version != kProtocolVersion)
    fail(ErrorCode::CorruptMessage, std::string(what) + ": unsupported protocol version " + std::to_string(version));
  return r;
}

void patch_length(std::vector<std::uint8_t>& frame) {
  const auto length = static_cast<std::uint32_t>(frame.size() - 4);
  for (int i = 0; i < 4; ++i) frame[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(length >> (8 * i));
}

}  // namespace

LocalSummaryMsg LocalSummaryMsg::from_summary(const TruncatedEig& s, std::uint32_t machine_id, std::uint32_t n_ell) {
  LocalSummaryMsg msg;
  msg.machine_id = machine_id;
  msg.p = static_cast<std::uint32_t>(s.p());
  msg.q = static_cast<std::uint32_t>(s.q());
  msg.n_ell = n_ell;
  msg.values.assign(s.values().data(), s.values().data() + s.values().size());
  msg.vectors.assign(s.vectors().data(), s.vectors().data() + s.vectors().size());
  msg.checksum = msg.compute_checksum();
  return msg;
}

TruncatedEig LocalSummaryMsg::to_summary() const {
  validate();
  const Eigen::Map<const Eigen::VectorXd> vals(values.data(), q);
  const Eigen::Map<const Eigen::MatrixXd> vecs(vectors.data(), p, q);
  return TruncatedEig(vals, vecs);
}

std::uint32_t LocalSummaryMsg::compute_checksum() const {
  const auto payload = payload_bytes(*this);
  return crc32_of(payload);
}

void LocalSummaryMsg::validate() const {
  if (q == 0 || p == 0 || q > p) corrupt(machine_id, "invalid dimensions");
  if (values.size() != q) corrupt(machine_id, "eigenvalue count does not match q");
  if (vectors.size() != static_cast<std::size_t>(p) * q) corrupt(machine_id, "eigenvector block does not match p*q");
  for (std::size_t j = 0; j < values.size(); ++j) {
    if (!std::isfinite(values[j]) || values[j] < 0) corrupt(machine_id, "negative or non-finite eigenvalue");
    if (j > 0 && values[j] > values[j - 1]) corrupt(machine_id, "eigenvalues not sorted");
  }
  if (compute_checksum() != checksum) corrupt(machine_id, "checksum mismatch");
}

std::vector<std::uint8_t> encode(const LocalSummaryMsg& msg) {
  std::vector<std::uint8_t> frame;
  frame.reserve(kSummaryHeaderBytes + (msg.values.size() + msg.vectors.size()) * 8);
  bytes::put_uint<std::uint32_t>(frame, 0);
  bytes::put_magic(frame, kSummaryMagic);
  bytes::put_uint<std::uint16_t>(frame, kProtocolVersion);
  bytes::put_uint<std::uint32_t>(frame, msg.machine_id);
  bytes::put_uint<std::uint32_t>(frame, msg.p);
  bytes::put_uint<std::uint32_t>(frame, msg.q);
  bytes::put_uint<std::uint32_t>(frame, msg.n_ell);
  const auto payload = payload_bytes(msg);
  frame.insert(frame.end(), payload.begin(), payload.end());
  bytes::put_uint<std::uint32_t>(frame, msg.checksum);
  patch_length(frame);
  return frame;
}

LocalSummaryMsg decode(std::span<const std::uint8_t> frame) {
  bytes::Reader r = open_frame(frame, kSummaryMagic, "summary frame");
  if (!r.has(16)) fail(ErrorCode::CorruptMessage, "summary frame: truncated header");
  LocalSummaryMsg msg;
  msg.machine_id = r.uint<std::uint32_t>();
  msg.p = r.uint<std::uint32_t>();
  msg.q = r.uint<std::uint32_t>();
  msg.n_ell = r.uint<std::uint32_t>();
  const std::size_t floats = static_cast<std::size_t>(msg.q) * (static_cast<std::size_t>(msg.p) + 1);
  if (r.remaining() != floats * 8 + 4) corrupt(msg.machine_id, "payload size does not match p and q");
  const auto payload = r.slice(floats * 8);
  msg.values.resize(msg.q);
  msg.vectors.resize(static_cast<std::size_t>(msg.p) * msg.q);
  for (double& v : msg.values) v = r.f64();
  for (double& v : msg.vectors) v = r.f64();
  msg.checksum = r.uint<std::uint32_t>();
  if (crc32_of(payload) != msg.checksum) corrupt(msg.machine_id, "checksum mismatch");
  msg.validate();
  return msg;
}

void JobSpec::validate() const {
  require(r >= 1 && r <= q, "JobSpec: need 1 <= r <= q");
  require(delta > 0, "JobSpec: delta must be positive");
  require(std::isfinite(beta), "JobSpec: beta must be finite");
  if (mode == Mode::Cv) {
    require(cv_folds >= 2, "JobSpec: need at least two folds");
    require(!candidates.empty(), "JobSpec: empty candidate set");
  }
}

std::vector<std::uint8_t> encode_job(const JobSpec& job) {
  std::vector<std::uint8_t> frame;
  bytes::put_uint<std::uint32_t>(frame, 0);
  bytes::put_magic(frame, kJobMagic);
  bytes::put_uint<std::uint16_t>(frame, job.protocol_version);
  bytes::put_uint<std::uint32_t>(frame, job.r);
  bytes::put_uint<std::uint32_t>(frame, job.q);
  bytes::put_uint<std::uint8_t>(frame, static_cast<std::uint8_t>(job.mode));
  bytes::put_f64(frame, job.beta);
  bytes::put_f64(frame, job.delta);
  bytes::put_uint<std::uint8_t>(frame, job.center ? 1 : 0);
  bytes::put_uint<std::uint8_t>(frame, job.weighted ? 1 : 0);
  bytes::put_uint<std::uint32_t>(frame, job.cv_folds);
  bytes::put_uint<std::uint64_t>(frame, job.cv_seed);
  bytes::put_uint<std::uint32_t>(frame, static_cast<std::uint32_t>(job.candidates.size()));
  for (double c : job.candidates) bytes::put_f64(frame, c);
  patch_length(frame);
  return frame;
}

JobSpec decode_job(std::span<const std::uint8_t> frame) {
  bytes::Reader r = open_frame(frame, kJobMagic, "job frame");
  constexpr std::size_t kFixed = 4 + 4 + 1 + 8 + 8 + 1 + 1 + 4 + 8 + 4;
  if (!r.has(kFixed)) fail(ErrorCode::CorruptMessage, "job frame: truncated");
  JobSpec job;
  job.r = r.uint<std::uint32_t>();
  job.q = r.uint<std::uint32_t>();
  const auto mode = r.uint<std::uint8_t>();
  if (mode > 1) fail(ErrorCode::CorruptMessage, "job frame: unknown mode");
  job.mode = static_cast<JobSpec::Mode>(mode);
  job.beta = r.f64();
  job.delta = r.f64();
  job.center = r.uint<std::uint8_t>() != 0;
  job.weighted = r.uint<std::uint8_t>() != 0;
  job.cv_folds = r.uint<std::uint32_t>();
  job.cv_seed = r.uint<std::uint64_t>();
  const auto nc = r.uint<std::uint32_t>();
  if (r.remaining() != static_cast<std::size_t>(nc) * 8) fail(ErrorCode::CorruptMessage, "job frame: bad candidate list");
  job.candidates.resize(nc);
  for (double& c : job.candidates) c = r.f64();
  job.validate();
  return job;
}

}  // namespace bdpca
