#include "bdpca/local_pca.hpp"
#include "bdpca/bytes.hpp"
#include "bdpca/error.hpp"
#include "bdpca/log.hpp"

#include <charconv>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

namespace bdpca {

namespace {

constexpr std::string_view kShardMagic = "BDPX";
constexpr std::uint32_t kShardVersion = 1;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool parse_row(std::string_view line, std::vector<double>& out) {
  out.clear();
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    const std::string_view tok =
        trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    double v = 0.0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (tok.empty() || res.ec != std::errc() || res.ptr != tok.data() + tok.size()) return false;
    out.push_back(v);
    if (comma == std::string_view::npos) return true;
    start = comma + 1;
  }
}

DataShard read_csv_shard(const std::string& text, const std::string& path, std::uint32_t machine_id) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::vector<double>> rows;
  std::vector<double> row;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    if (!parse_row(line, row)) {
      if (rows.empty() && line_no == 1) continue;  // header
      fail(ErrorCode::ParseError, path + ":" + std::to_string(line_no) + ": malformed CSV row");
    }
    if (!rows.empty() && row.size() != rows.front().size())
      fail(ErrorCode::ParseError, path + ":" + std::to_string(line_no) + ": inconsistent column count");
    rows.push_back(row);
  }
  if (rows.empty()) fail(ErrorCode::ParseError, path + ": no samples");

  const auto p = static_cast<Eigen::Index>(rows.front().size());
  Eigen::MatrixXd samples(p, static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (Eigen::Index j = 0; j < p; ++j) samples(j, static_cast<Eigen::Index>(i)) = rows[i][static_cast<std::size_t>(j)];
  return DataShard(std::move(samples), machine_id);
}

}  // namespace

DataShard::DataShard(Eigen::MatrixXd samples, std::uint32_t machine_id)
    : samples_(std::move(samples)), machine_id_(machine_id) {
  require(samples_.rows() >= 1, "DataShard: p must be positive");
  require(samples_.cols() >= 1, "DataShard: n_ell must be positive");
  require(samples_.allFinite(), "DataShard: non-finite sample value");
}

TruncatedEig::TruncatedEig(Eigen::VectorXd values, Eigen::MatrixXd vectors)
    : values_(std::move(values)), vectors_(std::move(vectors)) {
  require(values_.size() == vectors_.cols(), "TruncatedEig: values/vectors size mismatch");
  require(vectors_.cols() <= vectors_.rows(), "TruncatedEig: q exceeds p");
  require(values_.allFinite() && vectors_.allFinite(), "TruncatedEig: non-finite entry");
  for (Eigen::Index j = 0; j < values_.size(); ++j) {
    require(values_[j] >= 0.0, "TruncatedEig: negative eigenvalue");
    require(j == 0 || values_[j] <= values_[j - 1], "TruncatedEig: eigenvalues not sorted");
  }
}

TruncatedEig TruncatedEig::leading(Eigen::Index r) const {
  require(r >= 1 && r <= q(), "TruncatedEig::leading: rank out of range");
  return TruncatedEig(values_.head(r), vectors_.leftCols(r));
}

SymMatrix TruncatedEig::reconstruct() const {
  return SymMatrix(vectors_ * values_.asDiagonal() * vectors_.transpose());
}

SymMatrix sample_covariance(const DataShard& shard, bool center) {
  const double n = static_cast<double>(shard.n());
  if (!center) return SymMatrix(shard.samples() * shard.samples().transpose() / n);
  const Eigen::MatrixXd centered = shard.samples().colwise() - shard.samples().rowwise().mean();
  return SymMatrix(centered * centered.transpose() / n);
}

TruncatedEig truncated_eig(const SymMatrix& m, Eigen::Index q) {
  require(q >= 1 && q <= m.dim(), "truncated_eig: q must lie in [1, p]");
  const EigenSystem es = eig_sym(m);
  return TruncatedEig(es.values.head(q).cwiseMax(0.0), es.vectors.leftCols(q));
}

TruncatedEig local_summary(const DataShard& shard, Eigen::Index q, bool center) {
  if (q > shard.n()) {
    warn("machine " + std::to_string(shard.machine_id()) + ": q=" + std::to_string(q) +
         " exceeds local sample count " + std::to_string(shard.n()) +
         "; trailing eigenvalues are numerically zero");
  }
  return truncated_eig(sample_covariance(shard, center), q);
}

DataShard read_shard(const std::string& path, std::uint32_t csv_machine_id) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open shard file " + path);
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (text.compare(0, kShardMagic.size(), kShardMagic) != 0) return read_csv_shard(text, path, csv_machine_id);

  const std::span<const std::uint8_t> data(reinterpret_cast<const std::uint8_t*>(text.data()), text.size());
  bytes::Reader r(data);
  r.magic(kShardMagic);
  if (!r.has(16)) fail(ErrorCode::ParseError, path + ": truncated shard header");
  const auto version = r.uint<std::uint32_t>();
  const auto p = r.uint<std::uint32_t>();
  const auto n = r.uint<std::uint32_t>();
  const auto machine_id = r.uint<std::uint32_t>();
  if (version != kShardVersion) fail(ErrorCode::ParseError, path + ": unsupported shard version");
  const std::size_t count = static_cast<std::size_t>(p) * n;
  if (r.remaining() != count * 8) fail(ErrorCode::ParseError, path + ": shard payload size mismatch");
  Eigen::MatrixXd samples(p, n);
  for (std::size_t i = 0; i < count; ++i) samples.data()[i] = r.f64();
  return DataShard(std::move(samples), machine_id);
}

void write_shard(const DataShard& shard, const std::string& path) {
  std::vector<std::uint8_t> buf;
  buf.reserve(20 + static_cast<std::size_t>(shard.samples().size()) * 8);
  bytes::put_magic(buf, kShardMagic);
  bytes::put_uint<std::uint32_t>(buf, kShardVersion);
  bytes::put_uint<std::uint32_t>(buf, static_cast<std::uint32_t>(shard.p()));
  bytes::put_uint<std::uint32_t>(buf, static_cast<std::uint32_t>(shard.n()));
  bytes::put_uint<std::uint32_t>(buf, shard.machine_id());
  for (Eigen::Index i = 0; i < shard.samples().size(); ++i) bytes::put_f64(buf, shard.samples().data()[i]);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot write shard file " + path);
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) fail(ErrorCode::IoError, "short write to " + path);
}

}  // namespace bdpca
