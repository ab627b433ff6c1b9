#pragma once

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "galaxy/batch.hpp"
#include "galaxy/engine.hpp"
#include "galaxy/graph_builder.hpp"
#include "galaxy/types.hpp"

namespace galaxy {

// GXSM score file: "GXSM", u16 version, u16 reserved, u64 N, u64 K (a 24-byte
// header), then N*K float32, all little-endian, row-major.
inline constexpr std::string_view kGxsmMagic = "GXSM";
inline constexpr std::uint16_t kGxsmVersion = 1;
inline constexpr std::size_t kGxsmHeaderBytes = 24;

namespace detail {

template <class T>
void put_le(std::string& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

template <class T>
T get_le(std::string_view in, std::size_t at) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<unsigned char>(in[at + i])) << (8 * i);
  return v;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw input_error("cannot open " + p.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return std::move(ss).str();
}

inline void spill(const std::filesystem::path& p, std::string_view bytes) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) throw input_error("cannot write " + p.string());
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw input_error("short write to " + p.string());
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view line, char sep = ',') {
  std::vector<std::string_view> out;
  for (;;) {
    const auto p = line.find(sep);
    out.push_back(trim(line.substr(0, p)));
    if (p == std::string_view::npos) return out;
    line.remove_prefix(p + 1);
  }
}

// Nonempty lines, with the line number (1-based) of each.
inline std::vector<std::pair<std::size_t, std::string_view>> lines(std::string_view text) {
  std::vector<std::pair<std::size_t, std::string_view>> out;
  std::size_t no = 0;
  while (!text.empty()) {
    ++no;
    const auto p = text.find('\n');
    const auto line = trim(text.substr(0, p));
    if (!line.empty()) out.emplace_back(no, line);
    if (p == std::string_view::npos) break;
    text.remove_prefix(p + 1);
  }
  return out;
}

template <class T>
std::optional<T> parse_number(std::string_view s) {
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

template <class T>
T require_number(std::string_view s, std::string_view what, std::size_t line) {
  auto v = parse_number<T>(s);
  if (!v) throw format_error("line " + std::to_string(line) + ": bad " + std::string(what) + " '" + std::string(s) + "'");
  return *v;
}

inline void expect_header(const std::vector<std::pair<std::size_t, std::string_view>>& ls, std::string_view header,
                          std::string_view what) {
  if (ls.empty() || ls.front().second != header)
    throw format_error(std::string(what) + " must start with header '" + std::string(header) + "'");
}

}  // namespace detail

inline std::string encode_gxsm(const ScoreMatrix& s) {
  std::string out;
  out.reserve(kGxsmHeaderBytes + 4 * s.values().size());
  out += kGxsmMagic;
  detail::put_le<std::uint16_t>(out, kGxsmVersion);
  detail::put_le<std::uint16_t>(out, 0);
  detail::put_le<std::uint64_t>(out, s.rows());
  detail::put_le<std::uint64_t>(out, s.classes());
  for (float v : s.values()) detail::put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

inline ScoreMatrix decode_gxsm(std::string_view bytes) {
  if (bytes.size() < kGxsmHeaderBytes)
    throw format_error("score file is " + std::to_string(bytes.size()) + " bytes, shorter than the " +
                       std::to_string(kGxsmHeaderBytes) + "-byte header");
  if (bytes.substr(0, 4) != kGxsmMagic) throw format_error("score file does not start with magic GXSM");
  const auto version = detail::get_le<std::uint16_t>(bytes, 4);
  if (version != kGxsmVersion) throw format_error("unsupported score file version " + std::to_string(version));
  const auto n = detail::get_le<std::uint64_t>(bytes, 8);
  const auto k = detail::get_le<std::uint64_t>(bytes, 16);
  if (n == 0 || k == 0 || n > (std::uint64_t{1} << 40) / k)
    throw format_error("score file declares implausible shape " + std::to_string(n) + "x" + std::to_string(k));
  const std::uint64_t expected = kGxsmHeaderBytes + 4 * n * k;
  if (bytes.size() != expected)
    throw format_error("score file for " + std::to_string(n) + "x" + std::to_string(k) + " must be " +
                       std::to_string(expected) + " bytes, got " + std::to_string(bytes.size()));
  std::vector<float> v(n * k);
  for (std::size_t i = 0; i < v.size(); ++i)
    v[i] = std::bit_cast<float>(detail::get_le<std::uint32_t>(bytes, kGxsmHeaderBytes + 4 * i));
  return ScoreMatrix(n, k, std::move(v));
}

inline void write_gxsm(const std::filesystem::path& p, const ScoreMatrix& s) { detail::spill(p, encode_gxsm(s)); }
inline ScoreMatrix read_gxsm(const std::filesystem::path& p) { return decode_gxsm(detail::slurp(p)); }

// Score CSV: one row of K probabilities per example, optional header line.
inline ScoreMatrix parse_scores_csv(std::string_view text) {
  auto ls = detail::lines(text);
  if (!ls.empty() && !detail::parse_number<float>(detail::split(ls.front().second).front())) ls.erase(ls.begin());
  if (ls.empty()) throw format_error("score CSV has no rows");
  const std::size_t k = detail::split(ls.front().second).size();
  std::vector<float> v;
  v.reserve(ls.size() * k);
  for (const auto& [no, line] : ls) {
    const auto fields = detail::split(line);
    if (fields.size() != k)
      throw format_error("line " + std::to_string(no) + ": expected " + std::to_string(k) + " columns, got " +
                         std::to_string(fields.size()));
    for (auto f : fields) v.push_back(detail::require_number<float>(f, "probability", no));
  }
  return ScoreMatrix(ls.size(), k, std::move(v));
}

inline ScoreMatrix read_scores_csv(const std::filesystem::path& p) { return parse_scores_csv(detail::slurp(p)); }

inline std::string format_scores_csv(const ScoreMatrix& s) {
  std::string out;
  char buf[32];
  for (std::size_t i = 0; i < s.rows(); ++i) {
    for (std::size_t c = 0; c < s.classes(); ++c) {
      if (c) out += ',';
      const auto r = std::to_chars(buf, buf + sizeof buf, s.at(i, c));
      out.append(buf, r.ptr);
    }
    out += '\n';
  }
  return out;
}

// Label CSV: header "index,label", rows in labeling order.
inline LabeledSet parse_labels_csv(std::string_view text, std::size_t n, std::size_t k) {
  const auto ls = detail::lines(text);
  detail::expect_header(ls, "index,label", "label file");
  LabeledSet out(n);
  for (std::size_t r = 1; r < ls.size(); ++r) {
    const auto [no, line] = ls[r];
    const auto f = detail::split(line);
    if (f.size() != 2) throw format_error("line " + std::to_string(no) + ": expected index,label");
    const auto i = detail::require_number<std::uint64_t>(f[0], "index", no);
    const auto c = detail::require_number<std::uint64_t>(f[1], "label", no);
    if (i >= n) throw format_error("line " + std::to_string(no) + ": index " + std::to_string(i) + " outside pool");
    if (c >= k) throw format_error("line " + std::to_string(no) + ": label " + std::to_string(c) + " outside [0, K)");
    if (out.contains(example(i)))
      throw format_error("line " + std::to_string(no) + ": index " + std::to_string(i) + " labeled twice");
    out.add(example(i), class_id(c));
  }
  return out;
}

inline LabeledSet read_labels_csv(const std::filesystem::path& p, std::size_t n, std::size_t k) {
  return parse_labels_csv(detail::slurp(p), n, k);
}

inline std::string format_labels_csv(const LabeledSet& l) {
  std::string out = "index,label\n";
  for (const auto& [x, c] : l.entries()) out += std::to_string(x.value) + ',' + std::to_string(c.value) + '\n';
  return out;
}

inline void write_labels_csv(const std::filesystem::path& p, const LabeledSet& l) {
  detail::spill(p, format_labels_csv(l));
}

// Ground truth for every example consulted, in the label CSV layout. Lookups
// of examples missing from the file throw.
inline Oracle read_oracle_csv(const std::filesystem::path& p, std::size_t n, std::size_t k) {
  const LabeledSet truth = read_labels_csv(p, n, k);
  return [truth](ExampleId x) {
    if (!truth.contains(x)) throw input_error("oracle file has no label for example " + std::to_string(x.value));
    return truth.at(x);
  };
}

inline std::string format_index_csv(const Batch& b) {
  std::string out = "index\n";
  for (auto x : b.ids) out += std::to_string(x.value) + '\n';
  return out;
}

inline std::string format_batch_csv(const Batch& b, const LabeledSet& labeled) {
  std::string out = "index,label,provenance\n";
  for (std::size_t i = 0; i < b.size(); ++i)
    out += std::to_string(b.ids[i].value) + ',' + std::to_string(labeled.at(b.ids[i]).value) + ',' +
           std::string(to_string(b.provenance[i])) + '\n';
  return out;
}

// Score provider backed by files: writes the labeled set, optionally runs an
// external command (a trainer), then reads the scores it left behind.
class ExternalFileProvider final : public ScoreProvider {
 public:
  ExternalFileProvider(std::size_t n, std::size_t k, std::filesystem::path labels_out, std::filesystem::path scores_in,
                       std::string command = {})
      : n_(n), k_(k), labels_out_(std::move(labels_out)), scores_in_(std::move(scores_in)), command_(std::move(command)) {}

  std::size_t pool_size() const override { return n_; }
  std::size_t class_count() const override { return k_; }

  ScoreMatrix scores(const LabeledSet& labeled) override {
    write_labels_csv(labels_out_, labeled);
    if (!command_.empty()) {
      const int rc = std::system(command_.c_str());
      if (rc != 0) throw protocol_error("score command exited with status " + std::to_string(rc));
    }
    ScoreMatrix s = read_gxsm(scores_in_);
    if (s.rows() != n_ || s.classes() != k_)
      throw protocol_error("score file " + scores_in_.string() + " is " + std::to_string(s.rows()) + "x" +
                           std::to_string(s.classes()) + ", expected " + std::to_string(n_) + "x" +
                           std::to_string(k_));
    return s;
  }

 private:
  std::size_t n_, k_;
  std::filesystem::path labels_out_, scores_in_;
  std::string command_;
};

}  // namespace galaxy
