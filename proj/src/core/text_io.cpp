#include "lure/core/text_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "lure/core/errors.hpp"

namespace lure {

std::string format_real(double x) {
  char buf[40];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", x);
  return std::string(buf, static_cast<std::size_t>(n));
}

double parse_real(std::string_view token) {
  double v = 0.0;
  const auto* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, v);
  if (ec != std::errc() || ptr != end)
    throw InvalidArgument("not a real number: '" + std::string(token) + "'");
  return v;
}

std::int64_t parse_int(std::string_view token) {
  std::int64_t v = 0;
  const auto* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, v);
  if (ec != std::errc() || ptr != end)
    throw InvalidArgument("not an integer: '" + std::string(token) + "'");
  return v;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void atomic_write_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidArgument("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw InvalidArgument("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

LineReader::LineReader(std::string_view text, std::string what)
    : text_(text), what_(std::move(what)) {}

void LineReader::skip_blank() {
  while (pos_ < text_.size()) {
    const auto eol = text_.find('\n', pos_);
    const auto line = text_.substr(pos_, eol == std::string_view::npos ? text_.npos : eol - pos_);
    if (!trim(line).empty()) return;
    pos_ = eol == std::string_view::npos ? text_.size() : eol + 1;
    ++line_no_;
  }
}

bool LineReader::done() const {
  LineReader copy = *this;
  copy.skip_blank();
  return copy.pos_ >= copy.text_.size();
}

std::vector<std::string_view> LineReader::next() {
  skip_blank();
  if (pos_ >= text_.size()) fail("unexpected end of document");
  const auto eol = text_.find('\n', pos_);
  const auto line = text_.substr(pos_, eol == std::string_view::npos ? text_.npos : eol - pos_);
  pos_ = eol == std::string_view::npos ? text_.size() : eol + 1;
  ++line_no_;
  return split_ws(line);
}

std::vector<std::string_view> LineReader::expect(std::string_view keyword, std::size_t min_tokens) {
  auto tokens = next();
  if (tokens.empty() || tokens[0] != keyword)
    fail("expected '" + std::string(keyword) + "'");
  if (tokens.size() < min_tokens) fail("too few fields after '" + std::string(keyword) + "'");
  return tokens;
}

void LineReader::fail(const std::string& msg) const {
  throw InvalidArgument(what_ + " line " + std::to_string(line_no_) + ": " + msg);
}

}  // namespace lure
