#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace lure {

// 17 significant digits; parse_real(format_real(x)) == x for every finite x.
std::string format_real(double x);
double parse_real(std::string_view token);
std::int64_t parse_int(std::string_view token);

std::vector<std::string_view> split_ws(std::string_view line);
std::string_view trim(std::string_view s);

std::string read_file(const std::filesystem::path& path);
// Writes to a sibling temp file and renames it over `path`.
void atomic_write_file(const std::filesystem::path& path, std::string_view content);

std::string hex64(std::uint64_t v);

// Sequential line reader over a text document with error messages that carry
// the line number.
class LineReader {
 public:
  LineReader(std::string_view text, std::string what);

  bool done() const;
  // Next non-empty line, split on whitespace. Throws on end of input.
  std::vector<std::string_view> next();
  // next(), requiring the first token to equal `keyword`.
  std::vector<std::string_view> expect(std::string_view keyword, std::size_t min_tokens = 1);
  [[noreturn]] void fail(const std::string& msg) const;

 private:
  void skip_blank();

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_no_ = 0;
  std::string what_;
};

}  // namespace lure
