#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace kaclab {

/// %.12g
std::string format_number(double x);

/// Minimal CSV writer: header row, `%.12g` numbers, LF endings.
class CsvWriter {
 public:
  CsvWriter(std::ostream& out, const std::vector<std::string>& header);

  void row(const std::vector<double>& values);
  void comment(const std::string& text);

 private:
  std::ostream& out_;
  std::size_t columns_;
};

/// `# seed=..., git-describe=..., config-hash=...`
std::string metadata_comment(std::uint64_t seed, const std::string& config_hash);

std::string git_describe();

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  /// Index of a header column, or throws std::runtime_error.
  std::size_t column(const std::string& name) const;
};

/// Reads a headered numeric CSV; lines starting with '#' and blank lines are skipped.
CsvTable read_csv(std::istream& in);

}  // namespace kaclab
