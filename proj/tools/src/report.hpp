#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace nonrev::cli {

/// 17 significant digits, enough to round-trip a double.
std::string fmt(double v);

/// A CSV table held in memory until every computation has succeeded.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  void add_row(std::vector<std::string> cells);
  std::string render(const std::string& provenance) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  bool dashed = false;
  bool markers = false;
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_y = false;
};

std::string render_svg(const PlotSpec& spec, const std::vector<PlotSeries>& series);

std::uint64_t fnv1a(const std::string& text);

void write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace nonrev::cli
