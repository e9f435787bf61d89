#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace qkdlab::harness {

using MetricValue = std::variant<double, std::int64_t, bool, std::string>;

struct Metric {
  std::string name;
  MetricValue value;
};

struct ReportRow {
  std::string experiment;
  std::uint64_t trial = 0;
  std::uint64_t seed = 0;
  std::uint64_t substream = 0;  // trial index fed to the counter construction
  std::string version;
  bool flagged = false;
  std::vector<Metric> metrics;

  const Metric* find(std::string_view name) const noexcept;
};

/// Shortest round-trip decimal form; identical bytes on every run.
std::string format_double(double value);
std::string format_value(const MetricValue& value);

/// RFC 4180: CRLF line ends, fields with comma, quote, CR or LF are quoted and
/// inner quotes doubled.
std::string csv_escape(const std::string& field);
std::string to_csv(const std::vector<ReportRow>& rows);
std::vector<std::vector<std::string>> parse_csv(const std::string& text);

/// Metrics keep their column order.
nlohmann::ordered_json row_to_json(const ReportRow& row);
nlohmann::ordered_json to_json(const std::vector<ReportRow>& rows);

/// A row read back from a report. Metric values keep their serialized text so
/// comparisons are exact.
struct StoredRow {
  std::string experiment;
  std::uint64_t trial = 0;
  std::uint64_t seed = 0;
  std::uint64_t substream = 0;
  std::string version;
  bool flagged = false;
  std::vector<std::pair<std::string, std::string>> metrics;
};

StoredRow stored_form(const ReportRow& row);
/// Reads every row of a .csv or .json report. Throws std::runtime_error on malformed input.
std::vector<StoredRow> read_report(const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace qkdlab::harness
