#include "harness/report.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace qkdlab::harness {

using nlohmann::ordered_json;

namespace {

constexpr std::array<const char*, 6> kFixedColumns{"experiment", "trial", "seed", "substream", "version", "flagged"};

std::uint64_t parse_u64(const std::string& s, const char* what) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw std::runtime_error(std::string("report: bad ") + what + " \"" + s + "\"");
  return v;
}

bool parse_flag(const std::string& s) {
  if (s == "true") return true;
  if (s == "false") return false;
  throw std::runtime_error("report: bad flagged value \"" + s + "\"");
}

std::string json_scalar_text(const ordered_json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_integer()) return v.is_number_unsigned() ? std::to_string(v.get<std::uint64_t>())
                                                          : std::to_string(v.get<std::int64_t>());
  if (v.is_number_float()) return format_double(v.get<double>());
  if (v.is_null()) return "nan";
  throw std::runtime_error("report: non-scalar metric");
}

}  // namespace

const Metric* ReportRow::find(std::string_view name) const noexcept {
  for (const auto& m : metrics)
    if (m.name == name) return &m;
  return nullptr;
}

std::string format_double(double value) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc{}) throw std::runtime_error("format_double failed");
  return std::string(buf.data(), ptr);
}

std::string format_value(const MetricValue& value) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, double>) return format_double(v);
        else if constexpr (std::is_same_v<T, std::int64_t>) return std::to_string(v);
        else if constexpr (std::is_same_v<T, bool>) return v ? "true" : "false";
        else return v;
      },
      value);
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string to_csv(const std::vector<ReportRow>& rows) {
  std::string out;
  auto line = [&](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out += ',';
      out += csv_escape(fields[i]);
    }
    out += "\r\n";
  };
  std::vector<std::string> header(kFixedColumns.begin(), kFixedColumns.end());
  if (!rows.empty())
    for (const auto& m : rows.front().metrics) header.push_back(m.name);
  line(header);
  for (const auto& row : rows) {
    if (row.metrics.size() + kFixedColumns.size() != header.size())
      throw std::logic_error("to_csv: rows with differing metric sets");
    std::vector<std::string> fields{row.experiment, std::to_string(row.trial), std::to_string(row.seed),
                                    std::to_string(row.substream), row.version, row.flagged ? "true" : "false"};
    for (std::size_t i = 0; i < row.metrics.size(); ++i) {
      if (row.metrics[i].name != header[kFixedColumns.size() + i])
        throw std::logic_error("to_csv: rows with differing metric sets");
      fields.push_back(format_value(row.metrics[i].value));
    }
    line(fields);
  }
  return out;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  std::size_t i = 0;
  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  while (i < text.size()) {
    char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          i += 2;
          continue;
        }
        quoted = false;
        ++i;
        continue;
      }
      field += c;
      ++i;
      continue;
    }
    if (c == '"' && !field_started && field.empty()) {
      quoted = true;
      field_started = true;
      ++i;
    } else if (c == ',') {
      end_field();
      ++i;
    } else if (c == '\r' || c == '\n') {
      end_field();
      records.push_back(std::move(record));
      record.clear();
      i += (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ? 2 : 1;
    } else {
      field += c;
      field_started = true;
      ++i;
    }
  }
  if (quoted) throw std::runtime_error("csv: unterminated quoted field");
  if (field_started || !field.empty() || !record.empty()) {
    end_field();
    records.push_back(std::move(record));
  }
  return records;
}

ordered_json row_to_json(const ReportRow& row) {
  ordered_json j = ordered_json::object();
  j["experiment"] = row.experiment;
  j["trial"] = row.trial;
  j["seed"] = row.seed;
  j["substream"] = row.substream;
  j["version"] = row.version;
  j["flagged"] = row.flagged;
  ordered_json metrics = ordered_json::object();
  for (const auto& m : row.metrics) std::visit([&](const auto& v) { metrics[m.name] = v; }, m.value);
  j["metrics"] = metrics;
  return j;
}

ordered_json to_json(const std::vector<ReportRow>& rows) {
  ordered_json out = ordered_json::array();
  for (const auto& row : rows) out.push_back(row_to_json(row));
  return out;
}

StoredRow stored_form(const ReportRow& row) {
  StoredRow s{row.experiment, row.trial, row.seed, row.substream, row.version, row.flagged, {}};
  for (const auto& m : row.metrics) s.metrics.emplace_back(m.name, format_value(m.value));
  return s;
}

std::vector<StoredRow> read_report(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read report " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  std::vector<StoredRow> rows;

  if (path.extension() == ".json") {
    ordered_json j;
    try {
      j = ordered_json::parse(text);
    } catch (const ordered_json::parse_error& e) {
      throw std::runtime_error("report: invalid JSON: " + std::string(e.what()));
    }
    if (!j.is_array()) throw std::runtime_error("report: expected an array of rows");
    for (const auto& r : j) {
      try {
        StoredRow s;
        s.experiment = r.at("experiment").get<std::string>();
        s.trial = r.at("trial").get<std::uint64_t>();
        s.seed = r.at("seed").get<std::uint64_t>();
        s.substream = r.at("substream").get<std::uint64_t>();
        s.version = r.at("version").get<std::string>();
        s.flagged = r.at("flagged").get<bool>();
        for (const auto& [name, value] : r.at("metrics").items()) s.metrics.emplace_back(name, json_scalar_text(value));
        rows.push_back(std::move(s));
      } catch (const ordered_json::exception& e) {
        throw std::runtime_error("report: malformed row: " + std::string(e.what()));
      }
    }
    return rows;
  }

  auto records = parse_csv(text);
  if (records.empty()) throw std::runtime_error("report: empty CSV");
  const auto& header = records.front();
  if (header.size() < kFixedColumns.size()) throw std::runtime_error("report: short CSV header");
  for (std::size_t i = 0; i < kFixedColumns.size(); ++i)
    if (header[i] != kFixedColumns[i]) throw std::runtime_error("report: unexpected CSV header");
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& f = records[r];
    if (f.size() != header.size()) throw std::runtime_error("report: CSV row " + std::to_string(r) + " has wrong width");
    StoredRow s{f[0], parse_u64(f[1], "trial"), parse_u64(f[2], "seed"), parse_u64(f[3], "substream"), f[4],
                parse_flag(f[5]), {}};
    for (std::size_t c = kFixedColumns.size(); c < f.size(); ++c) s.metrics.emplace_back(header[c], f[c]);
    rows.push_back(std::move(s));
  }
  return rows;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace qkdlab::harness
