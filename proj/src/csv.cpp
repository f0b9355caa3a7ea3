#include "noisyknn/csv.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace noisyknn {
namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

double parse_double(const std::string& s, const std::string& context) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') {
    throw IoError("malformed number '" + s + "' in " + context);
  }
  return v;
}

int parse_label(const std::string& s, const std::string& context) {
  if (s == "0") return 0;
  if (s == "1") return 1;
  throw IoError("label must be 0 or 1, got '" + s + "' in " + context);
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::optional<std::size_t> CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  return std::nullopt;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);

  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty file " + path);
  table.header = split_line(line);
  if (table.header.empty()) throw IoError("missing header in " + path);

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<std::string> row = split_line(line);
    if (row.size() != table.header.size()) {
      throw IoError("row " + std::to_string(line_no) + " of " + path +
                    " has " + std::to_string(row.size()) + " fields, header has " +
                    std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

namespace {

std::size_t feature_count(const CsvTable& table, const std::string& path) {
  std::size_t d = 0;
  for (const std::string& name : table.header) {
    if (name.size() >= 2 && name[0] == 'x') {
      ++d;
    } else {
      break;
    }
  }
  if (d == 0) throw IoError("no feature columns x1..xd in " + path);
  return d;
}

}  // namespace

DatasetFile read_dataset_csv(const std::string& path) {
  const CsvTable table = read_csv(path);
  const std::size_t d = feature_count(table, path);
  const auto label_col = table.column("label");
  if (!label_col) throw IoError("missing 'label' column in " + path);
  const auto clean_col = table.column("clean_label");
  if (table.rows.empty()) throw IoError("no data rows in " + path);

  DatasetFile file;
  file.data.points.reserve(table.rows.size());
  file.data.labels.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    Point p(d);
    for (std::size_t j = 0; j < d; ++j) p[j] = parse_double(row[j], path);
    file.data.points.push_back(std::move(p));
    file.data.labels.push_back(parse_label(row[*label_col], path));
    if (clean_col) {
      file.clean_labels.push_back(parse_label(row[*clean_col], path));
    }
  }
  return file;
}

void write_dataset_csv(const std::string& path, const LabeledDataset& data,
                       const std::vector<int>* clean_labels) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  const std::size_t d = data.dim();
  for (std::size_t j = 0; j < d; ++j) out << "x" << (j + 1) << ",";
  out << "label";
  if (clean_labels) out << ",clean_label";
  out << "\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (double c : data.points[i]) out << format_double(c) << ",";
    out << data.labels[i];
    if (clean_labels) out << "," << (*clean_labels)[i];
    out << "\n";
  }
  if (!out) throw IoError("write failed for " + path);
}

std::vector<Point> read_points_csv(const std::string& path) {
  const CsvTable table = read_csv(path);
  const std::size_t d = feature_count(table, path);
  std::vector<Point> points;
  points.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    Point p(d);
    for (std::size_t j = 0; j < d; ++j) p[j] = parse_double(row[j], path);
    points.push_back(std::move(p));
  }
  return points;
}

}  // namespace noisyknn
