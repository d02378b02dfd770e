#include "table.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "hiconform/error.hpp"

namespace hiconform::io {

namespace {

std::vector<std::string> split_csv_line(const std::string& line, std::size_t line_no,
                                        const std::string& source) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (quoted) {
    throw Error(ErrorCode::ParseError, source + ":" + std::to_string(line_no) + ": unterminated quote");
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

double parse_double(const std::string& field, std::size_t line_no, const std::string& source) {
  const char* first = field.data();
  const char* last = field.data() + field.size();
  while (first < last && *first == ' ') ++first;
  while (last > first && last[-1] == ' ') --last;
  if (first < last && *first == '+') ++first;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || first == last) {
    throw Error(ErrorCode::ParseError,
                source + ":" + std::to_string(line_no) + ": '" + field + "' is not a number");
  }
  return v;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidConfig, "cannot open '" + path.string() + "'");
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::InvalidConfig, "cannot write '" + path.string() + "'");
  return out;
}

}  // namespace

Table read_table(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) return true;
    }
    return false;
  };
  if (!next_line()) throw Error(ErrorCode::EmptyInput, source + ": no header line");

  const auto header = split_csv_line(line, line_no, source);
  std::optional<std::size_t> id_col;
  std::optional<std::size_t> label_col;
  Table t;
  std::vector<std::size_t> value_cols;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j] == "id" && !id_col) {
      id_col = j;
    } else if (header[j] == "label" && !label_col) {
      label_col = j;
    } else {
      t.columns.push_back(header[j]);
      value_cols.push_back(j);
    }
  }
  if (label_col) t.labels.emplace();

  while (next_line()) {
    const auto fields = split_csv_line(line, line_no, source);
    if (fields.size() != header.size()) {
      throw Error(ErrorCode::ParseError, source + ":" + std::to_string(line_no) + ": expected " +
                                             std::to_string(header.size()) + " fields, got " +
                                             std::to_string(fields.size()));
    }
    t.ids.push_back(id_col ? fields[*id_col] : std::to_string(t.ids.size()));
    if (label_col) t.labels->push_back(fields[*label_col]);
    for (std::size_t j : value_cols) t.values.push_back(parse_double(fields[j], line_no, source));
  }
  if (t.ids.empty()) throw Error(ErrorCode::EmptyInput, source + ": no data rows");
  return t;
}

Table read_table(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_table(in, path.string());
}

void write_table(std::ostream& out, const Table& t) {
  out << "id";
  for (const auto& c : t.columns) out << ',' << quote_if_needed(c);
  if (t.labels) out << ",label";
  out << '\n';
  const std::size_t p = t.columns.size();
  for (std::size_t i = 0; i < t.rows(); ++i) {
    out << quote_if_needed(t.ids[i]);
    for (std::size_t j = 0; j < p; ++j) out << ',' << format_double(t.values[i * p + j]);
    if (t.labels) out << ',' << quote_if_needed((*t.labels)[i]);
    out << '\n';
  }
}

void write_table(const std::filesystem::path& path, const Table& t) {
  auto out = open_out(path);
  write_table(out, t);
}

std::vector<std::string> read_labels(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::vector<std::string> labels;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (first && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
    if (first && line == "label") {
      first = false;
      continue;
    }
    first = false;
    if (!line.empty()) labels.push_back(line);
  }
  if (labels.empty()) throw Error(ErrorCode::EmptyInput, path.string() + ": no labels");
  return labels;
}

FeatureMatrix to_features(const Table& t) {
  FeatureMatrix x{t.ids, t.columns, t.values};
  x.validate();
  return x;
}

ProbMatrix to_probs(const Table& t) { return ProbMatrix(t.columns, t.values); }

Table from_features(const FeatureMatrix& x, const std::vector<std::string>* labels) {
  Table t;
  t.ids = x.ids;
  if (t.ids.empty()) {
    for (std::size_t i = 0; i < x.rows(); ++i) t.ids.push_back(std::to_string(i));
  }
  t.columns = x.feature_names;
  t.values = x.values;
  if (labels) t.labels = *labels;
  return t;
}

Table from_probs(const ProbMatrix& p, const std::vector<std::string>& ids,
                 const std::vector<std::string>* labels) {
  Table t;
  t.ids = ids;
  t.columns = p.class_names();
  t.values = p.values();
  if (labels) t.labels = *labels;
  return t;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace hiconform::io
