#include "sgps/field_io.hpp"

#include <charconv>
#include <fstream>
#include <tuple>

namespace sgps {

namespace csv {

std::string format(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc{}) throw std::runtime_error("csv::format: to_chars failed");
  return std::string(buf, ptr);
}

namespace {
std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}
}  // namespace

double parse_double(std::string_view text, const std::string& file, long line,
                    const std::string& column) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size())
    throw ParseError(file, line, column, "expected a number, got '" + std::string(text) + "'");
  return value;
}

long parse_long(std::string_view text, const std::string& file, long line,
                const std::string& column) {
  text = trim(text);
  long value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size())
    throw ParseError(file, line, column, "expected an integer, got '" + std::string(text) + "'");
  return value;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      return out;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
}

}  // namespace csv

void write_field_csv(const std::filesystem::path& path, const MaskedField& field, int side_count) {
  if (field.values.rows() != Eigen::Index(side_count) * side_count)
    throw ShapeError("write_field_csv: field rows do not match side_count^2");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "replicate_id,row,col,value\n";
  for (Eigen::Index r = 0; r < field.values.cols(); ++r) {
    for (Eigen::Index s = 0; s < field.values.rows(); ++s) {
      out << r << ',' << s / side_count << ',' << s % side_count << ',';
      if (field.observed(s, r)) out << csv::format(field.values(s, r));
      out << '\n';
    }
  }
}

void write_field_csv(const std::filesystem::path& path, const Field& field, int side_count) {
  write_field_csv(path, MaskedField::complete(field), side_count);
}

MaskedField read_field_csv(const std::filesystem::path& path, int side_count) {
  std::ifstream in(path);
  const std::string file = path.string();
  if (!in) throw std::runtime_error("cannot open " + file);
  std::string line;
  long line_no = 1;
  if (!std::getline(in, line)) throw ParseError(file, 1, "header", "empty file");
  const auto header = csv::split(line);
  if (header.size() != 4 || header[0] != "replicate_id" || header[1] != "row" ||
      header[2] != "col" || header[3] != "value")
    throw ParseError(file, 1, "header", "expected replicate_id,row,col,value");

  std::vector<std::tuple<long, long, long, double, bool>> cells;
  long max_rep = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto parts = csv::split(line);
    if (parts.size() != 4)
      throw ParseError(file, line_no, "*", "expected 4 fields, got " + std::to_string(parts.size()));
    const long rep = csv::parse_long(parts[0], file, line_no, "replicate_id");
    const long row = csv::parse_long(parts[1], file, line_no, "row");
    const long col = csv::parse_long(parts[2], file, line_no, "col");
    if (rep < 0) throw ParseError(file, line_no, "replicate_id", "negative");
    if (row < 0 || row >= side_count) throw ParseError(file, line_no, "row", "out of grid");
    if (col < 0 || col >= side_count) throw ParseError(file, line_no, "col", "out of grid");
    const bool present = !parts[3].empty();
    const double v = present ? csv::parse_double(parts[3], file, line_no, "value") : 0.0;
    if (present && !std::isfinite(v)) throw ParseError(file, line_no, "value", "non-finite value");
    cells.emplace_back(rep, row, col, v, present);
    max_rep = std::max(max_rep, rep);
  }
  const Eigen::Index n = Eigen::Index(side_count) * side_count;
  MaskedField out{Field::Zero(n, max_rep + 1), Mask::Constant(n, max_rep + 1, false)};
  for (const auto& [rep, row, col, v, present] : cells) {
    const Eigen::Index s = row * side_count + col;
    out.values(s, rep) = v;
    out.observed(s, rep) = present;
  }
  return out;
}

}  // namespace sgps
