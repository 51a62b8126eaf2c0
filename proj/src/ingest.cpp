#include "sgps/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>

#include "sgps/errors.hpp"
#include "sgps/field_io.hpp"

namespace sgps {

void IngestSchema::validate() const {
  if (block_side < 1 || block_side % 2 == 0) throw InvalidSpec("block_side must be a positive odd integer");
  if (!(spacing > 0.0)) throw InvalidSpec("spacing must be positive");
  if (!(impute_bandwidth > 0.0)) throw InvalidSpec("impute_bandwidth must be positive");
  if (covariate_prefix.empty()) throw InvalidSpec("covariate_prefix must be nonempty");
}

namespace {

struct Layout {
  int day = -1, row = -1, col = -1, treatment = -1, response = -1;
  std::vector<int> covariates;
  std::vector<std::string> covariate_names;
  std::size_t width = 0;
};

// Index of the covariate named prefix<k>, or 0 if the name is not of that form.
long covariate_index(std::string_view name, const std::string& prefix) {
  if (name.size() <= prefix.size() || name.substr(0, prefix.size()) != prefix) return 0;
  const auto digits = name.substr(prefix.size());
  long k = 0;
  const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), k);
  if (ec != std::errc{} || ptr != digits.data() + digits.size() || k < 1) return 0;
  return k;
}

Layout parse_header(const std::string& line, const IngestSchema& schema, const std::string& file) {
  Layout L;
  const auto cells = csv::split(line);
  L.width = cells.size();
  std::vector<std::pair<long, int>> covs;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const std::string name(cells[i]);
    auto assign = [&](int& slot) {
      if (slot >= 0) throw ParseError(file, 1, name, "duplicate column");
      slot = int(i);
    };
    if (name == schema.day_column) assign(L.day);
    else if (name == schema.row_column) assign(L.row);
    else if (name == schema.col_column) assign(L.col);
    else if (name == schema.treatment_column) assign(L.treatment);
    else if (name == schema.response_column) assign(L.response);
    else if (long k = covariate_index(name, schema.covariate_prefix)) covs.emplace_back(k, int(i));
    else throw ParseError(file, 1, name, "unexpected column");
  }
  auto require = [&](int slot, const std::string& name) {
    if (slot < 0) throw ParseError(file, 1, name, "missing column");
  };
  require(L.day, schema.day_column);
  require(L.row, schema.row_column);
  require(L.col, schema.col_column);
  require(L.treatment, schema.treatment_column);
  require(L.response, schema.response_column);
  std::sort(covs.begin(), covs.end());
  for (std::size_t j = 0; j < covs.size(); ++j) {
    const std::string expected = schema.covariate_prefix + std::to_string(j + 1);
    if (covs[j].first != long(j + 1)) throw ParseError(file, 1, expected, "missing column");
    L.covariates.push_back(covs[j].second);
    L.covariate_names.push_back(expected);
  }
  if (L.covariates.empty())
    throw ParseError(file, 1, schema.covariate_prefix + "1", "at least one covariate column is required");
  return L;
}

struct RawBlock {
  Eigen::VectorXd treatment;
  Eigen::MatrixXd covariates;
  Mask observed;
  std::vector<bool> seen;
  bool has_response = false;
  double response = 0.0;
};

}  // namespace

GriddedDataset ingest_grids(const std::filesystem::path& path, const IngestSchema& schema) {
  schema.validate();
  const std::string file = path.string();
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + file);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(file, 1, "header", "empty file");
  const Layout L = parse_header(line, schema, file);
  const int side = schema.block_side;
  const Eigen::Index n = Eigen::Index(side) * side;
  const Eigen::Index p = Eigen::Index(L.covariates.size());
  const std::vector<std::string> header = [&] {
    std::vector<std::string> h;
    for (auto c : csv::split(line)) h.emplace_back(c);
    return h;
  }();

  std::map<long, RawBlock> raw;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = csv::split(line);
    if (f.size() != L.width) {
      const std::size_t at = std::min(f.size(), L.width - 1);
      throw ParseError(file, line_no, header[at],
                       "expected " + std::to_string(L.width) + " fields, got " + std::to_string(f.size()));
    }
    const long day = csv::parse_long(f[L.day], file, line_no, header[L.day]);
    const long row = csv::parse_long(f[L.row], file, line_no, header[L.row]);
    const long col = csv::parse_long(f[L.col], file, line_no, header[L.col]);
    if (row < 0 || row >= side) throw ParseError(file, line_no, header[L.row], "outside the block");
    if (col < 0 || col >= side) throw ParseError(file, line_no, header[L.col], "outside the block");
    const Eigen::Index s = row * side + col;

    RawBlock& b = raw[day];
    if (b.seen.empty()) {
      b.treatment = Eigen::VectorXd::Zero(n);
      b.covariates = Eigen::MatrixXd::Zero(n, p);
      b.observed = Mask::Constant(n, p, false);
      b.seen.assign(std::size_t(n), false);
    }
    if (b.seen[std::size_t(s)])
      throw ValidationError(file + ":" + std::to_string(line_no) + ": duplicate cell (" + std::to_string(row) +
                            "," + std::to_string(col) + ") for day " + std::to_string(day));
    b.seen[std::size_t(s)] = true;

    const double a = csv::parse_double(f[L.treatment], file, line_no, header[L.treatment]);
    if (a != 0.0 && a != 1.0)
      throw ValidationError(file + ":" + std::to_string(line_no) + ": treatment must be 0 or 1, got " +
                            std::string(f[L.treatment]));
    b.treatment(s) = a;
    for (Eigen::Index j = 0; j < p; ++j) {
      const auto cell = f[L.covariates[std::size_t(j)]];
      if (cell.empty()) continue;
      b.covariates(s, j) = csv::parse_double(cell, file, line_no, header[L.covariates[std::size_t(j)]]);
      b.observed(s, j) = true;
    }
    const auto y = f[L.response];
    if (!y.empty()) {
      if (row != schema.centre() || col != schema.centre())
        throw ValidationError(file + ":" + std::to_string(line_no) + ": response given at non-centre cell (" +
                              std::to_string(row) + "," + std::to_string(col) + ")");
      b.response = csv::parse_double(y, file, line_no, header[L.response]);
      b.has_response = true;
    }
  }

  GriddedDataset out;
  out.schema = schema;
  out.covariate_names = L.covariate_names;
  const SpatialGrid grid(side, schema.spacing);
  for (auto& [day, b] : raw) {
    const auto missing_cells = std::count(b.seen.begin(), b.seen.end(), false);
    if (missing_cells > 0)
      throw ValidationError(file + ": day " + std::to_string(day) + " has " + std::to_string(missing_cells) +
                            " of " + std::to_string(n) + " cells missing");
    if (!b.has_response) {
      ++out.rejected;
      out.provenance.push_back("day " + std::to_string(day) + ": rejected, no centre response");
      continue;
    }
    GriddedObservation obs;
    obs.day = day;
    obs.treatment = std::move(b.treatment);
    obs.response = b.response;
    obs.covariates = b.covariates;
    obs.imputed = Mask::Constant(n, p, false);
    for (Eigen::Index j = 0; j < p; ++j) {
      const Mask column = b.observed.col(j);
      if (column.all()) continue;
      MaskedField mf{b.covariates.col(j), column};
      try {
        obs.covariates.col(j) = kernel_smooth_impute(mf, grid, schema.impute_bandwidth).col(0);
      } catch (const Unimputable&) {
        throw Unimputable("day " + std::to_string(day) + ": covariate " + L.covariate_names[std::size_t(j)] +
                          " has no observed cells");
      }
      for (Eigen::Index s = 0; s < n; ++s) {
        if (column(s)) continue;
        obs.imputed(s, j) = true;
        out.provenance.push_back("day " + std::to_string(day) + ": imputed " + L.covariate_names[std::size_t(j)] +
                                 " at (" + std::to_string(s / side) + "," + std::to_string(s % side) + ")");
      }
    }
    out.blocks.push_back(std::move(obs));
  }
  return out;
}

SpatialStudy GriddedDataset::to_study() const {
  if (blocks.empty()) throw ValidationError("gridded dataset has no usable blocks");
  const int side = schema.block_side;
  const Eigen::Index n = Eigen::Index(side) * side;
  const Eigen::Index N = Eigen::Index(blocks.size());
  const Eigen::Index p = Eigen::Index(covariate_names.size());
  SpatialStudy st;
  st.grid = grid();
  st.treatment.resize(n, N);
  st.covariates.assign(std::size_t(p), Field(n, N));
  st.response.resize(N);
  const Eigen::Index centre = Eigen::Index(schema.centre()) * side + schema.centre();
  for (Eigen::Index r = 0; r < N; ++r) {
    const auto& b = blocks[std::size_t(r)];
    st.treatment.col(r) = b.treatment;
    for (Eigen::Index j = 0; j < p; ++j) st.covariates[std::size_t(j)].col(r) = b.covariates.col(j);
    st.observed.push_back(centre + n * r);
    st.response(r) = b.response;
  }
  st.validate();
  return st;
}

void export_grids(const std::filesystem::path& path, const GriddedDataset& data) {
  const IngestSchema& sc = data.schema;
  const int side = sc.block_side;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << sc.day_column << ',' << sc.row_column << ',' << sc.col_column << ',' << sc.treatment_column;
  for (const auto& name : data.covariate_names) out << ',' << name;
  out << ',' << sc.response_column << '\n';
  for (const auto& b : data.blocks) {
    for (int row = 0; row < side; ++row) {
      for (int col = 0; col < side; ++col) {
        const Eigen::Index s = Eigen::Index(row) * side + col;
        out << b.day << ',' << row << ',' << col << ',' << csv::format(b.treatment(s));
        for (Eigen::Index j = 0; j < b.covariates.cols(); ++j) out << ',' << csv::format(b.covariates(s, j));
        out << ',';
        if (row == sc.centre() && col == sc.centre()) out << csv::format(b.response);
        out << '\n';
      }
    }
  }
}

GriddedDataset gridded_from_synthetic(const SyntheticDataset& data) {
  const int side = data.grid.side_count();
  if (side % 2 == 0) throw InvalidSpec("gridded layout needs an odd side length");
  GriddedDataset out;
  out.schema.block_side = side;
  out.schema.spacing = data.grid.spacing();
  out.covariate_names = {"X1"};
  const Eigen::Index n = data.grid.size();
  const Eigen::Index centre = Eigen::Index(side / 2) * side + side / 2;
  for (Eigen::Index r = 0; r < data.X.cols(); ++r) {
    GriddedObservation b;
    b.day = long(r);
    b.treatment = data.A.col(r);
    b.covariates = data.X.col(r);
    b.response = data.Y(centre, r);
    b.imputed = Mask::Constant(n, 1, false);
    out.blocks.push_back(std::move(b));
  }
  return out;
}

}  // namespace sgps
