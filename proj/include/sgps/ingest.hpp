#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sgps/models.hpp"
#include "sgps/synth.hpp"

namespace sgps {

/// Layout of a gridded observation file: one row per (day, row, col) cell with
/// columns day,row,col,A,X1..Xp,Y. Rows and columns are 0-based; Y is set only at the
/// block centre. Missing covariates are empty cells.
struct IngestSchema {
  int block_side = 9;  // odd
  double spacing = 1.0;
  double impute_bandwidth = 1.0;
  std::string day_column = "day";
  std::string row_column = "row";
  std::string col_column = "col";
  std::string treatment_column = "A";
  std::string covariate_prefix = "X";  // X1, X2, ... ; count inferred from the header
  std::string response_column = "Y";

  void validate() const;
  int centre() const { return block_side / 2; }
};

struct GriddedObservation {
  long day = 0;
  Eigen::VectorXd treatment;   // block_side^2, index row * side + col
  Eigen::MatrixXd covariates;  // block_side^2 x p, after imputation
  double response = 0.0;       // centre cell
  Mask imputed;                // block_side^2 x p
};

struct GriddedDataset {
  IngestSchema schema;
  std::vector<std::string> covariate_names;
  std::vector<GriddedObservation> blocks;  // sorted by day
  long rejected = 0;                        // blocks without a centre response
  std::vector<std::string> provenance;

  SpatialGrid grid() const { return SpatialGrid(schema.block_side, schema.spacing); }
  /// One replicate per block, the response observed at the centre only.
  SpatialStudy to_study() const;
};

GriddedDataset ingest_grids(const std::filesystem::path& path, const IngestSchema& schema = {});

/// Write blocks in the ingestion layout. Imputed cells are written as their imputed values.
void export_grids(const std::filesystem::path& path, const GriddedDataset& data);

/// Blocks from a simulated dataset: every replicate becomes a day with the response kept
/// at the centre cell. Needs an odd side length.
GriddedDataset gridded_from_synthetic(const SyntheticDataset& data);

}  // namespace sgps
