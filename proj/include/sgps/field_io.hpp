#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "sgps/spatial.hpp"

namespace sgps {

namespace csv {

/// Shortest decimal text that parses back to the same double.
std::string format(double value);

/// Strict parse of a whole cell; throws ParseError on trailing junk.
double parse_double(std::string_view text, const std::string& file, long line,
                    const std::string& column);
long parse_long(std::string_view text, const std::string& file, long line,
                const std::string& column);

/// Split on commas; no quoting (none of the project's files need it).
std::vector<std::string_view> split(std::string_view line);

}  // namespace csv

/// Write a field as `replicate_id,row,col,value`, one line per cell, missing cells
/// left empty.
void write_field_csv(const std::filesystem::path& path, const MaskedField& field, int side_count);
void write_field_csv(const std::filesystem::path& path, const Field& field, int side_count);

/// Read a field written by `write_field_csv`. The replicate count is inferred from the
/// largest replicate_id. Cells absent from the file are treated as missing.
MaskedField read_field_csv(const std::filesystem::path& path, int side_count);

}  // namespace sgps
