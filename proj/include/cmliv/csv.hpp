#pragma once

#include <iosfwd>
#include <string>

#include "cmliv/dataset.hpp"

namespace cmliv {

// Dataset files: comma-delimited, UTF-8, '.' decimal separator, mandatory
// header. Required columns y, d, z1 and covariates x_1..x_k (k >= 1,
// contiguous); optional weight and cluster columns whose names default to
// "weight" / "cluster" and can be remapped. Column order is free; any
// other column is an error.
struct CsvReadOptions {
  std::string weight_column = "weight";
  std::string cluster_column = "cluster";
};

IvDataset read_dataset_csv(std::istream& in, const CsvReadOptions& opts = {});
IvDataset read_dataset_csv_file(const std::string& path, const CsvReadOptions& opts = {});

// 17 significant digits, so binary64 values survive a round trip exactly.
std::string format_double17(double v);

void write_dataset_csv(const IvDataset& ds, std::ostream& out);
void write_dataset_csv_file(const IvDataset& ds, const std::string& path);

}  // namespace cmliv
