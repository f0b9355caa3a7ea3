#pragma once

#include <optional>
#include <string>
#include <vector>

#include "noisyknn/types.hpp"

namespace noisyknn {

// Doubles are serialized with 17 significant digits, which round-trips
// exactly; integral values print without a decimal point.
std::string format_double(double v);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> column(const std::string& name) const;
};

CsvTable read_csv(const std::string& path);

// Dataset files: header x1,...,xd,label and an optional trailing
// clean_label column.
struct DatasetFile {
  LabeledDataset data;
  std::vector<int> clean_labels;  // empty when the column is absent
};

DatasetFile read_dataset_csv(const std::string& path);
void write_dataset_csv(const std::string& path, const LabeledDataset& data,
                       const std::vector<int>* clean_labels = nullptr);

// Query files: header x1,...,xd (a label column, if present, is ignored).
std::vector<Point> read_points_csv(const std::string& path);

}  // namespace noisyknn
