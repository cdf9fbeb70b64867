#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "catnet/datagen.hpp"
#include "catnet/dependence.hpp"
#include "catnet/lstm.hpp"
#include "catnet/mirror.hpp"
#include "catnet/shap.hpp"

namespace catnet {

/// Shortest round-trip decimal text for a double.
std::string format_double(double v);

/// Writes `contents` to a sibling temp file and renames it over `path`.
void atomic_write(const std::filesystem::path& path, const std::string& contents);

std::string read_text(const std::filesystem::path& path);

/// Dataset CSV: header `t,x1,...,xp,y`, one row per time step.
std::string dataset_csv(const Dataset& data);
void write_dataset(const std::filesystem::path& csv, const Dataset& data);

/// Parses a dataset CSV. Missing files, bad headers, ragged rows and
/// non-numeric fields raise InvalidInput naming the offending row.
Dataset read_dataset_csv(const std::filesystem::path& csv);

/// `<dir>/<stem>.truth.json` next to a dataset CSV.
std::filesystem::path truth_path(const std::filesystem::path& csv);

/// {"p", "beta", "support"} with a 1-based support.
std::string truth_json(const GroundTruth& truth);
GroundTruth parse_truth_json(const std::string& text, std::size_t p);

/// Reads the CSV and attaches the truth sidecar when it exists.
Dataset load_dataset(const std::filesystem::path& csv);

/// `feature,M,selected` with 1-based features.
std::string selection_csv(const SelectionResult& sel);

/// Rows are features, columns are samples.
std::string shap_csv(const ShapMatrix& shap);

std::string profile_csv(const CjProfile& profile);

std::string loss_trace_csv(const std::vector<LossRecord>& trace);

/// JSON checkpoint with dims, flat parameters and scalers.
std::string lstm_checkpoint(const TrainedLstm& model);
TrainedLstm parse_lstm_checkpoint(const std::string& text);

}  // namespace catnet
