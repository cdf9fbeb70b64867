#include "catnet/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

#include "catnet/error.hpp"
#include "json.hpp"

namespace catnet {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void atomic_write(const fs::path& path, const std::string& contents) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidInput("cannot open " + tmp.string() + " for writing");
    out << contents;
    out.flush();
    if (!out) throw InvalidInput("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw InvalidInput("cannot replace " + path.string());
  }
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string dataset_csv(const Dataset& data) {
  data.validate();
  std::string out = "t";
  for (std::size_t j = 0; j < data.p(); ++j) out += ",x" + std::to_string(j + 1);
  out += ",y\n";
  for (Eigen::Index i = 0; i < data.X.rows(); ++i) {
    out += std::to_string(i);
    for (Eigen::Index j = 0; j < data.X.cols(); ++j) {
      out += ',';
      out += format_double(data.X(i, j));
    }
    out += ',';
    out += format_double(data.y[i]);
    out += '\n';
  }
  return out;
}

void write_dataset(const fs::path& csv, const Dataset& data) {
  atomic_write(csv, dataset_csv(data));
  if (data.truth) atomic_write(truth_path(csv), truth_json(*data.truth));
}

namespace {

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double parse_number(std::string_view field, std::size_t row, const fs::path& csv) {
  field = trim(field);
  double v = 0.0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (field.empty() || res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    throw InvalidInput(csv.string() + ": row " + std::to_string(row) + ": bad number '" +
                       std::string(field) + "'");
  }
  return v;
}

}  // namespace

Dataset read_dataset_csv(const fs::path& csv) {
  if (!fs::exists(csv)) throw InvalidInput(csv.string() + ": no such file");
  const std::string text = read_text(csv);
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput(csv.string() + ": row 1: missing header");
  const auto header = split(line);
  const std::size_t width = header.size();
  if (width < 3 || trim(header.front()) != "t" || trim(header.back()) != "y") {
    throw InvalidInput(csv.string() + ": row 1: header must be t,x1,...,xp,y");
  }
  const std::size_t p = width - 2;

  std::vector<double> values;
  std::size_t rows = 0;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto fields = split(line);
    if (fields.size() != width) {
      throw InvalidInput(csv.string() + ": row " + std::to_string(row) + ": expected " +
                         std::to_string(width) + " fields, found " + std::to_string(fields.size()));
    }
    for (std::size_t f = 1; f < width; ++f) values.push_back(parse_number(fields[f], row, csv));
    ++rows;
  }
  if (rows == 0) throw InvalidInput(csv.string() + ": row 2: no data rows");

  Dataset data;
  data.X.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(p));
  data.y.resize(static_cast<Eigen::Index>(rows));
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      data.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = values[i * (p + 1) + j];
    }
    data.y[static_cast<Eigen::Index>(i)] = values[i * (p + 1) + p];
  }
  data.validate();
  return data;
}

fs::path truth_path(const fs::path& csv) {
  fs::path out = csv.parent_path() / csv.stem();
  out += ".truth.json";
  return out;
}

std::string truth_json(const GroundTruth& truth) {
  json j;
  j["p"] = truth.beta.size();
  j["beta"] = std::vector<double>(truth.beta.data(), truth.beta.data() + truth.beta.size());
  json support = json::array();
  for (const std::size_t s : truth.support) support.push_back(s + 1);
  j["support"] = support;
  return j.dump(2) + "\n";
}

GroundTruth parse_truth_json(const std::string& text, std::size_t p) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("truth sidecar: ") + e.what());
  }
  if (!j.contains("beta") || !j["beta"].is_array()) throw InvalidInput("truth sidecar: missing beta");
  const auto beta = j["beta"].get<std::vector<double>>();
  if (beta.size() != p) {
    throw InvalidInput("truth sidecar: beta has " + std::to_string(beta.size()) +
                       " entries, dataset has " + std::to_string(p) + " features");
  }
  return GroundTruth::from_beta(Eigen::Map<const Eigen::VectorXd>(beta.data(), static_cast<Eigen::Index>(p)));
}

Dataset load_dataset(const fs::path& csv) {
  Dataset data = read_dataset_csv(csv);
  const fs::path truth = truth_path(csv);
  if (fs::exists(truth)) data.truth = parse_truth_json(read_text(truth), data.p());
  return data;
}

std::string selection_csv(const SelectionResult& sel) {
  std::vector<std::uint8_t> chosen(static_cast<std::size_t>(sel.stats.m.size()), 0);
  for (const std::size_t j : sel.selected) chosen[j] = 1;
  std::string out = "feature,M,selected\n";
  for (Eigen::Index j = 0; j < sel.stats.m.size(); ++j) {
    out += std::to_string(j + 1) + "," + format_double(sel.stats.m[j]) + "," +
           (chosen[static_cast<std::size_t>(j)] ? "1" : "0") + "\n";
  }
  return out;
}

std::string shap_csv(const ShapMatrix& shap) {
  std::string out = "feature";
  for (Eigen::Index i = 0; i < shap.values.cols(); ++i) out += "," + std::to_string(i);
  out += '\n';
  for (Eigen::Index r = 0; r < shap.values.rows(); ++r) {
    const std::size_t f =
        static_cast<std::size_t>(r) < shap.features.size() ? shap.features[static_cast<std::size_t>(r)] : static_cast<std::size_t>(r);
    out += std::to_string(f + 1);
    for (Eigen::Index i = 0; i < shap.values.cols(); ++i) out += "," + format_double(shap.values(r, i));
    out += '\n';
  }
  return out;
}

std::string profile_csv(const CjProfile& profile) {
  std::string out = "c,value\n";
  for (std::size_t i = 0; i < profile.grid.size(); ++i) {
    out += format_double(profile.grid[i]) + "," + format_double(profile.values[i]) + "\n";
  }
  return out;
}

std::string loss_trace_csv(const std::vector<LossRecord>& trace) {
  std::string out = "epoch,train_mse,val_mse\n";
  for (const LossRecord& r : trace) {
    out += std::to_string(r.epoch) + "," + format_double(r.train_mse) + "," + format_double(r.val_mse) + "\n";
  }
  return out;
}

namespace {

constexpr int kCheckpointVersion = 1;

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

std::string lstm_checkpoint(const TrainedLstm& model) {
  const LstmParams& p = model.params();
  json j;
  j["format"] = "catnet-lstm";
  j["version"] = kCheckpointVersion;
  j["input_size"] = p.input_size();
  j["hidden_size"] = p.hidden_size();
  j["lookback"] = p.lookback();
  j["layers"] = LstmParams::kLayers;
  j["params"] = std::vector<double>(p.values().begin(), p.values().end());
  j["x_mean"] = to_vector(model.x_mean());
  j["x_scale"] = to_vector(model.x_scale());
  j["y_mean"] = model.y_mean();
  j["y_scale"] = model.y_scale();
  j["best_epoch"] = model.best_epoch;
  return j.dump() + "\n";
}

TrainedLstm parse_lstm_checkpoint(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
    if (j.at("format") != "catnet-lstm") throw InvalidInput("checkpoint: unknown format");
    if (j.at("version").get<int>() != kCheckpointVersion) throw InvalidInput("checkpoint: unsupported version");
    if (j.at("layers").get<std::size_t>() != LstmParams::kLayers) throw InvalidInput("checkpoint: layer count mismatch");
    const auto in = j.at("input_size").get<std::size_t>();
    const auto hidden = j.at("hidden_size").get<std::size_t>();
    const auto lookback = j.at("lookback").get<std::size_t>();
    LstmParams params(in, hidden, lookback);
    const auto flat = j.at("params").get<std::vector<double>>();
    if (flat.size() != params.size()) throw InvalidInput("checkpoint: parameter count mismatch");
    std::copy(flat.begin(), flat.end(), params.values().begin());
    const auto mean = j.at("x_mean").get<std::vector<double>>();
    const auto scale = j.at("x_scale").get<std::vector<double>>();
    if (mean.size() != in || scale.size() != in) throw InvalidInput("checkpoint: scaler size mismatch");
    TrainedLstm model(std::move(params),
                      Eigen::Map<const Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(in)),
                      Eigen::Map<const Eigen::VectorXd>(scale.data(), static_cast<Eigen::Index>(in)),
                      j.at("y_mean").get<double>(), j.at("y_scale").get<double>());
    model.best_epoch = j.value("best_epoch", std::size_t{0});
    return model;
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("checkpoint: ") + e.what());
  }
}

}  // namespace catnet
