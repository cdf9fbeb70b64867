#include "catnet/cli.hpp"

#include <glob.h>

#include <cmath>
#include <map>
#include <ostream>
#include <set>

#include "catnet/io.hpp"
#include "catnet/rng.hpp"

namespace catnet {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string_view mode_name(Mode m) {
  switch (m) {
    case Mode::CatNet: return "catnet";
    case Mode::SCatNet: return "scatnet";
    case Mode::Gm: return "gm";
  }
  return "?";
}

std::string_view backend_name(Backend b) { return b == Backend::Linear ? "linear" : "lstm"; }
std::string_view design_name(Design d) { return d == Design::Linear ? "linear" : "brownian"; }

std::string_view cj_name(CjMethod m) {
  switch (m) {
    case CjMethod::Auto: return "auto";
    case CjMethod::Analytic: return "analytic";
    case CjMethod::Kernel: return "kernel";
  }
  return "?";
}

std::string_view preselect_name(Preselect p) {
  switch (p) {
    case Preselect::Auto: return "auto";
    case Preselect::Always: return "always";
    case Preselect::Never: return "never";
  }
  return "?";
}

// Reads keys out of one JSON object and rejects the ones nobody asked for.
class Section {
 public:
  Section(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(where("") + "expected an object");
  }

  ~Section() = default;

  const json* find(const std::string& k) {
    seen_.insert(k);
    const auto it = obj_.find(k);
    return it == obj_.end() ? nullptr : &*it;
  }

  template <class T>
  void read(const std::string& k, T& out) {
    const json* v = find(k);
    if (!v) return;
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v->is_boolean()) throw ConfigError("");
      } else if constexpr (std::is_unsigned_v<T>) {
        if (!v->is_number_integer() || v->get<long long>() < 0) throw ConfigError("");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v->is_number_integer()) throw ConfigError("");
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v->is_number()) throw ConfigError("");
      }
      out = v->get<T>();
    } catch (const std::exception&) {
      throw ConfigError(where(k) + "wrong type");
    }
  }

  template <class E, class Parse>
  void read_enum(const std::string& k, E& out, Parse parse) {
    const json* v = find(k);
    if (!v) return;
    if (!v->is_string()) throw ConfigError(where(k) + "expected a string");
    try {
      out = parse(v->get<std::string>());
    } catch (const InvalidInput&) {
      throw ConfigError(where(k) + "unknown value '" + v->get<std::string>() + "'");
    }
  }

  std::optional<Section> child(const std::string& k) {
    const json* v = find(k);
    if (!v) return std::nullopt;
    return Section(*v, path_.empty() ? k : path_ + "." + k);
  }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(where(it.key()) + "unknown key");
    }
  }

  std::string where(const std::string& k) const {
    std::string p = path_;
    if (!k.empty()) p = p.empty() ? k : p + "." + k;
    return "config: " + (p.empty() ? std::string("<root>") : p) + ": ";
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

template <class E>
E pick(std::string_view name, std::initializer_list<std::pair<std::string_view, E>> table) {
  for (const auto& [k, v] : table) {
    if (k == name) return v;
  }
  throw InvalidInput("unknown value");
}

Mode parse_mode(std::string_view s) {
  return pick<Mode>(s, {{"catnet", Mode::CatNet}, {"scatnet", Mode::SCatNet}, {"gm", Mode::Gm}});
}
Backend parse_backend(std::string_view s) {
  return pick<Backend>(s, {{"linear", Backend::Linear}, {"lstm", Backend::Lstm}});
}
Design parse_design(std::string_view s) {
  return pick<Design>(s, {{"linear", Design::Linear}, {"brownian", Design::Brownian}});
}
CjMethod parse_cj(std::string_view s) {
  return pick<CjMethod>(s, {{"auto", CjMethod::Auto}, {"analytic", CjMethod::Analytic}, {"kernel", CjMethod::Kernel}});
}
Preselect parse_preselect(std::string_view s) {
  return pick<Preselect>(s, {{"auto", Preselect::Auto}, {"always", Preselect::Always}, {"never", Preselect::Never}});
}

}  // namespace

std::size_t RunConfig::Data::support(std::size_t features) const {
  if (k >= 0) return static_cast<std::size_t>(k);
  return static_cast<std::size_t>(std::lround(static_cast<double>(features) / 5.0));
}

RunConfig RunConfig::from_json(const json& doc) {
  RunConfig cfg;
  PipelineConfig& pc = cfg.pipeline;
  Section root(doc, "");
  root.read_enum("mode", cfg.mode, parse_mode);
  root.read_enum("backend", pc.backend, parse_backend);
  root.read("q", pc.q);
  root.read("seed", cfg.seed);
  root.read("repeats", cfg.repeats);
  root.read("setting", cfg.setting);
  root.read("dump_profiles", cfg.dump_profiles);
  root.read_enum("preselect", pc.preselect, parse_preselect);

  if (auto data = root.child("data")) {
    data->read_enum("design", cfg.data.design, parse_design);
    data->read("p", cfg.data.p);
    data->read("n", cfg.data.n);
    data->read("k", cfg.data.k);
    data->read("corr", cfg.data.corr);
    data->read_enum("link", cfg.data.link, [](const std::string& s) { return parse_link(s); });
    data->finish();
  }
  if (auto dep = root.child("dependence")) {
    dep->read_enum("kernel", pc.kernel, [](const std::string& s) { return parse_kernel(s); });
    dep->read("max_lag", pc.max_lag);
    dep->read("grid_size", pc.grid_size);
    dep->read_enum("cj_method", pc.cj_method, parse_cj);
    dep->finish();
  }
  if (auto shap = root.child("shap")) {
    shap->read("permutations", pc.permutations);
    shap->read("background", pc.background);
    shap->finish();
  }
  if (auto imp = root.child("importance")) {
    imp->read("frac", pc.lowess.frac);
    imp->read("iters", pc.lowess.iters);
    imp->finish();
  }
  if (auto lstm = root.child("lstm")) {
    lstm->read("epochs", pc.lstm.epochs);
    lstm->read("learning_rate", pc.lstm.learning_rate);
    lstm->read("batch_size", pc.lstm.batch_size);
    lstm->read("lookback", pc.lstm.lookback);
    lstm->read("hidden", pc.lstm.hidden);
    lstm->read("patience", pc.lstm.patience);
    lstm->read("validation_fraction", pc.lstm.validation_fraction);
    lstm->finish();
  }
  root.finish();
  pc.seed = cfg.seed;
  cfg.validate();
  return cfg;
}

void RunConfig::validate() const {
  if (!(pipeline.q > 0.0 && pipeline.q < 1.0)) throw ConfigError("config: q: must lie in (0, 1)");
  if (repeats < 1) throw ConfigError("config: repeats: must be at least 1");
  if (mode == Mode::Gm && pipeline.backend != Backend::Linear) {
    throw ConfigError("config: mode: gm requires the linear backend");
  }
  if (!(data.corr >= 0.0 && data.corr < 1.0)) throw ConfigError("config: data.corr: must lie in [0, 1)");
  if (data.p > 0 && data.support(data.p) > data.p) throw ConfigError("config: data.k: exceeds p");
  try {
    pipeline.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidInput& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

RunConfig RunConfig::load(const fs::path& path) {
  const std::string text = read_text(path);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    // Recover the line and column from the byte offset.
    std::size_t line = 1, col = 1;
    const std::size_t end = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError(path.string() + ":" + std::to_string(line) + ":" + std::to_string(col) +
                      ": invalid JSON");
  }
  return from_json(doc);
}

json RunConfig::to_json() const {
  const PipelineConfig& pc = pipeline;
  json j;
  j["mode"] = mode_name(mode);
  j["backend"] = backend_name(pc.backend);
  j["q"] = pc.q;
  j["seed"] = seed;
  j["repeats"] = repeats;
  j["setting"] = setting_key();
  j["dump_profiles"] = dump_profiles;
  j["preselect"] = preselect_name(pc.preselect);
  j["data"] = {{"design", design_name(data.design)},
               {"p", data.p},
               {"n", data.n},
               {"k", data.k},
               {"corr", data.corr},
               {"link", link_name(data.link)}};
  j["dependence"] = {{"kernel", kernel_name(pc.kernel)},
                     {"max_lag", pc.max_lag},
                     {"grid_size", pc.grid_size},
                     {"cj_method", cj_name(pc.cj_method)}};
  j["shap"] = {{"permutations", pc.permutations}, {"background", pc.background}};
  j["importance"] = {{"frac", pc.lowess.frac}, {"iters", pc.lowess.iters}};
  j["lstm"] = {{"epochs", pc.lstm.epochs},
               {"learning_rate", pc.lstm.learning_rate},
               {"batch_size", pc.lstm.batch_size},
               {"lookback", pc.lstm.lookback},
               {"hidden", pc.lstm.hidden},
               {"patience", pc.lstm.patience},
               {"validation_fraction", pc.lstm.validation_fraction}};
  return j;
}

std::string RunConfig::setting_key() const {
  if (!setting.empty()) return setting;
  std::string s = std::string(mode_name(mode)) + "-" + std::string(backend_name(pipeline.backend)) + "-" +
                  std::string(design_name(data.design)) + "-" + std::string(link_name(data.link));
  s += "-p" + std::to_string(data.p) + "-n" + std::to_string(data.n) + "-k" +
       std::to_string(data.p > 0 ? data.support(data.p) : 0);
  s += "-corr" + format_double(data.corr) + "-q" + format_double(pipeline.q);
  return s;
}

Dataset simulate_repeat(const RunConfig& cfg, std::size_t r) {
  if (cfg.data.p == 0 || cfg.data.n == 0) throw ConfigError("config: data.p and data.n are required");
  const std::uint64_t seed = derive_seed(cfg.seed, {key(Purpose::kRepeat), r});
  const std::size_t k = cfg.data.support(cfg.data.p);
  Dataset d = cfg.data.design == Design::Linear
                  ? gen_linear_design(cfg.data.p, cfg.data.n, k, cfg.data.corr, seed)
                  : gen_brownian_design(cfg.data.p, cfg.data.n, k, seed);
  d.y = apply_link(d.y, cfg.data.link);
  return d;
}

SelectionResult run_pipeline(const RunConfig& cfg, const Dataset& data, RunDiagnostics* diag) {
  switch (cfg.mode) {
    case Mode::CatNet: return run_catnet(data, cfg.pipeline, diag);
    case Mode::SCatNet: return run_scatnet(data, cfg.pipeline, diag);
    case Mode::Gm: return run_gm_linear(data, cfg.pipeline, diag);
  }
  throw InvalidInput("unknown mode");
}

json metrics_json(const RunConfig& cfg, const SelectionResult& sel) {
  json j;
  j["q"] = sel.q;
  j["threshold"] = sel.threshold ? json(*sel.threshold) : json(nullptr);
  j["n_selected"] = sel.selected.size();
  json selected = json::array();
  for (const std::size_t s : sel.selected) selected.push_back(s + 1);
  j["selected"] = selected;
  if (sel.metrics) {
    j["fdp"] = sel.metrics->fdp;
    j["power"] = sel.metrics->power;
  }
  j["warnings"] = sel.warnings;
  j["setting"] = cfg.setting_key();
  j["config"] = cfg.to_json();
  return j;
}

int cmd_simulate(const fs::path& config, const fs::path& out_dir, std::ostream& err) {
  try {
    const RunConfig cfg = RunConfig::load(config);
    fs::create_directories(out_dir);
    for (std::size_t r = 0; r < cfg.repeats; ++r) {
      write_dataset(out_dir / ("dataset_r" + std::to_string(r) + ".csv"), simulate_repeat(cfg, r));
    }
    return kExitOk;
  } catch (const std::exception& e) {
    err << "simulate: " << e.what() << "\n";
    return kExitError;
  }
}

int cmd_select(const fs::path& config, const fs::path& data_path, const fs::path& out_dir,
               std::ostream& err) {
  try {
    const RunConfig cfg = RunConfig::load(config);
    const Dataset data = load_dataset(data_path);
    if (cfg.data.p != 0 && cfg.data.p != data.p()) {
      throw InvalidInput(data_path.string() + ": has " + std::to_string(data.p()) +
                         " features, config expects " + std::to_string(cfg.data.p));
    }
    RunDiagnostics diag;
    const SelectionResult sel = run_pipeline(cfg, data, &diag);
    fs::create_directories(out_dir);
    const std::string stem = data_path.stem().string();
    atomic_write(out_dir / (stem + ".selection.csv"), selection_csv(sel));
    atomic_write(out_dir / (stem + ".metrics.json"), metrics_json(cfg, sel).dump(2) + "\n");
    if (cfg.dump_profiles) {
      for (const auto& [j, prof] : diag.profiles) {
        atomic_write(out_dir / (stem + ".profile_x" + std::to_string(j + 1) + ".csv"), profile_csv(prof));
      }
    }
    if (sel.warnings > 0) {
      err << "select: " << sel.warnings << " feature(s) failed and were assigned M = 0\n";
      return kExitWarnings;
    }
    return kExitOk;
  } catch (const std::exception& e) {
    err << "select: " << e.what() << "\n";
    return kExitError;
  }
}

namespace {

std::vector<std::string> expand_glob(const std::string& pattern) {
  glob_t g{};
  std::vector<std::string> out;
  if (::glob(pattern.c_str(), 0, nullptr, &g) == 0) {
    for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
  }
  ::globfree(&g);
  return out;
}

struct Group {
  std::vector<double> fdp, power;
};

// Shifted by the first value so constant groups come out exact.
double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (const double x : v) s += x - v.front();
  return v.front() + s / static_cast<double>(v.size());
}

double sample_sd(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double s = 0.0;
  for (const double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

int cmd_report(const std::string& pattern, const fs::path& out_csv, std::ostream& out, std::ostream& err) {
  try {
    const auto files = expand_glob(pattern);
    if (files.empty()) {
      err << "report: no files match '" << pattern << "'\n";
      return kExitError;
    }
    std::map<std::string, Group> groups;
    for (const std::string& f : files) {
      json j;
      try {
        j = json::parse(read_text(f));
      } catch (const json::exception& e) {
        throw InvalidInput(f + ": " + e.what());
      }
      if (!j.contains("fdp") || !j.contains("power")) throw InvalidInput(f + ": no fdp/power (dataset had no truth)");
      const std::string setting = j.value("setting", std::string("default"));
      groups[setting].fdp.push_back(j["fdp"].get<double>());
      groups[setting].power.push_back(j["power"].get<double>());
    }
    std::string csv = "setting,mean_fdr,mean_power,std_fdr,std_power,repeats\n";
    for (const auto& [name, g] : groups) {
      csv += name + "," + format_double(mean(g.fdp)) + "," + format_double(mean(g.power)) + "," +
             format_double(sample_sd(g.fdp)) + "," + format_double(sample_sd(g.power)) + "," +
             std::to_string(g.fdp.size()) + "\n";
    }
    if (out_csv.has_parent_path()) fs::create_directories(out_csv.parent_path());
    atomic_write(out_csv, csv);
    out << csv;
    return kExitOk;
  } catch (const std::exception& e) {
    err << "report: " << e.what() << "\n";
    return kExitError;
  }
}

}  // namespace catnet
