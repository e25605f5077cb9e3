#include "nvf/run_config.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "nvf/error.hpp"

namespace nvf {

namespace {

const std::vector<ConfigKey> kSchema = {
    {"seed", ValueType::integer, "0", "Seed for initialisation, pixel sampling and random frame picks.", {}},
    {"threads", ValueType::integer, "1", "Worker threads for batch evaluation and rendering.", {}},
    {"field.plane_x", ValueType::integer, "0", "Plane resolution along x; 0 selects max(2, W/2).", {}},
    {"field.plane_y", ValueType::integer, "0", "Plane resolution along y; 0 selects max(2, H/2).", {}},
    {"field.plane_t", ValueType::integer, "0", "Plane resolution along t; 0 selects max(T, 16).", {}},
    {"field.channels", ValueType::integer, "12", "Feature channels per plane.", {}},
    {"field.lattices", ValueType::lattices, "8x16x16,16x32x32", "Dense lattice levels as TxHxW, comma separated.", {}},
    {"field.lattice_channels", ValueType::integer, "4", "Feature channels per lattice level.", {}},
    {"decoder.layers", ValueType::integer, "3", "Number of linear layers in the decoder.", {}},
    {"decoder.hidden", ValueType::integer, "64", "Hidden width of the decoder.", {}},
    {"optim.lr_ex", ValueType::real, "0.01", "Fitting learning rate for feature arrays.", {}},
    {"optim.lr_im", ValueType::real, "0.001", "Fitting learning rate for decoder weights.", {}},
    {"optim.beta1", ValueType::real, "0.9", "Adam first-moment decay.", {}},
    {"optim.beta2", ValueType::real, "0.99", "Adam second-moment decay.", {}},
    {"optim.eps", ValueType::real, "1e-15", "Adam denominator epsilon.", {}},
    {"fit.batch_size", ValueType::integer, "65536", "Pixels per fitting step.", {}},
    {"fit.iterations", ValueType::integer, "30000", "Fitting iteration budget.", {}},
    {"fit.log_interval", ValueType::integer, "500", "Iterations between full-video PSNR evaluations.", {}},
    {"fit.target_psnr", ValueType::real, "", "Optional early-stop PSNR in dB.", {}},
    {"edit.editor", ValueType::choice, "identity", "Frame editor.",
     {"identity", "hue-shift", "sepia", "posterize", "region-recolor", "upscale2x", "external"}},
    {"edit.instruction", ValueType::text, "", "Instruction passed to the editor.", {}},
    {"edit.iterations", ValueType::integer, "0", "Editing iterations; 0 selects 10 * T.", {}},
    {"edit.s_min", ValueType::real, "0.3", "Strength at the first editing iteration.", {}},
    {"edit.s_max", ValueType::real, "1.0", "Strength at the last editing iteration.", {}},
    {"edit.schedule", ValueType::choice, "linear", "Strength ramp shape.", {"linear", "cosine-ramp"}},
    {"edit.frame_pick", ValueType::choice, "cyclic", "Frame order during editing.", {"cyclic", "random"}},
    {"edit.reference", ValueType::choice, "source",
     "Reference frame given to the editor: the source video or the field as loaded.", {"source", "field"}},
    {"edit.t_l", ValueType::real, "0.42", "Lower bound of the editor's noise window.", {}},
    {"edit.t_u", ValueType::real, "0.98", "Upper bound of the editor's noise window.", {}},
    {"edit.tau", ValueType::real, "", "Optional mask threshold; region-recolor uses 0.1 when unset.", {}},
    {"edit.max_failure_fraction", ValueType::real, "0.1", "Fraction of failed editor calls tolerated.", {}},
    {"edit.consistency_interval", ValueType::integer, "0",
     "Iterations between temporal-consistency samples; 0 samples once per sweep.", {}},
    {"edit.lr_ex", ValueType::real, "0.0001", "Editing learning rate for feature arrays.", {}},
    {"edit.lr_im", ValueType::real, "0.05", "Editing learning rate for decoder weights.", {}},
    {"edit.lr_final_fraction", ValueType::real, "0.1", "Editing learning rates decay to this fraction.", {}},
    {"edit.lr_warmup", ValueType::integer, "16", "Iterations of linear learning-rate warmup at the start of editing.", {}},
    {"edit.hue_degrees", ValueType::real, "180", "Hue rotation for hue-shift.", {}},
    {"edit.levels", ValueType::integer, "4", "Levels per channel for posterize.", {}},
    {"edit.region", ValueType::rectangle, "", "Rectangle x0,y0,x1,y1 (half-open) for region-recolor.", {}},
    {"edit.region_hue", ValueType::real, "120", "Target hue for region-recolor.", {}},
    {"edit.exchange_dir", ValueType::text, "", "Exchange directory for the external editor.", {}},
    {"edit.timeout", ValueType::real, "600", "Seconds to wait for each external edit.", {}},
};

const ConfigKey* find_key(std::string_view name) {
  for (const auto& k : kSchema) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::optional<long long> to_integer(std::string_view s) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

std::optional<double> to_real(std::string_view s) {
  if (s.empty()) return std::nullopt;
  std::string copy(s);
  char* end = nullptr;
  const double v = std::strtod(copy.c_str(), &end);
  if (end != copy.c_str() + copy.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::array<int, 4> parse_rectangle(std::string_view text, std::string_view key) {
  std::array<int, 4> r{};
  std::size_t pos = 0;
  for (int i = 0; i < 4; ++i) {
    const auto comma = text.find(',', pos);
    const auto part = trim(text.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
    auto v = to_integer(part);
    if (!v || (i < 3) == (comma == std::string_view::npos)) {
      fail(ErrorKind::config, std::string(key) + " must be x0,y0,x1,y1, got '" + std::string(text) + "'");
    }
    r[i] = static_cast<int>(*v);
    pos = comma == std::string_view::npos ? text.size() : comma + 1;
  }
  return r;
}

void check_value(const ConfigKey& key, std::string_view value) {
  auto bad = [&](const std::string& what) {
    fail(ErrorKind::config, key.name + " " + what + ", got '" + std::string(value) + "'");
  };
  if (value.empty() && key.default_value.empty()) return;
  switch (key.type) {
    case ValueType::integer:
      if (!to_integer(value)) bad("must be an integer");
      break;
    case ValueType::real:
      if (!to_real(value)) bad("must be a finite number");
      break;
    case ValueType::text: break;
    case ValueType::choice: {
      bool ok = false;
      for (const auto& c : key.choices) ok = ok || c == value;
      if (!ok) {
        std::string list;
        for (const auto& c : key.choices) list += (list.empty() ? "" : ", ") + c;
        bad("must be one of {" + list + "}");
      }
      break;
    }
    case ValueType::lattices: parse_lattices(value); break;
    case ValueType::rectangle: parse_rectangle(value, key.name); break;
  }
}

std::string_view type_name(ValueType t) {
  switch (t) {
    case ValueType::integer: return "integer";
    case ValueType::real: return "real";
    case ValueType::text: return "text";
    case ValueType::choice: return "choice";
    case ValueType::lattices: return "lattices";
    case ValueType::rectangle: return "rectangle";
  }
  return "unknown";
}

}  // namespace

const std::vector<ConfigKey>& config_schema() { return kSchema; }

std::string config_schema_json() {
  nlohmann::ordered_json keys = nlohmann::ordered_json::array();
  for (const auto& k : kSchema) {
    nlohmann::ordered_json j;
    j["name"] = k.name;
    j["type"] = type_name(k.type);
    if (k.default_value.empty() && k.type != ValueType::text) {
      j["default"] = nullptr;
    } else {
      j["default"] = k.default_value;
    }
    j["description"] = k.description;
    if (!k.choices.empty()) j["choices"] = k.choices;
    keys.push_back(j);
  }
  nlohmann::ordered_json doc;
  doc["format"] = "key = value";
  doc["keys"] = keys;
  return doc.dump(2);
}

std::vector<LatticeShape> parse_lattices(std::string_view text) {
  std::vector<LatticeShape> out;
  const std::string all = trim(text);
  if (all.empty() || all == "none") return out;
  std::stringstream levels(all);
  std::string level;
  while (std::getline(levels, level, ',')) {
    std::vector<int> dims;
    std::stringstream parts(trim(level));
    std::string part;
    bool ok = true;
    while (std::getline(parts, part, 'x')) {
      auto v = to_integer(trim(part));
      ok = ok && v.has_value();
      if (v) dims.push_back(static_cast<int>(*v));
    }
    if (!ok || dims.size() != 3) fail(ErrorKind::config, "field.lattices entries must be TxHxW, got '" + level + "'");
    out.push_back({dims[0], dims[1], dims[2]});
  }
  return out;
}

RunConfig RunConfig::parse(std::string_view text, std::string_view origin) {
  RunConfig config;
  std::stringstream in{std::string(text)};
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    const std::string body = trim(std::string_view(line).substr(0, hash));
    if (body.empty()) continue;
    const auto where = std::string(origin) + ":" + std::to_string(number);
    const auto eq = body.find('=');
    if (eq == std::string::npos) fail(ErrorKind::config, where + ": expected 'key = value'");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    if (config.values_.count(key)) fail(ErrorKind::config, where + ": duplicate key " + key);
    try {
      config.set(key, value);
    } catch (const Error& e) {
      fail(ErrorKind::config, where + ": " + e.what());
    }
  }
  return config;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot read config file " + path.string());
  std::stringstream body;
  body << in.rdbuf();
  return parse(body.str(), path.string());
}

void RunConfig::set(std::string_view key, std::string_view value) {
  const ConfigKey* k = find_key(key);
  if (!k) fail(ErrorKind::config, "unknown config key " + std::string(key));
  check_value(*k, value);
  values_[std::string(key)] = std::string(value);
}

bool RunConfig::is_set(std::string_view key) const {
  auto it = values_.find(key);
  if (it != values_.end()) return !it->second.empty();
  const ConfigKey* k = find_key(key);
  require(k != nullptr, "unknown config key " + std::string(key));
  return !k->default_value.empty();
}

std::string RunConfig::raw(std::string_view key) const {
  auto it = values_.find(key);
  if (it != values_.end()) return it->second;
  const ConfigKey* k = find_key(key);
  require(k != nullptr, "unknown config key " + std::string(key));
  return k->default_value;
}

std::string RunConfig::text(std::string_view key) const { return raw(key); }

long long RunConfig::integer(std::string_view key) const {
  auto v = to_integer(raw(key));
  require(v.has_value(), std::string(key) + " is not set");
  return *v;
}

double RunConfig::real(std::string_view key) const {
  auto v = to_real(raw(key));
  require(v.has_value(), std::string(key) + " is not set");
  return *v;
}

std::optional<double> RunConfig::optional_real(std::string_view key) const {
  if (!is_set(key)) return std::nullopt;
  return real(key);
}

int RunConfig::threads() const {
  const long long t = integer("threads");
  if (t < 1 || t > 1024) fail(ErrorKind::config, "threads must lie in [1, 1024]");
  return static_cast<int>(t);
}

std::uint64_t RunConfig::seed() const {
  const long long s = integer("seed");
  if (s < 0) fail(ErrorKind::config, "seed must be >= 0");
  return static_cast<std::uint64_t>(s);
}

namespace {

int bounded(long long v, std::string_view key, long long lo, long long hi) {
  if (v < lo || v > hi) {
    fail(ErrorKind::config, std::string(key) + " must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) +
                                "], got " + std::to_string(v));
  }
  return static_cast<int>(v);
}

}  // namespace

FieldConfig RunConfig::field_config(int frames, int height, int width) const {
  FieldConfig c = FieldConfig::defaults_for(frames, height, width);
  constexpr long long kMax = 1 << 20;
  if (int v = bounded(integer("field.plane_x"), "field.plane_x", 0, kMax)) c.plane_x = v;
  if (int v = bounded(integer("field.plane_y"), "field.plane_y", 0, kMax)) c.plane_y = v;
  if (int v = bounded(integer("field.plane_t"), "field.plane_t", 0, kMax)) c.plane_t = v;
  c.channels = bounded(integer("field.channels"), "field.channels", 0, kMax);
  c.lattices = parse_lattices(text("field.lattices"));
  c.lattice_channels = bounded(integer("field.lattice_channels"), "field.lattice_channels", 0, kMax);
  c.decoder_layers = bounded(integer("decoder.layers"), "decoder.layers", 1, 64);
  c.hidden_width = bounded(integer("decoder.hidden"), "decoder.hidden", 1, kMax);
  c.validate();
  return c;
}

namespace {

AdamConfig optimizer(const RunConfig& rc, std::string_view ex, std::string_view im) {
  AdamConfig a;
  a.lr_explicit = rc.real(ex);
  a.lr_implicit = rc.real(im);
  a.beta1 = rc.real("optim.beta1");
  a.beta2 = rc.real("optim.beta2");
  a.epsilon = rc.real("optim.eps");
  if (a.lr_explicit < 0.0) fail(ErrorKind::config, std::string(ex) + " must be >= 0");
  if (a.lr_implicit < 0.0) fail(ErrorKind::config, std::string(im) + " must be >= 0");
  if (!(a.beta1 >= 0.0 && a.beta1 < 1.0)) fail(ErrorKind::config, "optim.beta1 must lie in [0,1)");
  if (!(a.beta2 >= 0.0 && a.beta2 < 1.0)) fail(ErrorKind::config, "optim.beta2 must lie in [0,1)");
  if (!(a.epsilon > 0.0)) fail(ErrorKind::config, "optim.eps must be > 0");
  return a;
}

}  // namespace

AdamConfig RunConfig::fit_optimizer() const { return optimizer(*this, "optim.lr_ex", "optim.lr_im"); }

AdamConfig RunConfig::edit_optimizer() const { return optimizer(*this, "edit.lr_ex", "edit.lr_im"); }

FitConfig RunConfig::fit_config() const {
  FitConfig c;
  c.batch_size = bounded(integer("fit.batch_size"), "fit.batch_size", 1, 1 << 26);
  c.iterations = bounded(integer("fit.iterations"), "fit.iterations", 1, 1 << 30);
  c.log_interval = bounded(integer("fit.log_interval"), "fit.log_interval", 1, 1 << 30);
  c.target_psnr = optional_real("fit.target_psnr");
  c.seed = seed();
  c.threads = threads();
  c.validate();
  return c;
}

EditConfig RunConfig::edit_config(int frames) const {
  EditConfig c;
  const int n = bounded(integer("edit.iterations"), "edit.iterations", 0, 1 << 30);
  c.schedule.total_iterations = n > 0 ? n : 10 * frames;
  c.schedule.s_min = real("edit.s_min");
  c.schedule.s_max = real("edit.s_max");
  c.schedule.shape = text("edit.schedule") == "linear" ? ScheduleShape::linear : ScheduleShape::cosine_ramp;
  c.frame_pick = text("edit.frame_pick") == "cyclic" ? FramePick::cyclic : FramePick::random;
  c.reference = text("edit.reference") == "source" ? ReferenceSource::source : ReferenceSource::field;
  c.instruction = text("edit.instruction");
  c.t_lower = real("edit.t_l");
  c.t_upper = real("edit.t_u");
  c.tau = optional_real("edit.tau");
  c.seed = seed();
  c.max_failure_fraction = real("edit.max_failure_fraction");
  c.consistency_interval = bounded(integer("edit.consistency_interval"), "edit.consistency_interval", 0, 1 << 30);
  c.lr_final_fraction = real("edit.lr_final_fraction");
  c.lr_warmup_iterations = bounded(integer("edit.lr_warmup"), "edit.lr_warmup", 0, 1 << 30);
  c.threads = threads();
  c.validate();
  return c;
}

std::unique_ptr<FrameEditor> RunConfig::make_editor() const {
  const std::string kind = text("edit.editor");
  if (kind == "external") {
    std::string dir = text("edit.exchange_dir");
    if (dir.empty()) {
      if (const char* env = std::getenv("NVF_EXCHANGE_DIR")) dir = env;
    }
    if (dir.empty()) fail(ErrorKind::config, "edit.editor = external needs edit.exchange_dir or NVF_EXCHANGE_DIR");
    return external_editor(dir, real("edit.timeout"));
  }
  EditorOptions options;
  options.hue_degrees = real("edit.hue_degrees");
  options.levels = bounded(integer("edit.levels"), "edit.levels", 2, 256);
  if (is_set("edit.region")) options.region = parse_rectangle(text("edit.region"), "edit.region");
  options.region_hue = real("edit.region_hue");
  if (auto tau = optional_real("edit.tau")) options.tau = *tau;
  const EditorKind k = parse_editor_kind(kind);
  if (k == EditorKind::region_recolor && !is_set("edit.region")) {
    fail(ErrorKind::config, "edit.editor = region-recolor needs edit.region");
  }
  return builtin_editor(k, options);
}

}  // namespace nvf
