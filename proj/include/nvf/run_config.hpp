#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nvf/editing.hpp"
#include "nvf/field.hpp"
#include "nvf/fitting.hpp"

namespace nvf {

enum class ValueType { integer, real, text, choice, lattices, rectangle };

struct ConfigKey {
  std::string name;
  ValueType type;
  std::string default_value;  // empty for optional keys that default to "unset"
  std::string description;
  std::vector<std::string> choices;
};

const std::vector<ConfigKey>& config_schema();
std::string config_schema_json();

// Flat `key = value` configuration; '#' starts a comment. Every key is
// checked against config_schema() when set, so unknown keys and malformed
// values fail early with a config error naming the key.
class RunConfig {
 public:
  static RunConfig parse(std::string_view text, std::string_view origin = "<config>");
  static RunConfig load(const std::filesystem::path& path);

  void set(std::string_view key, std::string_view value);
  bool is_set(std::string_view key) const;

  std::string text(std::string_view key) const;
  long long integer(std::string_view key) const;
  double real(std::string_view key) const;
  std::optional<double> optional_real(std::string_view key) const;

  int threads() const;
  std::uint64_t seed() const;
  FieldConfig field_config(int frames, int height, int width) const;
  AdamConfig fit_optimizer() const;
  AdamConfig edit_optimizer() const;
  FitConfig fit_config() const;
  EditConfig edit_config(int frames) const;
  // Built-in editor or, for edit.editor = external, the exchange-directory
  // editor (edit.exchange_dir, falling back to $NVF_EXCHANGE_DIR).
  std::unique_ptr<FrameEditor> make_editor() const;

 private:
  std::string raw(std::string_view key) const;
  std::map<std::string, std::string, std::less<>> values_;
};

std::vector<LatticeShape> parse_lattices(std::string_view text);

}  // namespace nvf
