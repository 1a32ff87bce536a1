#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "mtlab/model.hpp"
#include "mtlab/training.hpp"

namespace mtlab {

/// `key = value` lines; `#` starts a comment. Later keys override earlier ones.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::string_view text);
  static KeyValueConfig load(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value) { entries_[key] = value; }
  std::optional<std::string> get(const std::string& key) const;
  const std::map<std::string, std::string>& entries() const noexcept { return entries_; }

  /// Sorted `key = value` lines.
  std::string serialize() const;

 private:
  std::map<std::string, std::string> entries_;
};

/// Applies recognised keys. Keys under `run.` and `input.` (manifest
/// metadata) are skipped; anything else unknown is Error(kInvalidConfig).
void apply_config(const KeyValueConfig& config, ModelConfig& model, TrainConfig& train);

/// Every model and training setting, materialised.
KeyValueConfig to_key_values(const ModelConfig& model, const TrainConfig& train);

}  // namespace mtlab
