#pragma once

#include <filesystem>
#include <string>

#include "mtlab/model.hpp"

namespace mtlab {

/// A frozen model snapshot: the unit of model selection and of transfer.
struct Checkpoint {
  int step = 0;
  double dev_loss = 0.0;
  ModelConfig config;
  ParameterSet<float> parameters;
  std::string vocab_fingerprint;

  TranslationModel<float> model() const { return TranslationModel<float>(config, parameters); }

  /// Container layout: `mtlab-ckpt v1` header, key=value lines, a named
  /// parameter index, then little-endian float32 blobs in index order.
  std::string serialize() const;
  static Checkpoint parse(std::string_view bytes);
  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);
};

std::string format_double(double value);
double parse_double(std::string_view text);

}  // namespace mtlab
