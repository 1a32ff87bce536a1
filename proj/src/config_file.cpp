#include "mtlab/config_file.hpp"

#include <charconv>

#include "mtlab/checkpoint.hpp"
#include "mtlab/hashing.hpp"

namespace mtlab {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T to_integer(const std::string& key, const std::string& value) {
  T v{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw Error(ErrorCode::kInvalidConfig, key + ": expected an integer, got '" + value + "'");
  }
  return v;
}

double to_real(const std::string& key, const std::string& value) {
  try {
    return parse_double(value);
  } catch (const Error&) {
    throw Error(ErrorCode::kInvalidConfig, key + ": expected a number, got '" + value + "'");
  }
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(std::string_view text) {
  KeyValueConfig cfg;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(start, nl - start);
    start = nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::kInvalidConfig, "line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key(trim(line.substr(0, eq)));
    if (key.empty()) throw Error(ErrorCode::kInvalidConfig, "line " + std::to_string(line_no) + ": empty key");
    cfg.set(key, std::string(trim(line.substr(eq + 1))));
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) { return parse(read_file(path)); }

std::optional<std::string> KeyValueConfig::get(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::string KeyValueConfig::serialize() const {
  std::string out;
  for (const auto& [k, v] : entries_) out += k + " = " + v + '\n';
  return out;
}

void apply_config(const KeyValueConfig& config, ModelConfig& model, TrainConfig& train) {
  for (const auto& [key, value] : config.entries()) {
    if (key.starts_with("run.") || key.starts_with("input.")) continue;
    if (key == "layers") model.layers = to_integer<int>(key, value);
    else if (key == "heads") model.heads = to_integer<int>(key, value);
    else if (key == "d_model") model.d_model = to_integer<int>(key, value);
    else if (key == "d_ff") model.d_ff = to_integer<int>(key, value);
    else if (key == "max_len") model.max_len = to_integer<int>(key, value);
    else if (key == "dropout") model.dropout = to_real(key, value);
    else if (key == "label_smoothing") model.label_smoothing = to_real(key, value);
    else if (key == "max_steps") train.max_steps = to_integer<int>(key, value);
    else if (key == "validate_every") train.validate_every = to_integer<int>(key, value);
    else if (key == "batch_size") train.batch_size = to_integer<int>(key, value);
    else if (key == "learning_rate") train.learning_rate = to_real(key, value);
    else if (key == "warmup_steps") train.warmup_steps = to_integer<int>(key, value);
    else if (key == "grad_clip") train.grad_clip = to_real(key, value);
    else if (key == "seed") {
      train.seed = to_integer<std::uint64_t>(key, value);
      model.seed = train.seed;
    } else {
      throw Error(ErrorCode::kInvalidConfig, "unknown config key '" + key + "'");
    }
  }
}

KeyValueConfig to_key_values(const ModelConfig& model, const TrainConfig& train) {
  KeyValueConfig cfg;
  cfg.set("layers", std::to_string(model.layers));
  cfg.set("heads", std::to_string(model.heads));
  cfg.set("d_model", std::to_string(model.d_model));
  cfg.set("d_ff", std::to_string(model.d_ff));
  cfg.set("max_len", std::to_string(model.max_len));
  cfg.set("dropout", format_double(model.dropout));
  cfg.set("label_smoothing", format_double(model.label_smoothing));
  cfg.set("max_steps", std::to_string(train.max_steps));
  cfg.set("validate_every", std::to_string(train.validate_every));
  cfg.set("batch_size", std::to_string(train.batch_size));
  cfg.set("learning_rate", format_double(train.learning_rate));
  cfg.set("warmup_steps", std::to_string(train.warmup_steps));
  cfg.set("grad_clip", format_double(train.grad_clip));
  cfg.set("seed", std::to_string(train.seed));
  return cfg;
}

}  // namespace mtlab
