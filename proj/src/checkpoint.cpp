#include "mtlab/checkpoint.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <map>

#include "mtlab/hashing.hpp"

namespace mtlab {
namespace {

constexpr std::string_view kMagic = "mtlab-ckpt v1";

std::uint32_t to_little_endian(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    v = ((v & 0xFF) << 24) | ((v & 0xFF00) << 8) | ((v >> 8) & 0xFF00) | (v >> 24);
  }
  return v;
}

long long parse_integer(std::string_view text) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error(ErrorCode::kFormat, "bad integer '" + std::string(text) + "'");
  }
  return v;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

double parse_double(std::string_view text) {
  double v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error(ErrorCode::kFormat, "bad number '" + std::string(text) + "'");
  }
  return v;
}

std::string Checkpoint::serialize() const {
  if (!std::isfinite(dev_loss)) throw Error(ErrorCode::kInvalidArgument, "checkpoint dev_loss must be finite");
  std::string out;
  const auto kv = [&](std::string_view key, const std::string& value) {
    out += key;
    out += '=';
    out += value;
    out += '\n';
  };
  out += kMagic;
  out += '\n';
  kv("layers", std::to_string(config.layers));
  kv("heads", std::to_string(config.heads));
  kv("d_model", std::to_string(config.d_model));
  kv("d_ff", std::to_string(config.d_ff));
  kv("vocab_size", std::to_string(config.vocab_size));
  kv("max_len", std::to_string(config.max_len));
  kv("dropout", format_double(config.dropout));
  kv("label_smoothing", format_double(config.label_smoothing));
  kv("seed", std::to_string(config.seed));
  kv("step", std::to_string(step));
  kv("dev_loss", format_double(dev_loss));
  kv("vocab_fingerprint", vocab_fingerprint);
  out += "index " + std::to_string(parameters.size()) + '\n';
  for (const auto& [name, t] : parameters) {
    out += name + '\t' + std::to_string(t.value.rows()) + '\t' + std::to_string(t.value.cols()) + '\n';
  }
  out += "data\n";
  for (const auto& [name, t] : parameters) {
    for (Index i = 0; i < t.value.size(); ++i) {
      const std::uint32_t bits = to_little_endian(std::bit_cast<std::uint32_t>(t.value.data()[i]));
      char raw[4];
      std::memcpy(raw, &bits, 4);
      out.append(raw, 4);
    }
  }
  return out;
}

Checkpoint Checkpoint::parse(std::string_view bytes) {
  std::size_t pos = 0;
  const auto next_line = [&]() -> std::string_view {
    const std::size_t nl = bytes.find('\n', pos);
    if (nl == std::string_view::npos) throw Error(ErrorCode::kFormat, "truncated checkpoint header");
    std::string_view line = bytes.substr(pos, nl - pos);
    pos = nl + 1;
    return line;
  };
  if (next_line() != kMagic) throw Error(ErrorCode::kFormat, "not an mtlab-ckpt v1 file");

  std::map<std::string, std::string, std::less<>> fields;
  std::string_view line;
  while (!(line = next_line()).starts_with("index ")) {
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) throw Error(ErrorCode::kFormat, "bad header line");
    fields.emplace(std::string(line.substr(0, eq)), std::string(line.substr(eq + 1)));
  }
  const auto field = [&](std::string_view key) -> const std::string& {
    auto it = fields.find(key);
    if (it == fields.end()) throw Error(ErrorCode::kFormat, "checkpoint lacks " + std::string(key));
    return it->second;
  };

  Checkpoint ckpt;
  ckpt.config.layers = static_cast<int>(parse_integer(field("layers")));
  ckpt.config.heads = static_cast<int>(parse_integer(field("heads")));
  ckpt.config.d_model = static_cast<int>(parse_integer(field("d_model")));
  ckpt.config.d_ff = static_cast<int>(parse_integer(field("d_ff")));
  ckpt.config.vocab_size = static_cast<int>(parse_integer(field("vocab_size")));
  ckpt.config.max_len = static_cast<int>(parse_integer(field("max_len")));
  ckpt.config.dropout = parse_double(field("dropout"));
  ckpt.config.label_smoothing = parse_double(field("label_smoothing"));
  ckpt.config.seed = static_cast<std::uint64_t>(std::stoull(field("seed")));
  ckpt.step = static_cast<int>(parse_integer(field("step")));
  ckpt.dev_loss = parse_double(field("dev_loss"));
  ckpt.vocab_fingerprint = field("vocab_fingerprint");

  const auto count = static_cast<std::size_t>(parse_integer(line.substr(6)));
  std::vector<std::tuple<std::string, Index, Index>> index;
  for (std::size_t i = 0; i < count; ++i) {
    const std::string_view entry = next_line();
    const std::size_t t1 = entry.find('\t');
    const std::size_t t2 = entry.find('\t', t1 + 1);
    if (t1 == std::string_view::npos || t2 == std::string_view::npos) {
      throw Error(ErrorCode::kFormat, "bad index line");
    }
    index.emplace_back(std::string(entry.substr(0, t1)), parse_integer(entry.substr(t1 + 1, t2 - t1 - 1)),
                       parse_integer(entry.substr(t2 + 1)));
  }
  if (next_line() != "data") throw Error(ErrorCode::kFormat, "missing data marker");
  for (const auto& [name, rows, cols] : index) {
    const std::size_t n = static_cast<std::size_t>(rows * cols);
    if (bytes.size() - pos < 4 * n) throw Error(ErrorCode::kFormat, "truncated parameter blob " + name);
    Matrix<float> value(rows, cols);
    for (std::size_t i = 0; i < n; ++i) {
      std::uint32_t bits = 0;
      std::memcpy(&bits, bytes.data() + pos + 4 * i, 4);
      value.data()[i] = std::bit_cast<float>(to_little_endian(bits));
    }
    pos += 4 * n;
    ckpt.parameters.add(name, std::move(value));
  }
  if (pos != bytes.size()) throw Error(ErrorCode::kFormat, "trailing bytes after parameters");
  ckpt.config.validate();
  static_cast<void>(TranslationModel<float>(ckpt.config, ckpt.parameters));  // layout check
  return ckpt;
}

void Checkpoint::save(const std::filesystem::path& path) const { write_file(path, serialize()); }

Checkpoint Checkpoint::load(const std::filesystem::path& path) { return parse(read_file(path)); }

}  // namespace mtlab
