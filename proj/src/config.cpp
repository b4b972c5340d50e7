#include "cduap/config.hpp"

#include <charconv>
#include <functional>
#include <map>

#include "cduap/errors.hpp"
#include "cduap/io.hpp"

namespace cduap {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_unsigned(std::string_view key, std::string_view text) {
  T v{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw UsageError("config field '" + std::string(key) + "': expected a non-negative integer, got '" +
                     std::string(text) + "'");
  }
  return v;
}

double parse_number(std::string_view key, std::string_view text) {
  try {
    return parse_double(text);
  } catch (const UsageError&) {
    throw UsageError("config field '" + std::string(key) + "': expected a number, got '" + std::string(text) + "'");
  }
}

bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "true" || text == "1" || text == "on") return true;
  if (text == "false" || text == "0" || text == "off") return false;
  throw UsageError("config field '" + std::string(key) + "': expected true or false, got '" + std::string(text) + "'");
}

template <typename T>
std::vector<T> parse_list(std::string_view key, std::string_view text) {
  std::vector<T> out;
  if (text.empty()) return out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = std::min(text.find(',', start), text.size());
    out.push_back(parse_unsigned<T>(key, trim(text.substr(start, comma - start))));
    start = comma + 1;
  }
  return out;
}

template <typename T>
std::string join(const std::vector<T>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(items[i]);
  }
  return out;
}

template <typename F>
auto wrap(std::string_view key, F&& parse) {
  try {
    return parse();
  } catch (const UsageError& e) {
    throw UsageError("config field '" + std::string(key) + "': " + e.what());
  }
}

using Setter = std::function<void(ExperimentConfig&, std::string_view key, std::string_view value)>;

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      {"data.generator",
       [](ExperimentConfig& c, std::string_view k, std::string_view v) {
         if (v != "blobs" && v != "rings") {
           throw UsageError("config field '" + std::string(k) + "': expected blobs or rings");
         }
         c.data.generator = std::string(v);
       }},
      {"data.classes", [](auto& c, auto k, auto v) { c.data.classes = parse_unsigned<int>(k, v); }},
      {"data.per_class", [](auto& c, auto k, auto v) { c.data.per_class = parse_unsigned<std::size_t>(k, v); }},
      {"data.dim", [](auto& c, auto k, auto v) { c.data.dim = parse_unsigned<std::size_t>(k, v); }},
      {"data.spread", [](auto& c, auto k, auto v) { c.data.spread = parse_number(k, v); }},
      {"data.seed", [](auto& c, auto k, auto v) { c.data.seed = parse_unsigned<std::uint64_t>(k, v); }},
      {"data.test_fraction", [](auto& c, auto k, auto v) { c.data.test_fraction = parse_number(k, v); }},
      {"data.lo", [](auto& c, auto k, auto v) { c.data.bounds.lo = parse_number(k, v); }},
      {"data.hi", [](auto& c, auto k, auto v) { c.data.bounds.hi = parse_number(k, v); }},
      {"model.hidden", [](auto& c, auto k, auto v) { c.model.hidden = parse_list<std::size_t>(k, v); }},
      {"model.epochs", [](auto& c, auto k, auto v) { c.model.epochs = parse_unsigned<std::size_t>(k, v); }},
      {"model.batch_size", [](auto& c, auto k, auto v) { c.model.batch_size = parse_unsigned<std::size_t>(k, v); }},
      {"model.lr", [](auto& c, auto k, auto v) { c.model.learning_rate = parse_number(k, v); }},
      {"model.seed", [](auto& c, auto k, auto v) { c.model.seed = parse_unsigned<std::uint64_t>(k, v); }},
      {"attack.spec", [](auto& c, auto, auto v) { c.attack.class_spec = std::string(v); }},
      {"attack.eps", [](auto& c, auto k, auto v) { c.attack.epsilon = parse_number(k, v); }},
      {"attack.norm", [](auto& c, auto k, auto v) { c.attack.norm = wrap(k, [&] { return parse_norm_order(v); }); }},
      {"attack.t_loss",
       [](auto& c, auto k, auto v) { c.attack.loss.t_kind = wrap(k, [&] { return parse_loss_kind(v); }); }},
      {"attack.nt_loss",
       [](auto& c, auto k, auto v) { c.attack.loss.nt_kind = wrap(k, [&] { return parse_loss_kind(v); }); }},
      {"attack.alpha", [](auto& c, auto k, auto v) { c.attack.loss.alpha = parse_number(k, v); }},
      {"attack.beta", [](auto& c, auto k, auto v) { c.attack.loss.beta = parse_number(k, v); }},
      {"attack.batch_size", [](auto& c, auto k, auto v) { c.attack.batch_size = parse_unsigned<std::size_t>(k, v); }},
      {"attack.iterations", [](auto& c, auto k, auto v) { c.attack.iterations = parse_unsigned<std::size_t>(k, v); }},
      {"attack.lr", [](auto& c, auto k, auto v) { c.attack.learning_rate = parse_number(k, v); }},
      {"attack.seed", [](auto& c, auto k, auto v) { c.attack.seed = parse_unsigned<std::uint64_t>(k, v); }},
      {"attack.clamp", [](auto& c, auto k, auto v) { c.attack.clamp_inputs = parse_bool(k, v); }},
      {"attack.projection",
       [](auto& c, auto k, auto v) { c.attack.projection = wrap(k, [&] { return parse_projection_mode(v); }); }},
      {"attack.sampling",
       [](auto& c, auto k, auto v) { c.attack.sampling = wrap(k, [&] { return parse_sampling_mode(v); }); }},
      {"transfer.seeds", [](auto& c, auto k, auto v) { c.transfer_seeds = parse_list<std::uint64_t>(k, v); }},
      {"out", [](auto& c, auto, auto v) { c.out = std::string(v); }},
  };
  return table;
}

}  // namespace

void apply_setting(ExperimentConfig& config, std::string_view assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw UsageError("expected key=value, got '" + std::string(assignment) + "'");
  }
  const std::string_view key = trim(assignment.substr(0, eq));
  const std::string_view value = trim(assignment.substr(eq + 1));
  const auto& table = setters();
  const auto it = table.find(key);
  if (it == table.end()) throw UsageError("unknown config field '" + std::string(key) + "'");
  it->second(config, key, value);
}

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig config;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    const std::string_view line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    try {
      apply_setting(config, line);
    } catch (const UsageError& e) {
      throw UsageError("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return config;
}

std::string format_config(const ExperimentConfig& c) {
  std::string out;
  auto put = [&out](std::string_view key, const std::string& value) {
    out += key;
    out += '=';
    out += value;
    out += '\n';
  };
  put("data.generator", c.data.generator);
  put("data.classes", std::to_string(c.data.classes));
  put("data.per_class", std::to_string(c.data.per_class));
  put("data.dim", std::to_string(c.data.dim));
  put("data.spread", format_shortest(c.data.spread));
  put("data.seed", std::to_string(c.data.seed));
  put("data.test_fraction", format_shortest(c.data.test_fraction));
  put("data.lo", format_shortest(c.data.bounds.lo));
  put("data.hi", format_shortest(c.data.bounds.hi));
  put("model.hidden", join(c.model.hidden));
  put("model.epochs", std::to_string(c.model.epochs));
  put("model.batch_size", std::to_string(c.model.batch_size));
  put("model.lr", format_shortest(c.model.learning_rate));
  put("model.seed", std::to_string(c.model.seed));
  put("attack.spec", c.attack.class_spec);
  put("attack.eps", format_shortest(c.attack.epsilon));
  put("attack.norm", std::string(to_string(c.attack.norm)));
  put("attack.t_loss", std::string(to_string(c.attack.loss.t_kind)));
  put("attack.nt_loss", std::string(to_string(c.attack.loss.nt_kind)));
  put("attack.alpha", format_shortest(c.attack.loss.alpha));
  put("attack.beta", format_shortest(c.attack.loss.beta));
  put("attack.batch_size", std::to_string(c.attack.batch_size));
  put("attack.iterations", std::to_string(c.attack.iterations));
  put("attack.lr", format_shortest(c.attack.learning_rate));
  put("attack.seed", std::to_string(c.attack.seed));
  put("attack.clamp", c.attack.clamp_inputs ? "true" : "false");
  put("attack.projection", std::string(to_string(c.attack.projection)));
  put("attack.sampling", std::string(to_string(c.attack.sampling)));
  put("transfer.seeds", join(c.transfer_seeds));
  put("out", c.out);
  return out;
}

std::vector<std::size_t> model_dims(const ExperimentConfig& config) {
  std::vector<std::size_t> dims{config.data.dim};
  dims.insert(dims.end(), config.model.hidden.begin(), config.model.hidden.end());
  dims.push_back(static_cast<std::size_t>(config.data.classes));
  return dims;
}

TrainConfig train_config(const ExperimentConfig& config) {
  TrainConfig t;
  t.epochs = config.model.epochs;
  t.batch_size = config.model.batch_size;
  t.adam.learning_rate = config.model.learning_rate;
  t.seed = config.model.seed;
  return t;
}

}  // namespace cduap
