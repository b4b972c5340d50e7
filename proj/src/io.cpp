#include "cduap/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

#include "cduap/errors.hpp"

namespace cduap {

std::string format_exact(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_shortest(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

double parse_double(std::string_view text) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (!text.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (text.empty() || ec != std::errc() || ptr != last) {
    throw UsageError("'" + std::string(text) + "' is not a number");
  }
  return v;
}

namespace {

class LineReader {
 public:
  explicit LineReader(std::string_view text) : text_(text) {}

  // Next line, or false at end of input. Trailing '\r' is dropped.
  bool next(std::string_view& line) {
    if (pos_ >= text_.size()) return false;
    const std::size_t end = std::min(text_.find('\n', pos_), text_.size());
    line = text_.substr(pos_, end - pos_);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos_ = end + 1;
    ++line_no_;
    return true;
  }

  std::string_view require(const std::string& what) {
    std::string_view line;
    if (!next(line)) throw ParseError(line_no_ + 1, "unexpected end of file, expected " + what);
    return line;
  }

  // Anything after the payload must be blank.
  void expect_end() {
    std::string_view line;
    while (next(line)) {
      if (line.find_first_not_of(" \t") != std::string_view::npos) {
        throw ParseError(line_no_, "unexpected trailing content");
      }
    }
  }

  std::size_t line_no() const { return line_no_; }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_no_ = 0;
};

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

using Header = std::map<std::string, std::string, std::less<>>;

Header parse_header(std::string_view line, std::string_view magic, std::size_t line_no) {
  const auto tokens = split_ws(line);
  if (tokens.empty() || tokens[0] != magic) {
    throw ParseError(line_no, "expected header starting with " + std::string(magic));
  }
  if (tokens.size() < 2 || tokens[1] != "v1") {
    throw VersionError(std::string(magic) + ": unsupported version '" +
                       (tokens.size() < 2 ? std::string() : std::string(tokens[1])) + "', expected v1");
  }
  Header header;
  for (std::size_t i = 2; i < tokens.size(); ++i) {
    const auto eq = tokens[i].find('=');
    if (eq == std::string_view::npos) throw ParseError(line_no, "malformed header field '" + std::string(tokens[i]) + "'");
    header.emplace(std::string(tokens[i].substr(0, eq)), std::string(tokens[i].substr(eq + 1)));
  }
  return header;
}

const std::string& header_field(const Header& h, const char* key, std::size_t line_no) {
  const auto it = h.find(key);
  if (it == h.end()) throw ParseError(line_no, std::string("missing header field '") + key + "'");
  return it->second;
}

std::uint64_t parse_u64(std::string_view text, std::size_t line_no, const char* what) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw ParseError(line_no, std::string("bad ") + what + " '" + std::string(text) + "'");
  }
  return v;
}

double parse_double_at(std::string_view text, std::size_t line_no) {
  try {
    return parse_double(text);
  } catch (const UsageError&) {
    throw ParseError(line_no, "bad number '" + std::string(text) + "'");
  }
}

std::vector<std::size_t> parse_dims(std::string_view text, std::size_t line_no) {
  std::vector<std::size_t> dims;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = std::min(text.find(',', start), text.size());
    dims.push_back(static_cast<std::size_t>(parse_u64(text.substr(start, comma - start), line_no, "dimension")));
    start = comma + 1;
  }
  return dims;
}

void append_values(std::string& out, std::span<const double> values) {
  for (double v : values) {
    out += ' ';
    out += format_exact(v);
  }
}

}  // namespace

std::string model_to_text(const MlpClassifier& model) {
  std::string out = "CDUAP-MODEL v1 dims=";
  for (std::size_t i = 0; i < model.dims.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(model.dims[i]);
  }
  out += " seed=" + std::to_string(model.seed) + "\n";
  for (std::size_t l = 0; l < model.num_layers(); ++l) {
    const Tensor& w = model.weights[l];
    out += "W" + std::to_string(l) + " " + std::to_string(w.rows()) + "x" + std::to_string(w.cols());
    append_values(out, w.values());
    out += "\nb" + std::to_string(l) + " " + std::to_string(model.biases[l].size());
    append_values(out, model.biases[l].values());
    out += "\n";
  }
  return out;
}

MlpClassifier model_from_text(std::string_view text) {
  LineReader reader(text);
  const std::string_view header_line = reader.require("model header");
  const Header header = parse_header(header_line, "CDUAP-MODEL", 1);
  MlpClassifier model;
  model.dims = parse_dims(header_field(header, "dims", 1), 1);
  model.seed = parse_u64(header_field(header, "seed", 1), 1, "seed");
  if (model.dims.size() < 2) throw ParseError(1, "model needs at least two layer widths");

  auto read_tensor = [&](const std::string& name, Shape shape) {
    const std::string_view line = reader.require("tensor " + name);
    const std::size_t no = reader.line_no();
    const auto tokens = split_ws(line);
    if (tokens.size() < 2 || tokens[0] != name) throw ParseError(no, "expected tensor " + name);
    const std::string expected_shape =
        shape.size() == 2 ? std::to_string(shape[0]) + "x" + std::to_string(shape[1]) : std::to_string(shape[0]);
    if (tokens[1] != expected_shape) {
      throw ParseError(no, name + " has shape " + std::string(tokens[1]) + ", expected " + expected_shape);
    }
    const std::size_t n = shape_size(shape);
    if (tokens.size() - 2 != n) {
      throw ParseError(no, name + " holds " + std::to_string(tokens.size() - 2) + " values, expected " +
                               std::to_string(n));
    }
    std::vector<double> values(n);
    for (std::size_t i = 0; i < n; ++i) values[i] = parse_double_at(tokens[i + 2], no);
    return Tensor(std::move(shape), std::move(values));
  };

  for (std::size_t l = 0; l + 1 < model.dims.size(); ++l) {
    model.weights.push_back(read_tensor("W" + std::to_string(l), {model.dims[l], model.dims[l + 1]}));
    model.biases.push_back(read_tensor("b" + std::to_string(l), {model.dims[l + 1]}));
  }
  reader.expect_end();
  return model;
}

std::string perturbation_to_text(const Perturbation& p) {
  std::string out = "CDUAP-PERT v1 d=" + std::to_string(p.delta.size()) + " eps=" + format_shortest(p.epsilon) +
                    " norm=" + std::string(to_string(p.norm)) + "\n";
  for (double v : p.delta.values()) {
    out += format_exact(v);
    out += '\n';
  }
  return out;
}

Perturbation perturbation_from_text(std::string_view text) {
  LineReader reader(text);
  const Header header = parse_header(reader.require("perturbation header"), "CDUAP-PERT", 1);
  const std::size_t d = parse_u64(header_field(header, "d", 1), 1, "dimension");
  Perturbation p;
  p.epsilon = parse_double_at(header_field(header, "eps", 1), 1);
  try {
    p.norm = parse_norm_order(header_field(header, "norm", 1));
  } catch (const UsageError& e) {
    throw ParseError(1, e.what());
  }
  std::vector<double> values(d);
  for (std::size_t i = 0; i < d; ++i) {
    const std::string_view line = reader.require("value " + std::to_string(i + 1) + " of " + std::to_string(d));
    const auto tokens = split_ws(line);
    if (tokens.size() != 1) throw ParseError(reader.line_no(), "expected exactly one value");
    values[i] = parse_double_at(tokens[0], reader.line_no());
  }
  reader.expect_end();
  p.delta = Tensor({d}, std::move(values));
  return p;
}

std::string dataset_to_text(const LabeledDataset& ds) {
  std::string out = "CDUAP-DATA v1 n=" + std::to_string(ds.size()) + " d=" + std::to_string(ds.dim()) +
                    " C=" + std::to_string(ds.num_classes) + " lo=" + format_exact(ds.bounds.lo) +
                    " hi=" + format_exact(ds.bounds.hi) + "\n";
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out += std::to_string(ds.labels[i]);
    append_values(out, ds.features.row(i));
    out += '\n';
  }
  return out;
}

LabeledDataset dataset_from_text(std::string_view text) {
  LineReader reader(text);
  const Header header = parse_header(reader.require("dataset header"), "CDUAP-DATA", 1);
  const std::size_t n = parse_u64(header_field(header, "n", 1), 1, "sample count");
  const std::size_t d = parse_u64(header_field(header, "d", 1), 1, "dimension");
  LabeledDataset ds;
  ds.num_classes = static_cast<int>(parse_u64(header_field(header, "C", 1), 1, "class count"));
  ds.bounds.lo = parse_double_at(header_field(header, "lo", 1), 1);
  ds.bounds.hi = parse_double_at(header_field(header, "hi", 1), 1);
  ds.features = Tensor({n, d});
  ds.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::string_view line = reader.require("sample " + std::to_string(i + 1) + " of " + std::to_string(n));
    const std::size_t no = reader.line_no();
    const auto tokens = split_ws(line);
    if (tokens.size() != d + 1) {
      throw ParseError(no, "expected label and " + std::to_string(d) + " features, found " +
                               std::to_string(tokens.size()) + " fields");
    }
    const std::uint64_t label = parse_u64(tokens[0], no, "label");
    if (label >= static_cast<std::uint64_t>(ds.num_classes)) throw ParseError(no, "label out of range");
    ds.labels[i] = static_cast<int>(label);
    auto row = ds.features.row(i);
    for (std::size_t j = 0; j < d; ++j) row[j] = parse_double_at(tokens[j + 1], no);
  }
  reader.expect_end();
  try {
    ds.validate();
  } catch (const DataError& e) {
    throw ParseError(1, e.what());
  }
  return ds;
}

std::string iteration_log_csv(const std::vector<IterationRecord>& log) {
  std::string out = "iter,loss_t,loss_nt,loss_w,delta_norm\n";
  for (const IterationRecord& r : log) {
    out += std::to_string(r.iteration) + "," + format_exact(r.loss_t) + "," + format_exact(r.loss_nt) + "," +
           format_exact(r.loss_w) + "," + format_exact(r.delta_norm) + "\n";
  }
  return out;
}

ReportRow make_report_row(std::string experiment, std::string model, const AttackConfig& config,
                          const EvalReport& report) {
  ReportRow row;
  row.experiment = std::move(experiment);
  row.model = std::move(model);
  row.spec = config.class_spec;
  row.loss = config.loss;
  row.epsilon = config.epsilon;
  row.norm = config.norm;
  row.seed = config.seed;
  row.report = report;
  return row;
}

namespace {

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string pct(const std::optional<double>& v) { return v ? pct(*v) : std::string(); }

nlohmann::json pct_json(const std::optional<double>& v) {
  if (!v) return nullptr;
  return std::round(*v * 100.0) / 100.0;
}

// Quote a CSV field only when it needs it.
std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string report_csv(const std::vector<ReportRow>& rows) {
  std::string out =
      "experiment,model,spec,t_kind,nt_kind,alpha,beta,eps,norm,acc_t,acc_nt,adv_acc_t,adv_acc_nt,aad_t,aad_nt,"
      "delta_aad,seed\n";
  for (const ReportRow& r : rows) {
    const EvalReport& e = r.report;
    out += csv_field(r.experiment) + "," + csv_field(r.model) + "," + csv_field(r.spec) + "," +
           std::string(to_string(r.loss.t_kind)) + "," + std::string(to_string(r.loss.nt_kind)) + "," +
           format_shortest(r.loss.alpha) + "," + format_shortest(r.loss.beta) + "," + format_shortest(r.epsilon) +
           "," + std::string(to_string(r.norm)) + "," + pct(e.acc_t) + "," + pct(e.acc_nt) + "," +
           pct(e.adv_acc_t) + "," + pct(e.adv_acc_nt) + "," + pct(e.aad_t) + "," + pct(e.aad_nt) + "," +
           pct(e.delta_aad) + "," + std::to_string(r.seed) + "\n";
  }
  return out;
}

std::string report_json(const std::vector<ReportRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const ReportRow& r : rows) {
    const EvalReport& e = r.report;
    nlohmann::json j;
    j["experiment"] = r.experiment;
    j["model"] = r.model;
    j["spec"] = r.spec;
    j["t_kind"] = to_string(r.loss.t_kind);
    j["nt_kind"] = to_string(r.loss.nt_kind);
    j["alpha"] = r.loss.alpha;
    j["beta"] = r.loss.beta;
    j["eps"] = r.epsilon;
    j["norm"] = to_string(r.norm);
    j["acc_t"] = pct_json(e.acc_t);
    j["acc_nt"] = pct_json(e.acc_nt);
    j["adv_acc_t"] = pct_json(e.adv_acc_t);
    j["adv_acc_nt"] = pct_json(e.adv_acc_nt);
    j["aad_t"] = pct_json(e.aad_t);
    j["aad_nt"] = pct_json(e.aad_nt);
    j["delta_aad"] = pct_json(e.delta_aad);
    j["seed"] = r.seed;
    out.push_back(std::move(j));
  }
  return out.dump(2) + "\n";
}

namespace {

bool is_square(std::size_t n, std::size_t& root) {
  root = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n))));
  return root * root == n;
}

}  // namespace

std::size_t padded_side(std::size_t d) {
  std::size_t side = static_cast<std::size_t>(std::sqrt(static_cast<double>(d)));
  while (side * side < d) ++side;
  while (side > 0 && (side - 1) * (side - 1) >= d) --side;
  return side;
}

std::string perturbation_ppm(const Perturbation& perturbation, std::size_t side, double amplification, int channels,
                             FeatureBounds bounds) {
  if (channels != 1 && channels != 3) throw UsageError("image layout must have 1 or 3 channels");
  const std::size_t d = perturbation.delta.size();
  const auto ch = static_cast<std::size_t>(channels);
  const bool exact = side > 0 && side * side * ch == d;
  const bool padded = ch == 1 && side > 0 && side == padded_side(d);
  if (!exact && !padded) {
    std::string hint;
    std::size_t root = 0;
    if (is_square(d, root)) {
      hint += " side " + std::to_string(root) + " with 1 channel;";
    } else {
      hint += " side " + std::to_string(padded_side(d)) + " with 1 channel, last row padded;";
    }
    if (d % 3 == 0 && is_square(d / 3, root)) hint += " side " + std::to_string(root) + " with 3 channels;";
    throw UsageError("perturbation of dimension " + std::to_string(d) + " does not fit a " + std::to_string(side) +
                     "x" + std::to_string(side) + "x" + std::to_string(channels) + " image; valid layouts:" + hint);
  }
  const double range = bounds.hi - bounds.lo;
  const double mid = bounds.lo + 0.5 * range;
  std::string out = "P6\n" + std::to_string(side) + " " + std::to_string(side) + "\n255\n";
  out.reserve(out.size() + side * side * 3);
  for (std::size_t px = 0; px < side * side; ++px) {
    for (std::size_t c = 0; c < 3; ++c) {
      const std::size_t i = px * ch + (ch == 3 ? c : 0);
      const double delta = i < d ? perturbation.delta[i] : 0.0;  // padding shows as mid-gray
      const double v = std::clamp(mid + amplification * delta * range, bounds.lo, bounds.hi);
      const long byte = std::lround(255.0 * (v - bounds.lo) / range);
      out += static_cast<char>(static_cast<unsigned char>(std::clamp<long>(byte, 0, 255)));
    }
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw DataError("failed writing " + path.string());
}

namespace {

template <typename F>
auto with_path_context(const std::filesystem::path& path, F&& parse) {
  try {
    return parse(read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(e.line(), path.string() + ": " + std::string(e.what()).substr(std::string(e.what()).find(": ") + 2));
  } catch (const VersionError& e) {
    throw VersionError(path.string() + ": " + e.what());
  }
}

}  // namespace

void save_model(const MlpClassifier& model, const std::filesystem::path& path) { write_file(path, model_to_text(model)); }

MlpClassifier load_model(const std::filesystem::path& path) {
  return with_path_context(path, [](const std::string& s) { return model_from_text(s); });
}

void save_perturbation(const Perturbation& p, const std::filesystem::path& path) {
  write_file(path, perturbation_to_text(p));
}

Perturbation load_perturbation(const std::filesystem::path& path) {
  return with_path_context(path, [](const std::string& s) { return perturbation_from_text(s); });
}

void save_dataset(const LabeledDataset& ds, const std::filesystem::path& path) { write_file(path, dataset_to_text(ds)); }

LabeledDataset load_dataset(const std::filesystem::path& path) {
  return with_path_context(path, [](const std::string& s) { return dataset_from_text(s); });
}

}  // namespace cduap
