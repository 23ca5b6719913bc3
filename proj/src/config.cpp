#include "adt/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "adt/augment.hpp"
#include "adt/errors.hpp"

namespace adt {
namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

Real to_real(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    const Real v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key, "expected a number, got '" + value + "'");
  }
}

int to_int(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    const int v = std::stoi(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key, "expected an integer, got '" + value + "'");
  }
}

std::uint64_t to_u64(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    const std::uint64_t v = std::stoull(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key, "expected a non-negative integer, got '" + value + "'");
  }
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError(key, "expected true/false, got '" + value + "'");
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<int> to_int_list(const std::string& key, const std::string& value) {
  std::vector<int> out;
  for (const std::string& item : split_list(value)) {
    out.push_back(to_int(key, item));
  }
  return out;
}

std::vector<Real> to_real_list(const std::string& key,
                               const std::string& value) {
  std::vector<Real> out;
  for (const std::string& item : split_list(value)) {
    out.push_back(to_real(key, item));
  }
  return out;
}

std::vector<int> to_bool_list(const std::string& key,
                              const std::string& value) {
  std::vector<int> out;
  for (const std::string& item : split_list(value)) {
    out.push_back(to_bool(key, item) ? 1 : 0);
  }
  return out;
}

template <typename T>
std::string join_list(const std::vector<T>& values,
                      std::string (*fmt)(const T&)) {
  std::string out;
  for (size_t i = 0; i < values.size(); ++i) {
    if (i) out += ",";
    out += fmt(values[i]);
  }
  return out;
}

}  // namespace

std::string format_real(Real v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::map<std::string, std::string> parse_config_text(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::stringstream ss(text);
  std::string line;
  size_t line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no),
                        "expected 'key = value', got '" + line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) {
      throw ConfigError("line " + std::to_string(line_no), "empty key");
    }
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

std::map<std::string, std::string> parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("config: cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

std::string DataSpec::descriptor() const {
  std::string d = kind + ":";
  if (kind == "blobs") {
    d += "classes=" + std::to_string(classes) +
         ",per_class=" + std::to_string(per_class) +
         ",dim=" + std::to_string(dim) + ",separation=" +
         format_real(separation) + ",seed=" + std::to_string(seed);
  } else if (kind == "moons") {
    d += "n=" + std::to_string(n) + ",noise=" + format_real(noise) +
         ",seed=" + std::to_string(seed);
  } else if (kind == "idx") {
    d += "images=" + images + ",labels=" + labels;
  } else if (kind == "csv") {
    d += "path=" + csv;
  }
  d += "|labeled=" + std::to_string(num_labeled) +
       ",validation=" + std::to_string(num_validation) +
       ",balanced=" + (balanced ? std::string("true") : std::string("false"));
  return d;
}

DataSpec DataSpec::from_descriptor(const std::string& text) {
  DataSpec spec;
  const auto colon = text.find(':');
  if (colon == std::string::npos) {
    throw FormatError("data descriptor: missing ':' in '" + text + "'");
  }
  spec.kind = text.substr(0, colon);
  std::string rest = text.substr(colon + 1);
  std::string split_part;
  const auto bar = rest.find('|');
  if (bar != std::string::npos) {
    split_part = rest.substr(bar + 1);
    rest = rest.substr(0, bar);
  }
  auto assign = [&spec](const std::string& field, const std::string& value) {
    if (field == "classes") spec.classes = to_int("data.classes", value);
    else if (field == "per_class") spec.per_class = to_int("data.per_class", value);
    else if (field == "dim") spec.dim = to_int("data.dim", value);
    else if (field == "separation") spec.separation = to_real("data.separation", value);
    else if (field == "seed") spec.seed = to_u64("data.seed", value);
    else if (field == "n") spec.n = to_int("data.n", value);
    else if (field == "noise") spec.noise = to_real("data.noise", value);
    else if (field == "images") spec.images = value;
    else if (field == "labels") spec.labels = value;
    else if (field == "path") spec.csv = value;
    else if (field == "labeled") spec.num_labeled = to_int("data.num_labeled", value);
    else if (field == "validation") spec.num_validation = to_int("data.num_validation", value);
    else if (field == "balanced") spec.balanced = to_bool("data.balanced", value);
    else throw FormatError("data descriptor: unknown field '" + field + "'");
  };
  for (const std::string& part : {rest, split_part}) {
    for (const std::string& item : split_list(part)) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) {
        throw FormatError("data descriptor: expected field=value, got '" +
                          item + "'");
      }
      assign(item.substr(0, eq), item.substr(eq + 1));
    }
  }
  return spec;
}

Dataset DataSpec::build() const {
  if (kind == "blobs") {
    return gen_blobs(classes, per_class, dim, separation, seed);
  }
  if (kind == "moons") {
    return gen_two_moons(n, noise, seed);
  }
  if (kind == "idx") {
    return load_idx_images(images, labels);
  }
  if (kind == "csv") {
    return load_csv_vectors(csv);
  }
  throw ConfigError("data.kind", "unknown dataset kind '" + kind + "'");
}

SplitSpec DataSpec::split_spec(std::uint64_t run_seed) const {
  SplitSpec s;
  s.num_labeled = num_labeled;
  s.num_validation = num_validation;
  s.per_class_balance = balanced;
  s.seed = seed_mix({run_seed, 0x5917});
  return s;
}

ResolvedConfig resolve_config(const std::map<std::string, std::string>& kv) {
  static const std::set<std::string> known = {
      "trainer.tau", "trainer.sim_threshold", "trainer.temperature",
      "trainer.k_weak", "trainer.k_strong", "trainer.lambda_u1",
      "trainer.lambda_u2", "trainer.lambda_s", "trainer.batch_size",
      "trainer.epochs", "trainer.iterations_per_epoch",
      "trainer.use_adaptive_threshold", "trainer.use_similar_loss",
      "trainer.q_bar_mode", "trainer.q_bar_ema_decay", "trainer.eval_with_ema",
      "trainer.seed", "optimizer.base_lr", "optimizer.weight_decay",
      "optimizer.momentum", "optimizer.ema_decay", "model.hidden",
      "model.use_conv", "model.conv_filters", "model.conv_kernel",
      "augment.strong_ops", "augment.magnitude", "data.kind", "data.classes",
      "data.per_class", "data.dim", "data.separation", "data.seed", "data.n",
      "data.noise", "data.images", "data.labels", "data.csv",
      "data.num_labeled", "data.num_validation", "data.balanced",
      "ablate.seeds", "ablate.adaptive", "ablate.similar", "ablate.taus",
      "ablate.sim_thresholds", "ablate.ks", "ablate.temperatures"};
  for (const auto& [key, value] : kv) {
    if (!known.count(key)) throw ConfigError(key, "unknown key");
  }
  auto get = [&kv](const std::string& key) -> const std::string* {
    auto it = kv.find(key);
    return it == kv.end() ? nullptr : &it->second;
  };
  auto require = [&](const std::string& key) -> const std::string& {
    const std::string* v = get(key);
    if (!v) throw ConfigError(key, "missing required key");
    return *v;
  };
  auto real_or = [&](const std::string& key, Real dflt) {
    const std::string* v = get(key);
    return v ? to_real(key, *v) : dflt;
  };
  auto int_or = [&](const std::string& key, int dflt) {
    const std::string* v = get(key);
    return v ? to_int(key, *v) : dflt;
  };
  auto bool_or = [&](const std::string& key, bool dflt) {
    const std::string* v = get(key);
    return v ? to_bool(key, *v) : dflt;
  };
  auto u64_or = [&](const std::string& key, std::uint64_t dflt) {
    const std::string* v = get(key);
    return v ? to_u64(key, *v) : dflt;
  };
  auto string_or = [&](const std::string& key, const std::string& dflt) {
    const std::string* v = get(key);
    return v ? *v : dflt;
  };

  ResolvedConfig rc;
  TrainConfig& t = rc.trainer;
  t.tau = to_real("trainer.tau", require("trainer.tau"));
  t.sim_threshold = real_or("trainer.sim_threshold", 0.9);
  t.temperature = real_or("trainer.temperature", 0.5);
  t.k_weak = int_or("trainer.k_weak", 2);
  t.k_strong = int_or("trainer.k_strong", 1);
  t.weights.u1 = real_or("trainer.lambda_u1", 3.0);
  t.weights.u2 = real_or("trainer.lambda_u2", 225.0);
  t.weights.s = real_or("trainer.lambda_s", 16.0);
  t.batch_size = int_or("trainer.batch_size", 8);
  t.epochs = int_or("trainer.epochs", 10);
  t.iterations_per_epoch = int_or("trainer.iterations_per_epoch", 50);
  t.use_adaptive_threshold = bool_or("trainer.use_adaptive_threshold", true);
  t.use_similar_loss = bool_or("trainer.use_similar_loss", true);
  const std::string mode = string_or("trainer.q_bar_mode", "view_average");
  if (mode == "view_average") {
    t.q_bar_mode = QBarMode::ViewAverage;
  } else if (mode == "cross_epoch_ema") {
    t.q_bar_mode = QBarMode::CrossEpochEma;
  } else {
    throw ConfigError("trainer.q_bar_mode",
                      "expected view_average or cross_epoch_ema, got '" +
                          mode + "'");
  }
  t.q_bar_ema_decay = real_or("trainer.q_bar_ema_decay", 0.999);
  t.eval_with_ema = bool_or("trainer.eval_with_ema", true);
  t.seed = u64_or("trainer.seed", 1);
  t.base_lr = real_or("optimizer.base_lr", 0.03);
  t.weight_decay = real_or("optimizer.weight_decay", 0.0005);
  t.momentum = real_or("optimizer.momentum", 0.9);
  t.ema_decay = real_or("optimizer.ema_decay", 0.999);
  {
    const std::string* v = get("model.hidden");
    if (v) t.model.hidden = to_int_list("model.hidden", *v);
    for (int h : t.model.hidden) {
      if (h < 1) throw ConfigError("model.hidden", "layer sizes must be >= 1");
    }
  }
  t.model.use_conv = bool_or("model.use_conv", false);
  t.model.conv_filters = int_or("model.conv_filters", 8);
  t.model.conv_kernel = int_or("model.conv_kernel", 3);
  t.strong_ops_per_sample = int_or("augment.strong_ops", 2);
  t.augment_magnitude = real_or("augment.magnitude", 0.5);
  try {
    t.validate();
  } catch (const InvalidParameterError& e) {
    throw ConfigError("trainer", e.what());
  }

  DataSpec& d = rc.data;
  d.kind = require("data.kind");
  if (d.kind != "blobs" && d.kind != "moons" && d.kind != "idx" &&
      d.kind != "csv") {
    throw ConfigError("data.kind", "unknown dataset kind '" + d.kind + "'");
  }
  d.classes = int_or("data.classes", 4);
  d.per_class = int_or("data.per_class", 500);
  d.dim = int_or("data.dim", 2);
  d.separation = real_or("data.separation", 3.0);
  d.seed = u64_or("data.seed", 7);
  d.n = int_or("data.n", 1000);
  d.noise = real_or("data.noise", 0.1);
  d.images = string_or("data.images", "");
  d.labels = string_or("data.labels", "");
  d.csv = string_or("data.csv", "");
  d.num_labeled = int_or("data.num_labeled", 20);
  d.num_validation = int_or("data.num_validation", 500);
  d.balanced = bool_or("data.balanced", true);
  if (d.kind == "idx" && (d.images.empty() || d.labels.empty())) {
    throw ConfigError("data.images", "idx datasets need data.images and data.labels");
  }
  if (d.kind == "csv" && d.csv.empty()) {
    throw ConfigError("data.csv", "csv datasets need data.csv");
  }

  AblateSpec& a = rc.ablate;
  a.seeds = int_or("ablate.seeds", 5);
  if (a.seeds < 1) throw ConfigError("ablate.seeds", "must be >= 1");
  if (const std::string* v = get("ablate.adaptive")) {
    a.adaptive = to_bool_list("ablate.adaptive", *v);
  }
  if (const std::string* v = get("ablate.similar")) {
    a.similar = to_bool_list("ablate.similar", *v);
  }
  if (const std::string* v = get("ablate.taus")) {
    a.taus = to_real_list("ablate.taus", *v);
  }
  if (const std::string* v = get("ablate.sim_thresholds")) {
    a.sim_thresholds = to_real_list("ablate.sim_thresholds", *v);
  }
  if (const std::string* v = get("ablate.ks")) {
    a.ks = to_int_list("ablate.ks", *v);
  }
  if (const std::string* v = get("ablate.temperatures")) {
    a.temperatures = to_real_list("ablate.temperatures", *v);
  }

  // Canonical echo of every resolved key, sorted, so the manifest snapshot
  // re-parses to exactly this configuration.
  std::map<std::string, std::string> out;
  out["trainer.tau"] = format_real(t.tau);
  out["trainer.sim_threshold"] = format_real(t.sim_threshold);
  out["trainer.temperature"] = format_real(t.temperature);
  out["trainer.k_weak"] = std::to_string(t.k_weak);
  out["trainer.k_strong"] = std::to_string(t.k_strong);
  out["trainer.lambda_u1"] = format_real(t.weights.u1);
  out["trainer.lambda_u2"] = format_real(t.weights.u2);
  out["trainer.lambda_s"] = format_real(t.weights.s);
  out["trainer.batch_size"] = std::to_string(t.batch_size);
  out["trainer.epochs"] = std::to_string(t.epochs);
  out["trainer.iterations_per_epoch"] = std::to_string(t.iterations_per_epoch);
  out["trainer.use_adaptive_threshold"] =
      t.use_adaptive_threshold ? "true" : "false";
  out["trainer.use_similar_loss"] = t.use_similar_loss ? "true" : "false";
  out["trainer.q_bar_mode"] = t.q_bar_mode == QBarMode::ViewAverage
                                  ? "view_average"
                                  : "cross_epoch_ema";
  out["trainer.q_bar_ema_decay"] = format_real(t.q_bar_ema_decay);
  out["trainer.eval_with_ema"] = t.eval_with_ema ? "true" : "false";
  out["trainer.seed"] = std::to_string(t.seed);
  out["optimizer.base_lr"] = format_real(t.base_lr);
  out["optimizer.weight_decay"] = format_real(t.weight_decay);
  out["optimizer.momentum"] = format_real(t.momentum);
  out["optimizer.ema_decay"] = format_real(t.ema_decay);
  {
    std::string hidden;
    for (size_t i = 0; i < t.model.hidden.size(); ++i) {
      if (i) hidden += ",";
      hidden += std::to_string(t.model.hidden[i]);
    }
    out["model.hidden"] = hidden;
  }
  out["model.use_conv"] = t.model.use_conv ? "true" : "false";
  out["model.conv_filters"] = std::to_string(t.model.conv_filters);
  out["model.conv_kernel"] = std::to_string(t.model.conv_kernel);
  out["augment.strong_ops"] = std::to_string(t.strong_ops_per_sample);
  out["augment.magnitude"] = format_real(t.augment_magnitude);
  out["data.kind"] = d.kind;
  out["data.classes"] = std::to_string(d.classes);
  out["data.per_class"] = std::to_string(d.per_class);
  out["data.dim"] = std::to_string(d.dim);
  out["data.separation"] = format_real(d.separation);
  out["data.seed"] = std::to_string(d.seed);
  out["data.n"] = std::to_string(d.n);
  out["data.noise"] = format_real(d.noise);
  out["data.images"] = d.images;
  out["data.labels"] = d.labels;
  out["data.csv"] = d.csv;
  out["data.num_labeled"] = std::to_string(d.num_labeled);
  out["data.num_validation"] = std::to_string(d.num_validation);
  out["data.balanced"] = d.balanced ? "true" : "false";
  out["ablate.seeds"] = std::to_string(a.seeds);
  auto bool_fmt = +[](const int& v) { return std::string(v ? "true" : "false"); };
  auto real_fmt = +[](const Real& v) { return format_real(v); };
  auto int_fmt = +[](const int& v) { return std::to_string(v); };
  out["ablate.adaptive"] = join_list(a.adaptive, bool_fmt);
  out["ablate.similar"] = join_list(a.similar, bool_fmt);
  out["ablate.taus"] = join_list(a.taus, real_fmt);
  out["ablate.sim_thresholds"] = join_list(a.sim_thresholds, real_fmt);
  out["ablate.ks"] = join_list(a.ks, int_fmt);
  out["ablate.temperatures"] = join_list(a.temperatures, real_fmt);

  std::string text;
  for (const auto& [key, value] : out) {
    text += key + " = " + value + "\n";
  }
  rc.canonical_text = text;
  return rc;
}

}  // namespace adt
