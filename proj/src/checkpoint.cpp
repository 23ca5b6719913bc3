#include "adt/checkpoint.hpp"

#include <fstream>

#include <json.hpp>

#include "adt/errors.hpp"

namespace adt {
namespace {

using json = nlohmann::json;

json matrix_to_json(const Matrix& m) {
  json arr = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    arr.push_back(std::move(row));
  }
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(arr)}};
}

Matrix matrix_from_json(const json& j) {
  Matrix m(j.at("rows").get<Eigen::Index>(), j.at("cols").get<Eigen::Index>());
  const json& data = j.at("data");
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      m(r, c) = data.at(static_cast<size_t>(r)).at(static_cast<size_t>(c)).get<Real>();
    }
  }
  return m;
}

json vector_to_json(const Vector& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Vector vector_from_json(const json& j) {
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    v[i] = j.at(static_cast<size_t>(i)).get<Real>();
  }
  return v;
}

json params_to_json(const ModelParams& p) {
  json j;
  if (p.conv) {
    j["conv"] = {{"weight", matrix_to_json(p.conv->weight)},
                 {"bias", vector_to_json(p.conv->bias)},
                 {"in_channels", p.conv->in_channels},
                 {"height", p.conv->height},
                 {"width", p.conv->width},
                 {"kernel", p.conv->kernel}};
  } else {
    j["conv"] = nullptr;
  }
  json dense = json::array();
  for (const DenseLayer& l : p.dense) {
    dense.push_back({{"weight", matrix_to_json(l.weight)},
                     {"bias", vector_to_json(l.bias)}});
  }
  j["dense"] = std::move(dense);
  return j;
}

ModelParams params_from_json(const json& j) {
  ModelParams p;
  if (!j.at("conv").is_null()) {
    const json& c = j.at("conv");
    ConvLayer conv;
    conv.weight = matrix_from_json(c.at("weight"));
    conv.bias = vector_from_json(c.at("bias"));
    conv.in_channels = c.at("in_channels").get<int>();
    conv.height = c.at("height").get<int>();
    conv.width = c.at("width").get<int>();
    conv.kernel = c.at("kernel").get<int>();
    p.conv = std::move(conv);
  }
  for (const json& l : j.at("dense")) {
    p.dense.push_back(
        {matrix_from_json(l.at("weight")), vector_from_json(l.at("bias"))});
  }
  if (p.dense.empty()) throw FormatError("checkpoint: model has no layers");
  return p;
}

}  // namespace

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  json j;
  j["format"] = "adt-checkpoint-v1";
  j["num_classes"] = ck.num_classes;
  j["model"] = params_to_json(ck.params);
  j["ema"] = params_to_json(ck.opt.ema_params);
  j["velocity"] = params_to_json(ck.opt.velocity);
  j["optim"] = {{"base_lr", ck.opt.base_lr},
                {"weight_decay", ck.opt.weight_decay},
                {"momentum", ck.opt.momentum},
                {"step_count", ck.opt.step_count},
                {"total_steps", ck.opt.total_steps},
                {"ema_decay", ck.opt.ema_decay}};
  json thresholds = json::array();
  for (const ThresholdRegistry::Record& r : ck.reg.to_records()) {
    thresholds.push_back({r.class_index, r.t_current, r.t_scratch});
  }
  j["thresholds"] = std::move(thresholds);
  j["data_descriptor"] = ck.data_descriptor;
  j["split_seed"] = ck.split_seed;
  j["config"] = ck.config_text;
  j["final_val_accuracy"] = ck.final_val_accuracy;
  j["eval_with_ema"] = ck.eval_with_ema;

  std::ofstream out(path);
  if (!out) throw FormatError("checkpoint: cannot write " + path);
  out << j.dump(1) << "\n";
  if (!out) throw FormatError("checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("checkpoint: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw FormatError("checkpoint: parse error in " + path + ": " + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != "adt-checkpoint-v1") {
      throw FormatError("checkpoint: unknown format tag");
    }
    Checkpoint ck;
    ck.num_classes = j.at("num_classes").get<int>();
    ck.params = params_from_json(j.at("model"));
    ck.opt.ema_params = params_from_json(j.at("ema"));
    ck.opt.velocity = params_from_json(j.at("velocity"));
    const json& o = j.at("optim");
    ck.opt.base_lr = o.at("base_lr").get<Real>();
    ck.opt.weight_decay = o.at("weight_decay").get<Real>();
    ck.opt.momentum = o.at("momentum").get<Real>();
    ck.opt.step_count = o.at("step_count").get<long>();
    ck.opt.total_steps = o.at("total_steps").get<long>();
    ck.opt.ema_decay = o.at("ema_decay").get<Real>();
    std::vector<ThresholdRegistry::Record> records;
    for (const json& r : j.at("thresholds")) {
      records.push_back({r.at(0).get<int>(), r.at(1).get<Real>(),
                         r.at(2).get<Real>()});
    }
    ck.reg = ThresholdRegistry::from_records(records);
    ck.data_descriptor = j.at("data_descriptor").get<std::string>();
    ck.split_seed = j.at("split_seed").get<std::uint64_t>();
    ck.config_text = j.at("config").get<std::string>();
    ck.final_val_accuracy = j.at("final_val_accuracy").get<Real>();
    ck.eval_with_ema = j.at("eval_with_ema").get<bool>();
    return ck;
  } catch (const json::exception& e) {
    throw FormatError("checkpoint: missing or malformed field: " +
                      std::string(e.what()));
  }
}

}  // namespace adt
