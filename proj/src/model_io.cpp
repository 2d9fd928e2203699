#include "mimogpr/model_io.hpp"

#include <algorithm>
#include <fstream>

#include "mimogpr/error.hpp"

namespace mimogpr {

using nlohmann::json;

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"values", std::move(rows)}};
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const json& values = j.at("values");
  if (static_cast<Eigen::Index>(values.size()) != rows) throw Error("matrix row count mismatch in model document");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const json& row = values.at(static_cast<std::size_t>(i));
    if (static_cast<Eigen::Index>(row.size()) != cols) throw Error("matrix column count mismatch in model document");
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = row.at(static_cast<std::size_t>(k)).get<double>();
  }
  return m;
}

json vector_to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vector_from_json(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

json combiners_to_json(const std::vector<CombinerWeights>& ws) {
  json out = json::array();
  for (const auto& w : ws) out.push_back(to_json(w));
  return out;
}

std::vector<CombinerWeights> combiners_from_json(const json& j) {
  std::vector<CombinerWeights> out;
  for (const auto& w : j) out.push_back(combiner_from_json(w));
  return out;
}

json split_to_json(const SplitRanges& s) {
  return {{"train", {s.train.begin, s.train.end}}, {"valid", {s.valid.begin, s.valid.end}},
          {"test", {s.test.begin, s.test.end}}};
}

RowRange range_from_json(const json& j) { return {j.at(0).get<std::size_t>(), j.at(1).get<std::size_t>()}; }

}  // namespace

json to_json(const KernelHyperparams& t) {
  return {{"nu", t.nu}, {"lambda", t.lambda}, {"gamma", t.gamma}, {"kappa", t.kappa}, {"sigma", t.sigma}};
}

KernelHyperparams hyperparams_from_json(const json& j) {
  KernelHyperparams t{j.at("nu").get<double>(), j.at("lambda").get<double>(), j.at("gamma").get<double>(),
                      j.at("kappa").get<double>(), j.at("sigma").get<double>()};
  t.validate();
  return t;
}

json to_json(const Standardizer& s) {
  return {{"means", vector_to_json(s.means())},
          {"scales", vector_to_json(s.scales())},
          {"target_mean", s.target_mean()},
          {"target_scale", s.target_scale()}};
}

Standardizer standardizer_from_json(const json& j) {
  return Standardizer(vector_from_json(j.at("means")), vector_from_json(j.at("scales")),
                      j.at("target_mean").get<double>(), j.at("target_scale").get<double>());
}

json to_json(const GprModel& m) {
  return {{"hyperparams", to_json(m.hyperparams())},
          {"jitter", m.jitter()},
          {"standardizer", to_json(m.standardizer())},
          {"train_inputs", matrix_to_json(m.train_inputs())},
          {"train_targets", vector_to_json(m.train_targets())}};
}

GprModel gpr_from_json(const json& j) {
  SupervisedDataset d;
  d.inputs = matrix_from_json(j.at("train_inputs"));
  d.targets = vector_from_json(j.at("train_targets"));
  d.lags = static_cast<int>(d.inputs.cols());
  if (d.inputs.rows() != d.targets.size()) throw Error("GPR training inputs/targets mismatch in model document");
  const double jitter = j.at("jitter").get<double>();
  return GprModel::condition(std::move(d), hyperparams_from_json(j.at("hyperparams")),
                             standardizer_from_json(j.at("standardizer")), JitterPolicy{jitter, jitter});
}

json to_json(const CombinerWeights& w) {
  return {{"ridge_penalty", w.ridge_penalty}, {"weights", matrix_to_json(w.weights)}};
}

CombinerWeights combiner_from_json(const json& j) {
  CombinerWeights w;
  w.weights = matrix_from_json(j.at("weights"));
  w.ridge_penalty = j.at("ridge_penalty").get<double>();
  if (w.weights.cols() != w.weights.rows() + 1) throw Error("combiner must be M x (M+1)");
  return w;
}

json to_json(const MlpParams& p) {
  return {{"hidden", p.hidden()},
          {"inputs", p.inputs()},
          {"input_weights", matrix_to_json(p.input_weights)},
          {"hidden_bias", vector_to_json(p.hidden_bias)},
          {"output_weights", vector_to_json(p.output_weights)},
          {"output_bias", p.output_bias}};
}

MlpParams mlp_from_json(const json& j) {
  MlpParams p;
  p.input_weights = matrix_from_json(j.at("input_weights"));
  p.hidden_bias = vector_from_json(j.at("hidden_bias"));
  p.output_weights = vector_from_json(j.at("output_weights"));
  p.output_bias = j.at("output_bias").get<double>();
  p.validate();
  if (p.hidden() != j.at("hidden").get<int>() || p.inputs() != j.at("inputs").get<int>()) {
    throw Error("MLP architecture sizes disagree with weight blocks");
  }
  return p;
}

json to_json(const ModelDocument& doc) {
  json gpr = json::array();
  for (const auto& m : doc.fitted.gpr) gpr.push_back(to_json(m));
  json mlp = json::array();
  for (const auto& set : doc.fitted.mlp) {
    json nets = json::array();
    for (const auto& net : set.nets) {
      nets.push_back({{"params", to_json(net.params())}, {"standardizer", to_json(net.standardizer())}});
    }
    mlp.push_back({{"horizon", set.horizon}, {"networks", std::move(nets)}, {"combiners", combiners_to_json(set.combiners)}});
  }
  json out = {{"format_version", kModelFormatVersion},
              {"lags", doc.fitted.lags},
              {"seed", doc.seed},
              {"series", doc.series},
              {"split", split_to_json(doc.fitted.split)},
              {"gpr", std::move(gpr)},
              {"mlp", std::move(mlp)}};
  if (!doc.fitted.gpr.empty()) {
    out["combiner"] = to_json(doc.fitted.gpr_combiner);
    out["step_combiners"] = combiners_to_json(doc.fitted.gpr_step_combiners);
  }
  return out;
}

ModelDocument model_document_from_json(const json& j) {
  const int version = j.at("format_version").get<int>();
  if (version != kModelFormatVersion) {
    throw Error("unsupported model document format_version " + std::to_string(version));
  }
  ModelDocument doc;
  doc.series = j.at("series").get<std::vector<std::string>>();
  doc.seed = j.at("seed").get<std::uint64_t>();
  doc.fitted.lags = j.at("lags").get<int>();
  const json& split = j.at("split");
  doc.fitted.split = {range_from_json(split.at("train")), range_from_json(split.at("valid")),
                      range_from_json(split.at("test"))};
  for (const auto& m : j.at("gpr")) doc.fitted.gpr.push_back(gpr_from_json(m));
  if (!doc.fitted.gpr.empty()) {
    doc.fitted.gpr_combiner = combiner_from_json(j.at("combiner"));
    doc.fitted.gpr_step_combiners = combiners_from_json(j.at("step_combiners"));
  }
  for (const auto& set_json : j.at("mlp")) {
    FittedModels::MlpSet set;
    set.horizon = set_json.at("horizon").get<int>();
    for (const auto& net : set_json.at("networks")) {
      set.nets.emplace_back(mlp_from_json(net.at("params")), standardizer_from_json(net.at("standardizer")));
    }
    set.combiners = combiners_from_json(set_json.at("combiners"));
    doc.fitted.mlp.push_back(std::move(set));
  }
  const std::size_t m = doc.series.size();
  if ((!doc.fitted.gpr.empty() && doc.fitted.gpr.size() != m) ||
      std::any_of(doc.fitted.mlp.begin(), doc.fitted.mlp.end(), [m](const auto& s) { return s.nets.size() != m; })) {
    throw Error("model document series count mismatch");
  }
  return doc;
}

void save_model_document(const std::string& path, const ModelDocument& doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write model document '" + path + "'");
  out << to_json(doc).dump(1) << '\n';
  if (!out) throw Error("write failed for '" + path + "'");
}

ModelDocument load_model_document(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open model document '" + path + "'");
  try {
    return model_document_from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw Error("malformed model document '" + path + "': " + e.what());
  }
}

}  // namespace mimogpr
