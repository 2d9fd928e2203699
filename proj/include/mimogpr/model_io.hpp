#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mimogpr/gpr.hpp"
#include "mimogpr/harness.hpp"
#include "mimogpr/mimo.hpp"
#include "mimogpr/mlp.hpp"

namespace mimogpr {

inline constexpr int kModelFormatVersion = 1;

nlohmann::json to_json(const KernelHyperparams& theta);
KernelHyperparams hyperparams_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Standardizer& s);
Standardizer standardizer_from_json(const nlohmann::json& j);

// Hyperparameters, standardized training set, jitter and standardizer: enough
// to rebuild the factorization and reproduce predictions bit for bit.
nlohmann::json to_json(const GprModel& model);
GprModel gpr_from_json(const nlohmann::json& j);

nlohmann::json to_json(const CombinerWeights& w);
CombinerWeights combiner_from_json(const nlohmann::json& j);

nlohmann::json to_json(const MlpParams& params);
MlpParams mlp_from_json(const nlohmann::json& j);

/// The versioned model document written by `mimogpr fit`.
struct ModelDocument {
  std::vector<std::string> series;
  std::uint64_t seed = 0;
  FittedModels fitted;
};

nlohmann::json to_json(const ModelDocument& doc);
ModelDocument model_document_from_json(const nlohmann::json& j);

void save_model_document(const std::string& path, const ModelDocument& doc);
ModelDocument load_model_document(const std::string& path);

}  // namespace mimogpr
