#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "ergolab/models.hpp"

namespace ergolab {

/// A model file: either a single process or, for kind "joint", a P x Q
/// model. Exactly one pointer is set.
struct LoadedModel {
  std::string name;
  std::string kind;
  ModelPtr process;
  JointModelPtr joint;

  bool is_joint() const noexcept { return joint != nullptr; }
};

/// Parses a model document. Nested "left"/"right"/"base" entries may be
/// objects or paths relative to `base_dir`. Errors are invalid-model.
LoadedModel parse_model(std::string_view text, const std::filesystem::path& base_dir = {},
                        std::string name = "model");
LoadedModel load_model(const std::filesystem::path& path);

/// Model document for iid, markov, lumped-markov, rotation and product
/// models; probabilities as shortest round-trip decimal strings, rotation
/// fractions with 40 digits.
std::string model_to_text(const ProcessModel& model);

}  // namespace ergolab
