#pragma once

#include "defectlab/dataset.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace defectlab {

/// Knobs for one simulated project. The history (authors, files, churn,
/// releases) is simulated and run through ProcessMiner, so process features
/// are genuine; product features come from per-file latent traits. Labels
/// are planted on top: the top `defect_rate` share of a latent risk score.
struct SyntheticConfig {
  std::uint64_t seed = 1;
  int files = 40;
  int packages = 8;
  int authors = 6;
  int releases = 6;
  int commits_per_release = 14;
  double defect_rate = 0.3;

  double process_signal = 2.0;  // weight of the process-metric risk term
  double product_signal = 0.4;  // weight of the file complexity trait
  double noise = 0.6;           // weight of per-row Gaussian noise
  double nonlinear = 0.0;       // 0 = linear in the informative metrics, 1 = U-shaped
  double drift = 0.0;           // share of the final release driven by the alternate metric set
  double stagnation = 1.0;      // 1 = product features frozen per file, 0 = redrawn per row
  double package_mixing = 1.0;  // 0 = every file in a package shares one risk trait
  double churn_persistence = 0.0;  // scale of a per-file trait raising edit frequency and size
  std::vector<std::string> informative = {"la", "ddev", "nuc"};
  std::vector<std::string> drift_informative = {"exp", "age", "own"};
};

/// Combined (P+C), file-level, just-in-time dataset for one project.
Dataset generate_project(const SyntheticConfig& config, const std::string& name);

struct CorpusConfig {
  std::uint64_t seed = 2024;
  int projects = 30;
  SyntheticConfig base;
  /// Each project draws its own informative metrics and nonlinearity share.
  bool heterogeneous = true;
};

std::vector<Dataset> generate_corpus(const CorpusConfig& config);

/// The corpus shipped by `fixtures`: 30 projects of roughly 500 rows each.
CorpusConfig shipped_corpus_config();

}  // namespace defectlab
