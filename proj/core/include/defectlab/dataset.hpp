#pragma once

#include "defectlab/labeling.hpp"
#include "defectlab/process_metrics.hpp"
#include "defectlab/product_metrics.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace defectlab {

enum class Mode { process, product, combined };
enum class Granularity { file, package };

/// "P", "C", "P+C".
const char* to_string(Mode mode);
Mode mode_from_string(const std::string& s);
const char* to_string(Granularity g);
Granularity granularity_from_string(const std::string& s);
const char* to_string(LabelLevel level);
LabelLevel level_from_string(const std::string& s);

struct RowMeta {
  std::string project;
  std::string unit;  // canonical id, or package path
  int release = 1;
  std::string commit;
  bool synthetic = false;  // produced by SMOTE
};

struct Dataset {
  std::vector<std::string> feature_names;
  std::vector<std::vector<double>> X;
  std::vector<int> y;
  std::vector<double> effort;
  std::vector<RowMeta> meta;
  Mode mode = Mode::combined;
  Granularity granularity = Granularity::file;
  LabelLevel level = LabelLevel::jit;

  std::size_t size() const noexcept { return y.size(); }
  std::size_t positives() const;
  /// Throws DataError when the parallel arrays disagree in length.
  void check() const;
  Dataset subset(const std::vector<std::size_t>& rows) const;
  std::optional<std::size_t> feature(const std::string& name) const;
};

struct AssembleReport {
  std::size_t process_rows = 0;
  std::size_t product_rows = 0;
  std::size_t dropped_process = 0;  // process rows without a product partner
  std::size_t dropped_product = 0;  // product rows without a process partner
};

/// Joins metric rows on (file, commit). Labels come from the process rows;
/// product-only and combined modes keep only keys present on both sides.
Dataset assemble(const std::vector<ProcessRow>& process, const std::vector<ProductRow>* product,
                 Mode mode, Granularity granularity, LabelLevel level,
                 const std::string& project = "", AssembleReport* report = nullptr);

/// Column subset of a file-level dataset for `mode`; effort follows the mode.
Dataset select_mode(const Dataset& data, Mode mode);

/// One row per (unit, release): the unit's last row in the release, labelled
/// defective when any of its rows in the release is.
Dataset to_release_level(const Dataset& data);

/// Groups rows by package per period; median features, any-defective label,
/// summed effort. A package-level dataset maps to itself.
Dataset aggregate_packages(const Dataset& data);

/// Directory part of a canonical id ("." for the root).
std::string package_of(const std::string& canonical_id);

struct PreprocessReport {
  std::vector<std::string> dropped;                       // constant in train
  std::vector<std::pair<std::string, std::size_t>> imputed;  // feature, train cells imputed
};

/// Min-max scaling and median imputation fit on `train` only.
std::pair<Dataset, Dataset> preprocess(const Dataset& train, const Dataset& test,
                                       PreprocessReport* report = nullptr);

struct ResampleConfig {
  int k = 5;
  std::uint64_t seed = 0;
};

/// Oversamples the minority class to exact balance.
Dataset smote(const Dataset& train, const ResampleConfig& cfg);

enum class SplitKind { cross_val, release_based };

struct SplitPair {
  std::string label;  // "1".."M*N" for cross-validation, "r<index>" for releases
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

struct SplitPlan {
  SplitKind kind = SplitKind::cross_val;
  int repeats = 5;
  int folds = 5;
  std::uint64_t seed = 0;
  int releases = 0;
  std::vector<SplitPair> pairs;
};

/// Stratified M x N cross-validation.
SplitPlan cross_val_splits(const Dataset& data, int repeats, int folds, std::uint64_t seed);
/// Train on releases 1..R-3, test R-2, R-1 and R one at a time.
SplitPlan release_splits(const Dataset& data);

void write_dataset_csv(std::ostream& out, const Dataset& data);
Dataset read_dataset_csv(std::istream& in);
void save_dataset(const std::string& path, const Dataset& data);
Dataset load_dataset(const std::string& path);

}  // namespace defectlab
