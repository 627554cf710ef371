#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace csvm {

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Instance {
  std::vector<double> features;
  int label = 1;        // -1 or +1
  double weight = 1.0;  // cluster population after compression
};

struct Standardization {
  std::vector<double> mean;
  std::vector<double> stddev;  // constant columns are recorded as 1
};

/// Labelled sample with a fixed dimension. Immutable once built.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<Instance> instances, std::size_t dimension,
          std::vector<std::string> feature_names = {},
          std::optional<Standardization> standardization = std::nullopt);

  std::size_t size() const { return instances_.size(); }
  bool empty() const { return instances_.empty(); }
  std::size_t dimension() const { return dimension_; }
  const Instance& operator[](std::size_t i) const { return instances_[i]; }
  const std::vector<Instance>& instances() const { return instances_; }
  const std::vector<std::string>& feature_names() const { return feature_names_; }
  const std::optional<Standardization>& standardization() const { return standardization_; }

  std::size_t count_label(int label) const;
  double weight_of_label(int label) const;

  /// Rows = instances.
  Eigen::MatrixXd feature_matrix() const;
  Eigen::VectorXd labels() const;
  Eigen::VectorXd weights() const;

  Dataset subset(std::span<const std::size_t> indices) const;

 private:
  std::vector<Instance> instances_;
  std::size_t dimension_ = 0;
  std::vector<std::string> feature_names_;
  std::optional<Standardization> standardization_;
};

struct CsvSchema {
  std::string label_column;
  std::string positive_label;
  std::vector<std::string> categorical_columns;
  /// When set, any label other than positive/negative is an error. When
  /// empty, the first non-positive label seen defines the negative class.
  std::string negative_label;
  /// Optional fixed feature layout (e.g. from a saved model). Columns of
  /// the file are aligned to these names; unseen one-hot levels map to 0.
  std::vector<std::string> feature_layout;
  /// Allow a file without the label column (prediction input); instances
  /// then carry label +1 and `has_labels` is reported false.
  bool labels_optional = false;
};

struct LoadedCsv {
  Dataset data;
  bool has_labels = true;
};

/// Reads a headered CSV, maps labels to +-1 and expands categorical columns
/// into a full indicator set (no reference level dropped). Row order kept.
LoadedCsv load_csv(const std::filesystem::path& path, const CsvSchema& schema);

/// Fits per-feature mean/stddev on `fit` and applies them to every element
/// of `apply_to`. Constant columns become 0.
std::vector<Dataset> standardize(const Dataset& fit, std::span<const Dataset> apply_to);
Standardization fit_standardization(const Dataset& fit);
Dataset apply_standardization(const Dataset& data, const Standardization& s);

/// Index sets into a labelled sample: I (training) and J (anchors).
struct TrainSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> anchor;
  std::vector<std::size_t> train_pos, train_neg;
  std::vector<std::size_t> anchor_pos, anchor_neg;
};

TrainSplit make_split(const Dataset& data, std::vector<std::size_t> train,
                      std::vector<std::size_t> anchor);

/// Seeded shuffle of `sample`, first ceil(n/2) to I and the rest to J.
/// Reshuffles (up to 100 times) until both halves hold both classes when
/// the sample does; throws DataError otherwise.
TrainSplit split_half(const Dataset& data, std::span<const std::size_t> sample, std::uint64_t seed);

/// Per-class k-means (k-means++ seeding, Lloyd, best of restarts). Returns
/// the centroids with weight = summed weight of their members.
struct KMeansOptions {
  int max_iterations = 50;
  int restarts = 5;
};
Dataset compress_kmeans(const Dataset& data, double fraction, std::uint64_t seed,
                        const KMeansOptions& options = {});

void seeded_shuffle(std::vector<std::size_t>& v, std::uint64_t seed);

}  // namespace csvm
