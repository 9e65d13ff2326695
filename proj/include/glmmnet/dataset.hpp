#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "glmmnet/rng.hpp"

namespace glmmnet {

/// Rows of (features, category, response). Categories are dense 0-based ids
/// against a universe of n_categories; the sentinel -1 marks a row whose
/// category was never seen in training (legal at prediction time only).
struct Dataset {
  Eigen::MatrixXd X;         // n x p feature matrix
  Eigen::VectorXi category;  // n entries in [-1, n_categories)
  Eigen::VectorXd y;         // n responses
  int n_categories = 0;

  Eigen::Index n_rows() const { return X.rows(); }
  Eigen::Index n_features() const { return X.cols(); }
};

/// Throws std::invalid_argument on shape mismatch or out-of-range category.
void validate(const Dataset& ds);

Dataset take_rows(const Dataset& ds, const std::vector<int>& rows);

/// Disjoint (train, holdout) row-index split; holdout gets round(frac * n).
std::pair<std::vector<int>, std::vector<int>> split_rows(int n, double holdout_fraction,
                                                         Rng& rng);

/// Column-wise location/scale fitted on training features and applied
/// elsewhere; constant columns get unit scale so they pass through centered.
struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;
};

Standardizer fit_standardizer(const Eigen::MatrixXd& X);
Eigen::MatrixXd apply_standardizer(const Standardizer& s, const Eigen::MatrixXd& X);
Eigen::VectorXd apply_standardizer(const Standardizer& s, const Eigen::VectorXd& x);

/// Order-sensitive content hash used to assert that every model in a
/// benchmark cell saw identical data.
std::uint64_t dataset_checksum(const Dataset& ds);

/// CSV with header x1..xp,category,y. Labels, when given, replace the integer
/// category ids on write; on read, labels are mapped to dense ids in order of
/// first appearance.
void write_dataset_csv(const std::string& path, const Dataset& ds,
                       const std::vector<std::string>* category_labels = nullptr);

struct CsvDataset {
  Dataset data;
  std::vector<std::string> feature_names;
  std::vector<std::string> category_labels;  // index = dense id
};

CsvDataset read_dataset_csv(const std::string& path);

}  // namespace glmmnet
