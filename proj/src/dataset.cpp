#include "glmmnet/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace glmmnet {

void validate(const Dataset& ds) {
  if (ds.X.rows() != ds.y.size() || ds.X.rows() != ds.category.size())
    throw std::invalid_argument("dataset: X, category and y row counts differ");
  if (ds.n_categories < 0)
    throw std::invalid_argument("dataset: negative category count");
  for (Eigen::Index i = 0; i < ds.category.size(); ++i) {
    const int c = ds.category[i];
    if (c < -1 || c >= ds.n_categories)
      throw std::invalid_argument("dataset: category id out of range at row " +
                                  std::to_string(i));
  }
}

Dataset take_rows(const Dataset& ds, const std::vector<int>& rows) {
  Dataset out;
  out.n_categories = ds.n_categories;
  out.X.resize(static_cast<Eigen::Index>(rows.size()), ds.X.cols());
  out.category.resize(static_cast<Eigen::Index>(rows.size()));
  out.y.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const int r = rows[k];
    if (r < 0 || r >= ds.n_rows())
      throw std::out_of_range("take_rows: row index out of range");
    out.X.row(static_cast<Eigen::Index>(k)) = ds.X.row(r);
    out.category[static_cast<Eigen::Index>(k)] = ds.category[r];
    out.y[static_cast<Eigen::Index>(k)] = ds.y[r];
  }
  return out;
}

std::pair<std::vector<int>, std::vector<int>> split_rows(int n, double holdout_fraction,
                                                         Rng& rng) {
  if (holdout_fraction < 0.0 || holdout_fraction >= 1.0)
    throw std::invalid_argument("split_rows: fraction must lie in [0, 1)");
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  rng.shuffle(idx);
  const int n_holdout = static_cast<int>(std::lround(holdout_fraction * n));
  std::vector<int> holdout(idx.begin(), idx.begin() + n_holdout);
  std::vector<int> train(idx.begin() + n_holdout, idx.end());
  return {train, holdout};
}

Standardizer fit_standardizer(const Eigen::MatrixXd& X) {
  if (X.rows() < 1) throw std::invalid_argument("fit_standardizer: empty matrix");
  Standardizer s;
  s.mean = X.colwise().mean();
  s.sd.resize(X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const double var =
        (X.col(j).array() - s.mean[j]).square().sum() / std::max<double>(1.0, X.rows() - 1);
    s.sd[j] = var > 1e-24 ? std::sqrt(var) : 1.0;
  }
  return s;
}

Eigen::MatrixXd apply_standardizer(const Standardizer& s, const Eigen::MatrixXd& X) {
  if (X.cols() != s.mean.size())
    throw std::invalid_argument("apply_standardizer: column count mismatch");
  return (X.rowwise() - s.mean.transpose()).array().rowwise() /
         s.sd.transpose().array();
}

Eigen::VectorXd apply_standardizer(const Standardizer& s, const Eigen::VectorXd& x) {
  if (x.size() != s.mean.size())
    throw std::invalid_argument("apply_standardizer: length mismatch");
  return (x - s.mean).cwiseQuotient(s.sd);
}

std::uint64_t dataset_checksum(const Dataset& ds) {
  std::string buf;
  buf.reserve(static_cast<std::size_t>(ds.n_rows()) * 24);
  char tmp[40];
  auto put = [&](double v) {
    std::snprintf(tmp, sizeof tmp, "%.17g;", v);
    buf += tmp;
  };
  for (Eigen::Index i = 0; i < ds.n_rows(); ++i) {
    for (Eigen::Index j = 0; j < ds.n_features(); ++j) put(ds.X(i, j));
    std::snprintf(tmp, sizeof tmp, "%d;", ds.category[i]);
    buf += tmp;
    put(ds.y[i]);
  }
  return fnv1a64(buf);
}

void write_dataset_csv(const std::string& path, const Dataset& ds,
                       const std::vector<std::string>* category_labels) {
  validate(ds);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  for (Eigen::Index j = 0; j < ds.n_features(); ++j) out << 'x' << (j + 1) << ',';
  out << "category,y\n";
  char tmp[40];
  for (Eigen::Index i = 0; i < ds.n_rows(); ++i) {
    for (Eigen::Index j = 0; j < ds.n_features(); ++j) {
      std::snprintf(tmp, sizeof tmp, "%.17g", ds.X(i, j));
      out << tmp << ',';
    }
    const int c = ds.category[i];
    if (category_labels != nullptr) {
      if (c < 0 || static_cast<std::size_t>(c) >= category_labels->size())
        throw std::out_of_range("write_dataset_csv: category id has no label");
      out << (*category_labels)[static_cast<std::size_t>(c)];
    } else {
      out << c;
    }
    std::snprintf(tmp, sizeof tmp, "%.17g", ds.y[i]);
    out << ',' << tmp << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

CsvDataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty csv: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = split_csv_line(line);
  if (header.size() < 3)
    throw std::runtime_error("csv needs at least one feature, category and y: " + path);

  int cat_col = -1, y_col = -1;
  std::vector<int> feature_cols;
  CsvDataset out;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j] == "category") {
      cat_col = static_cast<int>(j);
    } else if (header[j] == "y") {
      y_col = static_cast<int>(j);
    } else {
      feature_cols.push_back(static_cast<int>(j));
      out.feature_names.push_back(header[j]);
    }
  }
  if (cat_col < 0 || y_col < 0)
    throw std::runtime_error("csv header must contain 'category' and 'y' columns: " + path);

  std::vector<std::vector<double>> xs;
  std::vector<int> cats;
  std::vector<double> ys;
  std::unordered_map<std::string, int> vocab;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw std::runtime_error("csv row " + std::to_string(line_no) +
                               " has wrong field count: " + path);
    std::vector<double> row;
    row.reserve(feature_cols.size());
    try {
      for (int j : feature_cols) row.push_back(std::stod(fields[static_cast<std::size_t>(j)]));
      ys.push_back(std::stod(fields[static_cast<std::size_t>(y_col)]));
    } catch (const std::exception&) {
      throw std::runtime_error("csv row " + std::to_string(line_no) +
                               " has a non-numeric value: " + path);
    }
    const std::string& label = fields[static_cast<std::size_t>(cat_col)];
    auto it = vocab.find(label);
    if (it == vocab.end()) {
      it = vocab.emplace(label, static_cast<int>(out.category_labels.size())).first;
      out.category_labels.push_back(label);
    }
    cats.push_back(it->second);
    xs.push_back(std::move(row));
  }
  if (xs.empty()) throw std::runtime_error("csv has a header but no rows: " + path);

  const Eigen::Index n = static_cast<Eigen::Index>(xs.size());
  const Eigen::Index p = static_cast<Eigen::Index>(feature_cols.size());
  out.data.X.resize(n, p);
  out.data.category.resize(n);
  out.data.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j)
      out.data.X(i, j) = xs[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    out.data.category[i] = cats[static_cast<std::size_t>(i)];
    out.data.y[i] = ys[static_cast<std::size_t>(i)];
  }
  out.data.n_categories = static_cast<int>(out.category_labels.size());
  return out;
}

}  // namespace glmmnet
