#include "csvm/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include "csvm/rng.hpp"

namespace csvm {

Dataset::Dataset(std::vector<Instance> instances, std::size_t dimension,
                 std::vector<std::string> feature_names,
                 std::optional<Standardization> standardization)
    : instances_(std::move(instances)),
      dimension_(dimension),
      feature_names_(std::move(feature_names)),
      standardization_(std::move(standardization)) {
  for (const auto& inst : instances_) {
    if (inst.features.size() != dimension_) throw DataError("instance dimension mismatch");
    if (inst.label != 1 && inst.label != -1) throw DataError("label must be -1 or +1");
    if (!(inst.weight > 0.0)) throw DataError("instance weight must be positive");
  }
  if (!feature_names_.empty() && feature_names_.size() != dimension_)
    throw DataError("feature name count does not match dimension");
}

std::size_t Dataset::count_label(int label) const {
  return static_cast<std::size_t>(std::count_if(instances_.begin(), instances_.end(),
                                                [&](const Instance& i) { return i.label == label; }));
}

double Dataset::weight_of_label(int label) const {
  double w = 0.0;
  for (const auto& i : instances_)
    if (i.label == label) w += i.weight;
  return w;
}

Eigen::MatrixXd Dataset::feature_matrix() const {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(size()), static_cast<Eigen::Index>(dimension_));
  for (std::size_t r = 0; r < size(); ++r)
    for (std::size_t c = 0; c < dimension_; ++c)
      x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = instances_[r].features[c];
  return x;
}

Eigen::VectorXd Dataset::labels() const {
  Eigen::VectorXd y(static_cast<Eigen::Index>(size()));
  for (std::size_t r = 0; r < size(); ++r) y(static_cast<Eigen::Index>(r)) = instances_[r].label;
  return y;
}

Eigen::VectorXd Dataset::weights() const {
  Eigen::VectorXd w(static_cast<Eigen::Index>(size()));
  for (std::size_t r = 0; r < size(); ++r) w(static_cast<Eigen::Index>(r)) = instances_[r].weight;
  return w;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  std::vector<Instance> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= size()) throw DataError("subset index out of range");
    out.push_back(instances_[i]);
  }
  return Dataset(std::move(out), dimension_, feature_names_, standardization_);
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  fields.push_back(trim(cur));
  return fields;
}

double parse_number(const std::string& text, std::size_t row, const std::string& column) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (text.empty() || ec != std::errc() || ptr != last || !std::isfinite(v)) {
    std::ostringstream msg;
    msg << "non-numeric value '" << text << "' in column '" << column << "' at data row " << row + 1;
    throw DataError(msg.str());
  }
  return v;
}

}  // namespace

LoadedCsv load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open data file: " + path.string());

  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (!trim(line).empty()) {
      header = split_csv_line(line);
      break;
    }
  }
  if (header.empty()) throw DataError("empty dataset: " + path.string());

  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      std::ostringstream msg;
      msg << "row " << rows.size() + 1 << " has " << fields.size() << " fields, header has "
          << header.size();
      throw DataError(msg.str());
    }
    rows.push_back(std::move(fields));
  }
  if (rows.empty()) throw DataError("empty dataset: " + path.string());

  std::optional<std::size_t> label_col;
  for (std::size_t c = 0; c < header.size(); ++c)
    if (header[c] == schema.label_column) label_col = c;
  if (!label_col && !schema.labels_optional)
    throw DataError("label column '" + schema.label_column + "' not found");

  const std::set<std::string> categorical(schema.categorical_columns.begin(),
                                          schema.categorical_columns.end());
  for (const auto& name : categorical)
    if (std::find(header.begin(), header.end(), name) == header.end())
      throw DataError("categorical column '" + name + "' not found");

  // Feature layout: either derived from the file or imposed by the caller.
  struct Source {
    std::size_t column;
    std::optional<std::string> level;  // set for one-hot indicators
  };
  std::vector<std::string> names;
  std::vector<std::optional<Source>> sources;  // nullopt: always 0

  if (schema.feature_layout.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (label_col && c == *label_col) continue;
      if (categorical.count(header[c])) {
        std::set<std::string> levels;
        for (const auto& r : rows) levels.insert(r[c]);
        for (const auto& lv : levels) {
          names.push_back(header[c] + "=" + lv);
          sources.push_back(Source{c, lv});
        }
      } else {
        names.push_back(header[c]);
        sources.push_back(Source{c, std::nullopt});
      }
    }
  } else {
    std::unordered_map<std::string, std::size_t> col_of;
    for (std::size_t c = 0; c < header.size(); ++c) col_of[header[c]] = c;
    for (const auto& name : schema.feature_layout) {
      names.push_back(name);
      if (auto it = col_of.find(name); it != col_of.end() && !categorical.count(name)) {
        sources.push_back(Source{it->second, std::nullopt});
        continue;
      }
      const auto eq = name.find('=');
      if (eq != std::string::npos) {
        const std::string col = name.substr(0, eq);
        if (auto it = col_of.find(col); it != col_of.end() && categorical.count(col)) {
          sources.push_back(Source{it->second, name.substr(eq + 1)});
          continue;
        }
        if (categorical.count(col)) {
          sources.push_back(std::nullopt);
          continue;
        }
      }
      throw DataError("feature '" + name + "' required by the model is missing from the data");
    }
  }

  std::string negative = schema.negative_label;
  std::vector<Instance> instances;
  instances.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    Instance inst;
    inst.features.reserve(names.size());
    for (std::size_t f = 0; f < names.size(); ++f) {
      const auto& src = sources[f];
      if (!src) {
        inst.features.push_back(0.0);
      } else if (src->level) {
        inst.features.push_back(rows[r][src->column] == *src->level ? 1.0 : 0.0);
      } else {
        inst.features.push_back(parse_number(rows[r][src->column], r, header[src->column]));
      }
    }
    if (label_col) {
      const std::string& lv = rows[r][*label_col];
      if (lv == schema.positive_label) {
        inst.label = 1;
      } else {
        if (negative.empty()) negative = lv;
        if (lv != negative)
          throw DataError("label value '" + lv + "' outside the two declared classes ('" +
                          schema.positive_label + "', '" + negative + "')");
        inst.label = -1;
      }
    }
    instances.push_back(std::move(inst));
  }
  const std::size_t dim = names.size();
  if (dim == 0) throw DataError("dataset has no feature columns");
  return LoadedCsv{Dataset(std::move(instances), dim, std::move(names)), label_col.has_value()};
}

// ---------------------------------------------------------------------------
// Standardization

Standardization fit_standardization(const Dataset& fit) {
  if (fit.empty()) throw DataError("cannot standardize on an empty dataset");
  const std::size_t d = fit.dimension();
  const double n = static_cast<double>(fit.size());
  Standardization s;
  s.mean.assign(d, 0.0);
  s.stddev.assign(d, 0.0);
  for (const auto& inst : fit.instances())
    for (std::size_t c = 0; c < d; ++c) s.mean[c] += inst.features[c];
  for (auto& m : s.mean) m /= n;
  // Second pass on centred values; population convention.
  for (const auto& inst : fit.instances())
    for (std::size_t c = 0; c < d; ++c) {
      const double dev = inst.features[c] - s.mean[c];
      s.stddev[c] += dev * dev;
    }
  for (std::size_t c = 0; c < d; ++c) {
    const double sd = std::sqrt(s.stddev[c] / n);
    const double scale = std::max(1.0, std::abs(s.mean[c]));
    if (sd <= 1e-12 * scale) {
      // Constant column: centre on the observed value so it maps to exact 0.
      s.mean[c] = fit[0].features[c];
      s.stddev[c] = 1.0;
    } else {
      s.stddev[c] = sd;
    }
  }
  return s;
}

Dataset apply_standardization(const Dataset& data, const Standardization& s) {
  if (s.mean.size() != data.dimension()) throw DataError("standardization dimension mismatch");
  std::vector<Instance> out = data.instances();
  for (auto& inst : out)
    for (std::size_t c = 0; c < data.dimension(); ++c)
      inst.features[c] = (inst.features[c] - s.mean[c]) / s.stddev[c];
  return Dataset(std::move(out), data.dimension(), data.feature_names(), s);
}

std::vector<Dataset> standardize(const Dataset& fit, std::span<const Dataset> apply_to) {
  for (const auto& d : apply_to)
    if (d.dimension() != fit.dimension()) throw DataError("dimension mismatch in standardize");
  const Standardization s = fit_standardization(fit);
  std::vector<Dataset> out;
  out.reserve(apply_to.size());
  for (const auto& d : apply_to) out.push_back(apply_standardization(d, s));
  return out;
}

// ---------------------------------------------------------------------------
// Splits

void seeded_shuffle(std::vector<std::size_t>& v, std::uint64_t seed) {
  Rng rng(seed);
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.below(i));
    std::swap(v[i - 1], v[j]);
  }
}

TrainSplit make_split(const Dataset& data, std::vector<std::size_t> train,
                      std::vector<std::size_t> anchor) {
  TrainSplit s;
  s.train = std::move(train);
  s.anchor = std::move(anchor);
  std::set<std::size_t> seen;
  for (auto* part : {&s.train, &s.anchor})
    for (std::size_t i : *part) {
      if (i >= data.size()) throw DataError("split index out of range");
      if (!seen.insert(i).second) throw DataError("train and anchor sets overlap");
    }
  for (std::size_t i : s.train) (data[i].label > 0 ? s.train_pos : s.train_neg).push_back(i);
  for (std::size_t i : s.anchor) (data[i].label > 0 ? s.anchor_pos : s.anchor_neg).push_back(i);
  return s;
}

TrainSplit split_half(const Dataset& data, std::span<const std::size_t> sample, std::uint64_t seed) {
  if (sample.size() < 2) throw DataError("split_half needs at least two instances");
  std::size_t pos = 0;
  for (std::size_t i : sample) {
    if (i >= data.size()) throw DataError("split index out of range");
    pos += data[i].label > 0 ? 1 : 0;
  }
  if (pos == 0 || pos == sample.size()) throw DataError("class missing in split");

  const std::size_t first = (sample.size() + 1) / 2;
  Rng seeds(seed);
  for (int attempt = 0; attempt < 100; ++attempt) {
    std::vector<std::size_t> order(sample.begin(), sample.end());
    seeded_shuffle(order, seeds.next());
    std::vector<std::size_t> train(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(first));
    std::vector<std::size_t> anchor(order.begin() + static_cast<std::ptrdiff_t>(first), order.end());
    TrainSplit s = make_split(data, std::move(train), std::move(anchor));
    if (!s.train_pos.empty() && !s.train_neg.empty() && !s.anchor_pos.empty() && !s.anchor_neg.empty())
      return s;
  }
  throw DataError("class missing in split");
}

// ---------------------------------------------------------------------------
// k-means compression

namespace {

struct Clustering {
  std::vector<std::vector<double>> centroids;
  std::vector<std::size_t> assignment;
  double inertia = std::numeric_limits<double>::infinity();
};

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

Clustering lloyd(const std::vector<const Instance*>& pts, std::size_t k, Rng& rng,
                 const KMeansOptions& opt) {
  const std::size_t n = pts.size();
  const std::size_t dim = pts.front()->features.size();
  Clustering cl;

  // k-means++ seeding (weighted by instance weight).
  cl.centroids.push_back(pts[rng.below(n)]->features);
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = sq_dist(pts[i]->features, cl.centroids[0]);
  while (cl.centroids.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += d2[i] * pts[i]->weight;
    std::size_t pick = 0;
    if (total <= 0.0) {
      pick = rng.below(n);
    } else {
      double r = rng.uniform() * total;
      for (pick = 0; pick + 1 < n; ++pick) {
        r -= d2[pick] * pts[pick]->weight;
        if (r < 0.0) break;
      }
    }
    cl.centroids.push_back(pts[pick]->features);
    for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], sq_dist(pts[i]->features, cl.centroids.back()));
  }

  cl.assignment.assign(n, 0);
  for (int it = 0; it < opt.max_iterations; ++it) {
    bool changed = (it == 0);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double bd = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double dd = sq_dist(pts[i]->features, cl.centroids[c]);
        if (dd < bd) {
          bd = dd;
          best = c;
        }
      }
      if (best != cl.assignment[i]) changed = true;
      cl.assignment[i] = best;
    }
    std::vector<std::vector<double>> sum(k, std::vector<double>(dim, 0.0));
    std::vector<double> mass(k, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = cl.assignment[i];
      mass[c] += pts[i]->weight;
      for (std::size_t f = 0; f < dim; ++f) sum[c][f] += pts[i]->weight * pts[i]->features[f];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (mass[c] > 0.0) {
        for (std::size_t f = 0; f < dim; ++f) cl.centroids[c][f] = sum[c][f] / mass[c];
        continue;
      }
      // Empty cluster: move it to the point farthest from its centroid.
      std::size_t far = 0;
      double fd = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double dd = sq_dist(pts[i]->features, cl.centroids[cl.assignment[i]]);
        if (dd > fd) {
          fd = dd;
          far = i;
        }
      }
      cl.centroids[c] = pts[far]->features;
      cl.assignment[far] = c;
      changed = true;
    }
    if (!changed) break;
  }
  cl.inertia = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    cl.inertia += pts[i]->weight * sq_dist(pts[i]->features, cl.centroids[cl.assignment[i]]);
  return cl;
}

}  // namespace

Dataset compress_kmeans(const Dataset& data, double fraction, std::uint64_t seed,
                        const KMeansOptions& options) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw DataError("compression fraction must lie in (0, 1]");
  std::vector<Instance> out;
  Rng rng(seed);
  for (int label : {1, -1}) {
    std::vector<const Instance*> pts;
    for (const auto& inst : data.instances())
      if (inst.label == label) pts.push_back(&inst);
    if (pts.empty()) throw DataError("empty class in compress_kmeans");
    const auto k = static_cast<std::size_t>(
        std::max<long>(1, std::lround(fraction * static_cast<double>(pts.size()))));

    Clustering best;
    if (k >= pts.size()) {
      best.assignment.resize(pts.size());
      for (std::size_t i = 0; i < pts.size(); ++i) {
        best.centroids.push_back(pts[i]->features);
        best.assignment[i] = i;
      }
    } else {
      for (int r = 0; r < std::max(1, options.restarts); ++r) {
        Clustering cl = lloyd(pts, k, rng, options);
        if (cl.inertia < best.inertia) best = std::move(cl);
      }
    }
    std::vector<double> mass(best.centroids.size(), 0.0);
    for (std::size_t i = 0; i < pts.size(); ++i) mass[best.assignment[i]] += pts[i]->weight;
    for (std::size_t c = 0; c < best.centroids.size(); ++c) {
      if (mass[c] <= 0.0) continue;
      out.push_back(Instance{best.centroids[c], label, mass[c]});
    }
  }
  return Dataset(std::move(out), data.dimension(), data.feature_names(), data.standardization());
}

}  // namespace csvm
