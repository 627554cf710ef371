#include "csvm/model_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace csvm {

namespace {

constexpr const char* kMagic = "csvm-model";
constexpr int kVersion = 1;

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Names and labels may hold spaces; store them length-prefixed.
void put_string(std::ostream& out, const std::string& s) { out << s.size() << ':' << s; }

std::string get_string(std::istream& in) {
  std::size_t n = 0;
  char colon = 0;
  if (!(in >> n) || !in.get(colon) || colon != ':') throw ModelError("malformed string field");
  std::string s(n, '\0');
  if (!in.read(s.data(), static_cast<std::streamsize>(n))) throw ModelError("truncated string field");
  return s;
}

void put_strings(std::ostream& out, const std::vector<std::string>& v) {
  out << v.size();
  for (const auto& s : v) {
    out << ' ';
    put_string(out, s);
  }
  out << '\n';
}

std::vector<std::string> get_strings(std::istream& in) {
  std::size_t n = 0;
  if (!(in >> n)) throw ModelError("missing list length");
  std::vector<std::string> v;
  for (std::size_t i = 0; i < n; ++i) v.push_back(get_string(in));
  return v;
}

void expect(std::istream& in, const std::string& word) {
  std::string w;
  if (!(in >> w) || w != word) throw ModelError("expected section '" + word + "', found '" + w + "'");
}

double get_double(std::istream& in) {
  std::string tok;
  if (!(in >> tok)) throw ModelError("truncated numeric data");
  try {
    std::size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw ModelError("bad number '" + tok + "'");
  }
}

std::size_t get_size(std::istream& in) {
  long long v = -1;
  if (!(in >> v) || v < 0) throw ModelError("bad count");
  return static_cast<std::size_t>(v);
}

}  // namespace

void write_model(const std::filesystem::path& path, const SavedModel& m) {
  const auto d = m.dimension();
  if (m.model.support.cols() != static_cast<Eigen::Index>(d) && m.model.support.rows() > 0)
    throw ModelError("support dimension does not match the feature names");
  if (m.standardization.mean.size() != d || m.standardization.stddev.size() != d)
    throw ModelError("standardization does not match the feature names");
  std::ofstream out(path);
  if (!out) throw ModelError("cannot write " + path.string());
  out << kMagic << ' ' << kVersion << '\n';
  out << "info " << m.info.size() << '\n';
  for (const auto& [k, v] : m.info) {
    put_string(out, k);
    out << ' ';
    put_string(out, v);
    out << '\n';
  }
  out << "schema\n";
  put_string(out, m.schema.label_column);
  out << ' ';
  put_string(out, m.schema.positive_label);
  out << ' ';
  put_string(out, m.schema.negative_label);
  out << '\n';
  put_strings(out, m.schema.categorical_columns);
  out << "kernel " << m.model.kernel.name() << ' ' << num(m.model.kernel.gamma) << '\n';
  out << "features ";
  put_strings(out, m.feature_names);
  out << "standardization\n";
  for (std::size_t j = 0; j < d; ++j) out << num(m.standardization.mean[j]) << (j + 1 < d ? " " : "");
  out << '\n';
  for (std::size_t j = 0; j < d; ++j) out << num(m.standardization.stddev[j]) << (j + 1 < d ? " " : "");
  out << '\n';
  out << "z " << m.z.size() << '\n';
  for (std::size_t j = 0; j < m.z.size(); ++j) out << m.z[j] << (j + 1 < m.z.size() ? " " : "");
  out << '\n';
  out << "beta " << num(m.model.beta) << '\n';
  out << "support " << m.model.support.rows() << '\n';
  for (Eigen::Index s = 0; s < m.model.support.rows(); ++s) {
    out << num(m.model.alpha(s));
    for (Eigen::Index j = 0; j < m.model.support.cols(); ++j) out << ' ' << num(m.model.support(s, j));
    out << '\n';
  }
  out << "end\n";
  if (!out) throw ModelError("write failed for " + path.string());
}

SavedModel read_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot read " + path.string());
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != kMagic) throw ModelError(path.string() + " is not a model file");
  if (version != kVersion) throw ModelError("unsupported model version " + std::to_string(version));
  SavedModel m;
  expect(in, "info");
  for (std::size_t k = 0, n = get_size(in); k < n; ++k) {
    std::string key = get_string(in);
    m.info[key] = get_string(in);
  }
  expect(in, "schema");
  m.schema.label_column = get_string(in);
  m.schema.positive_label = get_string(in);
  m.schema.negative_label = get_string(in);
  m.schema.categorical_columns = get_strings(in);
  expect(in, "kernel");
  std::string kind;
  in >> kind;
  const double gamma = get_double(in);
  try {
    m.model.kernel = KernelSpec::parse(kind, gamma);
  } catch (const std::exception& e) {
    throw ModelError(std::string("bad kernel: ") + e.what());
  }
  expect(in, "features");
  m.feature_names = get_strings(in);
  const auto d = m.feature_names.size();
  expect(in, "standardization");
  for (std::size_t j = 0; j < d; ++j) m.standardization.mean.push_back(get_double(in));
  for (std::size_t j = 0; j < d; ++j) m.standardization.stddev.push_back(get_double(in));
  expect(in, "z");
  m.z.resize(get_size(in));
  for (auto& v : m.z) {
    v = static_cast<int>(get_double(in));
    if (v != 0 && v != 1) throw ModelError("z entries must be 0 or 1");
  }
  expect(in, "beta");
  m.model.beta = get_double(in);
  expect(in, "support");
  const auto ns = static_cast<Eigen::Index>(get_size(in));
  m.model.alpha.resize(ns);
  m.model.support.resize(ns, static_cast<Eigen::Index>(d));
  for (Eigen::Index s = 0; s < ns; ++s) {
    m.model.alpha(s) = get_double(in);
    for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(d); ++j) m.model.support(s, j) = get_double(in);
  }
  expect(in, "end");
  return m;
}

LoadedCsv load_for_model(const std::filesystem::path& path, const SavedModel& m) {
  CsvSchema s = m.schema;
  s.feature_layout = m.feature_names;
  s.labels_optional = true;
  return load_csv(path, s);
}

Eigen::VectorXd score_rows(const SavedModel& m, const Dataset& raw) {
  if (raw.dimension() != m.dimension())
    throw ModelError("data has " + std::to_string(raw.dimension()) + " features, the model expects " +
                     std::to_string(m.dimension()));
  return m.model.scores(apply_standardization(raw, m.standardization).feature_matrix());
}

}  // namespace csvm
