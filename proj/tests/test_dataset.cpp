#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <set>

#include "csvm/dataset.hpp"
#include "support.hpp"

using namespace csvm;

namespace {

Dataset column(std::initializer_list<double> values, int label = 1) {
  std::vector<Instance> inst;
  for (double v : values) inst.push_back(Instance{{v}, label, 1.0});
  return Dataset(std::move(inst), 1);
}

std::vector<std::size_t> iota(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

Dataset labelled(std::size_t n_pos, std::size_t n_neg) {
  std::vector<Instance> inst;
  for (std::size_t i = 0; i < n_pos + n_neg; ++i)
    inst.push_back(Instance{{static_cast<double>(i)}, i < n_pos ? 1 : -1, 1.0});
  return Dataset(std::move(inst), 1);
}

}  // namespace

TEST_SUITE("dataset") {
  TEST_CASE("yes/no label column maps to +-1 in row order") {
    testing::TempDir dir("csv");
    const auto path = dir.write("toy.csv", "a,b,class\n1,2,yes\n3,4,no\n5,6,no\n7,8,yes\n");
    const auto loaded = load_csv(path, CsvSchema{"class", "yes"});
    REQUIRE(loaded.data.size() == 4);
    CHECK(loaded.data.dimension() == 2);
    CHECK(loaded.data[0].label == 1);
    CHECK(loaded.data[1].label == -1);
    CHECK(loaded.data[2].label == -1);
    CHECK(loaded.data[3].label == 1);
    CHECK(loaded.data[2].features == std::vector<double>{5, 6});
  }

  TEST_CASE("load errors") {
    testing::TempDir dir("csv_err");
    CHECK_THROWS_AS(load_csv(dir.path() / "missing.csv", CsvSchema{"class", "yes"}), DataError);
    const auto bad_num = dir.write("n.csv", "a,class\nx1,yes\n2,no\n");
    CHECK_THROWS_AS(load_csv(bad_num, CsvSchema{"class", "yes"}), DataError);
    const auto three = dir.write("t.csv", "a,class\n1,yes\n2,no\n3,maybe\n");
    CHECK_THROWS_WITH_AS(load_csv(three, CsvSchema{"class", "yes"}), doctest::Contains("outside"), DataError);
    const auto empty = dir.write("e.csv", "a,class\n");
    CHECK_THROWS_AS(load_csv(empty, CsvSchema{"class", "yes"}), DataError);
  }

  TEST_CASE("one-hot keeps every level and aligns to a saved layout") {
    testing::TempDir dir("onehot");
    const auto path = dir.write("c.csv", "x,color,y\n1,red,p\n2,blue,n\n3,green,p\n");
    CsvSchema schema{"y", "p", {"color"}};
    const auto loaded = load_csv(path, schema);
    REQUIRE(loaded.data.dimension() == 4);
    CHECK(loaded.data.feature_names() == std::vector<std::string>{"x", "color=blue", "color=green", "color=red"});
    CHECK(loaded.data[1].features == std::vector<double>{2, 1, 0, 0});

    const auto other = dir.write("d.csv", "x,color\n9,red\n8,violet\n");
    CsvSchema predict = schema;
    predict.feature_layout = loaded.data.feature_names();
    predict.labels_optional = true;
    const auto aligned = load_csv(other, predict);
    CHECK_FALSE(aligned.has_labels);
    CHECK(aligned.data[0].features == std::vector<double>{9, 0, 0, 1});
    CHECK(aligned.data[1].features == std::vector<double>{8, 0, 0, 0});
  }

  TEST_CASE("wisconsin class balance") {
    const auto loaded = load_csv(testing::data_file("wisconsin.csv"), CsvSchema{"diagnosis", "M"});
    CHECK(loaded.data.size() == 569);
    CHECK(loaded.data.count_label(1) == 212);
    CHECK(loaded.data.dimension() == 30);
  }

  TEST_CASE("german one-hot dimension is the total level count") {
    CsvSchema schema{"class", "2"};
    schema.categorical_columns = {"A1", "A3", "A4", "A6", "A7", "A9", "A10", "A12", "A14", "A15", "A17", "A19", "A20"};
    const auto loaded = load_csv(testing::data_file("german.csv"), schema);
    CHECK(loaded.data.size() == 1000);
    CHECK(loaded.data.count_label(1) == 300);
    // 7 numeric columns plus 54 indicator levels in this copy of the data.
    CHECK(loaded.data.dimension() == 61);
  }

  TEST_CASE("standardize: two-point symmetry, constant column, held-out centre") {
    const Dataset fit = column({2, 4});
    const std::vector<Dataset> apply{fit, column({3})};
    const auto out = standardize(fit, apply);
    CHECK(out[0][0].features[0] == doctest::Approx(-1.0));
    CHECK(out[0][1].features[0] == doctest::Approx(1.0));
    CHECK(out[1][0].features[0] == 0.0);

    const Dataset flat = column({5, 5, 5});
    const auto z = standardize(flat, std::span<const Dataset>(&flat, 1));
    for (std::size_t i = 0; i < 3; ++i) CHECK(z[0][i].features[0] == 0.0);
    CHECK(z[0].standardization()->stddev[0] == 1.0);
  }

  TEST_CASE("standardized fit columns have zero mean, unit deviation; idempotent") {
    Rng rng(7);
    const Dataset d = testing::blobs(30, 20, 4, 2.0, rng);
    const Dataset s = apply_standardization(d, fit_standardization(d));
    const Eigen::MatrixXd X = s.feature_matrix();
    for (Eigen::Index c = 0; c < X.cols(); ++c) {
      const double mean = X.col(c).mean();
      const double sd = std::sqrt((X.col(c).array() - mean).square().mean());
      CHECK(std::abs(mean) < 1e-9);
      CHECK(std::abs(sd - 1.0) < 1e-9);
    }
    const Dataset twice = apply_standardization(s, fit_standardization(s));
    CHECK((twice.feature_matrix() - X).cwiseAbs().maxCoeff() < 1e-9);
  }

  TEST_CASE("split_half cardinality, disjointness and determinism") {
    const Dataset d = labelled(5, 5);
    const auto all = iota(10);
    const auto s = split_half(d, all, 3);
    CHECK(s.train.size() == 5);
    CHECK(s.anchor.size() == 5);
    std::set<std::size_t> u(s.train.begin(), s.train.end());
    for (auto j : s.anchor) CHECK(u.insert(j).second);
    CHECK(u.size() == 10);
    const auto again = split_half(d, all, 3);
    CHECK(again.train == s.train);
    CHECK(again.anchor == s.anchor);

    const auto nine = split_half(d, std::span<const std::size_t>(all.data(), 9), 1);
    CHECK(nine.train.size() == 5);
    CHECK(nine.anchor.size() == 4);

    const Dataset pos = labelled(6, 0);
    CHECK_THROWS_WITH_AS(split_half(pos, iota(6), 1), "class missing in split", DataError);
  }

  TEST_CASE("make_split rejects overlap") {
    const Dataset d = labelled(2, 2);
    CHECK_THROWS_AS(make_split(d, {0, 1}, {1, 2}), DataError);
    CHECK_THROWS_AS(make_split(d, {0, 1}, {9}), DataError);
    const auto s = make_split(d, {0, 2}, {1, 3});
    CHECK(s.train_pos == std::vector<std::size_t>{0});
    CHECK(s.anchor_neg == std::vector<std::size_t>{3});
  }

  TEST_CASE("compress_kmeans: fraction one is the identity") {
    Rng rng(1);
    const Dataset d = testing::blobs(6, 4, 2, 1.0, rng);
    const Dataset c = compress_kmeans(d, 1.0, 5);
    REQUIRE(c.size() == d.size());
    std::multiset<std::vector<double>> a, b;
    for (const auto& x : d.instances()) a.insert(x.features);
    for (const auto& x : c.instances()) {
      b.insert(x.features);
      CHECK(x.weight == 1.0);
    }
    CHECK(a == b);
  }

  TEST_CASE("compress_kmeans: separated pairs collapse to their midpoints") {
    std::vector<Instance> inst{{{0, 0}, 1, 1}, {{0.1, 0}, 1, 1}, {{10, 0}, 1, 1}, {{10.1, 0}, 1, 1}, {{50, 50}, -1, 1}};
    const Dataset c = compress_kmeans(Dataset(inst, 2), 0.5, 11);
    std::vector<Instance> pos;
    for (const auto& x : c.instances())
      if (x.label == 1) pos.push_back(x);
    REQUIRE(pos.size() == 2);
    std::sort(pos.begin(), pos.end(), [](auto& a, auto& b) { return a.features[0] < b.features[0]; });
    CHECK(pos[0].features[0] == doctest::Approx(0.05));
    CHECK(pos[1].features[0] == doctest::Approx(10.05));
    CHECK(pos[0].weight == 2.0);
    CHECK(pos[1].weight == 2.0);
  }

  TEST_CASE("compress_kmeans keeps class ratio and total weight") {
    Rng rng(2);
    const Dataset d = testing::blobs(90, 10, 3, 0.5, rng);
    const Dataset c = compress_kmeans(d, 0.1, 9);
    CHECK(c.count_label(1) == 9);
    CHECK(c.count_label(-1) == 1);
    CHECK(c.weight_of_label(1) == 90.0);
    CHECK(c.weight_of_label(-1) == 10.0);
    CHECK_THROWS_AS(compress_kmeans(d, 0.0, 1), DataError);
  }
}
