#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "mimogpr/error.hpp"
#include "mimogpr/rng.hpp"
#include "mimogpr/timeseries.hpp"
#include "oracles.hpp"

using namespace mimogpr;

namespace {

TimeSeriesPanel parse(const std::string& text) {
  std::istringstream in(text);
  return read_panel(in);
}

std::string parse_error(const std::string& text) {
  try {
    parse(text);
  } catch (const ParseError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("load_panel parses a small panel") {
  const auto p = parse("date,a,b\n1999-01,1,2\n1999-02,3,4.5\n1999-03,5,6e2\n");
  CHECK(p.rows() == 3);
  CHECK(p.series_count() == 2);
  CHECK(p.start() == YearMonth{1999, 1});
  CHECK(p.month(2).to_string() == "1999-03");
  CHECK(p.values()(2, 1) == 600.0);
  CHECK(p.names() == std::vector<std::string>{"a", "b"});
}

TEST_CASE("load_panel reports malformed files with locations") {
  CHECK(parse_error("date,a\n1999-01,1\n1999-03,2\n").find("gap in monthly sequence") != std::string::npos);
  CHECK(parse_error("date,a\n1999-01,1\n1999-03,2\n").find("row 3, column 1") != std::string::npos);
  CHECK(parse_error("date,a\n1999-01,1\n1999-01,2\n").find("duplicate date") != std::string::npos);
  CHECK(parse_error("date,a,b\n1999-01,1,2\n1999-02,x,2\n").find("row 3, column 2: non-numeric") !=
        std::string::npos);
  CHECK(parse_error("date,a\n,1\n1999-02,2\n").find("missing date") != std::string::npos);
  CHECK(parse_error("").find("empty file") != std::string::npos);
  CHECK(parse_error("date,a\n").find("no data rows") != std::string::npos);
  CHECK(parse_error("date,a\n1999-01,1,2\n").find("expected 2 fields") != std::string::npos);
  CHECK(parse_error("date,a\n1999-13,1\n1999-14,2\n").find("invalid month") != std::string::npos);
  CHECK(parse_error("date,a\n1999-01,nan\n1999-02,1\n").find("non-numeric") != std::string::npos);
}

TEST_CASE("load_panel handles the full regional shape") {
  std::ostringstream csv;
  csv << "date";
  for (int s = 0; s < 17; ++s) csv << ",r" << s;
  csv << '\n';
  for (int t = 0; t < 183; ++t) {
    csv << YearMonth{1999, 1}.plus(t).to_string();
    for (int s = 0; s < 17; ++s) csv << ',' << 1000 + t * 17 + s;
    csv << '\n';
  }
  const auto p = parse(csv.str());
  CHECK(p.rows() == 183);
  CHECK(p.series_count() == 17);
  CHECK(p.month(182).to_string() == "2014-03");
}

TEST_CASE("save then load is the identity on values") {
  Rng rng(7);
  const Eigen::MatrixXd v = oracle::random_matrix(rng, 20, 3, -1e6, 1e6);
  const TimeSeriesPanel p(YearMonth{2001, 11}, {"x", "y", "z"}, v);
  std::stringstream buf;
  write_panel(buf, p);
  const auto q = read_panel(buf);
  CHECK(q.start() == p.start());
  CHECK(q.names() == p.names());
  CHECK((q.values().array() == p.values().array()).all());
}

TEST_CASE("panel invariants") {
  CHECK_THROWS_AS(TimeSeriesPanel({1999, 1}, {"a"}, Eigen::MatrixXd::Zero(1, 1)), Error);
  CHECK_THROWS_AS(TimeSeriesPanel({1999, 1}, {"a", "a"}, Eigen::MatrixXd::Zero(3, 2)), Error);
  CHECK_THROWS_AS(TimeSeriesPanel({1999, 1}, {""}, Eigen::MatrixXd::Zero(3, 1)), Error);
  Eigen::MatrixXd bad = Eigen::MatrixXd::Zero(3, 1);
  bad(1, 0) = std::nan("");
  CHECK_THROWS_AS(TimeSeriesPanel({1999, 1}, {"a"}, bad), Error);
}

TEST_CASE("YearMonth arithmetic") {
  CHECK(YearMonth{1999, 12}.plus(1) == YearMonth{2000, 1});
  CHECK(YearMonth{2000, 1}.plus(-1) == YearMonth{1999, 12});
  CHECK(YearMonth::parse("2014-03").to_string() == "2014-03");
  CHECK_THROWS_AS(YearMonth::parse("2014-3"), Error);
}

TEST_CASE("describe_series") {
  SUBCASE("simple arithmetic") {
    const std::vector<double> v{1, 2, 3, 4, 5};
    const auto s = describe_series(v);
    CHECK(s.mean == 3.0);
    CHECK(s.minimum == 1.0);
    CHECK(s.maximum == 5.0);
    CHECK(s.std_dev == doctest::Approx(std::sqrt(2.5)).epsilon(1e-15));
    CHECK(s.skewness == doctest::Approx(0.0));
  }
  SUBCASE("constant series has undefined shape moments") {
    const std::vector<double> v{5, 5, 5, 5};
    CHECK_THROWS_WITH_AS(describe_series(v), doctest::Contains("zero variance"), Error);
  }
  SUBCASE("too short") {
    const std::vector<double> v{1, 2, 3};
    CHECK_THROWS_AS(describe_series(v), Error);
  }
  SUBCASE("27-point series against direct summation") {
    Rng rng(27);
    std::vector<double> v;
    for (int i = 0; i < 27; ++i) v.push_back(std::exp(rng.normal()) * 100.0);
    const auto s = describe_series(v);
    const auto o = oracle::moments(v);
    CHECK(std::abs(s.mean - o.mean) <= 1e-12 * std::abs(o.mean));
    CHECK(std::abs(s.std_dev - o.std_dev) <= 1e-12 * o.std_dev);
    CHECK(std::abs(s.skewness - o.skewness) <= 1e-12);
    CHECK(std::abs(s.kurtosis - o.kurtosis) <= 1e-12);
  }
  SUBCASE("uniform-like data is platykurtic") {
    std::vector<double> v;
    for (int i = 0; i < 100; ++i) v.push_back(i);
    CHECK(describe_series(v).kurtosis < 0.0);
  }
}

TEST_CASE("embed") {
  SUBCASE("definition") {
    const std::vector<double> v{1, 2, 3, 4};
    const auto d = embed(v, 2);
    REQUIRE(d.size() == 2);
    CHECK(d.inputs(0, 0) == 2);
    CHECK(d.inputs(0, 1) == 1);
    CHECK(d.inputs(1, 0) == 3);
    CHECK(d.inputs(1, 1) == 2);
    CHECK(d.targets(0) == 3);
    CHECK(d.targets(1) == 4);
    CHECK(d.origin_index == 2);
  }
  SUBCASE("boundary") {
    const std::vector<double> v{1, 2, 3, 4, 5};
    CHECK(embed(v, 4).size() == 1);
    CHECK_THROWS_AS(embed(v, 5), Error);
    CHECK_THROWS_AS(embed(v, 0), Error);
  }
  SUBCASE("index-by-index oracle") {
    const std::vector<double> v{1, 2, 3, 4, 5, 6};
    const auto d = embed(v, 3);
    REQUIRE(d.size() == 3);
    for (int r = 0; r < 3; ++r) {
      const int t = r + 3;
      CHECK(d.targets(r) == v[t]);
      for (int i = 1; i <= 3; ++i) CHECK(d.inputs(r, i - 1) == v[t - i]);
    }
  }
  SUBCASE("property: rows are contiguous slices and overlap consistently") {
    Rng rng(3);
    for (int trial = 0; trial < 25; ++trial) {
      const int n = 5 + static_cast<int>(rng.uniform() * 40);
      const int p = 1 + static_cast<int>(rng.uniform() * (n - 1));
      std::vector<double> v(static_cast<std::size_t>(n));
      for (auto& x : v) x = rng.normal();
      const auto d = embed(v, p);
      REQUIRE(d.size() == static_cast<std::size_t>(n - p));
      for (std::size_t r = 0; r < d.size(); ++r) {
        // target followed by the lags, reversed, is the slice v[r .. r+p]
        for (int i = 0; i < p; ++i) CHECK(d.inputs(static_cast<Eigen::Index>(r), p - 1 - i) == v[r + i]);
        CHECK(d.targets(static_cast<Eigen::Index>(r)) == v[r + p]);
        if (r + 1 < d.size() && p >= 2) {
          // shifting one row moves every lag one slot further back
          for (int i = 0; i + 1 < p; ++i) {
            CHECK(d.inputs(static_cast<Eigen::Index>(r + 1), i + 1) == d.inputs(static_cast<Eigen::Index>(r), i));
          }
        }
      }
    }
  }
}

TEST_CASE("split") {
  auto s = split(183, SplitSpec{96, 60}, 12);
  CHECK(s.train == RowRange{0, 96});
  CHECK(s.valid == RowRange{96, 156});
  CHECK(s.test.size() == 27);
  s = split(10, SplitSpec{6, 2}, 1);
  CHECK(s.test.size() == 2);
  CHECK_THROWS_AS(split(10, SplitSpec{9, 2}, 1), Error);
  CHECK_THROWS_AS(split(10, SplitSpec{2, 2}, 2), Error);
  CHECK_THROWS_AS(split(10, SplitSpec{5, 0}, 1), Error);

  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 10 + static_cast<std::size_t>(rng.uniform() * 200);
    const std::size_t train = 2 + static_cast<std::size_t>(rng.uniform() * (n - 4));
    const std::size_t valid = 1 + static_cast<std::size_t>(rng.uniform() * (n - train - 2));
    const auto r = split(n, SplitSpec{train, valid}, 1);
    CHECK(r.train.begin == 0);
    CHECK(r.train.end == r.valid.begin);
    CHECK(r.valid.end == r.test.begin);
    CHECK(r.test.end == n);
    CHECK(r.test.size() >= 1);
  }
}

TEST_CASE("standardizer") {
  SUBCASE("target moments") {
    SupervisedDataset d;
    d.inputs = Eigen::MatrixXd(2, 1);
    d.inputs << 1, 3;
    d.targets = Eigen::VectorXd(2);
    d.targets << 0, 2;
    d.lags = 1;
    const auto s = fit_standardizer(d);
    CHECK(s.target_mean() == 1.0);
    CHECK(s.target_scale() == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  }
  SUBCASE("round trip and unit moments") {
    Rng rng(5);
    std::vector<double> v(60);
    for (std::size_t t = 0; t < v.size(); ++t) v[t] = 500.0 + 80.0 * std::sin(0.5 * t) + 10.0 * rng.normal();
    const auto d = embed(v, 6);
    const auto s = fit_standardizer(d);
    const auto z = s.apply(d);
    for (Eigen::Index j = 0; j < z.inputs.cols(); ++j) {
      const auto col = z.inputs.col(j);
      const double mean = col.mean();
      const double sd = std::sqrt((col.array() - mean).square().sum() / (col.size() - 1.0));
      CHECK(std::abs(mean) <= 1e-12);
      CHECK(std::abs(sd - 1.0) <= 1e-12);
    }
    const auto back = s.invert(z);
    CHECK(((back.inputs - d.inputs).cwiseAbs().array() <= 1e-12 * d.inputs.cwiseAbs().array()).all());
    CHECK(((back.targets - d.targets).cwiseAbs().array() <= 1e-12 * d.targets.cwiseAbs().array()).all());
  }
  SUBCASE("constant column rejected") {
    const std::vector<double> v{1, 1, 1, 1, 1};
    CHECK_THROWS_AS(fit_standardizer(embed(v, 2)), Error);
  }
}
