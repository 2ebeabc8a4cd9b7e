#include <doctest.h>

#include <filesystem>

#include "cloudlead/core.hpp"
#include "cloudlead/io.hpp"
#include "cloudlead/rng.hpp"

using namespace cloudlead;
namespace fs = std::filesystem;

namespace {

Dataset tiny_dataset(int n_sites, int n_days, int step_minutes, bool normalized) {
  Dataset ds;
  for (int i = 0; i < n_sites; ++i)
    ds.sites.push_back({"site" + std::to_string(i), 3.0 * i, 1.0 * i, std::nullopt});
  ds.start_date = parse_date("2020-06-01");
  ds.n_days = n_days;
  ds.step_minutes = step_minutes;
  ds.normalized = normalized;
  const Eigen::Index T = static_cast<Eigen::Index>(n_days) * (1440 / step_minutes);
  ds.values.resize(n_sites, T);
  Rng rng(7);
  for (int i = 0; i < n_sites; ++i)
    for (Eigen::Index t = 0; t < T; ++t)
      ds.values(i, t) = normalized ? rng.uniform() : rng.uniform(0.0, 950.0);
  return ds;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("cloudlead_test_" + std::to_string(Rng(std::random_device{}()).bits()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_SUITE("core") {

TEST_CASE("normalize divides by per-site maximum") {
  Dataset raw = tiny_dataset(2, 1, 60, false);
  raw.values.setZero();
  raw.values(0, 3) = 1000.0;
  raw.values(0, 4) = 400.0;
  raw.values(1, 5) = 250.0;
  const Dataset norm = normalize(raw);
  CHECK(norm.values(0, 4) == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(norm.values(0, 3) == 1.0);
  CHECK(norm.values(1, 5) == 1.0);  // each site maps its own max to 1
  CHECK(norm.site_max.at("site0") == 1000.0);
  CHECK(norm.site_max.at("site1") == 250.0);
}

TEST_CASE("normalize rejects an all-zero site") {
  Dataset raw = tiny_dataset(2, 1, 60, false);
  raw.values.row(1).setZero();
  CHECK_THROWS_WITH_AS(normalize(raw), doctest::Contains("degenerate site"), DataError);
}

TEST_CASE("normalize is idempotent on normalized data") {
  Dataset raw = tiny_dataset(3, 2, 30, false);
  const Dataset once = normalize(raw);
  const Dataset twice = normalize(once);
  CHECK((once.values - twice.values).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("resample_hourly averages each hour") {
  DailyProfile p;
  p.step_minutes = 5;
  p.values = Eigen::VectorXd::Constant(288, 0.5);
  Eigen::VectorXd hourly = resample_hourly(p);
  REQUIRE(hourly.size() == 24);
  CHECK(hourly[0] == 0.5);
  CHECK(hourly[23] == 0.5);

  p.values.setZero();
  hourly = resample_hourly(p);
  CHECK(hourly.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("resample_hourly of a linear ramp hits mid-hour values") {
  // x_k = k/(M-1); the mean over hour h is the mid-hour ramp value
  // (12h + 5.5)/287 by the arithmetic-series sum.
  DailyProfile p;
  p.step_minutes = 5;
  p.values.resize(288);
  for (int k = 0; k < 288; ++k) p.values[k] = k / 287.0;
  const Eigen::VectorXd hourly = resample_hourly(p);
  for (int h = 0; h < 24; ++h)
    CHECK(hourly[h] == doctest::Approx((12.0 * h + 5.5) / 287.0).epsilon(1e-14));
}

TEST_CASE("resample_hourly preserves the daily mean") {
  Rng rng(11);
  DailyProfile p;
  p.step_minutes = 15;
  p.values.resize(96);
  for (int k = 0; k < 96; ++k) p.values[k] = rng.uniform();
  const Eigen::VectorXd hourly = resample_hourly(p);
  CHECK(hourly.mean() == doctest::Approx(p.values.mean()).epsilon(1e-13));
}

TEST_CASE("dataset round-trips bit-exactly through CSV/JSON") {
  TempDir dir;
  Dataset ds = tiny_dataset(3, 2, 5, true);
  ds.sites[0].capacity_kw = 1234.5;
  ds.site_max = {{"site0", 903.25}, {"site1", 1010.0}, {"site2", 87.125}};
  save_dataset(ds, dir.path);
  const Dataset back = load_dataset(dir.path);
  REQUIRE(back.n_sites() == 3);
  REQUIRE(back.n_days == 2);
  CHECK(back.values == ds.values);  // bit-exact numeric payload
  CHECK(back.normalized == ds.normalized);
  CHECK(back.site_max == ds.site_max);
  CHECK(back.sites[0].capacity_kw == ds.sites[0].capacity_kw);
  CHECK(format_date(back.start_date) == "2020-06-01");
}

TEST_CASE("loader reports a missing timestamp") {
  TempDir dir;
  Dataset ds = tiny_dataset(2, 1, 60, true);
  save_dataset(ds, dir.path);
  std::string csv = read_text(dir.path / "irradiance.csv");
  const auto pos = csv.find("T05:00:00Z");
  const auto line_start = csv.rfind('\n', pos) + 1;
  const auto line_end = csv.find('\n', pos) + 1;
  csv.erase(line_start, line_end - line_start);
  write_text_atomic(dir.path / "irradiance.csv", csv);
  CHECK_THROWS_WITH_AS(load_dataset(dir.path), doctest::Contains("T05:00:00Z"), DataError);
}

TEST_CASE("loader rejects negative irradiance with location") {
  TempDir dir;
  Dataset ds = tiny_dataset(2, 1, 60, false);
  save_dataset(ds, dir.path);
  std::string csv = read_text(dir.path / "irradiance.csv");
  const auto pos = csv.find("T07:00:00Z");
  const auto comma = csv.find(',', pos);
  const auto next = csv.find(',', comma + 1);
  csv.replace(comma + 1, next - comma - 1, "-0.1");
  write_text_atomic(dir.path / "irradiance.csv", csv);
  CHECK_THROWS_WITH_AS(load_dataset(dir.path), doctest::Contains("negative irradiance"),
                       DataError);
}

TEST_CASE("loader rejects NaN cells") {
  TempDir dir;
  Dataset ds = tiny_dataset(2, 1, 60, true);
  save_dataset(ds, dir.path);
  std::string csv = read_text(dir.path / "irradiance.csv");
  const auto pos = csv.find("T07:00:00Z");
  const auto comma = csv.find(',', pos);
  const auto next = csv.find(',', comma + 1);
  csv.replace(comma + 1, next - comma - 1, "nan");
  write_text_atomic(dir.path / "irradiance.csv", csv);
  CHECK_THROWS_AS(load_dataset(dir.path), DataError);
}

TEST_CASE("format_double round-trips doubles exactly") {
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const double v = (rng.uniform() - 0.5) * std::pow(10.0, rng.uniform(-12.0, 12.0));
    CHECK(parse_double(format_double(v), "test") == v);
  }
}

}  // TEST_SUITE
