#include <cstdio>
#include <filesystem>
#include <fstream>

#include "cmlrain/errors.hpp"
#include "cmlrain/ingest.hpp"
#include "cmlrain/pl_model.hpp"
#include "cmlrain/rng.hpp"
#include "cmlrain/synth.hpp"
#include "doctest.h"

using namespace cmlrain;

namespace {

std::string tmp_path(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "cmlrain_tests";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

void write_file(const std::string& path, const std::string& body) {
  std::ofstream f(path);
  f << body;
}

}  // namespace

TEST_CASE("link csv maps fields and blanks become missing") {
  std::string path = tmp_path("link_basic.csv");
  write_file(path,
             "# link_id = 651\n"
             "# length_km = 1.28\n"
             "# frequency_ghz = 38.32\n"
             "# sampling_interval_s = 10\n"
             "time,rsl,tsl\n"
             "2015-06-01T00:00:00Z,-40.0,10.0\n"
             "2015-06-01T00:00:10Z,-40.5,10.0\n"
             "2015-06-01T00:00:20Z,,10.0\n");
  LinkRecord rec = parse_link_csv(path);
  CHECK(rec.meta.link_id == "651");
  CHECK(rec.meta.length_km == doctest::Approx(1.28));
  CHECK(rec.meta.frequency_ghz == doctest::Approx(38.32));
  REQUIRE(rec.rsl.size() == 3);
  CHECK(*rec.rsl.values[0] == -40.0);
  CHECK(*rec.rsl.values[1] == -40.5);
  CHECK_FALSE(rec.rsl.values[2].has_value());
  CHECK(rec.rsl.missing_count() == 1);
}

TEST_CASE("non-monotonic timestamps are rejected") {
  std::string path = tmp_path("link_nonmono.csv");
  write_file(path,
             "# link_id = x\n# length_km = 1\n# frequency_ghz = 30\n"
             "time,rsl,tsl\n"
             "2015-06-01T00:00:10Z,-40.0,10\n"
             "2015-06-01T00:00:00Z,-40.5,10\n");
  CHECK_THROWS_AS(parse_link_csv(path), NonMonotonicTimestamps);
}

TEST_CASE("header-only and empty files are rejected") {
  std::string path = tmp_path("link_headeronly.csv");
  write_file(path,
             "# link_id = x\n# length_km = 1\n# frequency_ghz = 30\n"
             "time,rsl,tsl\n");
  CHECK_THROWS_AS(parse_link_csv(path), EmptyFile);
  std::string empty = tmp_path("link_empty.csv");
  write_file(empty, "");
  CHECK_THROWS_AS(parse_link_csv(empty), EmptyFile);
}

TEST_CASE("missing metadata or columns raise MalformedHeader") {
  std::string path = tmp_path("link_nometa.csv");
  write_file(path,
             "time,rsl,tsl\n"
             "2015-06-01T00:00:00Z,-40.0,10\n");
  CHECK_THROWS_AS(parse_link_csv(path), MalformedHeader);

  std::string path2 = tmp_path("link_nocol.csv");
  write_file(path2,
             "# link_id = x\n# length_km = 1\n# frequency_ghz = 30\n"
             "time,power,tsl\n"
             "2015-06-01T00:00:00Z,-40.0,10\n");
  CHECK_THROWS_AS(parse_link_csv(path2), MalformedHeader);
}

TEST_CASE("column map adapts foreign headers") {
  std::string path = tmp_path("link_foreign.csv");
  write_file(path,
             "# link_id = x\n# length_km = 1\n# frequency_ghz = 30\n"
             "Timestamp,RxLevel,TxLevel\n"
             "2015-06-01T00:00:00Z,-40.0,10\n"
             "2015-06-01T00:00:10Z,-41.0,10\n");
  ColumnMap cols{{"time", "Timestamp"}, {"rsl", "RxLevel"}, {"tsl", "TxLevel"}};
  LinkRecord rec = parse_link_csv(path, cols);
  CHECK(*rec.rsl.values[1] == -41.0);
}

TEST_CASE("grid gaps become missing samples") {
  std::string path = tmp_path("link_gap.csv");
  write_file(path,
             "# link_id = x\n# length_km = 1\n# frequency_ghz = 30\n"
             "time,rsl,tsl\n"
             "2015-06-01T00:00:00Z,-40.0,10\n"
             "2015-06-01T00:00:30Z,-41.0,10\n");
  LinkRecord rec = parse_link_csv(path);
  REQUIRE(rec.rsl.size() == 4);  // 0,10,20,30s slots
  CHECK(rec.rsl.missing_count() == 2);
  CHECK_FALSE(rec.rsl.values[1].has_value());
}

TEST_CASE("gauge parsing validates resolution and keeps missing distinct") {
  std::string path = tmp_path("gauge_ok.csv");
  write_file(path,
             "# gauge_id = torp\n# resolution_mm = 0.1\n"
             "time,accum_mm\n"
             "2015-06-01T00:00:00Z,0.1\n"
             "2015-06-01T00:01:00Z,0.0\n"
             "2015-06-01T00:02:00Z,\n");
  GaugeRecord g = parse_gauge_csv(path);
  CHECK(*g.series.values[0] == doctest::Approx(0.1));
  CHECK(*g.series.values[1] == 0.0);
  CHECK_FALSE(g.series.values[2].has_value());  // missing, not zero

  std::string bad = tmp_path("gauge_bad.csv");
  write_file(bad,
             "# gauge_id = torp\n# resolution_mm = 0.1\n"
             "time,accum_mm\n"
             "2015-06-01T00:00:00Z,0.15\n");
  CHECK_THROWS_AS(parse_gauge_csv(bad), ResolutionViolation);

  std::string neg = tmp_path("gauge_neg.csv");
  write_file(neg,
             "# gauge_id = torp\n# resolution_mm = 0.1\n"
             "time,accum_mm\n"
             "2015-06-01T00:00:00Z,-0.1\n");
  CHECK_THROWS_AS(parse_gauge_csv(neg), ResolutionViolation);
}

TEST_CASE("serialize then parse reproduces non-missing values exactly") {
  Rng rng(31);
  LinkRecord rec;
  rec.meta.link_id = "roundtrip";
  rec.meta.length_km = 2.517;
  rec.meta.frequency_ghz = 33.23;
  rec.meta.sampling_interval_s = 10;
  rec.rsl.start = parse_iso8601("2015-07-03T09:00:00Z");
  rec.rsl.step_s = 10;
  rec.rsl.unit = Unit::dBm;
  rec.tsl = rec.rsl;
  size_t missing = 0;
  for (int i = 0; i < 500; ++i) {
    if (rng.uniform() < 0.07) {
      rec.rsl.values.emplace_back(std::nullopt);
      ++missing;
    } else {
      rec.rsl.values.emplace_back(rng.normal(-45.0, 3.0));
    }
    rec.tsl.values.emplace_back(10.0);
  }
  std::string path = tmp_path("link_roundtrip.csv");
  write_link_csv(path, rec);
  LinkRecord back = parse_link_csv(path);
  REQUIRE(back.rsl.size() == rec.rsl.size());
  CHECK(back.rsl.missing_count() == missing);
  for (size_t i = 0; i < rec.rsl.size(); ++i) {
    if (rec.rsl.values[i].has_value()) {
      CHECK(*back.rsl.values[i] == *rec.rsl.values[i]);  // bit exact
    } else {
      CHECK_FALSE(back.rsl.values[i].has_value());
    }
  }
  CHECK(back.meta.length_km == rec.meta.length_km);
}

TEST_CASE("synth is bit-identical for a fixed seed") {
  SynthDataset a = synth_dataset(7, 2);
  SynthDataset b = synth_dataset(7, 2);
  REQUIRE(a.links.size() == b.links.size());
  for (size_t l = 0; l < a.links.size(); ++l) {
    REQUIRE(a.links[l].rsl.size() == b.links[l].rsl.size());
    for (size_t i = 0; i < a.links[l].rsl.size(); ++i) {
      CHECK(*a.links[l].rsl.values[i] == *b.links[l].rsl.values[i]);
    }
  }
  for (size_t i = 0; i < a.gauge.series.size(); ++i) {
    CHECK(*a.gauge.series.values[i] == *b.gauge.series.values[i]);
  }
  SynthDataset c = synth_dataset(8, 2);
  bool any_diff = false;
  for (size_t i = 0; i < a.links[0].rsl.size() && !any_diff; ++i) {
    any_diff = *a.links[0].rsl.values[i] != *c.links[0].rsl.values[i];
  }
  CHECK(any_diff);
}

TEST_CASE("zero-rain synth is baseline plus noise only") {
  SynthConfig cfg;
  cfg.days = 1;
  cfg.zero_rain = true;
  cfg.noise_db = 0.0;
  SynthDataset ds = synth_dataset(3, cfg);
  for (const auto& v : ds.true_rain.values) CHECK(*v == 0.0);
  for (size_t l = 0; l < ds.links.size(); ++l) {
    for (const auto& v : ds.links[l].rsl.values) {
      CHECK(*v == ds.link_params[l].baseline_dbm);
    }
  }
}

TEST_CASE("forward power law: 5 mm/h on a 2 km link with a=0.2 b=1 dips 2 dB") {
  CHECK(rain_attenuation_db(5.0, 0.2, 1.0, 2.0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(rain_attenuation_db(0.0, 0.2, 1.0, 2.0) == 0.0);
}

TEST_CASE("synth ground truth satisfies the forward law at zero noise") {
  SynthConfig cfg;
  cfg.days = 2;
  cfg.noise_db = 0.0;
  cfg.waa_db = 0.0;
  SynthDataset ds = synth_dataset(11, cfg);
  bool saw_rain = false;
  for (size_t l = 0; l < ds.links.size(); ++l) {
    const auto& p = ds.link_params[l];
    for (size_t j = 0; j < ds.links[l].rsl.size(); ++j) {
      double rate = *ds.true_rain.values[j / 6];
      double atten = p.baseline_dbm - *ds.links[l].rsl.values[j];
      double expect = rain_attenuation_db(rate, p.a, p.b, p.length_km);
      CHECK(atten == doctest::Approx(expect).epsilon(1e-12));
      if (rate > 0.0) saw_rain = true;
    }
  }
  CHECK(saw_rain);
}

TEST_CASE("synth gauge accumulations respect the tipping resolution") {
  SynthDataset ds = synth_dataset(5, 3);
  CHECK_NOTHROW(ds.gauge.validate());
  double truth_total = 0.0, gauge_total = 0.0;
  for (const auto& v : ds.true_rain.values) truth_total += *v / 60.0;
  for (const auto& v : ds.gauge.series.values) gauge_total += *v;
  // Carry-based quantization keeps the running total within one tick.
  CHECK(std::abs(truth_total - gauge_total) <= ds.gauge.resolution_mm + 1e-9);
}

TEST_CASE("synth rejects non-positive days") {
  CHECK_THROWS_AS(synth_dataset(1, 0), ConfigInvalid);
}
