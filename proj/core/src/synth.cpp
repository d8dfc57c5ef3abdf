#include "cmlrain/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "cmlrain/errors.hpp"
#include "cmlrain/pl_model.hpp"
#include "cmlrain/rng.hpp"

namespace cmlrain {

namespace {

std::vector<SynthLinkParams> default_links(int n) {
  // Lengths/frequencies shaped like a small urban 30-40 GHz network.
  static const double lengths[] = {2.79, 2.52, 1.28, 3.05, 1.26, 0.25};
  static const double freqs[] = {32.45, 32.42, 38.32, 33.15, 32.45, 37.27};
  std::vector<SynthLinkParams> out;
  for (int i = 0; i < n; ++i) {
    SynthLinkParams p;
    p.length_km = lengths[i % 6];
    p.frequency_ghz = freqs[i % 6];
    p.a = 0.01 * p.frequency_ghz - 0.10;
    p.b = 1.25 - 0.008 * p.frequency_ghz;
    p.baseline_dbm = -44.0 - 0.5 * i;
    out.push_back(p);
  }
  return out;
}

}  // namespace

SynthDataset synth_dataset(uint64_t seed, const SynthConfig& cfg) {
  if (cfg.days < 1) throw ConfigInvalid("synth_dataset: days must be >= 1");
  Rng root(seed);
  const int64_t total_min = static_cast<int64_t>(cfg.days) * 1440;

  // Rain field on the 1-min grid.
  std::vector<double> rain(static_cast<size_t>(total_min), 0.0);
  if (!cfg.zero_rain) {
    Rng rr = root.split("rain");
    int64_t t = std::llround(rr.exponential(cfg.mean_gap_min));
    while (t < total_min) {
      int dur = static_cast<int>(std::llround(rr.exponential(cfg.mean_duration_min)));
      dur = std::clamp(dur, cfg.min_duration_min, cfg.max_duration_min);
      double rate = std::exp(rr.normal(cfg.rate_lognorm_mu, cfg.rate_lognorm_sigma));
      rate = std::min(rate, cfg.max_rate_mm_h);
      for (int64_t m = t; m < std::min(t + dur, total_min); ++m) {
        rain[static_cast<size_t>(m)] = rate;
      }
      t += dur + std::llround(rr.exponential(cfg.mean_gap_min));
    }
  }

  SynthDataset out;
  out.true_rain.start = cfg.start_time;
  out.true_rain.step_s = 60;
  out.true_rain.unit = Unit::mm_per_h;
  out.true_rain.values.reserve(rain.size());
  for (double r : rain) out.true_rain.values.emplace_back(r);

  out.link_params = cfg.links.empty() ? default_links(cfg.n_links) : cfg.links;

  for (size_t li = 0; li < out.link_params.size(); ++li) {
    const SynthLinkParams& p = out.link_params[li];
    Rng lr = root.split("link").split(static_cast<uint64_t>(li));
    LinkRecord rec;
    char id[16];
    std::snprintf(id, sizeof(id), "S%03zu", li + 1);
    rec.meta.link_id = id;
    rec.meta.length_km = p.length_km;
    rec.meta.frequency_ghz = p.frequency_ghz;
    rec.meta.sampling_interval_s = 10;
    rec.meta.near_lat = 57.7;
    rec.meta.near_lon = 11.9 + 0.01 * static_cast<double>(li);
    rec.meta.far_lat = 57.7 + p.length_km / 111.0;
    rec.meta.far_lon = rec.meta.near_lon;
    rec.meta.validate();

    const int64_t n10 = total_min * 6;
    rec.rsl.start = cfg.start_time;
    rec.rsl.step_s = 10;
    rec.rsl.unit = Unit::dBm;
    rec.rsl.values.reserve(static_cast<size_t>(n10));
    rec.tsl.start = cfg.start_time;
    rec.tsl.step_s = 10;
    rec.tsl.unit = Unit::dBm;
    rec.tsl.values.assign(static_cast<size_t>(n10), 10.0);

    for (int64_t j = 0; j < n10; ++j) {
      double r = rain[static_cast<size_t>(j / 6)];
      double atten = rain_attenuation_db(r, p.a, p.b, p.length_km);
      if (r > 0.0) atten += cfg.waa_db;
      double noise = cfg.noise_db > 0.0 ? lr.normal(0.0, cfg.noise_db) : 0.0;
      rec.rsl.values.emplace_back(p.baseline_dbm - atten + noise);
    }
    out.links.push_back(std::move(rec));
  }

  // Tipping-style quantization: accumulate and emit whole resolution ticks,
  // carrying the remainder so long-run totals are preserved.
  out.gauge.gauge_id = "synth";
  out.gauge.resolution_mm = cfg.gauge_resolution_mm;
  out.gauge.gauge_type = "synthetic";
  out.gauge.series.start = cfg.start_time;
  out.gauge.series.step_s = 60;
  out.gauge.series.unit = Unit::mm_accum;
  double carry = 0.0;
  for (double r : rain) {
    carry += r / 60.0;
    double ticks = std::floor(carry / cfg.gauge_resolution_mm + 1e-12);
    double v = ticks * cfg.gauge_resolution_mm;
    carry -= v;
    out.gauge.series.values.emplace_back(v);
  }
  out.gauge.validate();
  return out;
}

SynthDataset synth_dataset(uint64_t seed, int days) {
  SynthConfig cfg;
  cfg.days = days;
  return synth_dataset(seed, cfg);
}

}  // namespace cmlrain
