#pragma once

#include <optional>
#include <vector>

#include "cmlrain/timeseries.hpp"

namespace cmlrain {

// Forward power law: A = a * R^b * L with A in dB, R in mm/h, L in km.
// The source relation is sometimes printed with L in metres; this toolkit
// fixes km and dB/km throughout, matching how link lengths are recorded.
double rain_attenuation_db(double rate_mm_h, double a, double b, double length_km);

struct PowerLawCoeff {
  double frequency_ghz = 0.0;
  double a = 0.0;
  double b = 1.0;
};

// Indicative ITU-R-style coefficients for 30-40 GHz vertical polarization.
// External constants, not measurements; override via PLConfig.coefficients.
std::vector<PowerLawCoeff> default_power_law_table();

struct PLConfig {
  int std_window_min = 15;  // rolling-std width for wet/dry
  // Wet threshold in dB of rolling std. When unset it is calibrated as
  // wet_threshold_scale times the dry-period std estimate (median rolling
  // std of the series).
  std::optional<double> wet_threshold_db;
  double wet_threshold_scale = 0.8;
  // Wet-antenna offset: fixed affine function of frequency unless
  // waa_offset_db pins an explicit value.
  std::optional<double> waa_offset_db;
  double waa_base_db = 0.2;
  double waa_per_ghz_db = 0.03;
  int baseline_window_min = 60;  // rolling dry-median width
  std::vector<PowerLawCoeff> coefficients;  // default table when empty

  void validate() const;  // std_window_min >= 2, baseline_window_min >= 1
};

// Nearest-frequency lookup (ties resolve to the lower entry).
PowerLawCoeff lookup_coeff(const std::vector<PowerLawCoeff>& table,
                           double frequency_ghz);
double waa_offset_for(const PLConfig& cfg, double frequency_ghz);
double calibrate_wet_threshold(const TimeSeries& rsl, const PLConfig& cfg);

// Minute flagged wet iff the centered rolling std (sample std, shrinking at
// the edges) exceeds the threshold. Input must be 1-min with no missing.
std::vector<bool> wet_dry(const TimeSeries& rsl, const PLConfig& cfg,
                          double threshold_db);

// Baseline level = rolling median of the most recent dry-minute RSL,
// carried forward through wet periods (and backfilled over a leading wet
// stretch). Attenuation = max(baseline - rsl, 0).
TimeSeries baseline_attenuation(const TimeSeries& rsl,
                                const std::vector<bool>& wet,
                                const PLConfig& cfg);

// R = (max(A - waa, 0) / (a L))^(1/b) on wet minutes, 0 on dry minutes.
TimeSeries invert_power_law(const TimeSeries& attenuation_db,
                            const std::vector<bool>& wet, const LinkMeta& meta,
                            const PLConfig& cfg);

struct PLLinkResult {
  TimeSeries rate;
  TimeSeries attenuation;
  std::vector<bool> wet;
  double threshold_db = 0.0;
};

PLLinkResult pl_link_estimate(const LinkMeta& meta, const TimeSeries& rsl_1min,
                              const PLConfig& cfg);

// Unweighted per-minute mean of the per-link rates. All series must share
// one grid.
TimeSeries pl_estimate(const std::vector<LinkMeta>& metas,
                       const std::vector<TimeSeries>& rsl_1min,
                       const PLConfig& cfg);

}  // namespace cmlrain
