#include "cmlrain/run_config.hpp"

#include <fstream>

#include "cmlrain/errors.hpp"
#include "json.hpp"

namespace cmlrain {

namespace {

using nlohmann::json;

json split_to_json(const SplitBounds& b) {
  return {{"train", {format_date(b.train.first_day), format_date(b.train.last_day)}},
          {"val", {format_date(b.val.first_day), format_date(b.val.last_day)}},
          {"test", {format_date(b.test.first_day), format_date(b.test.last_day)}}};
}

DateRange range_from_json(const json& j) {
  return {parse_date(j.at(0).get<std::string>()),
          parse_date(j.at(1).get<std::string>())};
}

template <typename T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

std::string run_config_to_json(const RunConfig& cfg) {
  json j;
  j["schema_version"] = cfg.schema_version;
  j["seed"] = cfg.seed;
  j["data_dir"] = cfg.data_dir;
  j["out_dir"] = cfg.out_dir;
  j["models"] = cfg.models;

  j["preprocess"] = {{"smooth_window_min", cfg.preprocess.smooth_window_min},
                     {"impute_order", cfg.preprocess.impute_order},
                     {"impute_neighbors", cfg.preprocess.impute_neighbors},
                     {"window_len", cfg.preprocess.window_len},
                     {"split", split_to_json(cfg.preprocess.split)}};

  j["model"] = json::parse(model_spec_to_json(cfg.model));

  j["train"] = {{"lr", cfg.train.lr},
                {"epochs", cfg.train.epochs},
                {"batch_size", cfg.train.batch_size},
                {"adam_beta1", cfg.train.adam_beta1},
                {"adam_beta2", cfg.train.adam_beta2},
                {"adam_eps", cfg.train.adam_eps}};
  if (cfg.train.grad_clip_norm) {
    j["train"]["grad_clip_norm"] = *cfg.train.grad_clip_norm;
  }

  json coeffs = json::array();
  for (const auto& c : cfg.pl.coefficients) {
    coeffs.push_back({{"frequency_ghz", c.frequency_ghz}, {"a", c.a}, {"b", c.b}});
  }
  j["pl"] = {{"std_window_min", cfg.pl.std_window_min},
             {"wet_threshold_scale", cfg.pl.wet_threshold_scale},
             {"waa_base_db", cfg.pl.waa_base_db},
             {"waa_per_ghz_db", cfg.pl.waa_per_ghz_db},
             {"baseline_window_min", cfg.pl.baseline_window_min},
             {"coefficients", coeffs}};
  if (cfg.pl.wet_threshold_db) j["pl"]["wet_threshold_db"] = *cfg.pl.wet_threshold_db;
  if (cfg.pl.waa_offset_db) j["pl"]["waa_offset_db"] = *cfg.pl.waa_offset_db;

  json links = json::array();
  for (const auto& l : cfg.synth.links) {
    links.push_back({{"length_km", l.length_km},
                     {"frequency_ghz", l.frequency_ghz},
                     {"a", l.a},
                     {"b", l.b},
                     {"baseline_dbm", l.baseline_dbm}});
  }
  j["synth"] = {{"days", cfg.synth.days},
                {"n_links", cfg.synth.n_links},
                {"noise_db", cfg.synth.noise_db},
                {"waa_db", cfg.synth.waa_db},
                {"mean_gap_min", cfg.synth.mean_gap_min},
                {"mean_duration_min", cfg.synth.mean_duration_min},
                {"min_duration_min", cfg.synth.min_duration_min},
                {"max_duration_min", cfg.synth.max_duration_min},
                {"rate_lognorm_mu", cfg.synth.rate_lognorm_mu},
                {"rate_lognorm_sigma", cfg.synth.rate_lognorm_sigma},
                {"max_rate_mm_h", cfg.synth.max_rate_mm_h},
                {"gauge_resolution_mm", cfg.synth.gauge_resolution_mm},
                {"zero_rain", cfg.synth.zero_rain},
                {"start_time", cfg.synth.start_time},
                {"links", links}};
  return j.dump(2);
}

RunConfig run_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text, nullptr, true, true);
  } catch (const json::exception& e) {
    throw ConfigInvalid(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig cfg;
  try {
    maybe(j, "schema_version", cfg.schema_version);
    if (cfg.schema_version != 1) {
      throw ConfigInvalid("unsupported schema_version " +
                          std::to_string(cfg.schema_version));
    }
    maybe(j, "seed", cfg.seed);
    maybe(j, "data_dir", cfg.data_dir);
    maybe(j, "out_dir", cfg.out_dir);
    maybe(j, "models", cfg.models);

    if (j.contains("preprocess")) {
      const json& p = j.at("preprocess");
      maybe(p, "smooth_window_min", cfg.preprocess.smooth_window_min);
      maybe(p, "impute_order", cfg.preprocess.impute_order);
      maybe(p, "impute_neighbors", cfg.preprocess.impute_neighbors);
      maybe(p, "window_len", cfg.preprocess.window_len);
      if (p.contains("split")) {
        const json& s = p.at("split");
        cfg.preprocess.split.train = range_from_json(s.at("train"));
        cfg.preprocess.split.val = range_from_json(s.at("val"));
        cfg.preprocess.split.test = range_from_json(s.at("test"));
      }
    }
    if (j.contains("model")) {
      cfg.model = model_spec_from_json(j.at("model").dump());
    }
    if (j.contains("train")) {
      const json& t = j.at("train");
      maybe(t, "lr", cfg.train.lr);
      maybe(t, "epochs", cfg.train.epochs);
      maybe(t, "batch_size", cfg.train.batch_size);
      maybe(t, "adam_beta1", cfg.train.adam_beta1);
      maybe(t, "adam_beta2", cfg.train.adam_beta2);
      maybe(t, "adam_eps", cfg.train.adam_eps);
      if (t.contains("grad_clip_norm") && !t.at("grad_clip_norm").is_null()) {
        cfg.train.grad_clip_norm = t.at("grad_clip_norm").get<double>();
      }
    }
    if (j.contains("pl")) {
      const json& p = j.at("pl");
      maybe(p, "std_window_min", cfg.pl.std_window_min);
      maybe(p, "wet_threshold_scale", cfg.pl.wet_threshold_scale);
      maybe(p, "waa_base_db", cfg.pl.waa_base_db);
      maybe(p, "waa_per_ghz_db", cfg.pl.waa_per_ghz_db);
      maybe(p, "baseline_window_min", cfg.pl.baseline_window_min);
      if (p.contains("wet_threshold_db") && !p.at("wet_threshold_db").is_null()) {
        cfg.pl.wet_threshold_db = p.at("wet_threshold_db").get<double>();
      }
      if (p.contains("waa_offset_db") && !p.at("waa_offset_db").is_null()) {
        cfg.pl.waa_offset_db = p.at("waa_offset_db").get<double>();
      }
      if (p.contains("coefficients")) {
        for (const auto& c : p.at("coefficients")) {
          cfg.pl.coefficients.push_back({c.at("frequency_ghz").get<double>(),
                                         c.at("a").get<double>(),
                                         c.at("b").get<double>()});
        }
      }
    }
    if (j.contains("synth")) {
      const json& s = j.at("synth");
      maybe(s, "days", cfg.synth.days);
      maybe(s, "n_links", cfg.synth.n_links);
      maybe(s, "noise_db", cfg.synth.noise_db);
      maybe(s, "waa_db", cfg.synth.waa_db);
      maybe(s, "mean_gap_min", cfg.synth.mean_gap_min);
      maybe(s, "mean_duration_min", cfg.synth.mean_duration_min);
      maybe(s, "min_duration_min", cfg.synth.min_duration_min);
      maybe(s, "max_duration_min", cfg.synth.max_duration_min);
      maybe(s, "rate_lognorm_mu", cfg.synth.rate_lognorm_mu);
      maybe(s, "rate_lognorm_sigma", cfg.synth.rate_lognorm_sigma);
      maybe(s, "max_rate_mm_h", cfg.synth.max_rate_mm_h);
      maybe(s, "gauge_resolution_mm", cfg.synth.gauge_resolution_mm);
      maybe(s, "zero_rain", cfg.synth.zero_rain);
      maybe(s, "start_time", cfg.synth.start_time);
      if (s.contains("links")) {
        for (const auto& l : s.at("links")) {
          SynthLinkParams lp;
          maybe(l, "length_km", lp.length_km);
          maybe(l, "frequency_ghz", lp.frequency_ghz);
          maybe(l, "a", lp.a);
          maybe(l, "b", lp.b);
          maybe(l, "baseline_dbm", lp.baseline_dbm);
          cfg.synth.links.push_back(lp);
        }
      }
    }
  } catch (const json::exception& e) {
    throw ConfigInvalid(std::string("bad config field: ") + e.what());
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw MissingInput("cannot open config: " + path);
  std::string text((std::istreambuf_iterator<char>(f)),
                   std::istreambuf_iterator<char>());
  return run_config_from_json(text);
}

void save_run_config(const std::string& path, const RunConfig& cfg) {
  std::ofstream f(path);
  if (!f) throw IoFailure("cannot write config: " + path);
  f << run_config_to_json(cfg) << "\n";
}

}  // namespace cmlrain
