#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "cmlrain/autodiff.hpp"
#include "cmlrain/dataset.hpp"
#include "cmlrain/errors.hpp"
#include "cmlrain/ingest.hpp"
#include "cmlrain/pipeline.hpp"
#include "cmlrain/pl_model.hpp"
#include "cmlrain/report.hpp"
#include "cmlrain/synth.hpp"
#include "json.hpp"

namespace {

using namespace cmlrain;

bool g_verbose = false;

void info(const std::string& msg) {
  if (g_verbose) std::fprintf(stderr, "[cmlrain] %s\n", msg.c_str());
}

std::string read_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw MissingInput("cannot open: " + path);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

PLConfig load_pl_config(const std::string& path) {
  nlohmann::json j = nlohmann::json::parse(read_file(path), nullptr, true, true);
  nlohmann::json wrapped = j.contains("pl") ? j : nlohmann::json{{"pl", j}};
  return run_config_from_json(wrapped.dump()).pl;
}

struct Cli {
  std::string config_path;
  std::string data_dir;
  std::string out;
  uint64_t seed = 0;
  bool seed_set = false;

  RunConfig resolve() const {
    RunConfig cfg;
    if (!config_path.empty()) cfg = load_run_config(config_path);
    if (!data_dir.empty()) {
      cfg.data_dir = data_dir;
    } else if (cfg.data_dir.empty()) {
      const char* env = std::getenv("CMLRAIN_DATA_DIR");
      if (env) cfg.data_dir = env;
    }
    if (!out.empty()) cfg.out_dir = out;
    if (seed_set) cfg.seed = seed;
    return cfg;
  }
};

int dispatch(CLI::App& app, Cli& cli) {
  ad::set_debug_checks(g_verbose);

  if (auto* sub = app.get_subcommand("synth"); sub->parsed()) {
    RunConfig cfg = cli.resolve();
    int days = sub->get_option("--days")->as<int>();
    if (sub->count("--days")) cfg.synth.days = days;
    SynthDataset ds = synth_dataset(cfg.seed, cfg.synth);
    write_data_dir(cfg.out_dir, ds);
    info("wrote synthetic dataset to " + cfg.out_dir);
    return 0;
  }

  if (auto* sub = app.get_subcommand("preprocess"); sub->parsed()) {
    RunConfig cfg = cli.resolve();
    bool synthetic = sub->get_option("--synthetic")->as<bool>();
    WindowedDataset ds = run_preprocess(cfg, synthetic, cfg.out_dir);
    std::printf("windows: train=%lld val=%lld test=%lld features=%d\n",
                static_cast<long long>(ds.train.count()),
                static_cast<long long>(ds.val.count()),
                static_cast<long long>(ds.test.count()), ds.n_features());
    return 0;
  }

  if (auto* sub = app.get_subcommand("train"); sub->parsed()) {
    RunConfig cfg = cli.resolve();
    std::string spec_path = sub->get_option("--spec")->as<std::string>();
    std::string data = sub->get_option("--data")->as<std::string>();
    if (!spec_path.empty()) cfg.model = model_spec_from_json(read_file(spec_path));
    if (sub->count("--epochs")) {
      cfg.train.epochs = sub->get_option("--epochs")->as<int>();
    }
    WindowedDataset ds = load_dataset(data);
    cfg.model.window_len = ds.window_len;
    cfg.model.n_features = ds.n_features();
    TrainConfig tc = cfg.train;
    tc.seed = cfg.seed;
    TrainResult tr = train_model(cfg.model, ds, tc);
    save_checkpoint(cfg.out_dir, tr.params);
    write_history_csv(cfg.out_dir + ".history.csv", tr.history);
    std::printf("best epoch %d val_loss %.6g -> %s\n", tr.best_epoch,
                tr.best_val_loss, cfg.out_dir.c_str());
    return 0;
  }

  if (auto* sub = app.get_subcommand("evaluate"); sub->parsed()) {
    RunConfig cfg = cli.resolve();
    TimeSeries pred = read_rate_csv(sub->get_option("--pred")->as<std::string>());
    TimeSeries truth = read_rate_csv(sub->get_option("--truth")->as<std::string>());
    if (pred.start != truth.start || pred.step_s != truth.step_s ||
        pred.size() != truth.size()) {
      throw DataError("prediction and truth series are not aligned");
    }
    std::vector<double> y, yhat;
    std::vector<int64_t> times;
    for (size_t i = 0; i < truth.size(); ++i) {
      if (!truth.values[i] || !pred.values[i]) continue;
      y.push_back(*truth.values[i]);
      yhat.push_back(*pred.values[i]);
      times.push_back(truth.time_at(i));
    }
    std::string name = sub->get_option("--name")->as<std::string>();
    EvalReport report = evaluate_series(name.empty() ? "estimate" : name, y, yhat, times);
    emit_report(report, cfg.out_dir);
    std::printf("n=%lld rmse=%.6g mae=%.6g r2=%s pcc=%s -> %s\n",
                static_cast<long long>(report.overall.n), report.overall.rmse,
                report.overall.mae,
                report.overall.r2 ? std::to_string(*report.overall.r2).c_str() : "undef",
                report.overall.pcc ? std::to_string(*report.overall.pcc).c_str() : "undef",
                cfg.out_dir.c_str());
    return 0;
  }

  if (auto* sub = app.get_subcommand("compare-pl"); sub->parsed()) {
    RunConfig cfg = cli.resolve();
    std::string pl_path = sub->get_option("--pl-config")->as<std::string>();
    if (!pl_path.empty()) cfg.pl = load_pl_config(pl_path);
    DataBundle data = load_data_dir(cfg.data_dir);
    TimeSeries est = pl_site_estimate(data, cfg.preprocess, cfg.pl);
    write_rate_csv(cfg.out_dir, est);
    info("wrote PL estimate to " + cfg.out_dir);
    return 0;
  }

  if (auto* sub = app.get_subcommand("detect-events"); sub->parsed()) {
    RunConfig cfg = cli.resolve();
    TimeSeries rate = read_rate_csv(sub->get_option("--input")->as<std::string>());
    auto events = detect_events(rate);
    std::ofstream f(cfg.out_dir);
    if (!f) throw IoFailure("cannot write " + cfg.out_dir);
    f << "start,end,duration_min,peak_mm_h,total_mm\n";
    char buf[160];
    for (const auto& e : events) {
      std::snprintf(buf, sizeof(buf), "%s,%s,%lld,%.17g,%.17g\n",
                    format_iso8601(e.start).c_str(), format_iso8601(e.end).c_str(),
                    static_cast<long long>(e.duration_min()), e.peak_mm_h,
                    e.total_mm);
      f << buf;
    }
    std::printf("%zu events -> %s\n", events.size(), cfg.out_dir.c_str());
    return 0;
  }

  if (auto* sub = app.get_subcommand("reproduce"); sub->parsed()) {
    RunConfig cfg = cli.resolve();
    bool synthetic = sub->get_option("--synthetic")->as<bool>();
    if (sub->count("--days")) {
      cfg.synth.days = sub->get_option("--days")->as<int>();
    }
    if (sub->count("--epochs")) {
      cfg.train.epochs = sub->get_option("--epochs")->as<int>();
    }
    if (sub->count("--models")) {
      cfg.models.clear();
      std::string list = sub->get_option("--models")->as<std::string>();
      size_t at = 0;
      while (at != std::string::npos) {
        size_t comma = list.find(',', at);
        cfg.models.push_back(list.substr(at, comma - at));
        at = comma == std::string::npos ? comma : comma + 1;
      }
    }
    ReproduceResult res = run_reproduce(cfg, synthetic);
    for (const auto& r : res.reports) {
      std::printf("%-12s n=%lld rmse=%.4f mae=%.4f r2=%s pcc=%s\n",
                  r.estimator.c_str(), static_cast<long long>(r.overall.n),
                  r.overall.rmse, r.overall.mae,
                  r.overall.r2 ? std::to_string(*r.overall.r2).c_str() : "undef",
                  r.overall.pcc ? std::to_string(*r.overall.pcc).c_str() : "undef");
    }
    return 0;
  }

  std::cerr << app.help();
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CML-to-rainfall estimation toolkit"};
  app.require_subcommand(0, 1);

  Cli cli;
  app.add_option("--config", cli.config_path, "run config JSON");
  app.add_option("--data-dir", cli.data_dir, "input data directory");
  app.add_option("--out", cli.out, "output path (dir or file per subcommand)");
  auto* seed_opt = app.add_option("--seed", cli.seed, "master RNG seed");
  app.add_flag("--verbose", g_verbose, "debug logging and NaN guards");

  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("--days", "number of days");

  auto* pre = app.add_subcommand("preprocess", "build the windowed dataset");
  pre->add_flag("--synthetic", "generate data instead of reading --data-dir");

  auto* train = app.add_subcommand("train", "train one model");
  train->add_option("--spec", "model spec JSON file");
  train->add_option("--data", "preprocessed dataset directory")->required();
  train->add_option("--epochs", "epoch override");

  auto* eval = app.add_subcommand("evaluate", "score predictions against truth");
  eval->add_option("--pred", "prediction rate CSV")->required();
  eval->add_option("--truth", "truth rate CSV")->required();
  eval->add_option("--name", "estimator label");

  auto* pl = app.add_subcommand("compare-pl", "physics power-law estimate");
  pl->add_option("--pl-config", "PL config JSON");

  auto* det = app.add_subcommand("detect-events", "find effective rain events");
  det->add_option("--input", "rate CSV")->required();

  auto* rep = app.add_subcommand("reproduce", "end-to-end protocol run");
  rep->add_flag("--synthetic", "use generated data");
  rep->add_option("--days", "synthetic days override");
  rep->add_option("--epochs", "training epochs override");
  rep->add_option("--models", "comma-separated model kinds");

  CLI11_PARSE(app, argc, argv);
  cli.seed_set = seed_opt->count() > 0;

  try {
    return dispatch(app, cli);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "[cmlrain] config error: %s\n", e.what());
    return 2;
  } catch (const DataError& e) {
    std::fprintf(stderr, "[cmlrain] data error: %s\n", e.what());
    return 3;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "[cmlrain] numeric error: %s\n", e.what());
    return 4;
  } catch (const Error& e) {
    std::fprintf(stderr, "[cmlrain] error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "[cmlrain] unexpected error: %s\n", e.what());
    return 1;
  }
}
