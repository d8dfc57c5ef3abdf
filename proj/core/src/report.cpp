#include "cmlrain/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cmlrain/errors.hpp"

namespace cmlrain {

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string opt_num(const std::optional<double>& v) {
  return v ? num(*v) : "";  // undefined metrics stay empty, never zero
}

void write_metrics_csv(const std::vector<EvalReport>& reports,
                       const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoFailure("cannot write " + path);
  f << "estimator,n,rmse,r2,pcc,mae\n";
  for (const auto& r : reports) {
    f << r.estimator << "," << r.overall.n << "," << num(r.overall.rmse) << ","
      << opt_num(r.overall.r2) << "," << opt_num(r.overall.pcc) << ","
      << num(r.overall.mae) << "\n";
  }
}

void write_per_day_csv(const std::vector<EvalReport>& reports,
                       const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoFailure("cannot write " + path);
  f << "estimator,date,n,rmse,r2,pcc,mae\n";
  for (const auto& r : reports) {
    for (const auto& d : r.per_day.days) {
      f << r.estimator << "," << format_date(d.day) << "," << d.m.n << ","
        << num(d.m.rmse) << "," << opt_num(d.m.r2) << "," << opt_num(d.m.pcc)
        << "," << num(d.m.mae) << "\n";
    }
    for (int64_t day : r.per_day.skipped) {
      f << r.estimator << "," << format_date(day) << ",skipped,,,,\n";
    }
  }
}

void write_events_csv(const std::vector<RainEvent>& events,
                      const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoFailure("cannot write " + path);
  f << "start,end,duration_min,peak_mm_h,total_mm\n";
  for (const auto& e : events) {
    f << format_iso8601(e.start) << "," << format_iso8601(e.end) << ","
      << e.duration_min() << "," << num(e.peak_mm_h) << "," << num(e.total_mm)
      << "\n";
  }
}

const char* kPalette[] = {"#d62728", "#1f77b4", "#2ca02c", "#ff7f0e",
                          "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

void write_svg(const std::vector<EvalReport>& reports, const std::string& path) {
  const EvalReport& first = reports.front();
  const int width = 1000, height = 420;
  const int ml = 70, mr = 20, mt = 30, mb = 50;
  const double pw = width - ml - mr, ph = height - mt - mb;

  double ymax = 0.1;
  for (double v : first.truth) ymax = std::max(ymax, v);
  for (const auto& r : reports) {
    for (double v : r.predicted) ymax = std::max(ymax, v);
  }
  ymax *= 1.05;
  int64_t t0 = first.times.front();
  int64_t t1 = first.times.back();
  double tspan = std::max<double>(1.0, static_cast<double>(t1 - t0));

  auto x_of = [&](int64_t t) {
    return ml + pw * static_cast<double>(t - t0) / tspan;
  };
  auto y_of = [&](double v) { return mt + ph * (1.0 - v / ymax); };

  std::ofstream f(path);
  if (!f) throw IoFailure("cannot write " + path);
  f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
    << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << " " << height
    << "\">\n";
  f << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  // axes
  f << "<line x1=\"" << ml << "\" y1=\"" << mt + ph << "\" x2=\"" << ml + pw
    << "\" y2=\"" << mt + ph << "\" stroke=\"black\"/>\n";
  f << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\""
    << mt + ph << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    double v = ymax * i / 5.0;
    double y = y_of(v);
    char label[32];
    std::snprintf(label, sizeof(label), "%.2f", v);
    f << "<text x=\"" << ml - 8 << "\" y=\"" << y + 4
      << "\" text-anchor=\"end\" font-size=\"11\">" << label << "</text>\n";
    f << "<line x1=\"" << ml - 4 << "\" y1=\"" << y << "\" x2=\"" << ml
      << "\" y2=\"" << y << "\" stroke=\"black\"/>\n";
  }
  for (int i = 0; i <= 6; ++i) {
    int64_t t = t0 + static_cast<int64_t>(tspan * i / 6.0);
    double x = x_of(t);
    f << "<text x=\"" << x << "\" y=\"" << mt + ph + 18
      << "\" text-anchor=\"middle\" font-size=\"10\">" << format_iso8601(t)
      << "</text>\n";
    f << "<line x1=\"" << x << "\" y1=\"" << mt + ph << "\" x2=\"" << x
      << "\" y2=\"" << mt + ph + 4 << "\" stroke=\"black\"/>\n";
  }
  f << "<text x=\"16\" y=\"" << mt + ph / 2
    << "\" font-size=\"12\" transform=\"rotate(-90 16," << mt + ph / 2
    << ")\" text-anchor=\"middle\">rain rate (mm/h)</text>\n";
  f << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height - 12
    << "\" font-size=\"12\" text-anchor=\"middle\">time (UTC)</text>\n";

  auto polyline = [&](const std::vector<int64_t>& times,
                      const std::vector<double>& vals, const char* color) {
    f << "<polyline fill=\"none\" stroke=\"" << color
      << "\" stroke-width=\"1\" points=\"";
    for (size_t i = 0; i < times.size(); ++i) {
      f << x_of(times[i]) << "," << y_of(vals[i]) << " ";
    }
    f << "\"/>\n";
  };

  polyline(first.times, first.truth, "black");
  f << "<text x=\"" << ml + 8 << "\" y=\"" << mt + 14
    << "\" font-size=\"11\" fill=\"black\">gauge</text>\n";
  for (size_t i = 0; i < reports.size(); ++i) {
    const char* color = kPalette[i % (sizeof(kPalette) / sizeof(kPalette[0]))];
    polyline(reports[i].times, reports[i].predicted, color);
    f << "<text x=\"" << ml + 8 << "\" y=\"" << mt + 14 + 14 * (i + 1)
      << "\" font-size=\"11\" fill=\"" << color << "\">" << reports[i].estimator
      << "</text>\n";
  }
  f << "</svg>\n";
}

}  // namespace

void emit_combined_report(const std::vector<EvalReport>& reports,
                          const std::string& out_dir) {
  if (reports.empty()) throw ConfigInvalid("emit_combined_report: no reports");
  std::filesystem::create_directories(out_dir);
  write_metrics_csv(reports, out_dir + "/metrics.csv");
  write_per_day_csv(reports, out_dir + "/per_day.csv");
  write_events_csv(reports.front().events, out_dir + "/events.csv");
  if (!reports.front().times.empty()) {
    write_svg(reports, out_dir + "/timeseries.svg");
  }
}

void emit_report(const EvalReport& report, const std::string& out_dir) {
  emit_combined_report({report}, out_dir);
}

std::vector<MetricsRow> read_metrics_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw MissingInput("cannot open " + path);
  std::string line;
  if (!std::getline(f, line)) throw EmptyFile(path);
  std::vector<MetricsRow> out;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    MetricsRow row;
    std::getline(ss, row.estimator, ',');
    auto next_num = [&](bool* present = nullptr) {
      std::getline(ss, cell, ',');
      if (cell.empty()) {
        if (present) *present = false;
        return 0.0;
      }
      if (present) *present = true;
      double v = 0.0;
      std::from_chars(cell.data(), cell.data() + cell.size(), v);
      return v;
    };
    row.m.n = static_cast<int64_t>(next_num());
    row.m.rmse = next_num();
    bool has = false;
    double v = next_num(&has);
    if (has) row.m.r2 = v;
    v = next_num(&has);
    if (has) row.m.pcc = v;
    row.m.mae = next_num();
    out.push_back(row);
  }
  return out;
}

}  // namespace cmlrain
