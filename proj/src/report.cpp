#include "localhealth/report.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "localhealth/io.hpp"

namespace localhealth::eval {

namespace {

std::string year_field(const std::optional<int>& y) { return y ? std::to_string(*y) : std::string(); }

// Condition names never contain commas or quotes, but guard anyway.
const std::string& checked_name(const std::string& name) {
  if (name.find_first_of(",\"\n") != std::string::npos) {
    throw ValidationError("report: condition name '" + name + "' cannot be written to CSV");
  }
  return name;
}

std::string fixed(double x, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

}  // namespace

void write_metrics_csv(std::ostream& out, const ExperimentReport& report) {
  out << kMetricsHeader << '\n';
  for (const auto& r : report.rows) {
    out << to_string(report.id) << ',' << checked_name(r.condition) << ',' << year_field(r.first_year) << ','
        << r.seed << ',' << io::format_double(r.macro_f1) << ',' << io::format_double(r.accuracy) << '\n';
  }
}

void write_summary_csv(std::ostream& out, const ExperimentReport& report) {
  out << kSummaryHeader << '\n';
  for (const auto& a : report.aggregates()) {
    out << to_string(report.id) << ',' << checked_name(a.condition) << ',' << year_field(a.first_year) << ',' << a.n
        << ',' << io::format_double(a.f1_mean) << ',' << io::format_double(a.f1_min) << ','
        << io::format_double(a.f1_max) << ',' << io::format_double(a.acc_mean) << ','
        << io::format_double(a.acc_min) << ',' << io::format_double(a.acc_max) << '\n';
  }
}

void write_plot_csv(std::ostream& out, const ExperimentReport& report) {
  out << kPlotHeader << '\n';
  for (const auto& a : report.aggregates()) {
    if (!a.first_year) continue;
    out << *a.first_year << ',' << io::format_double(a.f1_mean) << ',' << io::format_double(a.f1_min) << ','
        << io::format_double(a.f1_max) << ',' << a.n << '\n';
  }
}

std::string summary_text(const ExperimentReport& report) {
  std::ostringstream out;
  const auto aggs = report.aggregates();
  out << "experiment " << to_string(report.id) << ": " << aggs.size() << " conditions, " << report.rows.size()
      << " runs\n";
  std::size_t width = 9;
  for (const auto& a : aggs) width = std::max(width, a.condition.size());
  for (const auto& a : aggs) {
    out << "  " << a.condition << std::string(width - a.condition.size() + 2, ' ') << "macro-F1 " << fixed(a.f1_mean, 4)
        << " [" << fixed(a.f1_min, 4) << ", " << fixed(a.f1_max, 4) << "]  accuracy " << fixed(a.acc_mean, 2) << "%"
        << "  (n=" << a.n << ")\n";
  }
  for (const auto& d : report.diagnostics) out << "  note: " << d << '\n';
  return out.str();
}

std::vector<std::filesystem::path> emit_report(const ExperimentReport& report, const std::filesystem::path& out_dir) {
  std::vector<std::filesystem::path> written;
  auto emit = [&](const std::string& name, auto&& writer) {
    const auto path = out_dir / name;
    auto out = io::open_output(path);
    writer(out);
    out.flush();
    if (!out) throw Error("cannot write " + path.string());
    written.push_back(path);
  };
  emit("metrics.csv", [&](std::ostream& o) { write_metrics_csv(o, report); });
  emit("summary.csv", [&](std::ostream& o) { write_summary_csv(o, report); });
  if (report.is_sweep()) {
    emit("plot_" + std::string(to_string(report.id)) + ".csv", [&](std::ostream& o) { write_plot_csv(o, report); });
  }
  emit("summary.txt", [&](std::ostream& o) { o << summary_text(report); });
  return written;
}

ExperimentReport read_metrics_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != kMetricsHeader) throw ValidationError("metrics.csv: bad header");
  ExperimentReport report;
  bool have_id = false;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split(trim(line), ',');
    if (f.size() != 6) throw ValidationError("metrics.csv line " + std::to_string(line_no) + ": expected 6 fields");
    const auto id = parse_experiment_id(f[0]);
    if (have_id && id != report.id) throw ValidationError("metrics.csv: mixed experiments");
    report.id = id;
    have_id = true;
    ReportRow r;
    r.condition = f[1];
    try {
      if (!f[2].empty()) r.first_year = std::stoi(f[2]);
      r.seed = std::stoull(f[3]);
      r.macro_f1 = std::stod(f[4]);
      r.accuracy = std::stod(f[5]);
    } catch (const std::exception&) {
      throw ValidationError("metrics.csv line " + std::to_string(line_no) + ": malformed number");
    }
    report.rows.push_back(std::move(r));
  }
  return report;
}

}  // namespace localhealth::eval
