// Report files: per-seed metrics, per-condition aggregates, sweep plot data
// and a plain-text summary.
#pragma once

#include <filesystem>

#include "localhealth/experiment.hpp"

namespace localhealth::eval {

inline constexpr std::string_view kMetricsHeader = "experiment,condition,first_year,seed,macro_f1,accuracy";
inline constexpr std::string_view kSummaryHeader =
    "experiment,condition,first_year,n,f1_mean,f1_min,f1_max,acc_mean,acc_min,acc_max";
inline constexpr std::string_view kPlotHeader = "first_year,f1_mean,f1_min,f1_max,n";

void write_metrics_csv(std::ostream& out, const ExperimentReport& report);
void write_summary_csv(std::ostream& out, const ExperimentReport& report);
/// Sweeps only: one row per availability window.
void write_plot_csv(std::ostream& out, const ExperimentReport& report);
std::string summary_text(const ExperimentReport& report);

/// Writes metrics.csv, summary.csv, summary.txt and, for sweeps,
/// plot_<experiment>.csv into `out_dir`. Returns the paths written.
std::vector<std::filesystem::path> emit_report(const ExperimentReport& report, const std::filesystem::path& out_dir);

/// Parses a metrics.csv produced by write_metrics_csv.
ExperimentReport read_metrics_csv(std::istream& in);

}  // namespace localhealth::eval
