// Correlation analysis and distribution summaries.
#pragma once

#include <iosfwd>

#include "localhealth/dataset.hpp"

namespace localhealth::stats {

struct PearsonResult {
  double r = 0.0;
  double p = 1.0;  // two-sided
  std::size_t n = 0;
};

/// Sample Pearson correlation with a two-sided t-test p-value on n - 2
/// degrees of freedom. Constant inputs and length mismatches throw.
PearsonResult pearson(std::span<const double> x, std::span<const double> y);

/// I_x(a, b) by Lentz's continued fraction.
double regularized_incomplete_beta(double a, double b, double x);

/// P(|T| >= |t|) for Student's t with `df` degrees of freedom.
double student_t_two_sided_p(double t, double df);

enum class CorrelationVariable { MHCount, FICount, GeneralCount, ADI };
std::string_view to_string(CorrelationVariable v);

struct CorrelationCell {
  int year = 0;
  CorrelationVariable variable = CorrelationVariable::ADI;
  double r = 0.0;
  double p = 1.0;
  std::size_t n = 0;
};

/// Per year, correlation of g with the raw MH/FI/General counts and with ADI.
std::vector<CorrelationCell> correlation_report(const Dataset& dataset);

/// Year rows, variable columns (MH, FI, General, ADI); p-values follow in
/// matching *_p columns.
void write_correlation_csv(std::ostream& out, std::span<const CorrelationCell> cells);

inline constexpr std::array<double, 5> kReportQuantiles{0.0, 0.25, 0.5, 0.75, 1.0};

struct PercentileRow {
  std::optional<Category> category;  // empty for outcome rows
  int year = 0;
  std::array<double, 5> values{};
};

struct DistributionReport {
  std::vector<PercentileRow> words_per_tweet;
  std::vector<PercentileRow> tweets_per_bg;
  std::vector<PercentileRow> outcome;
};

std::size_t word_count(std::string_view text);

DistributionReport distribution_report(const Dataset& dataset);

/// section,category,year,p0,p25,p50,p75,p100
void write_distribution_csv(std::ostream& out, const DistributionReport& report);

/// Smallest power of two >= p75_words * tokens_per_word.
int derive_seq_len(int p75_words, double tokens_per_word);

}  // namespace localhealth::stats
