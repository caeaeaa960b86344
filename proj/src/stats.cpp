#include "localhealth/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "localhealth/io.hpp"

namespace localhealth::stats {

namespace {

// Continued fraction for I_x(a, b), modified Lentz.
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIterations = 10000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  throw Error("incomplete beta: continued fraction did not converge");
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0 && b > 0)) throw ValidationError("incomplete beta: a and b must be positive");
  if (!(x >= 0.0 && x <= 1.0)) throw ValidationError("incomplete beta: x outside [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  // The fraction converges fastest on the side of the mean.
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, double df) {
  if (!(df > 0)) throw ValidationError("t distribution: df must be positive");
  if (std::isinf(t)) return 0.0;
  return regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
}

PearsonResult pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ValidationError("pearson: length mismatch");
  const std::size_t n = x.size();
  if (n < 3) throw ValidationError("pearson: need at least 3 observations");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  // Sample vs population normalisation cancels in r, so the raw sums suffice.
  double sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw ValidationError("pearson: constant input, correlation undefined");
  double r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);

  PearsonResult out{r, 0.0, n};
  const double df = static_cast<double>(n - 2);
  if (std::fabs(r) < 1.0) {
    const double t = r * std::sqrt(df / (1.0 - r * r));
    out.p = student_t_two_sided_p(t, df);
  }
  return out;
}

std::string_view to_string(CorrelationVariable v) {
  switch (v) {
    case CorrelationVariable::MHCount: return "MH";
    case CorrelationVariable::FICount: return "FI";
    case CorrelationVariable::GeneralCount: return "General";
    case CorrelationVariable::ADI: return "ADI";
  }
  return "?";
}

std::vector<CorrelationCell> correlation_report(const Dataset& dataset) {
  if (dataset.empty()) throw ValidationError("correlation_report: empty dataset");
  std::vector<CorrelationCell> out;
  for (int year : dataset.years) {
    std::vector<double> g, mh, fi, general, adi;
    for (const auto& e : dataset.entries) {
      if (e.year != year) continue;
      g.push_back(e.g);
      mh.push_back(static_cast<double>(e.count(Category::MH)));
      fi.push_back(static_cast<double>(e.count(Category::FI)));
      general.push_back(static_cast<double>(e.count(Category::General)));
      adi.push_back(static_cast<double>(dataset.block_group(e.bg_id).adi));
    }
    const std::array<std::pair<CorrelationVariable, const std::vector<double>*>, 4> columns{{
        {CorrelationVariable::MHCount, &mh},
        {CorrelationVariable::FICount, &fi},
        {CorrelationVariable::GeneralCount, &general},
        {CorrelationVariable::ADI, &adi},
    }};
    for (const auto& [var, values] : columns) {
      auto res = pearson(*values, g);
      out.push_back({year, var, res.r, res.p, res.n});
    }
  }
  return out;
}

void write_correlation_csv(std::ostream& out, std::span<const CorrelationCell> cells) {
  out << "year,MH,FI,General,ADI,MH_p,FI_p,General_p,ADI_p,n\n";
  for (std::size_t i = 0; i + 4 <= cells.size(); i += 4) {
    out << cells[i].year;
    for (std::size_t k = 0; k < 4; ++k) out << ',' << io::format_double(cells[i + k].r);
    for (std::size_t k = 0; k < 4; ++k) out << ',' << io::format_double(cells[i + k].p);
    out << ',' << cells[i].n << '\n';
  }
}

std::size_t word_count(std::string_view text) { return split_whitespace(text).size(); }

namespace {

std::array<double, 5> quantiles(const std::vector<double>& values) {
  std::array<double, 5> out{};
  for (std::size_t i = 0; i < kReportQuantiles.size(); ++i) out[i] = percentile(values, kReportQuantiles[i]);
  return out;
}

}  // namespace

DistributionReport distribution_report(const Dataset& dataset) {
  DistributionReport report;
  for (Category c : kAllCategories) {
    for (int year : dataset.years) {
      std::vector<double> words, per_bg;
      for (const auto& e : dataset.entries) {
        if (e.year != year) continue;
        per_bg.push_back(static_cast<double>(e.cell(c).size()));
        for (const auto& t : e.cell(c)) words.push_back(static_cast<double>(word_count(t.text)));
      }
      if (words.empty()) continue;
      report.words_per_tweet.push_back({c, year, quantiles(words)});
      report.tweets_per_bg.push_back({c, year, quantiles(per_bg)});
    }
  }
  for (int year : dataset.years) {
    std::vector<double> g;
    for (const auto& e : dataset.entries) {
      if (e.year == year) g.push_back(e.g);
    }
    if (!g.empty()) report.outcome.push_back({std::nullopt, year, quantiles(g)});
  }
  return report;
}

void write_distribution_csv(std::ostream& out, const DistributionReport& report) {
  out << "section,category,year,p0,p25,p50,p75,p100\n";
  auto emit = [&](std::string_view section, const std::vector<PercentileRow>& rows) {
    for (const auto& row : rows) {
      out << section << ',' << (row.category ? to_string(*row.category) : std::string_view("--")) << ',' << row.year;
      for (double v : row.values) out << ',' << io::format_double(v);
      out << '\n';
    }
  };
  emit("words_per_tweet", report.words_per_tweet);
  emit("tweets_per_bg", report.tweets_per_bg);
  emit("outcome", report.outcome);
}

int derive_seq_len(int p75_words, double tokens_per_word) {
  if (p75_words < 1) throw ValidationError("derive_seq_len: p75_words must be >= 1");
  if (!(tokens_per_word > 0)) throw ValidationError("derive_seq_len: tokens_per_word must be positive");
  const double tokens = static_cast<double>(p75_words) * tokens_per_word;
  int len = 1;
  // Relative slack absorbs representation error in products like 25 * 1.28.
  while (static_cast<double>(len) < tokens * (1.0 - 1e-12)) {
    if (len > (1 << 29)) throw ValidationError("derive_seq_len: sequence length overflow");
    len *= 2;
  }
  return len;
}

}  // namespace localhealth::stats
