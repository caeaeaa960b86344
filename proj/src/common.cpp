#include "localhealth/common.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include <boost/random/beta_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_int_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>

namespace localhealth {

std::string_view to_string(Region region) {
  switch (region) {
    case Region::Northeast: return "Northeast";
    case Region::South: return "South";
    case Region::Midwest: return "Midwest";
    case Region::West: return "West";
  }
  throw ValidationError("invalid region value");
}

std::string_view to_string(Category category) {
  switch (category) {
    case Category::MH: return "MH";
    case Category::FI: return "FI";
    case Category::General: return "General";
  }
  throw ValidationError("invalid category value");
}

Region parse_region(std::string_view text) {
  for (Region r : kAllRegions) {
    if (to_lower_ascii(text) == to_lower_ascii(to_string(r))) return r;
  }
  throw ValidationError("unknown region '" + std::string(text) + "'");
}

Category parse_category(std::string_view text) {
  for (Category c : kAllCategories) {
    if (to_lower_ascii(text) == to_lower_ascii(to_string(c))) return c;
  }
  throw ValidationError("unknown category '" + std::string(text) + "'");
}

void validate(const BlockGroup& bg) {
  if (bg.bg_id.empty()) throw ValidationError("block group with empty bg_id");
  if (bg.adi < 1 || bg.adi > 100) {
    throw ValidationError("block group " + bg.bg_id + ": ADI " + std::to_string(bg.adi) +
                          " outside [1, 100]");
  }
  if (bg.population < 0) throw ValidationError("block group " + bg.bg_id + ": negative population");
  if (!(bg.county_density > 0.0)) {
    throw ValidationError("block group " + bg.bg_id + ": county density must be positive");
  }
  if (static_cast<unsigned>(bg.region) > 3) throw ValidationError("block group " + bg.bg_id + ": bad region");
}

int adi_decile(int adi) {
  if (adi < 1 || adi > 100) throw ValidationError("ADI " + std::to_string(adi) + " outside [1, 100]");
  return (adi - 1) / 10;
}

Stratum stratum_of(const BlockGroup& bg) { return {bg.region, adi_decile(bg.adi)}; }

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t mix_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = splitmix64(seed);
  for (std::uint64_t p : parts) h = splitmix64(h ^ splitmix64(p));
  return h;
}

std::int64_t uniform_int(Engine& rng, std::int64_t lo, std::int64_t hi) {
  return boost::random::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
}

double uniform_real(Engine& rng, double lo, double hi) {
  return boost::random::uniform_real_distribution<double>(lo, hi)(rng);
}

double normal(Engine& rng, double mean, double sigma) {
  if (sigma == 0.0) return mean;
  return boost::random::normal_distribution<double>(mean, sigma)(rng);
}

double beta(Engine& rng, double alpha, double beta_param) {
  return boost::random::beta_distribution<double>(alpha, beta_param)(rng);
}

std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k, Engine& rng) {
  k = std::min(k, n);
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    auto j = static_cast<std::size_t>(uniform_int(rng, static_cast<std::int64_t>(i), static_cast<std::int64_t>(n) - 1));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return pool;
}

double percentile(std::span<const double> values, double q) {
  if (values.empty()) throw ValidationError("percentile of an empty set");
  if (q < 0.0 || q > 1.0) throw ValidationError("percentile rank outside [0, 1]");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double pos = static_cast<double>(sorted.size() - 1) * q;
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  if (frac == 0.0) return sorted[lo];
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

std::vector<std::size_t> allocate_proportional(std::span<const std::size_t> sizes, std::size_t total) {
  const std::size_t population = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
  std::vector<std::size_t> out(sizes.size(), 0);
  if (population == 0 || total == 0) return out;
  total = std::min(total, population);

  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    const double quota = static_cast<double>(sizes[i]) * static_cast<double>(total) / static_cast<double>(population);
    out[i] = std::min(sizes[i], static_cast<std::size_t>(std::floor(quota)));
    assigned += out[i];
    remainders.emplace_back(quota - static_cast<double>(out[i]), i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  // Extra passes only matter when floating point pushed a quota past its group size.
  while (assigned < total) {
    bool progressed = false;
    for (const auto& [rem, i] : remainders) {
      if (assigned == total) break;
      if (out[i] < sizes[i]) {
        ++out[i];
        ++assigned;
        progressed = true;
      }
    }
    if (!progressed) break;
  }
  return out;
}

void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
            next = n;
          }
        }
      });
    }
  }
  if (first_error) std::rethrow_exception(first_error);
}

std::vector<std::string_view> split_whitespace(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; };
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j])) ++j;
    if (j > i) out.push_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = text.find(sep, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(text.substr(start));
      return out;
    }
    out.emplace_back(text.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string trim(std::string_view text) {
  auto b = text.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = text.find_last_not_of(" \t\r\n");
  return std::string(text.substr(b, e - b + 1));
}

std::string to_lower_ascii(std::string_view text) {
  std::string out(text);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

}  // namespace localhealth
