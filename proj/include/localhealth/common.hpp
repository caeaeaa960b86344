// Shared domain types and small utilities used across the pipeline.
#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace localhealth {

/// Base class for pipeline failures that are not the caller's fault
/// (I/O, divergence, transport).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input: schema violations, broken preconditions, malformed files.
class ValidationError : public Error {
 public:
  using Error::Error;
};

using Diagnostics = std::vector<std::string>;

enum class Region : std::uint8_t { Northeast = 0, South = 1, Midwest = 2, West = 3 };
enum class Category : std::uint8_t { MH = 0, FI = 1, General = 2 };

inline constexpr std::array<Region, 4> kAllRegions{Region::Northeast, Region::South, Region::Midwest,
                                                   Region::West};
inline constexpr std::array<Category, 3> kAllCategories{Category::MH, Category::FI, Category::General};
inline constexpr int kNumStrata = 40;

std::string_view to_string(Region region);
std::string_view to_string(Category category);
Region parse_region(std::string_view text);
Category parse_category(std::string_view text);

inline constexpr std::size_t index_of(Category c) { return static_cast<std::size_t>(c); }

struct LatLon {
  double lat = 0.0;
  double lon = 0.0;
};

struct BlockGroup {
  std::string bg_id;
  Region region = Region::Northeast;
  int adi = 1;
  std::int64_t population = 0;
  LatLon centroid;
  double county_density = 1.0;  // persons per square mile
};

/// Throws ValidationError when the block group violates its invariants.
void validate(const BlockGroup& bg);

struct TweetRecord {
  std::string tweet_id;
  std::string text;
  std::string bg_id;
  int year = 0;
  Category category = Category::General;
};

/// Region x ADI decile. Decile i covers ADI in [10i+1, 10(i+1)].
struct Stratum {
  Region region = Region::Northeast;
  int adi_bin = 0;

  auto operator<=>(const Stratum&) const = default;
};

int adi_decile(int adi);
Stratum stratum_of(const BlockGroup& bg);
inline int stratum_index(Stratum s) { return static_cast<int>(s.region) * 10 + s.adi_bin; }

// ---------------------------------------------------------------------------
// Seeding. The engine is std::mt19937_64 (its output sequence is fixed by the
// standard); distributions come from Boost.Random so that draws are identical
// across standard libraries.

using Engine = std::mt19937_64;

std::uint64_t fnv1a64(std::string_view bytes);
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t mix_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> parts);

/// Uniform integer in [lo, hi].
std::int64_t uniform_int(Engine& rng, std::int64_t lo, std::int64_t hi);
/// Uniform real in [lo, hi).
double uniform_real(Engine& rng, double lo, double hi);
double normal(Engine& rng, double mean, double sigma);
double beta(Engine& rng, double alpha, double beta);

/// Fisher-Yates shuffle driven by uniform_int.
template <typename T>
void shuffle(std::vector<T>& items, Engine& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    auto j = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(i) - 1));
    std::swap(items[i - 1], items[j]);
  }
}

/// First k positions of a partial Fisher-Yates pass over 0..n-1, in draw order.
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k, Engine& rng);

// ---------------------------------------------------------------------------

/// Linear interpolation between closest ranks, position (n-1)*q.
double percentile(std::span<const double> values, double q);

/// Largest-remainder apportionment of `total` across groups proportional to
/// `sizes`. Ties on the remainder go to the earlier group. Never allocates
/// more than a group's size.
std::vector<std::size_t> allocate_proportional(std::span<const std::size_t> sizes, std::size_t total);

/// Runs fn(i) for i in [0, n) on up to `workers` threads (0 = hardware
/// concurrency). The first exception thrown is rethrown after all workers join.
void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn);

std::vector<std::string_view> split_whitespace(std::string_view text);
std::vector<std::string> split(std::string_view text, char sep);
std::string trim(std::string_view text);
std::string to_lower_ascii(std::string_view text);

}  // namespace localhealth
