// Readers and writers for the ingestion file formats:
//   tweets    JSON lines  {"tweet_id","text","bg_id","year","category"}
//   outcomes  CSV         bg_id,year,value,unit   (unit: percent | fraction)
//   counts    CSV         bg_id,year,category,count
//   bgs       CSV         bg_id,region,adi,population,lat,lon,county_density
#pragma once

#include <filesystem>
#include <fstream>

#include "localhealth/dataset.hpp"

namespace localhealth::io {

std::vector<TweetRecord> read_tweets(std::istream& in);
void write_tweets(std::ostream& out, std::span<const TweetRecord> tweets);
std::string tweet_to_json_line(const TweetRecord& t);

/// Percent-unit rows are divided by 100.
OutcomeTable read_outcomes(std::istream& in);
/// Always written in fraction units.
void write_outcomes(std::ostream& out, const OutcomeTable& outcomes);

CountTable read_counts(std::istream& in);
void write_counts(std::ostream& out, const CountTable& counts);

std::vector<BlockGroup> read_block_groups(std::istream& in);
void write_block_groups(std::ostream& out, std::span<const BlockGroup> bgs);

/// File-path conveniences; a missing file is a ValidationError.
std::ifstream open_input(const std::filesystem::path& path);
std::ofstream open_output(const std::filesystem::path& path);

struct DatasetFiles {
  std::filesystem::path bgs, tweets, outcomes, counts;

  /// The conventional layout written by `synth` and `ingest`.
  static DatasetFiles in_directory(const std::filesystem::path& dir);
};

BuildResult load_dataset(const DatasetFiles& files, std::vector<int> years = default_years());

/// Writes the four tables restricted to the retained block groups.
void save_dataset(const Dataset& dataset, const std::filesystem::path& dir);

/// Formats a double with "%.17g" (round-trip exact).
std::string format_double(double x);

}  // namespace localhealth::io
