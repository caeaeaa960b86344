#include "localhealth/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>

#include <nlohmann/json.hpp>

namespace localhealth::io {

namespace {

using nlohmann::ordered_json;

[[noreturn]] void fail(std::string_view what, std::size_t line, const std::string& msg) {
  throw ValidationError(std::string(what) + " line " + std::to_string(line) + ": " + msg);
}

template <typename T>
T parse_number(std::string_view field, std::string_view what, std::size_t line) {
  std::string text = trim(field);
  T value{};
  if constexpr (std::is_floating_point_v<T>) {
    try {
      std::size_t used = 0;
      value = static_cast<T>(std::stod(text, &used));
      if (used != text.size()) throw std::invalid_argument(text);
    } catch (const std::exception&) {
      fail(what, line, "expected a number, got '" + text + "'");
    }
  } else {
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
      fail(what, line, "expected an integer, got '" + text + "'");
    }
  }
  return value;
}

// Reads a CSV, checks the header and hands back each data row split on commas.
template <typename RowFn>
void read_csv(std::istream& in, std::string_view what, const std::vector<std::string>& header, RowFn&& on_row) {
  std::string line;
  std::size_t lineno = 0;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto fields = split(line, ',');
    if (!saw_header) {
      std::vector<std::string> got;
      for (auto& f : fields) got.push_back(trim(f));
      if (got != header) fail(what, lineno, "unexpected header '" + line + "'");
      saw_header = true;
      continue;
    }
    if (fields.size() != header.size()) {
      fail(what, lineno, "expected " + std::to_string(header.size()) + " fields, got " + std::to_string(fields.size()));
    }
    on_row(fields, lineno);
  }
  if (!saw_header) throw ValidationError(std::string(what) + ": missing header");
}

}  // namespace

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string tweet_to_json_line(const TweetRecord& t) {
  ordered_json j;
  j["tweet_id"] = t.tweet_id;
  j["text"] = t.text;
  j["bg_id"] = t.bg_id;
  j["year"] = t.year;
  j["category"] = to_string(t.category);
  return j.dump();
}

std::vector<TweetRecord> read_tweets(std::istream& in) {
  std::vector<TweetRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      fail("tweet archive", lineno, e.what());
    }
    try {
      TweetRecord t;
      t.tweet_id = j.at("tweet_id").get<std::string>();
      t.text = j.at("text").get<std::string>();
      t.bg_id = j.at("bg_id").get<std::string>();
      t.year = j.at("year").get<int>();
      t.category = parse_category(j.at("category").get<std::string>());
      if (t.text.empty()) fail("tweet archive", lineno, "empty text");
      out.push_back(std::move(t));
    } catch (const nlohmann::json::exception& e) {
      fail("tweet archive", lineno, e.what());
    } catch (const ValidationError& e) {
      fail("tweet archive", lineno, e.what());
    }
  }
  return out;
}

void write_tweets(std::ostream& out, std::span<const TweetRecord> tweets) {
  for (const auto& t : tweets) out << tweet_to_json_line(t) << '\n';
}

OutcomeTable read_outcomes(std::istream& in) {
  OutcomeTable table;
  read_csv(in, "outcome table", {"bg_id", "year", "value", "unit"}, [&](const auto& f, std::size_t line) {
    const std::string bg = trim(f[0]);
    const int year = parse_number<int>(f[1], "outcome table", line);
    double value = parse_number<double>(f[2], "outcome table", line);
    const std::string unit = to_lower_ascii(trim(f[3]));
    if (unit == "percent") {
      value /= 100.0;
    } else if (unit != "fraction") {
      fail("outcome table", line, "unit must be 'percent' or 'fraction', got '" + unit + "'");
    }
    if (!(value >= 0.0 && value <= 1.0)) fail("outcome table", line, "outcome outside [0, 1]");
    if (!table.emplace(std::pair{bg, year}, value).second) fail("outcome table", line, "duplicate (bg_id, year)");
  });
  return table;
}

void write_outcomes(std::ostream& out, const OutcomeTable& outcomes) {
  out << "bg_id,year,value,unit\n";
  for (const auto& [key, value] : outcomes) {
    out << key.first << ',' << key.second << ',' << format_double(value) << ",fraction\n";
  }
}

CountTable read_counts(std::istream& in) {
  CountTable table;
  read_csv(in, "count table", {"bg_id", "year", "category", "count"}, [&](const auto& f, std::size_t line) {
    const std::string bg = trim(f[0]);
    const int year = parse_number<int>(f[1], "count table", line);
    Category c;
    try {
      c = parse_category(trim(f[2]));
    } catch (const ValidationError& e) {
      fail("count table", line, e.what());
    }
    const auto count = parse_number<std::int64_t>(f[3], "count table", line);
    if (count < 0) fail("count table", line, "negative count");
    if (!table.emplace(std::tuple{bg, year, c}, count).second) fail("count table", line, "duplicate key");
  });
  return table;
}

void write_counts(std::ostream& out, const CountTable& counts) {
  out << "bg_id,year,category,count\n";
  for (const auto& [key, count] : counts) {
    out << std::get<0>(key) << ',' << std::get<1>(key) << ',' << to_string(std::get<2>(key)) << ',' << count << '\n';
  }
}

std::vector<BlockGroup> read_block_groups(std::istream& in) {
  std::vector<BlockGroup> out;
  read_csv(in, "block-group table", {"bg_id", "region", "adi", "population", "lat", "lon", "county_density"},
           [&](const auto& f, std::size_t line) {
             BlockGroup bg;
             bg.bg_id = trim(f[0]);
             try {
               bg.region = parse_region(trim(f[1]));
             } catch (const ValidationError& e) {
               fail("block-group table", line, e.what());
             }
             bg.adi = parse_number<int>(f[2], "block-group table", line);
             bg.population = parse_number<std::int64_t>(f[3], "block-group table", line);
             bg.centroid.lat = parse_number<double>(f[4], "block-group table", line);
             bg.centroid.lon = parse_number<double>(f[5], "block-group table", line);
             bg.county_density = parse_number<double>(f[6], "block-group table", line);
             try {
               validate(bg);
             } catch (const ValidationError& e) {
               fail("block-group table", line, e.what());
             }
             out.push_back(std::move(bg));
           });
  return out;
}

void write_block_groups(std::ostream& out, std::span<const BlockGroup> bgs) {
  out << "bg_id,region,adi,population,lat,lon,county_density\n";
  for (const auto& bg : bgs) {
    out << bg.bg_id << ',' << to_string(bg.region) << ',' << bg.adi << ',' << bg.population << ','
        << format_double(bg.centroid.lat) << ',' << format_double(bg.centroid.lon) << ','
        << format_double(bg.county_density) << '\n';
  }
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open input file '" + path.string() + "'");
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open output file '" + path.string() + "'");
  return out;
}

DatasetFiles DatasetFiles::in_directory(const std::filesystem::path& dir) {
  return {dir / "bgs.csv", dir / "tweets.jsonl", dir / "outcomes.csv", dir / "counts.csv"};
}

BuildResult load_dataset(const DatasetFiles& files, std::vector<int> years) {
  auto bgs_in = open_input(files.bgs);
  auto tweets_in = open_input(files.tweets);
  auto outcomes_in = open_input(files.outcomes);
  auto counts_in = open_input(files.counts);
  auto bgs = read_block_groups(bgs_in);
  auto tweets = read_tweets(tweets_in);
  auto outcomes = read_outcomes(outcomes_in);
  auto counts = read_counts(counts_in);
  return build_dataset(tweets, outcomes, counts, bgs, std::move(years));
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& dir) {
  auto files = DatasetFiles::in_directory(dir);
  {
    auto out = open_output(files.bgs);
    write_block_groups(out, dataset.bgs);
  }
  OutcomeTable outcomes;
  CountTable counts;
  {
    auto out = open_output(files.tweets);
    for (const auto& e : dataset.entries) {
      outcomes[{e.bg_id, e.year}] = e.g;
      for (Category c : kAllCategories) {
        counts[{e.bg_id, e.year, c}] = e.count(c);
        write_tweets(out, e.cell(c));
      }
    }
  }
  {
    auto out = open_output(files.outcomes);
    write_outcomes(out, outcomes);
  }
  {
    auto out = open_output(files.counts);
    write_counts(out, counts);
  }
}

}  // namespace localhealth::io
