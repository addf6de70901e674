#pragma once

// Station precipitation records: CSV ingestion, clock-hour aggregation,
// censoring and subsampling, station split and canonical storage.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "egpd/frame.hpp"

namespace egpd {

// Seconds since 1970-01-01T00:00:00Z.
using EpochSeconds = std::int64_t;

struct RawRecord {
  std::string station_id;
  double lon = 0.0;
  double lat = 0.0;
  EpochSeconds time = 0;
  double precip = 0.0;  // NaN when the value is missing
};

// Input CSV layout. Columns are given by header name or by 0-based index
// (a string of digits). time_format follows std::get_time; "epoch" reads
// integer seconds.
struct CsvFormat {
  char delimiter = ',';
  bool header = true;
  std::string station = "station_id";
  std::string lon = "lon";
  std::string lat = "lat";
  std::string time = "timestamp";
  std::string precip = "precip";
  std::string time_format = "%Y-%m-%dT%H:%M:%S";
  double bad_row_tolerance = 0.001;
};

struct IngestReport {
  std::size_t rows = 0;
  std::size_t malformed = 0;
  std::size_t missing = 0;
  std::vector<std::string> samples;  // first few malformed lines
};

struct IngestResult {
  std::vector<RawRecord> records;
  IngestReport report;
};

// DataError when a file cannot be opened, the header lacks a mapped column or
// the malformed fraction exceeds the tolerance.
IngestResult ingest(const std::vector<std::filesystem::path>& paths, const CsvFormat& format);
IngestResult ingest_stream(std::istream& in, const CsvFormat& format, const std::string& source);

struct HourlyRecord {
  std::string station_id;
  double lon = 0.0;
  double lat = 0.0;
  EpochSeconds hour = 0;  // start of the clock hour
  double precip = 0.0;
};

struct AggregationReport {
  std::size_t complete = 0;
  std::size_t incomplete = 0;
};

// Sums records into clock hours per station. Hours with a missing or
// non-finite sub-interval are dropped. DataError on duplicate timestamps.
std::vector<HourlyRecord> aggregate_hourly(std::vector<RawRecord> records,
                                           int resolution_minutes = 6,
                                           AggregationReport* report = nullptr);

struct Observation {
  std::string station_id;
  double lon = 0.0;
  double lat = 0.0;
  EpochSeconds time = 0;
  double day_of_year = 0.0;
  double precip = 0.0;
};

struct ObservationTable {
  std::vector<Observation> rows;

  std::size_t size() const { return rows.size(); }
  bool empty() const { return rows.empty(); }
  std::vector<std::string> stations() const;
  // Response precip; covariates lon, lat, day_of_year and month.
  ModelFrame frame() const;
};

struct PrepareOptions {
  double censor = 0.5;
  int stride = 3;
};

struct PrepareReport {
  std::size_t hourly = 0;
  std::size_t positive = 0;
  std::size_t censored = 0;  // remaining after the threshold
  std::size_t retained = 0;  // remaining after the stride
};

ObservationTable prepare(const std::vector<HourlyRecord>& hourly, const PrepareOptions& options = {},
                         PrepareReport* report = nullptr);
// Re-applies the rules to an already prepared table.
ObservationTable prepare(const ObservationTable& table, const PrepareOptions& options = {});

// Station-level random partition; DataError with fewer than two stations.
std::pair<ObservationTable, ObservationTable> split_stations(const ObservationTable& table,
                                                             double train_fraction = 0.6,
                                                             std::uint64_t seed = 1);

// Fractional 0-based day of year in [0, 366).
double day_of_year(EpochSeconds t);
int month_of(EpochSeconds t);
std::string format_iso8601(EpochSeconds t);
// DataError when text does not match the format.
EpochSeconds parse_time(const std::string& text, const std::string& format);

// Canonical CSV: station_id,lon,lat,timestamp,day_of_year,precip_mm.
void write_canonical_csv(const ObservationTable& table, std::ostream& out);
void write_canonical_csv(const ObservationTable& table, const std::filesystem::path& path);
ObservationTable read_canonical_csv(const std::filesystem::path& path);

// Canonical CSV or binary cache, chosen by the ".bin" extension.
ObservationTable read_table(const std::filesystem::path& path);

// Covariate table for prediction: every numeric column becomes a covariate
// of the same name. A "timestamp" column adds day_of_year and month when
// those columns are absent.
ModelFrame read_frame_csv(const std::filesystem::path& path);

// Binary cache with a magic/version header.
inline constexpr std::uint32_t kCacheVersion = 1;
void write_cache(const ObservationTable& table, const std::filesystem::path& path);
ObservationTable read_cache(const std::filesystem::path& path);

}  // namespace egpd
