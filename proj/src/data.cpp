#include "egpd/data.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstring>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <limits>
#include <locale>
#include <map>
#include <set>
#include <sstream>

#include "egpd/error.hpp"
#include "egpd/random.hpp"

namespace egpd {

namespace {

constexpr std::size_t kSampleLines = 5;
constexpr char kCacheMagic[8] = {'E', 'G', 'P', 'D', 'O', 'B', 'S', '\0'};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string_view> split(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(delim, start);
    out.push_back(trim(line.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

bool parse_number(std::string_view s, double& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool is_missing(std::string_view s) {
  return s.empty() || s == "NA" || s == "NaN" || s == "nan" || s == "NULL";
}

std::string format_number(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

bool all_digits(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

std::size_t resolve_column(const std::string& key, const std::vector<std::string_view>& header,
                           const std::string& source) {
  if (all_digits(key)) return static_cast<std::size_t>(std::stoul(key));
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == key) return i;
  }
  throw DataError(source + ": no column named '" + key + "' in the header");
}

std::tm utc(EpochSeconds t) {
  const std::time_t tt = static_cast<std::time_t>(t);
  std::tm tm{};
  if (gmtime_r(&tt, &tm) == nullptr) throw DataError("timestamp out of range");
  return tm;
}

Observation to_observation(std::string station, double lon, double lat, EpochSeconds t,
                           double precip) {
  return {std::move(station), lon, lat, t, day_of_year(t), precip};
}

template <typename T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& in, const std::string& source) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw DataError(source + ": truncated cache");
  return v;
}

}  // namespace

double day_of_year(EpochSeconds t) {
  const std::tm tm = utc(t);
  const double seconds = tm.tm_hour * 3600.0 + tm.tm_min * 60.0 + tm.tm_sec;
  return tm.tm_yday + seconds / 86400.0;
}

int month_of(EpochSeconds t) { return utc(t).tm_mon + 1; }

std::string format_iso8601(EpochSeconds t) {
  const std::tm tm = utc(t);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

EpochSeconds parse_time(const std::string& text, const std::string& format) {
  if (format == "epoch") {
    EpochSeconds t = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), t);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
      throw DataError("bad epoch timestamp '" + text + "'");
    }
    return t;
  }
  std::tm tm{};
  std::istringstream is(text);
  is.imbue(std::locale::classic());
  is >> std::get_time(&tm, format.c_str());
  if (is.fail()) throw DataError("timestamp '" + text + "' does not match format " + format);
  std::string rest;
  std::getline(is, rest);
  if (!(rest.empty() || rest == "Z")) {
    throw DataError("trailing characters in timestamp '" + text + "'");
  }
  return static_cast<EpochSeconds>(timegm(&tm));
}

IngestResult ingest_stream(std::istream& in, const CsvFormat& format, const std::string& source) {
  IngestResult result;
  std::string line;
  std::size_t lineno = 0;
  std::array<std::size_t, 5> col{};
  const std::array<std::string, 5> keys{format.station, format.lon, format.lat, format.time,
                                        format.precip};
  bool have_columns = false;
  if (!format.header) {
    for (std::size_t k = 0; k < keys.size(); ++k) {
      if (!all_digits(keys[k])) {
        throw ConfigError("column '" + keys[k] + "' must be an index when the input has no header");
      }
      col[k] = static_cast<std::size_t>(std::stoul(keys[k]));
    }
    have_columns = true;
  }
  auto bad = [&](const std::string& why) {
    ++result.report.malformed;
    if (result.report.samples.size() < kSampleLines) {
      result.report.samples.push_back(source + ":" + std::to_string(lineno) + ": " + why + ": " + line);
    }
  };

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto fields = split(line, format.delimiter);
    if (!have_columns) {
      for (std::size_t k = 0; k < keys.size(); ++k) col[k] = resolve_column(keys[k], fields, source);
      have_columns = true;
      continue;
    }
    ++result.report.rows;
    const std::size_t needed = *std::max_element(col.begin(), col.end()) + 1;
    if (fields.size() < needed) {
      bad("too few fields");
      continue;
    }
    RawRecord r;
    r.station_id = std::string(fields[col[0]]);
    if (r.station_id.empty()) {
      bad("empty station id");
      continue;
    }
    if (!parse_number(fields[col[1]], r.lon) || !parse_number(fields[col[2]], r.lat) ||
        !std::isfinite(r.lon) || !std::isfinite(r.lat)) {
      bad("bad coordinates");
      continue;
    }
    try {
      r.time = parse_time(std::string(fields[col[3]]), format.time_format);
    } catch (const DataError&) {
      bad("bad timestamp");
      continue;
    }
    const std::string_view p = fields[col[4]];
    if (is_missing(p)) {
      r.precip = std::numeric_limits<double>::quiet_NaN();
      ++result.report.missing;
    } else if (!parse_number(p, r.precip) || std::isinf(r.precip) || r.precip < 0.0) {
      bad("bad precipitation");
      continue;
    } else if (std::isnan(r.precip)) {
      ++result.report.missing;
    }
    result.records.push_back(std::move(r));
  }

  const auto& rep = result.report;
  if (rep.rows > 0 &&
      static_cast<double>(rep.malformed) > format.bad_row_tolerance * static_cast<double>(rep.rows)) {
    std::ostringstream os;
    os << source << ": " << rep.malformed << " of " << rep.rows
       << " rows are malformed, above the tolerance of " << format.bad_row_tolerance;
    for (const auto& s : rep.samples) os << "\n  " << s;
    throw DataError(os.str());
  }
  return result;
}

IngestResult ingest(const std::vector<std::filesystem::path>& paths, const CsvFormat& format) {
  IngestResult all;
  for (const auto& path : paths) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open input file " + path.string());
    IngestResult part = ingest_stream(in, format, path.string());
    all.records.insert(all.records.end(), std::make_move_iterator(part.records.begin()),
                       std::make_move_iterator(part.records.end()));
    all.report.rows += part.report.rows;
    all.report.malformed += part.report.malformed;
    all.report.missing += part.report.missing;
    for (auto& s : part.report.samples) {
      if (all.report.samples.size() < kSampleLines) all.report.samples.push_back(std::move(s));
    }
  }
  return all;
}

std::vector<HourlyRecord> aggregate_hourly(std::vector<RawRecord> records, int resolution_minutes,
                                           AggregationReport* report) {
  if (resolution_minutes <= 0 || 60 % resolution_minutes != 0) {
    throw ConfigError("resolution_minutes must divide 60");
  }
  const EpochSeconds slot = 60 * static_cast<EpochSeconds>(resolution_minutes);
  const int slots = 60 / resolution_minutes;
  std::stable_sort(records.begin(), records.end(), [](const RawRecord& a, const RawRecord& b) {
    return a.station_id != b.station_id ? a.station_id < b.station_id : a.time < b.time;
  });

  AggregationReport rep;
  std::vector<HourlyRecord> out;
  std::size_t i = 0;
  while (i < records.size()) {
    const RawRecord& first = records[i];
    const EpochSeconds hour = first.time - ((first.time % 3600) + 3600) % 3600;
    double sum = 0.0;
    int present = 0;
    bool missing = false;
    EpochSeconds last = std::numeric_limits<EpochSeconds>::min();
    std::size_t j = i;
    for (; j < records.size() && records[j].station_id == first.station_id &&
           records[j].time < hour + 3600;
         ++j) {
      const RawRecord& r = records[j];
      if (r.time == last) {
        throw DataError("duplicate timestamp " + format_iso8601(r.time) + " for station " +
                        r.station_id);
      }
      last = r.time;
      if ((r.time - hour) % slot != 0) continue;  // off-grid reading
      ++present;
      if (std::isnan(r.precip)) {
        missing = true;
      } else {
        sum += r.precip;
      }
    }
    if (present == slots && !missing) {
      out.push_back({first.station_id, first.lon, first.lat, hour, sum});
      ++rep.complete;
    } else {
      ++rep.incomplete;
    }
    i = j;
  }
  if (report) *report = rep;
  return out;
}

std::vector<std::string> ObservationTable::stations() const {
  std::set<std::string> s;
  for (const auto& r : rows) s.insert(r.station_id);
  return {s.begin(), s.end()};
}

ModelFrame ObservationTable::frame() const {
  std::vector<double> y, lon, lat, doy, month;
  for (const auto& r : rows) {
    y.push_back(r.precip);
    lon.push_back(r.lon);
    lat.push_back(r.lat);
    doy.push_back(r.day_of_year);
    month.push_back(month_of(r.time));
  }
  ModelFrame f(std::move(y));
  f.add_covariate("lon", std::move(lon));
  f.add_covariate("lat", std::move(lat));
  f.add_covariate("day_of_year", std::move(doy));
  f.add_covariate("month", std::move(month));
  return f;
}

namespace {

bool keep_hour(EpochSeconds hour, int stride) {
  const EpochSeconds h = hour / 3600 - (hour % 3600 < 0 ? 1 : 0);
  return ((h % stride) + stride) % stride == 0;
}

void check_options(const PrepareOptions& options) {
  if (!(options.censor >= 0.0)) throw ConfigError("censor threshold must be >= 0");
  if (options.stride < 1) throw ConfigError("stride must be >= 1");
}

}  // namespace

ObservationTable prepare(const std::vector<HourlyRecord>& hourly, const PrepareOptions& options,
                         PrepareReport* report) {
  check_options(options);
  PrepareReport rep;
  rep.hourly = hourly.size();
  ObservationTable out;
  for (const auto& h : hourly) {
    if (!(h.precip > 0.0)) continue;
    ++rep.positive;
    if (h.precip < options.censor) continue;
    ++rep.censored;
    if (!keep_hour(h.hour, options.stride)) continue;
    out.rows.push_back(to_observation(h.station_id, h.lon, h.lat, h.hour, h.precip));
  }
  rep.retained = out.rows.size();
  if (report) *report = rep;
  return out;
}

ObservationTable prepare(const ObservationTable& table, const PrepareOptions& options) {
  std::vector<HourlyRecord> hourly;
  hourly.reserve(table.size());
  for (const auto& r : table.rows) hourly.push_back({r.station_id, r.lon, r.lat, r.time, r.precip});
  return prepare(hourly, options);
}

std::pair<ObservationTable, ObservationTable> split_stations(const ObservationTable& table,
                                                             double train_fraction,
                                                             std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("train fraction must lie in (0, 1)");
  }
  std::vector<std::string> stations = table.stations();
  if (stations.size() < 2) throw DataError("station split needs at least two stations");
  Rng rng(seed);
  for (std::size_t i = stations.size() - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(uniform_open01(rng) * static_cast<double>(i + 1));
    std::swap(stations[i], stations[std::min(j, i)]);
  }
  const auto n = static_cast<double>(stations.size());
  auto n_train = static_cast<std::size_t>(std::lround(train_fraction * n));
  n_train = std::clamp<std::size_t>(n_train, 1, stations.size() - 1);
  const std::set<std::string> train_ids(stations.begin(),
                                        stations.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::pair<ObservationTable, ObservationTable> out;
  for (const auto& r : table.rows) {
    (train_ids.contains(r.station_id) ? out.first : out.second).rows.push_back(r);
  }
  return out;
}

void write_canonical_csv(const ObservationTable& table, std::ostream& out) {
  out << "station_id,lon,lat,timestamp,day_of_year,precip_mm\n";
  for (const auto& r : table.rows) {
    out << r.station_id << ',' << format_number(r.lon) << ',' << format_number(r.lat) << ','
        << format_iso8601(r.time) << ',' << format_number(r.day_of_year) << ','
        << format_number(r.precip) << '\n';
  }
}

void write_canonical_csv(const ObservationTable& table, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  write_canonical_csv(table, out);
}

ObservationTable read_canonical_csv(const std::filesystem::path& path) {
  CsvFormat format;
  format.precip = "precip_mm";
  format.bad_row_tolerance = 0.0;
  const IngestResult raw = ingest({path}, format);
  ObservationTable out;
  for (const auto& r : raw.records) {
    if (std::isnan(r.precip)) throw DataError(path.string() + ": missing precip_mm value");
    out.rows.push_back(to_observation(r.station_id, r.lon, r.lat, r.time, r.precip));
  }
  return out;
}

ObservationTable read_table(const std::filesystem::path& path) {
  return path.extension() == ".bin" ? read_cache(path) : read_canonical_csv(path);
}

ModelFrame read_frame_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open input file " + path.string());
  std::string line;
  std::vector<std::string> names;
  std::vector<std::vector<std::string>> cells;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto fields = split(line, ',');
    if (names.empty()) {
      for (auto f : fields) names.emplace_back(f);
      cells.resize(names.size());
      continue;
    }
    if (fields.size() != names.size()) {
      throw DataError(path.string() + ": row has " + std::to_string(fields.size()) +
                      " fields, header has " + std::to_string(names.size()));
    }
    for (std::size_t c = 0; c < fields.size(); ++c) cells[c].emplace_back(fields[c]);
  }
  ModelFrame frame;
  bool has_doy = false, has_month = false;
  for (std::size_t c = 0; c < names.size(); ++c) {
    std::vector<double> values;
    bool numeric = true;
    for (const auto& cell : cells[c]) {
      double v = std::numeric_limits<double>::quiet_NaN();
      if (!is_missing(cell) && !parse_number(cell, v)) {
        numeric = false;
        break;
      }
      values.push_back(v);
    }
    if (!numeric) continue;
    has_doy = has_doy || names[c] == "day_of_year";
    has_month = has_month || names[c] == "month";
    frame.add_covariate(names[c], std::move(values));
  }
  const auto ts = std::find(names.begin(), names.end(), "timestamp");
  if (ts != names.end() && !(has_doy && has_month)) {
    const auto& col = cells[static_cast<std::size_t>(ts - names.begin())];
    std::vector<double> doy, month;
    for (const auto& cell : col) {
      const EpochSeconds t = parse_time(cell, "%Y-%m-%dT%H:%M:%S");
      doy.push_back(day_of_year(t));
      month.push_back(month_of(t));
    }
    if (!has_doy) frame.add_covariate("day_of_year", std::move(doy));
    if (!has_month) frame.add_covariate("month", std::move(month));
  }
  return frame;
}

void write_cache(const ObservationTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(kCacheMagic, sizeof kCacheMagic);
  put(out, kCacheVersion);
  put(out, static_cast<std::uint64_t>(table.size()));
  for (const auto& r : table.rows) {
    put(out, static_cast<std::uint32_t>(r.station_id.size()));
    out.write(r.station_id.data(), static_cast<std::streamsize>(r.station_id.size()));
    put(out, r.lon);
    put(out, r.lat);
    put(out, r.time);
    put(out, r.day_of_year);
    put(out, r.precip);
  }
}

ObservationTable read_cache(const std::filesystem::path& path) {
  const std::string source = path.string();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + source);
  char magic[sizeof kCacheMagic];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kCacheMagic, sizeof magic) != 0) {
    throw DataError(source + ": not an observation cache");
  }
  const auto version = get<std::uint32_t>(in, source);
  if (version != kCacheVersion) {
    throw DataError(source + ": cache version " + std::to_string(version) + " is not supported");
  }
  const auto n = get<std::uint64_t>(in, source);
  ObservationTable out;
  for (std::uint64_t i = 0; i < n; ++i) {
    Observation r;
    const auto len = get<std::uint32_t>(in, source);
    r.station_id.resize(len);
    if (!in.read(r.station_id.data(), len)) throw DataError(source + ": truncated cache");
    r.lon = get<double>(in, source);
    r.lat = get<double>(in, source);
    r.time = get<EpochSeconds>(in, source);
    r.day_of_year = get<double>(in, source);
    r.precip = get<double>(in, source);
    out.rows.push_back(std::move(r));
  }
  return out;
}

}  // namespace egpd
