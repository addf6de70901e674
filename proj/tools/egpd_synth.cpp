// Writes synthetic 6-minute station precipitation records. Wet hours draw an
// hourly total from an EGPD whose scale follows the season and the station
// position, then spread it over the ten sub-intervals.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>
#include <vector>

#include <CLI11.hpp>

#include "egpd/data.hpp"
#include "egpd/distribution.hpp"
#include "egpd/random.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Synthetic 6-minute precipitation records"};
  int stations = 8;
  int days = 365;
  std::uint64_t seed = 1;
  std::string start = "2016-01-01T00:00:00";
  double wet = 0.12;
  double missing = 0.0005;
  std::string output;
  app.add_option("--stations", stations, "Number of stations")->check(CLI::Range(2, 10000));
  app.add_option("--days", days, "Number of days")->check(CLI::Range(1, 100000));
  app.add_option("--seed", seed, "Random seed");
  app.add_option("--start", start, "First timestamp (UTC)");
  app.add_option("--wet-probability", wet, "Probability of a wet hour")->check(CLI::Range(0.0, 1.0));
  app.add_option("--missing", missing, "Probability of a missing 6-minute value");
  app.add_option("-o,--output", output, "Output CSV")->required();
  CLI11_PARSE(app, argc, argv);

  try {
    const egpd::EpochSeconds t0 = egpd::parse_time(start, "%Y-%m-%dT%H:%M:%S");
    std::ofstream out(output);
    if (!out) {
      std::cerr << "cannot write " << output << "\n";
      return 1;
    }
    egpd::Rng rng(seed);
    out << "station_id,lon,lat,timestamp,precip\n";
    constexpr double kTwoPi = 2.0 * std::numbers::pi;
    char buf[160];
    for (int s = 0; s < stations; ++s) {
      const double lon = 2.0 + 4.0 * egpd::uniform_open01(rng);
      const double lat = 43.0 + 5.0 * egpd::uniform_open01(rng);
      const double site = 0.3 * (lat - 45.5) / 2.5;
      char id[32];
      std::snprintf(id, sizeof id, "ST%04d", s + 1);
      for (long hour = 0; hour < 24L * days; ++hour) {
        const egpd::EpochSeconds h0 = t0 + 3600 * hour;
        const double season = std::sin(kTwoPi * egpd::day_of_year(h0) / 366.0);
        double total = 0.0;
        if (egpd::uniform_open01(rng) < wet) {
          const double psi = std::exp(0.2 + 0.35 * season + site);
          const egpd::EgpdParams params(0.15, psi, egpd::Carrier::model1(1.2 + 0.4 * season));
          total = egpd::egpd_quantile(egpd::uniform_open01(rng), params);
        }
        double w[10], wsum = 0.0;
        for (double& x : w) wsum += (x = -std::log(egpd::uniform_open01(rng)));
        for (int k = 0; k < 10; ++k) {
          const egpd::EpochSeconds t = h0 + 360 * k;
          const bool gap = egpd::uniform_open01(rng) < missing;
          if (gap) {
            std::snprintf(buf, sizeof buf, "%s,%.4f,%.4f,%s,\n", id, lon, lat,
                          egpd::format_iso8601(t).c_str());
          } else {
            std::snprintf(buf, sizeof buf, "%s,%.4f,%.4f,%s,%.4f\n", id, lon, lat,
                          egpd::format_iso8601(t).c_str(), total * w[k] / wsum);
          }
          out << buf;
        }
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
