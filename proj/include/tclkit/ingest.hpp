#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tclkit/core.hpp"

namespace tclkit {

enum class WeatherClass { Severe, Normal };

std::string_view to_string(WeatherClass weather) noexcept;
WeatherClass parse_weather(std::string_view name);

struct OutageEvent {
  std::string city_id;
  std::string start_utc;
  /// Customers without power during each hour of the event.
  std::vector<std::int64_t> hourly_out_counts;
  double peak_wind = 0.0;               // m/s
  double max_precipitable_water = 0.0;  // kg/m^2
};

struct CityRecord {
  std::string city_id;
  std::int64_t customer_count = 1;
  /// Aligned with CityTable::attribute_names.
  std::vector<double> attributes;
};

struct CityTable {
  std::vector<std::string> attribute_names;
  std::vector<CityRecord> cities;
};

inline constexpr double kSevereWindMs = 19.0;
inline constexpr double kSeverePrecipitableWater = 16.0;

/// Severe iff peak wind > 19 m/s or precipitable water > 16 kg/m^2.
WeatherClass classify_weather(const OutageEvent& event);

struct SaidiFilter {
  /// An event counts only if its smallest hourly count exceeds rate * M.
  double min_outage_rate = 0.001;
  /// ... and it lasts strictly longer than this many hours.
  std::size_t min_duration_hours = 2;
};

bool passes_filter(const OutageEvent& event, std::int64_t customers, const SaidiFilter& filter);

/// Outage minutes per customer: 60 * (sum of hourly counts over the
/// events passing the filter) / M.
double saidi(std::span<const OutageEvent> events, std::int64_t customers,
             const SaidiFilter& filter = {});

using SaidiTable = std::map<std::pair<std::string, WeatherClass>, double>;

/// SAIDI per (city, weather class) for every city in the table; cities
/// without qualifying events get 0. Events for unknown cities are errors.
SaidiTable saidi_by_city(const CityTable& cities, std::span<const OutageEvent> events,
                         const SaidiFilter& filter = {});

struct AssembledData {
  std::map<WeatherClass, ObservationSet> sets;
  std::vector<std::string> covariate_names;
  double threshold = 0.0;
  std::vector<std::string> warnings;
};

/// One observation set per weather class over all cities: treatment is the
/// protected attribute binarized at `percentile` (pooled over cities),
/// outcome is the class SAIDI, covariates are the remaining attributes
/// standardized within the class. Constant columns are dropped with a
/// warning.
AssembledData assemble_observations(const CityTable& cities, const SaidiTable& saidi_table,
                                    std::string_view protected_attribute, double percentile);

/// The requested class as target, the other as source.
DomainPair weather_domains(const AssembledData& data, WeatherClass target);

CityTable read_cities_csv(const std::filesystem::path& path);
std::vector<OutageEvent> read_events_csv(const std::filesystem::path& path);
ObservationSet read_observations_csv(const std::filesystem::path& path);

CityTable parse_cities_csv(std::istream& in, std::string_view name);
std::vector<OutageEvent> parse_events_csv(std::istream& in, std::string_view name);
ObservationSet parse_observations_csv(std::istream& in, std::string_view name);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

/// Header treatment,outcome,x_1..x_d. Each line of `preamble` is written
/// first as a '#' comment.
void write_observations_csv(std::ostream& out, const ObservationSet& obs, std::string_view preamble = {});

}  // namespace tclkit
