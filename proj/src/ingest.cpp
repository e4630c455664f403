#include "tclkit/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

namespace tclkit {

std::string_view to_string(WeatherClass weather) noexcept {
  return weather == WeatherClass::Severe ? "severe" : "normal";
}

WeatherClass parse_weather(std::string_view name) {
  if (name == "severe") return WeatherClass::Severe;
  if (name == "normal") return WeatherClass::Normal;
  throw Error(ErrorKind::Usage, "unknown weather class '" + std::string(name) + "' (expected severe or normal)");
}

WeatherClass classify_weather(const OutageEvent& event) {
  if (!std::isfinite(event.peak_wind) || !std::isfinite(event.max_precipitable_water)) {
    throw Error(ErrorKind::InvalidInput, "non-finite weather values for event in city " + event.city_id);
  }
  return event.peak_wind > kSevereWindMs || event.max_precipitable_water > kSeverePrecipitableWater
             ? WeatherClass::Severe
             : WeatherClass::Normal;
}

bool passes_filter(const OutageEvent& event, std::int64_t customers, const SaidiFilter& filter) {
  if (event.hourly_out_counts.size() <= filter.min_duration_hours) return false;
  const auto smallest = *std::min_element(event.hourly_out_counts.begin(), event.hourly_out_counts.end());
  return static_cast<double>(smallest) > filter.min_outage_rate * static_cast<double>(customers);
}

double saidi(std::span<const OutageEvent> events, std::int64_t customers, const SaidiFilter& filter) {
  if (customers < 1) throw Error(ErrorKind::InvalidInput, "customer count must be at least 1");
  double total = 0.0;
  for (const auto& event : events) {
    if (event.hourly_out_counts.empty()) {
      throw Error(ErrorKind::InvalidInput, "event in city " + event.city_id + " has no hourly counts");
    }
    for (auto c : event.hourly_out_counts) {
      if (c < 0) throw Error(ErrorKind::InvalidInput, "negative hourly count in city " + event.city_id);
    }
    if (!passes_filter(event, customers, filter)) continue;
    for (auto c : event.hourly_out_counts) total += static_cast<double>(c);
  }
  return total / static_cast<double>(customers) * 60.0;
}

SaidiTable saidi_by_city(const CityTable& cities, std::span<const OutageEvent> events,
                         const SaidiFilter& filter) {
  std::map<std::string, std::map<WeatherClass, std::vector<OutageEvent>>> grouped;
  for (const auto& city : cities.cities) grouped[city.city_id];
  for (const auto& event : events) {
    auto it = grouped.find(event.city_id);
    if (it == grouped.end()) throw Error(ErrorKind::InvalidInput, "event for unknown city '" + event.city_id + "'");
    it->second[classify_weather(event)].push_back(event);
  }
  SaidiTable table;
  for (const auto& city : cities.cities) {
    auto& by_class = grouped[city.city_id];
    for (auto weather : {WeatherClass::Severe, WeatherClass::Normal}) {
      table[{city.city_id, weather}] = saidi(by_class[weather], city.customer_count, filter);
    }
  }
  return table;
}

AssembledData assemble_observations(const CityTable& cities, const SaidiTable& saidi_table,
                                    std::string_view protected_attribute, double percentile) {
  const auto& names = cities.attribute_names;
  const auto found = std::find(names.begin(), names.end(), protected_attribute);
  if (found == names.end()) {
    throw Error(ErrorKind::InvalidInput, "protected attribute '" + std::string(protected_attribute) +
                                             "' not found in city records");
  }
  const auto protected_index = static_cast<std::size_t>(found - names.begin());
  const std::size_t n = cities.cities.size();
  if (n == 0) throw Error(ErrorKind::InvalidInput, "no city records");
  for (const auto& city : cities.cities) {
    if (city.attributes.size() != names.size()) {
      throw Error(ErrorKind::DimensionMismatch, "city " + city.city_id + " lacks some attributes");
    }
  }

  AssembledData data;
  std::vector<double> protected_values;
  for (const auto& city : cities.cities) protected_values.push_back(city.attributes[protected_index]);
  const auto binarized = binarize_at_percentile(protected_values, percentile);
  data.threshold = binarized.threshold;

  // Covariates do not depend on the class, so standardizing once covers
  // both classes' rows.
  std::vector<std::size_t> kept;
  for (std::size_t j = 0; j < names.size(); ++j) {
    if (j == protected_index) continue;
    const double first = cities.cities.front().attributes[j];
    const bool constant = std::all_of(cities.cities.begin(), cities.cities.end(),
                                      [&](const CityRecord& c) { return c.attributes[j] == first; });
    if (constant) {
      data.warnings.push_back("dropped constant covariate '" + names[j] + "'");
      continue;
    }
    kept.push_back(j);
    data.covariate_names.push_back(names[j]);
  }
  Matrix covariates(n, kept.size());
  for (std::size_t k = 0; k < kept.size(); ++k) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += cities.cities[i].attributes[kept[k]];
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double c = cities.cities[i].attributes[kept[k]] - mean;
      ss += c * c;
    }
    const double sd = std::sqrt(ss / static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) covariates(i, k) = (cities.cities[i].attributes[kept[k]] - mean) / sd;
  }

  for (auto weather : {WeatherClass::Severe, WeatherClass::Normal}) {
    ObservationSet obs;
    obs.covariates = covariates;
    for (std::size_t i = 0; i < n; ++i) {
      obs.treatment.push_back(binarized.indicator[i]);
      const auto it = saidi_table.find({cities.cities[i].city_id, weather});
      obs.outcome.push_back(it == saidi_table.end() ? 0.0 : it->second);
    }
    data.sets.emplace(weather, std::move(obs));
  }
  return data;
}

DomainPair weather_domains(const AssembledData& data, WeatherClass target) {
  const auto other = target == WeatherClass::Severe ? WeatherClass::Normal : WeatherClass::Severe;
  return DomainPair{data.sets.at(other), data.sets.at(target)};
}

namespace {

class CsvReader {
 public:
  CsvReader(std::istream& in, std::string_view name) : in_(in), name_(name) {}

  // Next data line split on commas; skips blank and '#' lines.
  bool next(std::vector<std::string>& fields) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_number_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line.front() == '#') continue;
      fields.clear();
      std::size_t start = 0;
      while (true) {
        const auto comma = line.find(',', start);
        fields.push_back(trim(line.substr(start, comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
      }
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& message) const {
    throw Error(ErrorKind::Schema, std::string(name_) + ":" + std::to_string(line_number_) + ": " + message);
  }

  double number(const std::string& field, std::string_view column) const {
    double value = 0.0;
    const auto* end = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(field.data(), end, value);
    if (ec != std::errc() || ptr != end || field.empty() || !std::isfinite(value)) {
      fail("column " + std::string(column) + ": '" + field + "' is not a finite number");
    }
    return value;
  }

  std::int64_t integer(const std::string& field, std::string_view column) const {
    std::int64_t value = 0;
    const auto* end = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(field.data(), end, value);
    if (ec != std::errc() || ptr != end || field.empty()) {
      fail("column " + std::string(column) + ": '" + field + "' is not an integer");
    }
    return value;
  }

  void expect_header(const std::vector<std::string>& fields, const std::vector<std::string>& expected) const {
    if (fields.size() < expected.size() || !std::equal(expected.begin(), expected.end(), fields.begin())) {
      std::string joined;
      for (const auto& e : expected) joined += (joined.empty() ? "" : ",") + e;
      fail("header must start with " + joined);
    }
  }

 private:
  static std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t");
    return s.substr(first, last - first + 1);
  }

  std::istream& in_;
  std::string_view name_;
  std::size_t line_number_ = 0;
};

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return in;
}

}  // namespace

CityTable parse_cities_csv(std::istream& in, std::string_view name) {
  CsvReader reader(in, name);
  std::vector<std::string> fields;
  if (!reader.next(fields)) reader.fail("missing header");
  reader.expect_header(fields, {"city_id", "customer_count"});
  CityTable table;
  table.attribute_names.assign(fields.begin() + 2, fields.end());
  std::set<std::string> seen;
  while (reader.next(fields)) {
    if (fields.size() != table.attribute_names.size() + 2) {
      reader.fail("expected " + std::to_string(table.attribute_names.size() + 2) + " fields, got " +
                  std::to_string(fields.size()));
    }
    CityRecord city;
    city.city_id = fields[0];
    if (city.city_id.empty()) reader.fail("empty city_id");
    if (!seen.insert(city.city_id).second) reader.fail("duplicate city_id '" + city.city_id + "'");
    city.customer_count = reader.integer(fields[1], "customer_count");
    if (city.customer_count < 1) reader.fail("customer_count must be at least 1");
    for (std::size_t j = 0; j < table.attribute_names.size(); ++j) {
      city.attributes.push_back(reader.number(fields[j + 2], table.attribute_names[j]));
    }
    table.cities.push_back(std::move(city));
  }
  return table;
}

std::vector<OutageEvent> parse_events_csv(std::istream& in, std::string_view name) {
  CsvReader reader(in, name);
  std::vector<std::string> fields;
  if (!reader.next(fields)) reader.fail("missing header");
  reader.expect_header(fields, {"city_id", "start_utc", "peak_wind_ms", "max_pw_kgm2", "hourly_counts"});
  std::vector<OutageEvent> events;
  while (reader.next(fields)) {
    if (fields.size() != 5) reader.fail("expected 5 fields, got " + std::to_string(fields.size()));
    OutageEvent event;
    event.city_id = fields[0];
    event.start_utc = fields[1];
    event.peak_wind = reader.number(fields[2], "peak_wind_ms");
    event.max_precipitable_water = reader.number(fields[3], "max_pw_kgm2");
    std::stringstream counts(fields[4]);
    std::string item;
    while (std::getline(counts, item, ';')) {
      const auto c = reader.integer(item, "hourly_counts");
      if (c < 0) reader.fail("negative hourly count");
      event.hourly_out_counts.push_back(c);
    }
    if (event.hourly_out_counts.empty()) reader.fail("empty hourly_counts");
    events.push_back(std::move(event));
  }
  return events;
}

ObservationSet parse_observations_csv(std::istream& in, std::string_view name) {
  CsvReader reader(in, name);
  std::vector<std::string> fields;
  if (!reader.next(fields)) reader.fail("missing header");
  reader.expect_header(fields, {"treatment", "outcome"});
  const std::size_t d = fields.size() - 2;
  for (std::size_t j = 0; j < d; ++j) {
    if (fields[j + 2] != "x_" + std::to_string(j + 1)) reader.fail("expected column x_" + std::to_string(j + 1));
  }
  ObservationSet obs;
  std::vector<double> data;
  while (reader.next(fields)) {
    if (fields.size() != d + 2) {
      reader.fail("expected " + std::to_string(d + 2) + " fields, got " + std::to_string(fields.size()));
    }
    const double a = reader.number(fields[0], "treatment");
    if (a != 0.0 && a != 1.0) reader.fail("treatment must be 0 or 1");
    obs.treatment.push_back(a);
    obs.outcome.push_back(reader.number(fields[1], "outcome"));
    for (std::size_t j = 0; j < d; ++j) data.push_back(reader.number(fields[j + 2], "x_" + std::to_string(j + 1)));
  }
  obs.covariates = Matrix(obs.treatment.size(), d, std::move(data));
  return obs;
}

CityTable read_cities_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_cities_csv(in, path.string());
}

std::vector<OutageEvent> read_events_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_events_csv(in, path.string());
}

ObservationSet read_observations_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_observations_csv(in, path.string());
}

std::string format_double(double value) {
  char buffer[64];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
  return std::string(buffer, ptr);
}

void write_observations_csv(std::ostream& out, const ObservationSet& obs, std::string_view preamble) {
  std::istringstream lines{std::string(preamble)};
  for (std::string line; std::getline(lines, line);) out << "# " << line << '\n';
  out << "treatment,outcome";
  for (std::size_t j = 0; j < obs.dimension(); ++j) out << ",x_" << j + 1;
  out << '\n';
  for (std::size_t i = 0; i < obs.size(); ++i) {
    out << format_double(obs.treatment[i]) << ',' << format_double(obs.outcome[i]);
    for (double v : obs.covariates.row(i)) out << ',' << format_double(v);
    out << '\n';
  }
}

}  // namespace tclkit
