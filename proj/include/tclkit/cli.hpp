#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

namespace tclkit::cli {

struct RunManifest {
  std::string command;
  nlohmann::ordered_json config_echo;
  std::uint64_t seed = 0;
  std::string artifact_version;
  std::string timestamp;

  nlohmann::ordered_json to_json() const;
};

std::string artifact_version();

/// UTC time as YYYY-MM-DDTHH:MM:SSZ. SOURCE_DATE_EPOCH, when set, replaces
/// the wall clock.
std::string utc_timestamp();

/// Runs one command line (args[0] is the subcommand). Returns the process
/// exit code; errors are reported on `err` as a single "category: message"
/// line.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tclkit::cli
