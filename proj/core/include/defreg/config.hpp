#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "defreg/dic.hpp"
#include "defreg/registration.hpp"

namespace defreg {

struct RunConfig {
    RegistrationConfig registration;
    DicParams dic;
};

// key = value lines grouped under [registration], [asgd] and [dic]; '#' and
// ';' start comments. Unknown sections or keys and malformed values throw
// ConfigError naming "section.key" and the line number. Values are only
// parsed here; range checks live in the validate() members.
RunConfig parse_config(std::string_view text, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

// Every field, defaults included, as ("section.key", value) pairs in a fixed
// order. render_config() emits the same in the parseable file format.
std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& config);
std::string render_config(const RunConfig& config);

}  // namespace defreg
