#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "qsmooth/experiment.hpp"

namespace qsmooth {

// Raw `key = value` settings, keyed by config name (e.g. "w_minus").
using KeyValues = std::map<std::string, std::string>;

struct ConfigKey {
  std::string_view name;
  std::string_view default_value;
  std::string_view description;
};

// Every accepted key with its default, in documentation order.
std::span<const ConfigKey> config_keys();

bool is_config_key(std::string_view name);

// One `key = value` per line, `#` starts a comment, blank lines ignored.
// Later duplicates override earlier ones.
KeyValues parse_key_values(std::istream& in, std::string_view source_name = "<config>");

KeyValues read_key_value_file(const std::filesystem::path& path);

// Fills unspecified keys with defaults, converts and validates. Unknown keys
// and invariant violations raise ParameterError naming the key or invariant.
ExperimentConfig config_from_values(const KeyValues& values);

// `overrides` wins over the file, which wins over defaults.
ExperimentConfig load_config(const std::filesystem::path& path, const KeyValues& overrides = {});

// Every key of a configuration. With keep_auto, automatic beta, warmup and
// edge_discard stay "auto" (they are re-derived per sweep point); otherwise
// the concrete values used are written.
KeyValues config_to_values(const ExperimentConfig& config, bool keep_auto = true);

// Whether the user pinned chi (vs. the per-scheme "auto" default).
bool chi_is_auto(const KeyValues& values);

// 2 sqrt(kappa N') for the scheme: the small-xi filtered optimum.
double limit_optimal_chi(const ProcessParams& params, Scheme scheme);

std::string format_real(double value);

}  // namespace qsmooth
