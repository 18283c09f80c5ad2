#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qsmooth/config.hpp"
#include "qsmooth/experiment.hpp"

namespace qsmooth {

enum class ResultFormat { csv, json };

// Everything needed to rerun a command: the settings as given ("auto" kept),
// their resolved values, the command and its sweep values, plus the results.
struct RunManifest {
  std::string tool_version;
  std::string command;
  std::uint64_t master_seed{0};
  std::optional<std::string> timestamp;
  KeyValues config;
  KeyValues resolved;
  std::vector<double> sweep_values;
  std::vector<ConditionRecord> results;
  std::optional<SchemeComparison> comparison;
  std::vector<std::pair<std::string, double>> analytic;
};

std::string_view tool_version();

inline constexpr std::string_view kCsvHeader = "scheme,mode,chi,flux,trials,mc_mse,mc_stderr,analytic_mse,z_score";

// Rows grouped by scheme then mode (filtered first), input order kept within a
// group; reals to 9 significant digits.
void write_csv(std::ostream& out, std::span<const ConditionRecord> records);

std::string manifest_to_json(const RunManifest& manifest);
RunManifest manifest_from_json(std::string_view text);

// Infers the format from the extension (.json) unless one is given.
ResultFormat format_for_path(const std::filesystem::path& path, std::optional<ResultFormat> requested = {});

// Raises StatisticsError naming the first non-finite field.
void check_finite(const RunManifest& manifest);

// Writes the manifest in `format` (CSV holds only the condition rows).
void emit_results(const RunManifest& manifest, ResultFormat format, const std::filesystem::path& destination);

void print_report_table(std::ostream& out, std::span<const ConditionRecord> records);

}  // namespace qsmooth
