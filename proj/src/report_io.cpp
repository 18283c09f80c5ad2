#include "qsmooth/report_io.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "json.hpp"
#include "qsmooth/errors.hpp"

#ifndef QSMOOTH_VERSION
#define QSMOOTH_VERSION "0.0.0"
#endif

namespace qsmooth {

using nlohmann::json;

std::string_view tool_version() { return "qsmooth " QSMOOTH_VERSION; }

namespace {

std::string g9(double v) { return fmt::format("{:.9g}", v); }

int group_rank(const ConditionRecord& r) {
  return 2 * static_cast<int>(r.scheme) + static_cast<int>(r.mode);
}

Scheme scheme_from(const std::string& s) {
  if (s == "adaptive") return Scheme::adaptive;
  if (s == "dual_homodyne") return Scheme::dual_homodyne;
  throw ParameterError(fmt::format("unknown scheme '{}'", s));
}

EstimatorMode mode_from(const std::string& s) {
  if (s == "filtered") return EstimatorMode::filtered;
  if (s == "smoothed") return EstimatorMode::smoothed;
  throw ParameterError(fmt::format("unknown mode '{}'", s));
}

json record_to_json(const ConditionRecord& r) {
  return json{{"scheme", to_string(r.scheme)},
              {"mode", to_string(r.mode)},
              {"chi", r.chi},
              {"chi_plus", r.chi_plus},
              {"w_minus", r.w_minus},
              {"w_plus", r.w_plus},
              {"kappa", r.kappa},
              {"lambda", r.lambda},
              {"flux", r.flux},
              {"trials", r.trials},
              {"mc_mse", r.mc_mse},
              {"mc_stderr", r.mc_stderr},
              {"analytic_mse", r.analytic_mse},
              {"z_score", r.z_score}};
}

ConditionRecord record_from_json(const json& j) {
  ConditionRecord r;
  r.scheme = scheme_from(j.at("scheme").get<std::string>());
  r.mode = mode_from(j.at("mode").get<std::string>());
  j.at("chi").get_to(r.chi);
  j.at("chi_plus").get_to(r.chi_plus);
  j.at("w_minus").get_to(r.w_minus);
  j.at("w_plus").get_to(r.w_plus);
  j.at("kappa").get_to(r.kappa);
  j.at("lambda").get_to(r.lambda);
  j.at("flux").get_to(r.flux);
  j.at("trials").get_to(r.trials);
  j.at("mc_mse").get_to(r.mc_mse);
  j.at("mc_stderr").get_to(r.mc_stderr);
  j.at("analytic_mse").get_to(r.analytic_mse);
  j.at("z_score").get_to(r.z_score);
  return r;
}

json gain_to_json(const GainRatio& g) { return json{{"value", g.value}, {"stderr", g.stderr_}}; }

GainRatio gain_from_json(const json& j) { return {j.at("value").get<double>(), j.at("stderr").get<double>()}; }

void require_finite(double v, std::string_view field) {
  if (!std::isfinite(v)) throw StatisticsError(fmt::format("non-finite value in field '{}'", field));
}

}  // namespace

void write_csv(std::ostream& out, std::span<const ConditionRecord> records) {
  std::vector<ConditionRecord> rows(records.begin(), records.end());
  std::stable_sort(rows.begin(), rows.end(),
                   [](const auto& a, const auto& b) { return group_rank(a) < group_rank(b); });
  out << kCsvHeader << '\n';
  for (const auto& r : rows) {
    out << to_string(r.scheme) << ',' << to_string(r.mode) << ',' << g9(r.chi) << ',' << g9(r.flux) << ','
        << r.trials << ',' << g9(r.mc_mse) << ',' << g9(r.mc_stderr) << ',' << g9(r.analytic_mse) << ','
        << g9(r.z_score) << '\n';
  }
}

std::string manifest_to_json(const RunManifest& m) {
  json j;
  j["tool_version"] = m.tool_version;
  j["command"] = m.command;
  j["master_seed"] = m.master_seed;
  j["timestamp"] = m.timestamp ? json(*m.timestamp) : json(nullptr);
  j["config"] = m.config;
  j["resolved"] = m.resolved;
  j["sweep_values"] = m.sweep_values;
  json results = json::array();
  for (const auto& r : m.results) results.push_back(record_to_json(r));
  j["results"] = std::move(results);
  if (m.comparison) {
    j["comparison"] = json{{"smoothing_gain_mc", gain_to_json(m.comparison->smoothing_gain_mc)},
                           {"smoothing_gain_dual_mc", gain_to_json(m.comparison->smoothing_gain_dual_mc)},
                           {"adaptive_gain_mc", gain_to_json(m.comparison->adaptive_gain_mc)},
                           {"adaptive_gain_smoothed_mc", gain_to_json(m.comparison->adaptive_gain_smoothed_mc)},
                           {"total_gain_mc", gain_to_json(m.comparison->total_gain_mc)}};
  } else {
    j["comparison"] = nullptr;
  }
  json analytic = json::array();
  for (const auto& [name, value] : m.analytic) analytic.push_back(json{{"name", name}, {"value", value}});
  j["analytic"] = std::move(analytic);
  return j.dump(2) + "\n";
}

RunManifest manifest_from_json(std::string_view text) {
  const json j = json::parse(text);
  RunManifest m;
  j.at("tool_version").get_to(m.tool_version);
  j.at("command").get_to(m.command);
  j.at("master_seed").get_to(m.master_seed);
  if (!j.at("timestamp").is_null()) m.timestamp = j.at("timestamp").get<std::string>();
  j.at("config").get_to(m.config);
  j.at("resolved").get_to(m.resolved);
  j.at("sweep_values").get_to(m.sweep_values);
  for (const auto& r : j.at("results")) m.results.push_back(record_from_json(r));
  if (const auto& c = j.at("comparison"); !c.is_null()) {
    m.comparison = SchemeComparison{gain_from_json(c.at("smoothing_gain_mc")),
                                    gain_from_json(c.at("smoothing_gain_dual_mc")),
                                    gain_from_json(c.at("adaptive_gain_mc")),
                                    gain_from_json(c.at("adaptive_gain_smoothed_mc")),
                                    gain_from_json(c.at("total_gain_mc"))};
  }
  for (const auto& a : j.at("analytic")) m.analytic.emplace_back(a.at("name").get<std::string>(), a.at("value").get<double>());
  return m;
}

ResultFormat format_for_path(const std::filesystem::path& path, std::optional<ResultFormat> requested) {
  if (requested) return *requested;
  return path.extension() == ".json" ? ResultFormat::json : ResultFormat::csv;
}

void check_finite(const RunManifest& m) {
  for (const auto& r : m.results) {
    require_finite(r.chi, "chi");
    require_finite(r.flux, "flux");
    require_finite(r.mc_mse, "mc_mse");
    require_finite(r.mc_stderr, "mc_stderr");
    require_finite(r.analytic_mse, "analytic_mse");
    require_finite(r.z_score, "z_score");
  }
  if (m.comparison) {
    require_finite(m.comparison->smoothing_gain_mc.value, "smoothing_gain_mc");
    require_finite(m.comparison->smoothing_gain_dual_mc.value, "smoothing_gain_dual_mc");
    require_finite(m.comparison->adaptive_gain_mc.value, "adaptive_gain_mc");
    require_finite(m.comparison->adaptive_gain_smoothed_mc.value, "adaptive_gain_smoothed_mc");
    require_finite(m.comparison->total_gain_mc.value, "total_gain_mc");
  }
  for (const auto& [name, value] : m.analytic) require_finite(value, name);
}

void emit_results(const RunManifest& manifest, ResultFormat format, const std::filesystem::path& destination) {
  check_finite(manifest);
  std::ostringstream body;
  if (format == ResultFormat::csv) {
    if (!manifest.analytic.empty() && manifest.results.empty()) {
      body << "name,value\n";
      for (const auto& [name, value] : manifest.analytic) body << name << ',' << g9(value) << '\n';
    } else {
      write_csv(body, manifest.results);
    }
  } else {
    body << manifest_to_json(manifest);
  }
  std::ofstream out(destination, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot write '{}'", destination.string()));
  out << body.str();
  out.flush();
  if (!out) throw IoError(fmt::format("write to '{}' failed", destination.string()));
}

void print_report_table(std::ostream& out, std::span<const ConditionRecord> records) {
  out << fmt::format("{:<14} {:<9} {:>12} {:>12} {:>7} {:>12} {:>11} {:>12} {:>8}\n", "scheme", "mode", "chi",
                     "flux", "trials", "mc_mse", "mc_stderr", "analytic", "z");
  for (const auto& r : records) {
    out << fmt::format("{:<14} {:<9} {:>12.6g} {:>12.6g} {:>7} {:>12.6g} {:>11.3g} {:>12.6g} {:>8.2f}\n",
                       to_string(r.scheme), to_string(r.mode), r.chi, r.flux, r.trials, r.mc_mse, r.mc_stderr,
                       r.analytic_mse, r.z_score);
  }
}

}  // namespace qsmooth
