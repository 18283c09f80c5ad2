#include "qsmooth/config.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <istream>

#include <fmt/format.h>

#include "qsmooth/errors.hpp"

namespace qsmooth {

namespace {

constexpr std::array<ConfigKey, 20> kKeys{{
    {"kappa", "1.5868e4", "phase diffusion strength [rad^2/s]"},
    {"lambda", "6.1451e4", "mean-reversion rate [1/s]"},
    {"flux", "1.3499e6", "photon flux N [1/s]"},
    {"chi", "auto", "averaging rate for both directions [1/s]; auto = 2 sqrt(kappa N')"},
    {"chi_minus", "chi", "forward averaging rate [1/s]"},
    {"chi_plus", "chi", "backward averaging rate [1/s]"},
    {"beta", "auto", "feedback gain [1/s]; auto = sqrt(8 chi N)"},
    {"omega0", "0", "feedback low-pass cutoff [1/s]"},
    {"dt", "2e-8", "time step [s]"},
    {"duration", "1e-2", "trial length [s]"},
    {"warmup", "auto", "discarded start [s]; auto = 5/beta (adaptive) or 0"},
    {"trials", "200", "Monte Carlo trials"},
    {"seed", "20100401", "master seed"},
    {"scheme", "adaptive", "adaptive | dual_homodyne"},
    {"source", "theta", "averaged series: theta | phihat"},
    {"w_minus", "0.5", "forward weight"},
    {"w_plus", "0.5", "backward weight"},
    {"edge_discard", "auto", "discard at each window end [s]; auto = max(5/chi_min, 5/beta)"},
    {"dual_mode", "linearized", "dual homodyne estimate: linearized | arg"},
    {"efficiency", "1", "detection efficiency applied to the signal term, (0, 1]"},
}};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

double parse_real(const std::string& key, const std::string& text) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end || !std::isfinite(value))
    throw ParameterError(fmt::format("key '{}': '{}' is not a finite real number", key, text));
  return value;
}

template <typename Int>
Int parse_integer(const std::string& key, const std::string& text) {
  Int value{};
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end) throw ParameterError(fmt::format("key '{}': '{}' is not an integer", key, text));
  return value;
}

bool is_auto(const std::string& text) { return text == "auto"; }

}  // namespace

std::span<const ConfigKey> config_keys() { return kKeys; }

bool is_config_key(std::string_view name) {
  return std::any_of(kKeys.begin(), kKeys.end(), [&](const ConfigKey& k) { return k.name == name; });
}

std::string format_real(double value) { return fmt::format("{:.17g}", value); }

KeyValues parse_key_values(std::istream& in, std::string_view source_name) {
  KeyValues out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (line_no == 1 && view.starts_with("\xEF\xBB\xBF")) view.remove_prefix(3);
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos)
      throw ParameterError(fmt::format("{}:{}: expected 'key = value'", source_name, line_no));
    const std::string key(trim(view.substr(0, eq)));
    const std::string value(trim(view.substr(eq + 1)));
    if (key.empty() || value.empty())
      throw ParameterError(fmt::format("{}:{}: expected 'key = value'", source_name, line_no));
    if (!is_config_key(key)) throw ParameterError(fmt::format("unknown config key '{}'", key));
    out[key] = value;
  }
  return out;
}

KeyValues read_key_value_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open config file '{}'", path.string()));
  return parse_key_values(in, path.string());
}

double limit_optimal_chi(const ProcessParams& params, Scheme scheme) {
  return 2.0 * std::sqrt(params.kappa * effective_flux(params, scheme));
}

bool chi_is_auto(const KeyValues& values) {
  const auto it = values.find("chi");
  return it == values.end() || is_auto(it->second);
}

ExperimentConfig config_from_values(const KeyValues& values) {
  for (const auto& [key, value] : values)
    if (!is_config_key(key)) throw ParameterError(fmt::format("unknown config key '{}'", key));

  const auto get = [&](std::string_view name) -> std::string {
    if (const auto it = values.find(std::string(name)); it != values.end()) return it->second;
    const auto* k = std::find_if(kKeys.begin(), kKeys.end(), [&](const ConfigKey& c) { return c.name == name; });
    return std::string(k->default_value);
  };
  const auto real = [&](std::string_view name) { return parse_real(std::string(name), get(name)); };

  ExperimentConfig c;
  c.params = {real("kappa"), real("lambda"), real("flux")};
  c.params.validate();

  const std::string scheme = get("scheme");
  if (scheme == "adaptive")
    c.scheme = Scheme::adaptive;
  else if (scheme == "dual_homodyne" || scheme == "dual")
    c.scheme = Scheme::dual_homodyne;
  else
    throw ParameterError(fmt::format("key 'scheme': unknown scheme '{}'", scheme));

  const std::string source = get("source");
  if (source == "theta")
    c.estimator.source = AveragingSource::theta;
  else if (source == "phihat")
    c.estimator.source = AveragingSource::phihat;
  else
    throw ParameterError(fmt::format("key 'source': unknown source '{}'", source));

  const std::string mode = get("dual_mode");
  if (mode == "linearized")
    c.dual_mode = DualMode::linearized;
  else if (mode == "arg")
    c.dual_mode = DualMode::arg;
  else
    throw ParameterError(fmt::format("key 'dual_mode': unknown mode '{}'", mode));

  const std::string chi_text = get("chi");
  const double chi = is_auto(chi_text) ? limit_optimal_chi(c.params, c.scheme) : parse_real("chi", chi_text);
  const auto rate = [&](std::string_view name) {
    const std::string text = get(name);
    return text == "chi" ? chi : parse_real(std::string(name), text);
  };
  c.estimator.chi_minus = rate("chi_minus");
  c.estimator.chi_plus = rate("chi_plus");
  c.estimator.w_minus = real("w_minus");
  c.estimator.w_plus = real("w_plus");

  const std::string beta = get("beta");
  c.beta_policy = is_auto(beta) ? BetaPolicy::automatic() : BetaPolicy::fixed_at(parse_real("beta", beta));
  c.omega0 = real("omega0");
  c.efficiency = real("efficiency");

  c.grid.dt = real("dt");
  c.grid.duration = real("duration");
  const std::string warmup = get("warmup");
  c.auto_warmup = is_auto(warmup);
  if (!c.auto_warmup) c.grid.warmup = parse_real("warmup", warmup);
  const std::string edge = get("edge_discard");
  c.auto_edge_discard = is_auto(edge);
  if (!c.auto_edge_discard) c.estimator.edge_discard = parse_real("edge_discard", edge);

  c.trials = parse_integer<int>("trials", get("trials"));
  c.master_seed = parse_integer<std::uint64_t>("seed", get("seed"));

  try {
    c.validate();
  } catch (const ConfigurationError& e) {
    throw ConfigurationError(fmt::format("invalid configuration: {}", e.what()));
  } catch (const ParameterError& e) {
    throw ParameterError(fmt::format("invalid configuration: {}", e.what()));
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path, const KeyValues& overrides) {
  KeyValues values = read_key_value_file(path);
  for (const auto& [k, v] : overrides) values[k] = v;
  return config_from_values(values);
}

KeyValues config_to_values(const ExperimentConfig& config, bool keep_auto) {
  const ExperimentConfig c = config.resolved();
  KeyValues v;
  v["kappa"] = format_real(c.params.kappa);
  v["lambda"] = format_real(c.params.lambda);
  v["flux"] = format_real(c.params.flux);
  v["chi"] = format_real(c.estimator.chi_minus);
  v["chi_minus"] = format_real(c.estimator.chi_minus);
  v["chi_plus"] = format_real(c.estimator.chi_plus);
  v["beta"] = keep_auto && config.beta_policy.is_auto() ? "auto" : format_real(c.resolved_beta());
  v["omega0"] = format_real(c.omega0);
  v["dt"] = format_real(c.grid.dt);
  v["duration"] = format_real(c.grid.duration);
  v["warmup"] = keep_auto && config.auto_warmup ? "auto" : format_real(c.grid.warmup);
  v["trials"] = std::to_string(c.trials);
  v["seed"] = std::to_string(c.master_seed);
  v["scheme"] = std::string(to_string(c.scheme));
  v["source"] = std::string(to_string(c.estimator.source));
  v["w_minus"] = format_real(c.estimator.w_minus);
  v["w_plus"] = format_real(c.estimator.w_plus);
  v["edge_discard"] = keep_auto && config.auto_edge_discard ? "auto" : format_real(c.estimator.edge_discard);
  v["dual_mode"] = std::string(to_string(c.dual_mode));
  v["efficiency"] = format_real(c.efficiency);
  return v;
}

}  // namespace qsmooth
