#include "photostat/run_config.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

#include "photostat/errors.hpp"

namespace photostat {

namespace {

class Parser {
 public:
  explicit Parser(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Mark& m, const std::string& msg) const {
    if (m.line >= 0) throw InvalidArgument(source_ + ":" + std::to_string(m.line + 1) + ": " + msg);
    throw InvalidArgument(source_ + ": " + msg);
  }

  std::string scalar(const YAML::Node& n, const std::string& key) const {
    if (!n.IsScalar()) fail(n.Mark(), "'" + key + "' must be a scalar");
    return n.Scalar();
  }

  double real(const YAML::Node& n, const std::string& key) const {
    const std::string s = scalar(n, key);
    if (s == "inf" || s == ".inf" || s == "+inf" || s == ".Inf") return std::numeric_limits<double>::infinity();
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used == s.size() && std::isfinite(v)) return v;
    } catch (const std::exception&) {
    }
    fail(n.Mark(), "'" + key + "' must be a number, got '" + s + "'");
  }

  std::uint64_t unsigned64(const YAML::Node& n, const std::string& key) const {
    const std::string s = scalar(n, key);
    try {
      std::size_t used = 0;
      if (!s.empty() && s[0] != '-') {
        const auto v = std::stoull(s, &used, 0);
        if (used == s.size()) return v;
      }
    } catch (const std::exception&) {
    }
    fail(n.Mark(), "'" + key + "' must be a non-negative integer, got '" + s + "'");
  }

  std::int64_t integer(const YAML::Node& n, const std::string& key) const {
    const std::string s = scalar(n, key);
    try {
      std::size_t used = 0;
      const auto v = std::stoll(s, &used, 10);
      if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    fail(n.Mark(), "'" + key + "' must be an integer, got '" + s + "'");
  }

  using Setter = std::function<void(const YAML::Node&, const std::string&)>;

  void section(const YAML::Node& n, const std::string& name, const std::map<std::string, Setter>& fields) const {
    if (!n.IsMap()) fail(n.Mark(), "section '" + name + "' must be a mapping");
    for (const auto& kv : n) {
      const std::string key = kv.first.Scalar();
      const auto it = fields.find(key);
      if (it == fields.end()) fail(kv.first.Mark(), "unknown key '" + key + "' in section '" + name + "'");
      it->second(kv.second, name + "." + key);
    }
  }

  template <typename F>
  void checked(const YAML::Node& n, const std::string& name, F&& validate_fn) const {
    try {
      validate_fn();
    } catch (const InvalidArgument& e) {
      fail(n.Mark(), "section '" + name + "': " + e.what());
    }
  }

 private:
  std::string source_;
};

}  // namespace

HomFitOptions RunConfig::hom_fit_options() const {
  HomFitOptions o;
  o.gamma = fit.gamma.value_or(sim.emitter.gamma_fast);
  o.delta = fit.delta.value_or(sim.schedule.intra_delay);
  o.rep_period = sim.schedule.rep_period;
  o.irf_sigma = fit.irf_sigma.value_or(std::sqrt(2.0) * sim.chain.irf_sigma);
  o.exclusion_half_width = fit.exclusion_half_width;
  o.weighting = fit.weighting;
  return o;
}

RunConfig parse_run_config(const std::string& text, const std::string& source) {
  const Parser p(source);
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    p.fail(e.mark, e.msg);
  }
  if (!root.IsMap()) p.fail(root.Mark(), "top level must be a mapping of sections");

  RunConfig rc;
  auto& em = rc.sim.emitter;
  auto& sch = rc.sim.schedule;
  auto& ch = rc.sim.chain;
  auto& cav = rc.cavity;
  auto& fit = rc.fit;
  using S = Parser::Setter;
  auto real = [&p](double& dst) -> S { return [&p, &dst](const YAML::Node& n, const std::string& k) { dst = p.real(n, k); }; };
  auto opt_real = [&p](std::optional<double>& dst) -> S {
    return [&p, &dst](const YAML::Node& n, const std::string& k) {
      if (n.IsNull()) {
        dst.reset();
      } else {
        dst = p.real(n, k);
      }
    };
  };

  const std::map<std::string, std::map<std::string, S>> schema{
      {"emitter",
       {{"gamma_fast", real(em.gamma_fast)},
        {"gamma_slow", real(em.gamma_slow)},
        {"gamma_nrad", real(em.gamma_nrad)},
        {"gamma_dp", real(em.gamma_dp)},
        {"fss_beat", opt_real(em.fss_beat)},
        {"xi_x", real(em.xi_x)},
        {"xi_x2", real(em.xi_x2)},
        {"slow_fraction", real(em.slow_fraction)},
        {"blink_off_rate", real(em.blink_off_rate)},
        {"blink_on_rate", real(em.blink_on_rate)}}},
      {"schedule",
       {{"rep_period", real(sch.rep_period)},
        {"pulses_per_period",
         [&](const YAML::Node& n, const std::string& k) { sch.pulses_per_period = static_cast<int>(p.integer(n, k)); }},
        {"intra_delay", real(sch.intra_delay)},
        {"power_ratio", real(sch.power_ratio)}}},
      {"chain",
       {{"eta_first_lens", real(ch.eta_first_lens)},
        {"eta_setup", real(ch.eta_setup)},
        {"alpha_mix", real(ch.alpha_mix)},
        {"background_fraction", real(ch.background_fraction)},
        {"background_statistics",
         [&](const YAML::Node& n, const std::string& k) {
           try {
             ch.background_statistics = background_statistics_from_string(p.scalar(n, k));
           } catch (const InvalidArgument& e) {
             p.fail(n.Mark(), e.what());
           }
         }},
        {"dark_count_rate", real(ch.dark_count_rate)},
        {"irf_sigma", real(ch.irf_sigma)}}},
      {"cavity",
       {{"q_factor", real(cav.q_factor)},
        {"lambda_0", real(cav.lambda_0)},
        {"purcell_peak", real(cav.purcell_peak)},
        {"eta_cav", real(cav.eta_cav)},
        {"eta_rad", real(cav.eta_rad)},
        {"gamma_bulk", real(cav.gamma_bulk)},
        {"background_inhibition", real(cav.background_inhibition)}}},
      {"simulation",
       {{"mode",
         [&](const YAML::Node& n, const std::string& k) {
           const auto s = p.scalar(n, k);
           if (s == "hbt") {
             rc.sim.mode = InterferometerMode::kHbt;
           } else if (s == "hom") {
             rc.sim.mode = InterferometerMode::kHom;
           } else {
             p.fail(n.Mark(), "'" + k + "' must be 'hbt' or 'hom', got '" + s + "'");
           }
         }},
        {"interference",
         [&](const YAML::Node& n, const std::string& k) {
           const auto s = p.scalar(n, k);
           if (s == "bernoulli") {
             rc.sim.sampler = InterferenceSampler::kBernoulli;
           } else if (s == "phase_diffusion") {
             rc.sim.sampler = InterferenceSampler::kPhaseDiffusion;
           } else {
             p.fail(n.Mark(), "'" + k + "' must be 'bernoulli' or 'phase_diffusion', got '" + s + "'");
           }
         }},
        {"n_periods", [&](const YAML::Node& n, const std::string& k) { rc.sim.n_periods = p.unsigned64(n, k); }},
        {"rng_seed", [&](const YAML::Node& n, const std::string& k) { rc.sim.rng_seed = p.unsigned64(n, k); }},
        {"threads",
         [&](const YAML::Node& n, const std::string& k) {
           const auto t = p.unsigned64(n, k);
           if (t < 1 || t > 1024) p.fail(n.Mark(), "'" + k + "' must lie in [1, 1024]");
           rc.threads = static_cast<unsigned>(t);
         }},
        {"output_dir", [&](const YAML::Node& n, const std::string& k) { rc.output_dir = p.scalar(n, k); }},
        {"format",
         [&](const YAML::Node& n, const std::string& k) {
           const auto s = p.scalar(n, k);
           if (s == "binary") {
             rc.format = StreamFormat::kBinary;
           } else if (s == "csv") {
             rc.format = StreamFormat::kCsv;
           } else if (s == "both") {
             rc.format = StreamFormat::kBoth;
           } else {
             p.fail(n.Mark(), "'" + k + "' must be 'binary', 'csv' or 'both', got '" + s + "'");
           }
         }}}},
      {"fit",
       {{"bin_width_ps", [&](const YAML::Node& n, const std::string& k) { fit.bin_width_ps = p.integer(n, k); }},
        {"window_ps", [&](const YAML::Node& n, const std::string& k) { fit.window_ps = p.integer(n, k); }},
        {"center_window", real(fit.center_window)},
        {"norm_span", real(fit.norm_span)},
        {"gamma", opt_real(fit.gamma)},
        {"delta", opt_real(fit.delta)},
        {"irf_sigma", opt_real(fit.irf_sigma)},
        {"exclusion_half_width", opt_real(fit.exclusion_half_width)},
        {"weighting",
         [&](const YAML::Node& n, const std::string& k) {
           try {
             fit.weighting = weighting_from_string(p.scalar(n, k));
           } catch (const InvalidArgument& e) {
             p.fail(n.Mark(), e.what());
           }
         }}}},
  };

  std::map<std::string, YAML::Node> seen;
  for (const auto& kv : root) {
    const std::string name = kv.first.Scalar();
    const auto it = schema.find(name);
    if (it == schema.end()) p.fail(kv.first.Mark(), "unknown section '" + name + "'");
    if (kv.second.IsNull()) continue;
    p.section(kv.second, name, it->second);
    seen[name] = kv.second;
  }
  auto node_of = [&](const std::string& name) { return seen.count(name) ? seen[name] : root; };

  p.checked(node_of("emitter"), "emitter", [&] { validate(em); });
  p.checked(node_of("schedule"), "schedule", [&] { validate(sch); });
  p.checked(node_of("chain"), "chain", [&] { validate(ch); });
  p.checked(node_of("cavity"), "cavity", [&] { validate(cav); });
  p.checked(node_of("simulation"), "simulation", [&] { validate(rc.sim); });
  p.checked(node_of("fit"), "fit", [&] {
    if (fit.bin_width_ps < 1) throw InvalidArgument("bin_width_ps must be at least 1");
    if (fit.window_ps < fit.bin_width_ps) throw InvalidArgument("window_ps must be at least bin_width_ps");
    if (!(fit.center_window > 0) || !(fit.norm_span > 0)) {
      throw InvalidArgument("center_window and norm_span must be positive");
    }
    for (const auto* v : {&fit.gamma, &fit.delta, &fit.exclusion_half_width}) {
      if (*v && !(**v > 0)) throw InvalidArgument("gamma, delta and exclusion_half_width must be positive");
    }
    if (fit.irf_sigma && !(*fit.irf_sigma >= 0)) throw InvalidArgument("irf_sigma must be non-negative");
  });
  return rc;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config '" + path.string() + "'");
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_run_config(ss.str(), path.string());
}

}  // namespace photostat
