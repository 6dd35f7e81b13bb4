#include "photostat/serialization.hpp"

#include <openssl/evp.h>

#include <array>
#include <cmath>
#include <cstdio>

#include "photostat/errors.hpp"

namespace photostat {

namespace {

// JSON has no infinity; emit it as the string "inf".
nlohmann::ordered_json number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

}  // namespace

nlohmann::ordered_json to_json(const EmitterSpec& e) {
  nlohmann::ordered_json j;
  j["gamma_fast"] = e.gamma_fast;
  j["gamma_slow"] = e.gamma_slow;
  j["gamma_nrad"] = e.gamma_nrad;
  j["gamma_dp"] = number(e.gamma_dp);
  j["fss_beat"] = e.fss_beat ? nlohmann::ordered_json(*e.fss_beat) : nlohmann::ordered_json();
  j["xi_x"] = e.xi_x;
  j["xi_x2"] = e.xi_x2;
  j["slow_fraction"] = e.slow_fraction;
  j["blink_off_rate"] = e.blink_off_rate;
  j["blink_on_rate"] = e.blink_on_rate;
  return j;
}

nlohmann::ordered_json to_json(const ExcitationSchedule& s) {
  return {{"rep_period", s.rep_period},
          {"pulses_per_period", s.pulses_per_period},
          {"intra_delay", s.intra_delay},
          {"power_ratio", number(s.power_ratio)}};
}

nlohmann::ordered_json to_json(const DetectionChain& c) {
  return {{"eta_first_lens", c.eta_first_lens},
          {"eta_setup", c.eta_setup},
          {"alpha_mix", c.alpha_mix},
          {"background_fraction", c.background_fraction},
          {"background_statistics", std::string(to_string(c.background_statistics))},
          {"dark_count_rate", c.dark_count_rate},
          {"irf_sigma", c.irf_sigma}};
}

nlohmann::ordered_json to_json(const CavityCoupling& c) {
  return {{"q_factor", c.q_factor},         {"lambda_0", c.lambda_0},
          {"purcell_peak", c.purcell_peak}, {"eta_cav", c.eta_cav},
          {"eta_rad", c.eta_rad},           {"gamma_bulk", c.gamma_bulk},
          {"background_inhibition", c.background_inhibition}};
}

std::string to_string(InterferometerMode m) { return m == InterferometerMode::kHom ? "hom" : "hbt"; }

std::string to_string(InterferenceSampler s) {
  return s == InterferenceSampler::kPhaseDiffusion ? "phase_diffusion" : "bernoulli";
}

nlohmann::ordered_json to_json(const SimConfig& c) {
  nlohmann::ordered_json j;
  j["emitter"] = to_json(c.emitter);
  j["schedule"] = to_json(c.schedule);
  j["chain"] = to_json(c.chain);
  j["mode"] = to_string(c.mode);
  j["interference"] = to_string(c.sampler);
  j["n_periods"] = c.n_periods;
  j["rng_seed"] = c.rng_seed;
  return j;
}

std::string sha256_hex(const std::string& data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw IoError("SHA-256 digest failed");
  }
  std::string hex;
  hex.reserve(2 * len);
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    hex += buf;
  }
  return hex;
}

}  // namespace photostat
