#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "photostat/time_tags.hpp"
#include "photostat/types.hpp"

namespace photostat {

enum class InterferometerMode { kHbt, kHom };

/// How two-photon interference outcomes are drawn in HOM mode.
enum class InterferenceSampler {
  kBernoulli,       ///< ensemble-averaged coherence exp(-2 gamma_dp |tau|)
  kPhaseDiffusion,  ///< per-photon Wiener phase, variance rate 2 gamma_dp
};

struct SimConfig {
  EmitterSpec emitter;
  ExcitationSchedule schedule;
  DetectionChain chain;
  InterferometerMode mode = InterferometerMode::kHbt;
  InterferenceSampler sampler = InterferenceSampler::kBernoulli;
  std::uint64_t n_periods = 1;
  std::uint64_t rng_seed = 1;
};

void validate(const SimConfig& c);

/// SHA-256 hex digest of the canonical JSON form of `c`.
std::string config_digest(const SimConfig& c);

using Rng = std::mt19937_64;

/// Seed for substream `index` of a run seeded with `seed`.
std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index);

enum class PhotonKind : std::uint8_t { kNeutral, kCharged, kBackground };

/// A photon that survived the detection-chain losses, before routing.
struct EmittedPhoton {
  double time_ns = 0.0;  ///< emission time, absolute
  int pulse = 0;         ///< pulse index within its period
  PhotonKind kind = PhotonKind::kNeutral;
};

/// A routed photon: arrival time at the detector and the detector hit.
struct RoutedPhoton {
  double time_ns = 0.0;
  std::uint8_t channel = 0;
};

/// Beamsplitter in front of two detectors: independent fair coin per photon.
std::vector<RoutedPhoton> route_hbt(std::span<const EmittedPhoton> photons, Rng& rng);

/// Parameters of the unbalanced interferometer for HOM routing.
struct HomRouting {
  double delay = 3.04;     ///< long-arm delay, equal to the pulse spacing
  double gamma_dp = 0.0;   ///< may be +inf
  double beat_frequency = 0.0;
  double beat_weight = 0.0;
  InterferenceSampler sampler = InterferenceSampler::kBernoulli;
};

/// Routes the photons of one excitation period through the unbalanced
/// Mach-Zehnder. Each photon takes the short or long arm with equal
/// probability; if exactly one early-pulse photon takes the long arm and
/// exactly one late-pulse photon the short arm, the pair interferes and
/// leaves in different ports with probability
/// (1 - coherence(tau)) / 2, tau their arrival difference. Neutral-exciton
/// photons are the only mutually indistinguishable kind.
std::vector<RoutedPhoton> route_hom(std::span<const EmittedPhoton> photons, const HomRouting& r,
                                    Rng& rng);

/// Expected number of detected emitter photons per pulse.
double expected_signal_per_pulse(const SimConfig& c);

/// Pulse k of period n is emitted at (origin_periods + n) * rep_period
/// + k * intra_delay. Exposed so that decay analyses can fold timestamps.
std::uint64_t origin_periods(const SimConfig& c);

struct SimOptions {
  unsigned threads = 1;
};

/// Generates the detection record of `config.n_periods` excitation periods.
/// The result depends only on `config` (including rng_seed), not on the
/// thread count. Throws InvalidArgument if the timestamps would overflow.
TimeTagStream simulate(const SimConfig& config, const SimOptions& options = {});

}  // namespace photostat
