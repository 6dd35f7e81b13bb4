#include "photostat/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "photostat/errors.hpp"
#include "photostat/serialization.hpp"

namespace photostat {

namespace {

constexpr std::uint64_t kBlockPeriods = 1u << 14;
constexpr std::uint64_t kTelegraphStream = std::numeric_limits<std::uint64_t>::max();

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double uniform(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }
bool coin(Rng& rng) { return (rng() >> 63) != 0; }

// Bright/dark telegraph trajectory, generated once over the whole run so
// that the state is continuous across simulation blocks.
class Telegraph {
 public:
  Telegraph(const EmitterSpec& e, double duration_ns, std::uint64_t seed) {
    if (!e.blinking_enabled()) return;
    enabled_ = true;
    Rng rng(substream_seed(seed, kTelegraphStream));
    initially_on_ = uniform(rng) < e.on_probability();
    const double leave_on = e.blink_off_rate * 1e-3;  // us^-1 -> ns^-1
    const double leave_off = e.blink_on_rate * 1e-3;
    bool on = initially_on_;
    double t = 0.0;
    while (true) {
      t += std::exponential_distribution<double>(on ? leave_on : leave_off)(rng);
      if (t > duration_ns) break;
      switches_.push_back(t);
      on = !on;
    }
  }

  bool on_at(double t) const {
    if (!enabled_) return true;
    const auto flips = std::upper_bound(switches_.begin(), switches_.end(), t) - switches_.begin();
    return initially_on_ != (flips % 2 == 1);
  }

 private:
  bool enabled_ = false;
  bool initially_on_ = true;
  std::vector<double> switches_;
};

double coherence_factor(double tau, const HomRouting& r, Rng& rng) {
  if (std::isinf(r.gamma_dp)) return 0.0;
  const double at = std::abs(tau);
  double coh;
  if (r.sampler == InterferenceSampler::kPhaseDiffusion) {
    std::normal_distribution<double> phase(0.0, std::sqrt(2.0 * r.gamma_dp * at));
    coh = r.gamma_dp > 0.0 ? std::cos(phase(rng) - phase(rng)) : 1.0;
  } else {
    coh = std::exp(-2.0 * r.gamma_dp * at);
  }
  if (r.beat_weight > 0.0) {
    const double c = std::cos(0.5 * r.beat_frequency * tau);
    coh *= (1.0 - r.beat_weight) + r.beat_weight * c * c;
  }
  return coh;
}

struct Block {
  std::vector<TimeTag> records;
};

}  // namespace

std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(seed ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

void validate(const SimConfig& c) {
  validate(c.emitter);
  validate(c.schedule);
  validate(c.chain);
  if (c.n_periods < 1) throw InvalidArgument("simulation: n_periods must be at least 1");
  if (c.mode == InterferometerMode::kHom) {
    if (c.schedule.pulses_per_period != 2) {
      throw InvalidArgument("simulation: HOM mode needs pulses_per_period = 2");
    }
    if (!(c.schedule.intra_delay > 0)) throw InvalidArgument("simulation: HOM mode needs intra_delay > 0");
  }
}

std::string config_digest(const SimConfig& c) { return sha256_hex(to_json(c).dump()); }

std::vector<RoutedPhoton> route_hbt(std::span<const EmittedPhoton> photons, Rng& rng) {
  std::vector<RoutedPhoton> out;
  out.reserve(photons.size());
  for (const auto& p : photons) out.push_back({p.time_ns, static_cast<std::uint8_t>(coin(rng))});
  return out;
}

std::vector<RoutedPhoton> route_hom(std::span<const EmittedPhoton> photons, const HomRouting& r,
                                    Rng& rng) {
  std::vector<RoutedPhoton> out(photons.size());
  std::vector<bool> long_arm(photons.size());
  int early_long = -1, late_short = -1, n_early_long = 0, n_late_short = 0;
  for (std::size_t i = 0; i < photons.size(); ++i) {
    long_arm[i] = coin(rng);
    out[i].time_ns = photons[i].time_ns + (long_arm[i] ? r.delay : 0.0);
    if (photons[i].pulse == 0 && long_arm[i]) {
      early_long = static_cast<int>(i);
      ++n_early_long;
    }
    if (photons[i].pulse == 1 && !long_arm[i]) {
      late_short = static_cast<int>(i);
      ++n_late_short;
    }
  }
  const bool pair = n_early_long == 1 && n_late_short == 1;
  for (std::size_t i = 0; i < photons.size(); ++i) {
    if (pair && (static_cast<int>(i) == early_long || static_cast<int>(i) == late_short)) continue;
    out[i].channel = static_cast<std::uint8_t>(coin(rng));
  }
  if (pair) {
    const auto a = static_cast<std::size_t>(early_long);
    const auto b = static_cast<std::size_t>(late_short);
    double p_cross = 0.5;
    if (photons[a].kind == PhotonKind::kNeutral && photons[b].kind == PhotonKind::kNeutral) {
      const double tau = out[a].time_ns - out[b].time_ns;
      p_cross = 0.5 * (1.0 - coherence_factor(tau, r, rng));
    }
    const bool cross = uniform(rng) < p_cross;
    const auto first = static_cast<std::uint8_t>(coin(rng));
    out[a].channel = first;
    out[b].channel = cross ? static_cast<std::uint8_t>(1 - first) : first;
  }
  return out;
}

double expected_signal_per_pulse(const SimConfig& c) {
  const auto& e = c.emitter;
  return e.on_probability() * c.schedule.excitation_probability() * (e.xi_x + e.xi_x2) *
         e.quantum_efficiency() * c.chain.transmission();
}

std::uint64_t origin_periods(const SimConfig& c) {
  return 1 + static_cast<std::uint64_t>(std::ceil(10.0 * c.chain.irf_sigma / c.schedule.rep_period));
}

TimeTagStream simulate(const SimConfig& config, const SimOptions& options) {
  validate(config);
  const auto& em = config.emitter;
  const auto& sch = config.schedule;
  const auto& chain = config.chain;
  const double period = sch.rep_period;
  const std::uint64_t origin = origin_periods(config);

  const double total_periods = static_cast<double>(config.n_periods + 2 * origin);
  const double duration_ps = total_periods * period * 1e3;
  if (!(duration_ps < 0x1p62)) {
    throw InvalidArgument("simulation: n_periods * rep_period overflows the picosecond timestamp range");
  }

  const double p_exc = sch.excitation_probability();
  const double qe = em.quantum_efficiency();
  const double p_neutral = em.xi_x * qe;
  const double p_charged = (em.xi_x + em.xi_x2) * qe;
  const double transmission = chain.transmission();
  const double b = chain.background_fraction;
  const double bg_mean = b > 0.0 ? b / (1.0 - b) * expected_signal_per_pulse(config) : 0.0;
  const double dark_per_ns = chain.dark_count_rate * 1e-9;

  HomRouting hom;
  hom.delay = sch.intra_delay;
  hom.gamma_dp = em.gamma_dp;
  hom.sampler = config.sampler;
  if (em.fss_beat && chain.alpha_mix > 1.0) {
    hom.beat_frequency = *em.fss_beat;
    hom.beat_weight = (chain.alpha_mix - 1.0) / chain.alpha_mix;
  }

  const Telegraph telegraph(em, total_periods * period, config.rng_seed);
  const std::uint64_t n_blocks = (config.n_periods + kBlockPeriods - 1) / kBlockPeriods;
  std::vector<Block> blocks(n_blocks);

  auto run_block = [&](std::uint64_t bi) {
    Rng rng(substream_seed(config.rng_seed, bi));
    std::exponential_distribution<double> fast(em.gamma_fast);
    std::exponential_distribution<double> slow(em.gamma_slow > 0 ? em.gamma_slow : 1.0);
    std::normal_distribution<double> jitter(0.0, chain.irf_sigma > 0 ? chain.irf_sigma : 1.0);
    std::poisson_distribution<int> bg_poisson(bg_mean > 0 ? bg_mean : 1.0);
    std::geometric_distribution<int> bg_thermal(1.0 / (1.0 + bg_mean));

    auto& recs = blocks[bi].records;
    std::vector<EmittedPhoton> photons;
    const std::uint64_t n0 = bi * kBlockPeriods;
    const std::uint64_t n1 = std::min(config.n_periods, n0 + kBlockPeriods);
    for (std::uint64_t n = n0; n < n1; ++n) {
      photons.clear();
      const double t_period = static_cast<double>(origin + n) * period;
      for (int k = 0; k < sch.pulses_per_period; ++k) {
        const double t_pulse = t_period + k * sch.intra_delay;
        if (telegraph.on_at(t_pulse) && uniform(rng) < p_exc) {
          const double u = uniform(rng);
          if (u < p_charged) {
            const PhotonKind kind = u < p_neutral ? PhotonKind::kNeutral : PhotonKind::kCharged;
            const bool is_slow = em.slow_fraction > 0.0 && uniform(rng) < em.slow_fraction;
            const double delay = is_slow ? slow(rng) : fast(rng);
            if (uniform(rng) < transmission) photons.push_back({t_pulse + delay, k, kind});
          }
        }
        if (bg_mean > 0.0) {
          const int nb = chain.background_statistics == BackgroundStatistics::kThermal
                             ? bg_thermal(rng)
                             : bg_poisson(rng);
          for (int i = 0; i < nb; ++i) photons.push_back({t_pulse + fast(rng), k, PhotonKind::kBackground});
        }
      }
      if (photons.empty()) continue;
      const auto routed = config.mode == InterferometerMode::kHom ? route_hom(photons, hom, rng)
                                                                  : route_hbt(photons, rng);
      for (const auto& r : routed) {
        const double t = chain.irf_sigma > 0 ? r.time_ns + jitter(rng) : r.time_ns;
        recs.push_back({r.channel, static_cast<std::uint64_t>(std::llround(std::max(t, 0.0) * 1e3))});
      }
    }
    if (dark_per_ns > 0.0) {
      const double t0 = static_cast<double>(origin + n0) * period;
      const double span = static_cast<double>(n1 - n0) * period;
      std::poisson_distribution<long> n_dark(dark_per_ns * span);
      for (std::uint8_t ch = 0; ch < 2; ++ch) {
        const long nd = n_dark(rng);
        for (long i = 0; i < nd; ++i) {
          recs.push_back({ch, static_cast<std::uint64_t>(std::llround((t0 + span * uniform(rng)) * 1e3))});
        }
      }
    }
    std::sort(recs.begin(), recs.end());
  };

  const unsigned n_threads =
      std::max(1u, std::min<unsigned>(options.threads, static_cast<unsigned>(n_blocks)));
  if (n_threads == 1) {
    for (std::uint64_t bi = 0; bi < n_blocks; ++bi) run_block(bi);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < n_threads; ++t) {
      pool.emplace_back([&, t] {
        for (std::uint64_t bi = t; bi < n_blocks; bi += n_threads) run_block(bi);
      });
    }
  }

  std::vector<TimeTagStream> parts(n_blocks);
  for (std::uint64_t bi = 0; bi < n_blocks; ++bi) parts[bi].records = std::move(blocks[bi].records);
  TimeTagStream out = merge_streams(parts);
  out.duration_ps = static_cast<std::uint64_t>(std::llround(duration_ps));
  out.meta = config_digest(config);
  return out;
}

}  // namespace photostat
