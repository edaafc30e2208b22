#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <string>

#include "qkd/config.hpp"
#include "qkd/errors.hpp"

namespace qkd {

enum class PulseClass : std::uint8_t { signal = 0, decoy = 1, vacuum = 2 };
inline constexpr std::array<PulseClass, 3> kPulseClasses = {
    PulseClass::signal, PulseClass::decoy, PulseClass::vacuum};

inline const char* to_string(PulseClass c) {
  switch (c) {
    case PulseClass::signal: return "signal";
    case PulseClass::decoy: return "decoy";
    case PulseClass::vacuum: return "vacuum";
  }
  return "?";
}

/// Physical and statistical parameters of one QKD link.
struct LinkParams {
  double mu = 0.65;                 // mean photon number, signal pulses
  double nu = 0.08;                 // mean photon number, decoy pulses
  std::array<unsigned, 3> state_mix{6, 1, 1};  // signal : decoy : vacuum
  double clock_hz = 4.0e6;          // pulse repetition rate
  double fiber_loss_db = 5.6;       // channel attenuation incl. connectors
  double receiver_insertion_db = 3.5;
  double det_efficiency = 0.10;     // detector quantum efficiency
  double y0 = 1.0e-4;               // background yield per gated pulse
  double e_det = 0.012;             // intrinsic misalignment error probability
  double e0 = 0.5;                  // error probability of a background click
  double dead_time_s = 0.0;         // detector dead time
  double afterpulse_prob = 0.0;     // spurious click at gate reopen
  double block_seconds = 120.0;     // processing block duration
  double sigma_k = 10.0;            // std deviations for fluctuation bounds

  double mean_photons(PulseClass c) const {
    switch (c) {
      case PulseClass::signal: return mu;
      case PulseClass::decoy: return nu;
      case PulseClass::vacuum: return 0.0;
    }
    return 0.0;
  }

  unsigned mix_total() const { return state_mix[0] + state_mix[1] + state_mix[2]; }

  double class_fraction(PulseClass c) const {
    return static_cast<double>(state_mix[static_cast<unsigned>(c)]) / mix_total();
  }

  /// Pulses per processing block at the configured clock.
  std::uint64_t block_pulses() const {
    return static_cast<std::uint64_t>(clock_hz * block_seconds);
  }

  /// Dead window in clock periods after a detection; the gate reopens this
  /// many pulses later.
  std::uint64_t dead_pulses() const {
    return static_cast<std::uint64_t>(dead_time_s * clock_hz);
  }

  void validate() const {
    auto in01 = [](double x) { return x >= 0.0 && x <= 1.0; };
    if (!(nu > 0.0 && nu < mu))
      throw ConfigError("LinkParams: require 0 < nu < mu");
    if (!in01(y0) || !in01(e_det) || !in01(e0) || !in01(det_efficiency) ||
        !in01(afterpulse_prob))
      throw ConfigError("LinkParams: probabilities must lie in [0, 1]");
    if (state_mix[0] == 0 || state_mix[1] == 0 || state_mix[2] == 0)
      throw ConfigError("LinkParams: state_mix components must be positive");
    if (!(clock_hz > 0.0) || !(block_seconds > 0.0) || !(sigma_k > 0.0))
      throw ConfigError("LinkParams: clock_hz, block_seconds, sigma_k must be positive");
    if (!std::isfinite(fiber_loss_db) || fiber_loss_db < 0.0 ||
        !std::isfinite(receiver_insertion_db) || receiver_insertion_db < 0.0)
      throw ConfigError("LinkParams: losses must be finite and non-negative");
    if (dead_time_s < 0.0) throw ConfigError("LinkParams: dead_time_s must be >= 0");
  }

  /// Stable hash of every parameter, embedded in serialized blocks so
  /// stored data cannot be replayed against different link settings.
  std::uint64_t param_hash() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    auto mix64 = [&h](std::uint64_t v) {
      for (int i = 0; i < 8; ++i) {
        h ^= (v >> (8 * i)) & 0xff;
        h *= 0x100000001b3ull;
      }
    };
    auto mixd = [&](double d) {
      std::uint64_t v;
      static_assert(sizeof v == sizeof d);
      std::memcpy(&v, &d, 8);
      mix64(v);
    };
    mixd(mu); mixd(nu);
    mix64(state_mix[0]); mix64(state_mix[1]); mix64(state_mix[2]);
    mixd(clock_hz); mixd(fiber_loss_db); mixd(receiver_insertion_db);
    mixd(det_efficiency); mixd(y0); mixd(e_det); mixd(e0);
    mixd(dead_time_s); mixd(afterpulse_prob); mixd(block_seconds); mixd(sigma_k);
    return h;
  }
};

/// Per-class detection tallies for one block. Gains and error rates are
/// ratios of these counts: gain = detected/sent over all detections,
/// QBER = errored/matched over basis-matched detections only (an "error"
/// is undefined when the bases differ).
struct PulseClassStats {
  PulseClass pulse_class = PulseClass::signal;
  std::uint64_t sent = 0;
  std::uint64_t detected = 0;   // all clicks attributed to this class
  std::uint64_t matched = 0;    // clicks where the bases agreed
  std::uint64_t errored = 0;    // basis-matched clicks with flipped bit

  double gain() const { return sent ? static_cast<double>(detected) / sent : 0.0; }
  double qber() const { return matched ? static_cast<double>(errored) / matched : 0.0; }

  void validate() const {
    if (errored > matched || matched > detected || detected > sent)
      throw Error("PulseClassStats: require errored <= matched <= detected <= sent");
  }
};

using PerClassStats = std::array<PulseClassStats, 3>;

/// Closed-form expected statistics for a link.
struct ChannelPrediction {
  double eta_total = 0.0;
  double q_signal = 0.0, q_decoy = 0.0, q_vacuum = 0.0;
  double e_signal = 0.0, e_decoy = 0.0;
};

/// Overall transmittance: detector efficiency times the dB loss budget.
inline double total_transmittance(const LinkParams& p) {
  return p.det_efficiency *
         std::pow(10.0, -(p.fiber_loss_db + p.receiver_insertion_db) / 10.0);
}

/// Gain of a weak coherent pulse with mean photon number m. The m = 0 case
/// reduces to the background yield alone.
inline double predicted_gain(double eta, double y0, double m) {
  return y0 + 1.0 - std::exp(-eta * m);
}

/// QBER * gain: background clicks err with probability e0, photon clicks
/// with the misalignment probability.
inline double predicted_error_gain(double eta, double y0, double e0, double e_det,
                                   double m) {
  return e0 * y0 + e_det * (1.0 - std::exp(-eta * m));
}

inline ChannelPrediction predict_statistics(const LinkParams& p) {
  ChannelPrediction c;
  c.eta_total = total_transmittance(p);
  c.q_signal = predicted_gain(c.eta_total, p.y0, p.mu);
  c.q_decoy = predicted_gain(c.eta_total, p.y0, p.nu);
  c.q_vacuum = p.y0;
  auto qber = [&](double m, double q) {
    return q > 0.0 ? predicted_error_gain(c.eta_total, p.y0, p.e0, p.e_det, m) / q : 0.0;
  };
  c.e_signal = qber(p.mu, c.q_signal);
  c.e_decoy = qber(p.nu, c.q_decoy);
  return c;
}

/// The two field links. mu/nu and the fiber budgets are the deployed
/// values; e_det is calibrated per link so the predicted signal QBER lands
/// on the measured ~1.6% / ~1.4%.
inline LinkParams link_preset(const std::string& name) {
  LinkParams p;
  if (name == "binhu-ustc") {
    p.mu = 0.60;
    p.nu = 0.20;
    p.fiber_loss_db = 4.5;
    p.e_det = 0.0109;
  } else if (name == "ustc-xinglin") {
    p.mu = 0.65;
    p.nu = 0.08;
    p.fiber_loss_db = 5.6;
    p.e_det = 0.0083;
  } else {
    throw ConfigError("unknown link preset: " + name);
  }
  p.validate();
  return p;
}

/// Builds LinkParams from a config section; a `preset` key seeds the
/// values, any other key overrides that field.
inline LinkParams link_from_section(const ConfigSection& s) {
  LinkParams p;
  if (s.has("preset")) p = link_preset(s.get("preset"));
  p.mu = s.get_double_or("mu", p.mu);
  p.nu = s.get_double_or("nu", p.nu);
  if (s.has("state_mix")) {
    std::istringstream ss(s.get("state_mix"));
    std::string tok;
    std::array<unsigned, 3> mix{};
    for (auto& m : mix) {
      if (!std::getline(ss, tok, ':')) throw ConfigError("state_mix wants s:d:v");
      m = static_cast<unsigned>(std::stoul(tok));
    }
    p.state_mix = mix;
  }
  p.clock_hz = s.get_double_or("clock_hz", p.clock_hz);
  p.fiber_loss_db = s.get_double_or("fiber_loss_db", p.fiber_loss_db);
  p.receiver_insertion_db = s.get_double_or("receiver_insertion_db", p.receiver_insertion_db);
  p.det_efficiency = s.get_double_or("det_efficiency", p.det_efficiency);
  p.y0 = s.get_double_or("y0", p.y0);
  p.e_det = s.get_double_or("e_det", p.e_det);
  p.e0 = s.get_double_or("e0", p.e0);
  p.dead_time_s = s.get_double_or("dead_time_s", p.dead_time_s);
  p.afterpulse_prob = s.get_double_or("afterpulse_prob", p.afterpulse_prob);
  p.block_seconds = s.get_double_or("block_seconds", p.block_seconds);
  p.sigma_k = s.get_double_or("sigma_k", p.sigma_k);
  p.validate();
  return p;
}

}  // namespace qkd
