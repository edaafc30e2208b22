#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "qkd/errors.hpp"
#include "qkd/linkmodel.hpp"

namespace qkd {

/// H2(x) = -x log2 x - (1-x) log2 (1-x), with 0 log 0 := 0.
inline double binary_entropy(double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw std::domain_error("binary_entropy: x outside [0,1]");
  if (x == 0.0 || x == 1.0) return 0.0;
  return -x * std::log2(x) - (1.0 - x) * std::log2(1.0 - x);
}

struct Bounds {
  double lower = 0.0;
  double upper = 0.0;
};

/// Statistical fluctuation band value * (1 +- k / sqrt(n * value)) for a
/// probability estimated from n trials; the lower bound clamps at zero.
inline Bounds fluctuation_bounds(double value, double n, double k) {
  if (!(k > 0.0)) throw std::domain_error("fluctuation_bounds: k must be positive");
  if (!(n * value > 0.0))
    throw DegenerateStatisticsError("fluctuation_bounds: n * value is zero");
  double rel = k / std::sqrt(n * value);
  return {std::max(0.0, value * (1.0 - rel)), value * (1.0 + rel)};
}

/// Lower bound on the single-photon gain from the signal/decoy gain pair.
/// A non-positive result is returned as-is; callers must treat it as
/// "bound unavailable" rather than clamp it silently.
inline double q1_lower(double mu, double nu, double q_mu, double q_nu_lower,
                       double y0_upper) {
  if (!(nu > 0.0 && nu < mu))
    throw std::domain_error("q1_lower: require 0 < nu < mu");
  double mu2 = mu * mu, nu2 = nu * nu;
  double pre = mu2 * std::exp(-mu) / (mu * nu - nu2);
  double bracket = q_nu_lower * std::exp(nu) - q_mu * std::exp(mu) * nu2 / mu2 -
                   y0_upper * (mu2 - nu2) / mu2;
  return pre * bracket;
}

/// Upper bound on the single-photon error rate. Values above 1 mean the
/// estimate is invalid for this block.
inline double e1_upper(double e_mu, double q_mu, double y0_lower, double mu,
                       double q1_lower_bound) {
  if (!(q1_lower_bound > 0.0))
    throw BoundUnavailableError("e1_upper: single-photon gain bound is not positive");
  return (e_mu * q_mu - y0_lower * std::exp(-mu) / 2.0) / q1_lower_bound;
}

/// Secure key fraction per pulse, clamped at zero. f >= 1 is the error
/// correction inefficiency relative to the Shannon limit.
inline double key_rate(double q, double q_mu, double e_mu, double f,
                       double q1_lower_bound, double e1_upper_bound) {
  if (!(f >= 1.0)) throw std::domain_error("key_rate: f must be >= 1");
  if (e1_upper_bound < 0.0 || e1_upper_bound > 1.0) return 0.0;
  double r = q * (-q_mu * f * binary_entropy(e_mu) +
                  q1_lower_bound * (1.0 - binary_entropy(e1_upper_bound)));
  return std::max(0.0, r);
}

/// Two-sided Gaussian tail probability 2 * Phi(-k): the residual failure
/// probability of a k-sigma confidence band.
inline double confidence_from_sigma(double k) {
  if (!(k > 0.0)) throw std::domain_error("confidence_from_sigma: k must be positive");
  return std::erfc(k / std::sqrt(2.0));
}

/// Everything the bound analysis of one block produces. `valid` is false
/// when a bound degenerated; the rate is then zero and `failure` says why.
struct DecoyEstimate {
  double q_mu = 0.0, e_mu = 0.0;
  double q_nu = 0.0, e_nu = 0.0;
  double y0_meas = 0.0;
  std::uint64_t n_nu = 0, n0 = 0;
  double q_nu_lower = 0.0, y0_lower = 0.0, y0_upper = 0.0;
  double q1_lower = 0.0;
  double e1_upper = 0.0;
  double q = 0.0;   // protocol efficiency used in the rate
  double f = 1.0;   // error correction inefficiency used in the rate
  double rate = 0.0;
  double confidence = 1.0;
  bool valid = false;
  std::string failure;  // empty when valid
};

/// Full bound chain on measured per-class statistics. Degenerate
/// statistics or unavailable bounds do not throw: they yield an invalid
/// estimate with rate zero, which the pipeline charges as a failed block.
inline DecoyEstimate analyze(const PerClassStats& stats, const LinkParams& p,
                             double q, double f) {
  const auto& sig = stats[static_cast<unsigned>(PulseClass::signal)];
  const auto& dec = stats[static_cast<unsigned>(PulseClass::decoy)];
  const auto& vac = stats[static_cast<unsigned>(PulseClass::vacuum)];

  DecoyEstimate est;
  est.q = q;
  est.f = f;
  est.confidence = confidence_from_sigma(p.sigma_k);

  if (sig.sent == 0 || dec.sent == 0 || vac.sent == 0) {
    est.failure = "missing pulse class";
    return est;
  }

  est.q_mu = sig.gain();
  est.e_mu = sig.qber();
  est.q_nu = dec.gain();
  est.e_nu = dec.qber();   // reported for fidelity; unused by the bounds
  est.y0_meas = vac.gain();
  est.n_nu = dec.sent;
  est.n0 = vac.sent;

  try {
    est.q_nu_lower =
        fluctuation_bounds(est.q_nu, static_cast<double>(est.n_nu), p.sigma_k).lower;
    auto y0b = fluctuation_bounds(est.y0_meas, static_cast<double>(est.n0), p.sigma_k);
    est.y0_lower = y0b.lower;
    est.y0_upper = y0b.upper;
    est.q1_lower = q1_lower(p.mu, p.nu, est.q_mu, est.q_nu_lower, est.y0_upper);
    if (!(est.q1_lower > 0.0)) {
      est.failure = "single-photon gain bound not positive";
      est.q1_lower = std::min(est.q1_lower, 0.0);
      return est;
    }
    est.e1_upper = e1_upper(est.e_mu, est.q_mu, est.y0_lower, p.mu, est.q1_lower);
    if (est.e1_upper < 0.0 || est.e1_upper > 1.0) {
      est.failure = "single-photon error bound outside [0,1]";
      return est;
    }
    est.rate = key_rate(q, est.q_mu, est.e_mu, f, est.q1_lower, est.e1_upper);
    est.valid = true;
  } catch (const DegenerateStatisticsError& e) {
    est.failure = e.what();
  } catch (const BoundUnavailableError& e) {
    est.failure = e.what();
  }
  return est;
}

}  // namespace qkd
