#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "pwamrac/signal.hpp"
#include "pwamrac/types.hpp"

namespace pwamrac {

enum class DisturbanceKind { none, sinusoidal, bounded_random };

// State-level perturbation d(x, u, t) in R^n added to x_dot: covers
// linearization error, unmodeled dynamics, external forces. Every evaluator
// clips to ||d||_2 <= d_bar after generation, so the bound holds no matter
// what the underlying generator produced.
struct DisturbanceSpec {
  DisturbanceKind kind = DisturbanceKind::none;
  double d_bar = 0.0;
  std::vector<Sinusoid> components;  // sinusoidal kind, one per state equation
  int tones = 6;                     // bounded_random kind
};

class Disturbance {
 public:
  using Fn = std::function<Vec(const Vec& x, const Vec& u, double t)>;

  Disturbance() = default;

  // Custom hook; the bound is still enforced by clipping.
  Disturbance(Fn fn, double d_bar) : fn_(std::move(fn)), d_bar_(d_bar) {}

  static Disturbance none(Eigen::Index n) {
    Disturbance d;
    d.fn_ = [n](const Vec&, const Vec&, double) { return Vec::Zero(n).eval(); };
    d.d_bar_ = 0.0;
    return d;
  }

  // Deterministic function of t alone: safe to re-evaluate during the
  // boundary bisection without breaking reproducibility.
  static Disturbance make(const DisturbanceSpec& spec, Eigen::Index n, std::uint64_t seed) {
    if (spec.d_bar < 0.0) throw ValidationError("disturbance bound must be nonnegative");
    switch (spec.kind) {
      case DisturbanceKind::none:
        return none(n);
      case DisturbanceKind::sinusoidal: {
        if (static_cast<Eigen::Index>(spec.components.size()) != n)
          throw ValidationError("sinusoidal disturbance needs one component per state equation");
        auto comps = spec.components;
        Disturbance d;
        d.d_bar_ = spec.d_bar;
        d.fn_ = [comps, n](const Vec&, const Vec&, double t) {
          Vec v(n);
          for (Eigen::Index i = 0; i < n; ++i)
            v[i] = comps[i].amplitude * std::sin(comps[i].omega * t + comps[i].phase);
          return v;
        };
        return d;
      }
      case DisturbanceKind::bounded_random: {
        if (spec.tones < 1) throw ValidationError("bounded_random disturbance needs tones >= 1");
        // Multisine with seeded parameters, deliberately oversized so the
        // norm clip is active most of the time (worst-case-ish magnitude).
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> uomega(0.1, 5.0);
        std::uniform_real_distribution<double> uphase(0.0, 2.0 * M_PI);
        std::uniform_real_distribution<double> uamp(0.5, 1.0);
        std::vector<std::vector<Sinusoid>> comps(n);
        const double raw_scale = 2.0 * spec.d_bar / std::sqrt(static_cast<double>(spec.tones));
        for (Eigen::Index i = 0; i < n; ++i)
          for (int k = 0; k < spec.tones; ++k)
            comps[i].push_back({raw_scale * uamp(rng), uomega(rng), uphase(rng)});
        Disturbance d;
        d.d_bar_ = spec.d_bar;
        d.fn_ = [comps, n](const Vec&, const Vec&, double t) {
          Vec v(n);
          for (Eigen::Index i = 0; i < n; ++i) {
            double acc = 0.0;
            for (const auto& s : comps[i]) acc += s.amplitude * std::sin(s.omega * t + s.phase);
            v[i] = acc;
          }
          return v;
        };
        return d;
      }
    }
    throw ValidationError("unknown disturbance kind");
  }

  double d_bar() const { return d_bar_; }
  bool active() const { return d_bar_ > 0.0; }

  Vec eval(const Vec& x, const Vec& u, double t) const {
    if (!fn_) throw ValidationError("disturbance evaluator not initialized");
    Vec v = fn_(x, u, t);
    const double norm = v.norm();
    if (norm > d_bar_ && norm > 0.0) v *= d_bar_ / norm;
    return v;
  }

 private:
  Fn fn_;
  double d_bar_ = 0.0;
};

}  // namespace pwamrac
