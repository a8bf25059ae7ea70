#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "pwamrac/types.hpp"

namespace pwamrac {

struct Sinusoid {
  double amplitude = 0.0;
  double omega = 0.0;  // rad/s
  double phase = 0.0;
};

// Rectangular pulses repeated with a fixed period; value applies on the open
// interval (start, end) within each period, zero elsewhere.
struct PulseWindow {
  double value = 0.0;
  double start = 0.0;
  double end = 0.0;
};

struct PulseSchedule {
  double period = 0.0;
  std::vector<PulseWindow> windows;

  double eval(double t) const {
    if (windows.empty()) return 0.0;
    const double tm = t - period * std::floor(t / period);
    for (const auto& w : windows)
      if (tm > w.start && tm < w.end) return w.value;
    return 0.0;
  }

  void validate(const std::string& what) const {
    if (windows.empty()) return;
    if (!(period > 0.0)) throw ValidationError(what + ": schedule period must be positive");
    for (const auto& w : windows)
      if (!(w.start >= 0.0) || !(w.start < w.end) || !(w.end <= period))
        throw ValidationError(what + ": window must satisfy 0 <= start < end <= period");
  }
};

struct SignalChannel {
  std::vector<Sinusoid> sinusoids;
  PulseSchedule schedule;

  double eval(double t) const {
    double v = schedule.eval(t);
    for (const auto& s : sinusoids) v += s.amplitude * std::sin(s.omega * t + s.phase);
    return v;
  }
};

// Deterministic reference input r(t), one channel per plant input.
struct InputSignal {
  std::vector<SignalChannel> channels;

  Vec eval(double t) const {
    Vec r(channels.size());
    for (std::size_t i = 0; i < channels.size(); ++i) r[i] = channels[i].eval(t);
    return r;
  }

  void validate(Eigen::Index p) const {
    if (static_cast<Eigen::Index>(channels.size()) != p)
      throw ValidationError("input signal needs " + std::to_string(p) + " channels, has " +
                            std::to_string(channels.size()));
    for (std::size_t i = 0; i < channels.size(); ++i)
      channels[i].schedule.validate("input channel " + std::to_string(i));
  }
};

}  // namespace pwamrac
