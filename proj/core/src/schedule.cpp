#include "hopgat/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hopgat/errors.hpp"

namespace hopgat {

void ScheduleConfig::validate() const {
  if (!(temp_fin > 0.0 && temp_ini >= temp_fin)) throw ConfigError("schedule needs temp_ini >= temp_fin > 0");
  if (!(decay > 0.0 && decay < 1.0)) throw ConfigError("schedule decay must be in (0, 1)");
  if (!(gamma_str > 0.0 && gamma_str <= 1.0)) throw ConfigError("saturation gamma must be in (0, 1]");
}

ScheduleState ScheduleState::initial(const ScheduleConfig& config) {
  config.validate();
  ScheduleState s;
  s.temp = config.temp_ini;
  return s;
}

void step_temperature(ScheduleState& state, const ScheduleConfig& config) {
  const double next = state.temp * config.decay;
  if (next >= config.temp_fin) {
    state.temp = next;
  } else {
    state.saturated = true;
  }
  ++state.steps;
}

double compute_gamma(double attention_loss, ScheduleState& state, const ScheduleConfig& config) {
  if (!(attention_loss >= 0.0)) {
    throw UsageError("compute_gamma: attention loss must be non-negative, got " + std::to_string(attention_loss));
  }
  double gamma = attention_loss == 0.0 ? 0.0 : std::exp(-(1.0 / attention_loss) / state.temp);
  if (state.saturated) gamma = std::min(gamma, config.gamma_str);
  state.gamma = gamma;
  return gamma;
}

std::size_t steps_to_saturation(const ScheduleConfig& config) {
  ScheduleState s = ScheduleState::initial(config);
  while (!s.saturated) step_temperature(s, config);
  return s.steps;
}

double total_loss(double classification_loss, double attention_loss, double gamma) {
  return (1.0 - gamma) * classification_loss + gamma * attention_loss;
}

Var total_loss(Var classification_loss, Var attention_loss, double gamma) {
  return scale(classification_loss, 1.0 - gamma) + scale(attention_loss, gamma);
}

}  // namespace hopgat
