#pragma once

#include <cstddef>

#include "hopgat/tensor.hpp"

namespace hopgat {

// Simulated-annealing balance between the classification and attention
// losses. The temperature decays geometrically from temp_ini and freezes once
// the next step would drop below temp_fin; from then on γ is capped at
// gamma_str.
struct ScheduleConfig {
  double temp_ini = 100.0;
  double temp_fin = 1.0;
  double decay = 0.85;
  double gamma_str = 0.25;

  void validate() const;
};

struct ScheduleState {
  double temp = 0.0;
  bool saturated = false;
  double gamma = 0.0;
  std::size_t steps = 0;

  static ScheduleState initial(const ScheduleConfig& config);
};

// temp ← temp·decay unless that falls below temp_fin, in which case the
// temperature holds and the state becomes saturated.
void step_temperature(ScheduleState& state, const ScheduleConfig& config);

// γ = exp(-(1/L_att)/temp), capped at gamma_str once saturated. L_att = 0
// maps to γ = 0. Stores the result in state.gamma.
double compute_gamma(double attention_loss, ScheduleState& state, const ScheduleConfig& config);

// Number of steps until the temperature saturates.
std::size_t steps_to_saturation(const ScheduleConfig& config);

double total_loss(double classification_loss, double attention_loss, double gamma);
// Same combination on a tape; γ is a constant, no gradient flows through it.
Var total_loss(Var classification_loss, Var attention_loss, double gamma);

}  // namespace hopgat
