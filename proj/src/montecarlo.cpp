#include "entrobound/montecarlo.hpp"

#include <cmath>

#include "entrobound/parallel.hpp"
#include "entrobound/rng.hpp"

namespace entrobound {

namespace {

void check_policy(const KernelModel& model, const GridPartition* partition,
                  const Policy* policy) {
  if (model.controlled()) {
    if (!policy || !partition)
      throw GuardError("controlled model requires a policy and its partition");
    if (policy->num_states != partition->cell_count())
      throw GuardError("policy shape does not match the partition");
    if (policy->horizon < model.horizon())
      throw GuardError("policy horizon shorter than the model horizon");
  }
}

// Samples one trajectory; returns states flat and the action sequence.
void sample_one(const KernelModel& model, const GridPartition* partition,
                const Policy* policy, std::mt19937_64& rng, std::vector<double>& states,
                std::vector<int>& actions) {
  const int d = model.state_dim();
  const int horizon = model.horizon();
  states.resize(static_cast<std::size_t>(horizon + 1) * d);
  actions.clear();
  model.sample_initial(rng, {states.data(), static_cast<std::size_t>(d)});
  for (int k = 0; k < horizon; ++k) {
    std::span<const double> x{states.data() + static_cast<std::size_t>(k) * d,
                              static_cast<std::size_t>(d)};
    int action = 0;
    if (model.controlled()) {
      action = policy->at(k, partition->cell_of(x));
      actions.push_back(action);
    }
    model.sample_step(x, action, rng,
                      {states.data() + static_cast<std::size_t>(k + 1) * d,
                       static_cast<std::size_t>(d)});
  }
}

McEstimate reduce(const std::vector<double>& values, std::uint64_t seed) {
  McEstimate est;
  est.samples = values.size();
  est.seed = seed;
  double sum = 0.0;
  for (double v : values) sum += v;
  est.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - est.mean) * (v - est.mean);
    double var = ss / static_cast<double>(values.size() - 1);
    est.std_error = std::sqrt(var / static_cast<double>(values.size()));
  }
  return est;
}

}  // namespace

std::vector<Trajectory> simulate(const KernelModel& model, const GridPartition* partition,
                                 const Policy* policy, std::uint64_t samples,
                                 std::uint64_t seed) {
  check_policy(model, partition, policy);
  std::vector<Trajectory> out(samples);
  parallel_for(samples, [&](std::size_t t) {
    auto rng = make_stream(seed, t);
    out[t].state_dim = model.state_dim();
    sample_one(model, partition, policy, rng, out[t].states, out[t].actions);
  });
  return out;
}

McEstimate mc_kl_to_uniform(const KernelModel& model, const GridPartition* partition,
                            const Policy* policy, std::uint64_t samples,
                            std::uint64_t seed, LogBase base) {
  check_policy(model, partition, policy);
  if (samples < 1) throw GuardError("mc_kl_to_uniform: need at least one sample");
  const int d = model.state_dim();
  const int horizon = model.horizon();
  const double log_volume = (horizon + 1) * std::log(model.box().volume());
  std::vector<double> values(samples);
  parallel_for(samples, [&](std::size_t t) {
    auto rng = make_stream(seed, t);
    std::vector<double> states;
    std::vector<int> actions;
    sample_one(model, partition, policy, rng, states, actions);
    auto state = [&](int k) {
      return std::span<const double>{states.data() + static_cast<std::size_t>(k) * d,
                                     static_cast<std::size_t>(d)};
    };
    double q0 = model.initial_density(state(0));
    if (q0 <= 0.0)
      throw NumericalError("zero density at a sampled initial state "
                           "(model/sampler mismatch)");
    double log_t = std::log(q0);
    for (int k = 0; k < horizon; ++k) {
      int action = model.controlled() ? actions[k] : 0;
      double q = model.transition_density(state(k), state(k + 1), action);
      if (q <= 0.0)
        throw NumericalError("zero density along a sampled trajectory "
                             "(model/sampler mismatch)");
      log_t += std::log(q);
    }
    values[t] = (log_t + log_volume) / log_base_divisor(base);
  });
  return reduce(values, seed);
}

McEstimate mc_objective(const KernelModel& model, const GridPartition* partition,
                        const Policy* policy, int sigma, std::uint64_t samples,
                        std::uint64_t seed, LogBase base) {
  check_policy(model, partition, policy);
  if (!model.has_costs()) throw GuardError("mc_objective: model has no stage cost");
  if (samples < 1) throw GuardError("mc_objective: need at least one sample");
  const int d = model.state_dim();
  const int horizon = model.horizon();
  const double log_volume = (horizon + 1) * std::log(model.box().volume());
  std::vector<double> values(samples);
  parallel_for(samples, [&](std::size_t t) {
    auto rng = make_stream(seed, t);
    std::vector<double> states;
    std::vector<int> actions;
    sample_one(model, partition, policy, rng, states, actions);
    auto state = [&](int k) {
      return std::span<const double>{states.data() + static_cast<std::size_t>(k) * d,
                                     static_cast<std::size_t>(d)};
    };
    double q0 = model.initial_density(state(0));
    if (q0 <= 0.0)
      throw NumericalError("zero density at a sampled initial state "
                           "(model/sampler mismatch)");
    double log_t = std::log(q0);
    double cost = 0.0;
    for (int k = 0; k < horizon; ++k) {
      int action = model.controlled() ? actions[k] : 0;
      double q = model.transition_density(state(k), state(k + 1), action);
      if (q <= 0.0)
        throw NumericalError("zero density along a sampled trajectory "
                             "(model/sampler mismatch)");
      log_t += std::log(q);
      cost += model.stage_cost(state(k), action);
    }
    values[t] = cost + sigma * (log_t + log_volume) / log_base_divisor(base);
  });
  return reduce(values, seed);
}

McEstimate mc_expected_cost(const KernelModel& model, const GridPartition* partition,
                            const Policy* policy, std::uint64_t samples,
                            std::uint64_t seed) {
  check_policy(model, partition, policy);
  if (!model.has_costs()) throw GuardError("mc_expected_cost: model has no stage cost");
  if (samples < 1) throw GuardError("mc_expected_cost: need at least one sample");
  const int d = model.state_dim();
  const int horizon = model.horizon();
  std::vector<double> values(samples);
  parallel_for(samples, [&](std::size_t t) {
    auto rng = make_stream(seed, t);
    std::vector<double> states;
    std::vector<int> actions;
    sample_one(model, partition, policy, rng, states, actions);
    double cost = 0.0;
    for (int k = 0; k < horizon; ++k) {
      std::span<const double> x{states.data() + static_cast<std::size_t>(k) * d,
                                static_cast<std::size_t>(d)};
      cost += model.stage_cost(x, model.controlled() ? actions[k] : 0);
    }
    values[t] = cost;
  });
  return reduce(values, seed);
}

}  // namespace entrobound
