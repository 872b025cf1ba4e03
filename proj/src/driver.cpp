#include "ipf/driver.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

#include "ipf/errors.hpp"
#include "ipf/rng.hpp"

namespace ipf {

std::string to_string(FilterKind kind) {
  switch (kind) {
    case FilterKind::implicit: return "implicit";
    case FilterKind::implicit_backward: return "implicit_backward";
    case FilterKind::sir: return "sir";
  }
  return "unknown";
}

FilterKind filter_from_string(const std::string& name) {
  static const std::map<std::string, FilterKind> kinds{
      {"implicit", FilterKind::implicit}, {"implicit_backward", FilterKind::implicit_backward}, {"sir", FilterKind::sir}};
  auto it = kinds.find(name);
  if (it == kinds.end()) throw ConfigError("unknown filter '" + name + "'");
  return it->second;
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::linear: return "linear";
    case ModelKind::iid_gaussian: return "iid_gaussian";
    case ModelKind::plankton: return "plankton";
  }
  return "unknown";
}

ModelKind model_from_string(const std::string& name) {
  static const std::map<std::string, ModelKind> kinds{
      {"linear", ModelKind::linear}, {"iid_gaussian", ModelKind::iid_gaussian}, {"plankton", ModelKind::plankton}};
  auto it = kinds.find(name);
  if (it == kinds.end()) throw ConfigError("unknown model '" + name + "'");
  return it->second;
}

StateSpaceModel build_model(const ModelSpec& spec) {
  switch (spec.kind) {
    case ModelKind::linear:
      if (spec.linear_state < 1 || spec.linear_obs < 0 || spec.linear_obs > spec.linear_state)
        throw ConfigError("linear model: need 0 <= obs <= state, state >= 1");
      return random_stable_linear_model(spec.linear_state, spec.linear_obs, spec.linear_seed);
    case ModelKind::iid_gaussian: return iid_gaussian_model(spec.dims);
    case ModelKind::plankton: return plankton_model(spec.plankton);
  }
  throw ConfigError("unknown model kind");
}

std::vector<std::int64_t> ObsSchedule::resolve(std::int64_t steps) const {
  if (!times.empty()) return times;
  if (interval < 1 || first < 1) throw ConfigError("observations: first and interval must be >= 1");
  std::vector<std::int64_t> out;
  for (std::int64_t t = first; t <= steps; t += interval) {
    if (count && static_cast<std::int64_t>(out.size()) >= *count) break;
    out.push_back(t);
  }
  return out;
}

void RunConfig::validate() const {
  if (particles < 1) throw ConfigError("run: particles must be >= 1");
  if (steps < 0) throw ConfigError("run: steps must be >= 0");
  if (backward_depth < 0) throw ConfigError("run: backward_depth must be >= 0");
  resample.validate();
  iteration.validate();
}

void RunMetrics::summarize() {
  rmse = 0.0;
  distinct_mean = distinct_mean_observed = max_weight_mean = iters_mean = 0.0;
  retries = 0;
  if (steps.empty()) {
    rmse_per_component = Vector();
    return;
  }
  const Index m = steps.front().mean.size();
  rmse_per_component = Vector::Zero(m);
  std::size_t with_truth = 0;
  std::size_t observed = 0;
  for (const auto& s : steps) {
    distinct_mean += s.distinct_count;
    max_weight_mean += s.max_weight;
    iters_mean += s.iters_mean;
    retries += s.retries;
    if (s.observation) {
      distinct_mean_observed += s.distinct_count;
      ++observed;
    }
    if (s.truth) {
      rmse_per_component += (s.mean - *s.truth).array().square().matrix();
      ++with_truth;
    }
  }
  const double count = static_cast<double>(steps.size());
  distinct_mean /= count;
  max_weight_mean /= count;
  iters_mean /= count;
  if (observed > 0) distinct_mean_observed /= static_cast<double>(observed);
  if (with_truth > 0) {
    rmse = std::sqrt(rmse_per_component.sum() / static_cast<double>(with_truth * static_cast<std::size_t>(m)));
    rmse_per_component = (rmse_per_component / static_cast<double>(with_truth)).cwiseSqrt();
  }
}

namespace {

struct ParticleUpdate {
  Vector state;
  std::optional<Vector> intermediate;
  std::optional<std::deque<Vector>> history;
  double increment = 0.0;
  int iters = 0;
  int retries = 0;
};

class Runner {
 public:
  Runner(const RunConfig& cfg, const StateSpaceModel& model, const TwinData& data, Execution exec)
      : cfg_(cfg),
        model_(model),
        data_(data),
        exec_(exec),
        m_(model.dim_state),
        history_limit_(static_cast<std::size_t>(std::max(cfg.backward_depth, 1) + 1)) {}

  RunMetrics run() {
    cfg_.validate();
    model_.validate();
    if (static_cast<std::int64_t>(data_.observations.size()) < cfg_.steps)
      throw ConfigError("run: observation records shorter than the run");
    metrics_.filter = to_string(cfg_.filter);
    if (cfg_.steps == 0) return metrics_;
    if (cfg_.track_moments) init_moments();

    ensemble_ = Ensemble::from_state(model_.initial_state, cfg_.particles, cfg_.master_seed);
    std::int64_t n = 1;
    while (n <= cfg_.steps) {
      if (cfg_.filter == FilterKind::sir) {
        sir_step_all(n);
        n += 1;
      } else if (obs_at(n)) {
        implicit_observed(n);
        n += 1;
      } else if (n < cfg_.steps && obs_at(n + 1)) {
        implicit_pair(n);
        n += 2;
      } else {
        implicit_prior(n);
        n += 1;
      }
    }
    metrics_.summarize();
    return std::move(metrics_);
  }

 private:
  const Vector* obs_at(std::int64_t n) const {
    if (n < 1 || n > static_cast<std::int64_t>(data_.observations.size())) return nullptr;
    const auto& rec = data_.observations[static_cast<std::size_t>(n - 1)];
    return rec.present ? &rec.value : nullptr;
  }

  int count() const { return ensemble_.size(); }

  std::vector<Vector> draw(std::int64_t n, StreamRole role) const {
    std::vector<Vector> out(static_cast<std::size_t>(count()));
    for (int i = 0; i < count(); ++i)
      out[static_cast<std::size_t>(i)] = rng_substream(cfg_.master_seed, n, i, role).normals(m_);
    return out;
  }

  template <class Body>
  std::vector<ParticleUpdate> per_particle(std::int64_t n, Body&& body) {
    std::vector<ParticleUpdate> out(static_cast<std::size_t>(count()));
    for_each_index(exec_, count(), cfg_.workers, [&](int i) {
      try {
        out[static_cast<std::size_t>(i)] = body(i);
      } catch (const FilterError&) {
        throw;
      } catch (const Error& e) {
        throw FilterError(e.what(), static_cast<int>(n), i);
      }
    });
    return out;
  }

  void apply(std::vector<ParticleUpdate>& updates) {
    for (int i = 0; i < count(); ++i) {
      auto& p = ensemble_.particles[static_cast<std::size_t>(i)];
      auto& u = updates[static_cast<std::size_t>(i)];
      p.log_weight += u.increment;
      if (u.intermediate) {
        model_.apply_projection(*u.intermediate);
        p.advance(*u.intermediate, history_limit_);
      }
      model_.apply_projection(u.state);
      p.advance(u.state, history_limit_);
    }
  }

  // Log of the transition density's normalization over one leg, so that
  // weights stay comparable across particles whose legs differ (state
  // dependent G, or a halved step after a retry).
  static double leg_lognorm(const StateSpaceModel& model, const Vector& x, double t) {
    return model.diffusion(x, t).array().abs().log().sum();
  }

  // Forward step to step n, retried once as a pair over two half steps.
  ParticleUpdate observed_update(std::int64_t n, int i, const Vector& x_prev, const Vector& b, const Vector& xi) {
    const double t = model_.time_of(n - 1);
    try {
      StepResult r = forward_step(model_, x_prev, t, b, xi, cfg_.iteration);
      const double inc = r.log_weight_increment() - leg_lognorm(model_, x_prev, t);
      return ParticleUpdate{std::move(r.new_state), std::nullopt, std::nullopt, inc, r.iters, 0};
    } catch (const Nonconvergence&) {
      if (!cfg_.retry_half_step) throw;
    }
    const StateSpaceModel half = model_.with_delta(model_.delta / 2.0);
    const Vector xi_half = rng_substream(cfg_.master_seed, n, i, StreamRole::retry).normals(m_);
    StepResult r = sparse_step(half, x_prev, t, b, xi_half, xi, cfg_.iteration);
    const double inc = r.log_weight_increment() - leg_lognorm(half, x_prev, t) -
                       leg_lognorm(half, *r.intermediate, t + half.delta);
    return ParticleUpdate{std::move(r.new_state), std::nullopt, std::nullopt, inc, r.iters, 1};
  }

  void implicit_observed(std::int64_t n) {
    const Vector& b = *obs_at(n);
    const auto xis = draw(n, StreamRole::reference);
    auto updates = per_particle(n, [&](int i) {
      return observed_update(n, i, ensemble_.particles[static_cast<std::size_t>(i)].state, b,
                             xis[static_cast<std::size_t>(i)]);
    });
    apply(updates);
    if (cfg_.filter == FilterKind::implicit_backward) backward_pass(n);
    record(n, current_states(), updates, true);
    advance_moments(n);
  }

  void backward_pass(std::int64_t n) {
    std::vector<std::vector<Vector>> xis(static_cast<std::size_t>(count()));
    for (int i = 0; i < count(); ++i) {
      auto s = rng_substream(cfg_.master_seed, n, i, StreamRole::backward);
      for (int k = 0; k < cfg_.backward_depth; ++k) xis[static_cast<std::size_t>(i)].push_back(s.normals(m_));
    }
    auto updates = per_particle(n, [&](int i) {
      const auto& p = ensemble_.particles[static_cast<std::size_t>(i)];
      ParticleUpdate u;
      u.state = p.state;
      const std::size_t h = p.history.size();
      std::deque<Vector> history = p.history;
      for (int k = 1; k <= cfg_.backward_depth; ++k) {
        if (h < static_cast<std::size_t>(k) + 1) break;
        const std::size_t idx = h - static_cast<std::size_t>(k);  // X^{n-k}
        const Vector& x_next = k == 1 ? p.state : history[idx + 1];
        const std::int64_t mid = n - k;
        StepResult r = backward_step(model_, history[idx - 1], model_.time_of(mid - 1), x_next, obs_at(mid),
                                     xis[static_cast<std::size_t>(i)][static_cast<std::size_t>(k - 1)],
                                     cfg_.iteration);
        model_.apply_projection(r.new_state);
        u.increment += r.log_weight_increment() - leg_lognorm(model_, history[idx - 1], model_.time_of(mid - 1)) -
                       leg_lognorm(model_, r.new_state, model_.time_of(mid));
        history[idx] = std::move(r.new_state);
        u.iters += r.iters;
      }
      u.history = std::move(history);
      return u;
    });
    for (int i = 0; i < count(); ++i) {
      auto& p = ensemble_.particles[static_cast<std::size_t>(i)];
      p.log_weight += updates[static_cast<std::size_t>(i)].increment;
      p.history = std::move(*updates[static_cast<std::size_t>(i)].history);
    }
  }

  // Joint sample of steps n and n + 1 given the observation at n + 1. If the
  // pair iteration stalls, step n is drawn from the prior instead and step
  // n + 1 becomes an ordinary observed step.
  ParticleUpdate pair_update(std::int64_t n, int i, const Vector& x_prev, const Vector& b, const Vector& xi_n,
                             const Vector& xi_np1) {
    const double t = model_.time_of(n - 1);
    try {
      StepResult r = sparse_step(model_, x_prev, t, b, xi_n, xi_np1, cfg_.iteration);
      const double inc = r.log_weight_increment() - leg_lognorm(model_, x_prev, t) -
                         leg_lognorm(model_, *r.intermediate, t + model_.delta);
      return ParticleUpdate{std::move(r.new_state), std::move(r.intermediate), std::nullopt, inc, r.iters, 0};
    } catch (const Nonconvergence&) {
      if (!cfg_.retry_half_step) throw;
    }
    StepResult prior = prior_step(model_, x_prev, t, xi_n, cfg_.iteration);
    Vector mid = std::move(prior.new_state);
    model_.apply_projection(mid);
    ParticleUpdate u = observed_update(n + 1, i, mid, b, xi_np1);
    u.increment += prior.log_weight_increment() - leg_lognorm(model_, x_prev, t);
    u.intermediate = std::move(mid);
    u.iters += prior.iters;
    u.retries += 1;
    return u;
  }

  void implicit_pair(std::int64_t n) {
    const Vector& b = *obs_at(n + 1);
    const auto xi_n = draw(n, StreamRole::reference);
    const auto xi_np1 = draw(n + 1, StreamRole::reference);
    auto updates = per_particle(n, [&](int i) {
      return pair_update(n, i, ensemble_.particles[static_cast<std::size_t>(i)].state, b,
                         xi_n[static_cast<std::size_t>(i)], xi_np1[static_cast<std::size_t>(i)]);
    });
    std::vector<Vector> mids(static_cast<std::size_t>(count()));
    for (int i = 0; i < count(); ++i) {
      Vector x = *updates[static_cast<std::size_t>(i)].intermediate;
      model_.apply_projection(x);
      mids[static_cast<std::size_t>(i)] = std::move(x);
    }
    apply(updates);
    record(n, mids, updates, false);
    advance_moments(n);
    record(n + 1, current_states(), updates, true);
    advance_moments(n + 1);
  }

  void implicit_prior(std::int64_t n) {
    const double t = model_.time_of(n - 1);
    const auto xis = draw(n, StreamRole::reference);
    auto updates = per_particle(n, [&](int i) {
      const Vector& x_prev = ensemble_.particles[static_cast<std::size_t>(i)].state;
      StepResult r = prior_step(model_, x_prev, t, xis[static_cast<std::size_t>(i)], cfg_.iteration);
      const double inc = r.log_weight_increment() - leg_lognorm(model_, x_prev, t);
      return ParticleUpdate{std::move(r.new_state), std::nullopt, std::nullopt, inc, r.iters, 0};
    });
    apply(updates);
    record(n, current_states(), updates, true);
    advance_moments(n);
  }

  void sir_step_all(std::int64_t n) {
    const double t = model_.time_of(n - 1);
    const Vector* b = obs_at(n);
    const auto noises = draw(n, StreamRole::sir);
    auto updates = per_particle(n, [&](int i) {
      SirStep r = sir_step(model_, ensemble_.particles[static_cast<std::size_t>(i)].state, t, b,
                           noises[static_cast<std::size_t>(i)]);
      return ParticleUpdate{std::move(r.new_state), std::nullopt, std::nullopt, r.log_weight_increment, 0, 0};
    });
    apply(updates);
    record(n, current_states(), updates, true);
    advance_moments(n);
  }

  std::vector<Vector> current_states() const {
    std::vector<Vector> out;
    out.reserve(ensemble_.particles.size());
    for (const auto& p : ensemble_.particles) out.push_back(p.state);
    return out;
  }


  // Weighted moments before resampling; resampling (if `allow_resample`)
  // happens afterwards and sets the distinct count.
  void record(std::int64_t n, const std::vector<Vector>& states, const std::vector<ParticleUpdate>& updates,
              bool allow_resample) {
    const auto logw = ensemble_.log_weights();
    const auto probs = normalize_log_weights(logw);

    StepMetrics s;
    s.step = n;
    s.time = model_.time_of(n);
    s.mean = Vector::Zero(m_);
    for (std::size_t i = 0; i < probs.size(); ++i) s.mean += probs[i] * states[i];
    Vector var = Vector::Zero(m_);
    for (std::size_t i = 0; i < probs.size(); ++i) var += probs[i] * (states[i] - s.mean).array().square().matrix();
    s.stddev = var.cwiseSqrt();
    s.max_weight = *std::max_element(probs.begin(), probs.end());
    // A pair is recorded at both of its steps; its retries count once, at the
    // observed step (the only one allowed to resample).
    for (const auto& u : updates) {
      s.iters_mean += u.iters;
      if (allow_resample) s.retries += u.retries;
    }
    if (!updates.empty()) s.iters_mean /= static_cast<double>(updates.size());
    if (static_cast<std::size_t>(n) < data_.truth.size()) s.truth = data_.truth[static_cast<std::size_t>(n)];
    if (const Vector* b = obs_at(n)) s.observation = *b;

    if (allow_resample && should_resample(logw, cfg_.resample)) {
      const auto uniforms = rng_substream(cfg_.master_seed, n, 0, StreamRole::resample)
                                .uniforms(static_cast<std::size_t>(count()));
      const auto thetas = make_thetas(uniforms, cfg_.resample.stratified);
      ensemble_.particles = resample_with_policy(ensemble_.particles, cfg_.resample, thetas);
      s.resampled = true;
    } else {
      for (int i = 0; i < count(); ++i) ensemble_.particles[static_cast<std::size_t>(i)].ancestor = i;
    }
    s.distinct_count = distinct_count(ensemble_.particles);
    ensemble_.time_index = n;
    metrics_.steps.push_back(std::move(s));
  }

  void init_moments() {
    if (!model_.drift_matrix || !model_.diffusion_state_independent)
      throw ConfigError("run: track_moments requires a linear drift");
    moments_ = GaussianMoments{model_.initial_state, Matrix::Zero(m_, m_)};
  }

  void advance_moments(std::int64_t n) {
    if (!cfg_.track_moments) return;
    const double t = model_.time_of(n - 1);
    if (const Vector* b = obs_at(n)) {
      StepResult r = moment_step(model_, moments_, t, *b, cfg_.iteration);
      moments_ = GaussianMoments{r.gaussian.mean, r.gaussian.sigma_dense()};
    } else {
      const Matrix transition = Matrix::Identity(m_, m_) + *model_.drift_matrix * model_.delta;
      moments_.mean = moments_.mean + model_.drift(moments_.mean, t);
      moments_.cov = transition * moments_.cov * transition.transpose();
      moments_.cov.diagonal() += model_.diffusion(moments_.mean, t).array().square().matrix();
    }
    metrics_.moments.push_back(moments_);
  }

  const RunConfig& cfg_;
  const StateSpaceModel& model_;
  const TwinData& data_;
  Execution exec_;
  Index m_;
  std::size_t history_limit_;
  Ensemble ensemble_;
  RunMetrics metrics_;
  GaussianMoments moments_;
};

}  // namespace

RunMetrics run_filter(const RunConfig& cfg) {
  cfg.validate();
  const StateSpaceModel model = build_model(cfg.model);
  const TwinData data = synth_twin_data(model, cfg.effective_truth_seed(), cfg.observations.resolve(cfg.steps), cfg.steps);
  return run_filter(cfg, model, data);
}

RunMetrics run_filter(const RunConfig& cfg, const StateSpaceModel& model, const TwinData& data) {
  return Runner(cfg, model, data, Execution::parallel).run();
}

RunMetrics run_filter_serial(const RunConfig& cfg, const StateSpaceModel& model, const TwinData& data) {
  return Runner(cfg, model, data, Execution::serial).run();
}

}  // namespace ipf
