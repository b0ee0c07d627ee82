#include "causalaf/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

#include "causalaf/errors.hpp"

namespace causalaf {

std::string_view to_string(BaselineMode mode) {
  return mode == BaselineMode::None ? "none" : "moving-average";
}

BaselineMode baseline_mode_from_string(std::string_view name) {
  if (name == "none") return BaselineMode::None;
  if (name == "moving-average" || name == "ema") return BaselineMode::MovingAverage;
  throw Error(ErrorCode::InvalidConfig, "unknown baseline mode '" + std::string(name) + "'");
}

double TrainConfig::temperature_at(std::size_t episode) const {
  double t = temperature;
  for (const auto& [from, value] : temperature_schedule)
    if (episode >= from) t = value;
  return t;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw Error(ErrorCode::InvalidConfig, "learning rate must be > 0");
  if (batch_size < 1) throw Error(ErrorCode::InvalidConfig, "batch size must be >= 1");
  if (!(temperature > 0.0)) throw Error(ErrorCode::NonPositiveTemperature, "temperature must be > 0");
  for (const auto& [from, value] : temperature_schedule)
    if (!(value > 0.0)) throw Error(ErrorCode::NonPositiveTemperature, "scheduled temperature must be > 0");
  if (!(baseline_decay >= 0.0 && baseline_decay < 1.0))
    throw Error(ErrorCode::InvalidConfig, "baseline decay must lie in [0, 1)");
  if (flow.layers < 1 || flow.hidden < 1) throw Error(ErrorCode::InvalidConfig, "flow needs >= 1 layer and unit");
}

nlohmann::json to_json(const TrainConfig& cfg) {
  nlohmann::json sched = nlohmann::json::array();
  for (const auto& [from, value] : cfg.temperature_schedule) sched.push_back({from, value});
  nlohmann::json j = {{"learning_rate", cfg.learning_rate},
                      {"batch_size", cfg.batch_size},
                      {"episodes", cfg.episodes},
                      {"temperature", cfg.temperature},
                      {"temperature_schedule", sched},
                      {"baseline", to_string(cfg.baseline)},
                      {"baseline_decay", cfg.baseline_decay},
                      {"seed", cfg.seed},
                      {"mode", to_string(cfg.mode)},
                      {"hidden", cfg.flow.hidden},
                      {"layers", cfg.flow.layers},
                      {"checkpoint_every", cfg.checkpoint_every},
                      {"checkpoint_dir", cfg.checkpoint_dir},
                      {"metrics_path", cfg.metrics_path},
                      {"stop_on_convergence", cfg.stop_on_convergence},
                      {"convergence_window", cfg.convergence_window},
                      {"convergence_patience", cfg.convergence_patience}};
  if (cfg.epsilon) j["epsilon"] = *cfg.epsilon;
  return j;
}

TrainConfig train_config_from_json(const nlohmann::json& doc, TrainConfig c) {
  try {
    auto get = [&](const char* key, auto& out) {
      if (doc.contains(key)) out = doc.at(key).get<std::decay_t<decltype(out)>>();
    };
    get("learning_rate", c.learning_rate);
    get("batch_size", c.batch_size);
    get("episodes", c.episodes);
    get("temperature", c.temperature);
    if (doc.contains("temperature_schedule")) {
      c.temperature_schedule.clear();
      for (const auto& e : doc["temperature_schedule"])
        c.temperature_schedule.emplace_back(e.at(0).get<std::size_t>(), e.at(1).get<double>());
      std::sort(c.temperature_schedule.begin(), c.temperature_schedule.end());
    }
    if (doc.contains("baseline")) c.baseline = baseline_mode_from_string(doc["baseline"].get<std::string>());
    get("baseline_decay", c.baseline_decay);
    get("seed", c.seed);
    if (doc.contains("mode")) c.mode = mask_mode_from_string(doc["mode"].get<std::string>());
    get("hidden", c.flow.hidden);
    get("layers", c.flow.layers);
    get("checkpoint_every", c.checkpoint_every);
    get("checkpoint_dir", c.checkpoint_dir);
    get("metrics_path", c.metrics_path);
    get("stop_on_convergence", c.stop_on_convergence);
    get("convergence_window", c.convergence_window);
    get("convergence_patience", c.convergence_patience);
    if (doc.contains("epsilon")) c.epsilon = doc["epsilon"].get<double>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("train config: ") + e.what());
  }
}

double TrainMetrics::final_mean(std::size_t window) const {
  if (objectives.empty()) return 0.0;
  const std::size_t n = std::min(window, objectives.size());
  return std::accumulate(objectives.end() - static_cast<std::ptrdiff_t>(n), objectives.end(), 0.0) /
         static_cast<double>(n);
}

void Adam::step(std::span<double> params, std::span<const double> ascent) {
  if (m.size() != params.size()) {
    m.assign(params.size(), 0.0);
    v.assign(params.size(), 0.0);
  }
  ++t;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  for (std::size_t k = 0; k < params.size(); ++k) {
    m[k] = beta1 * m[k] + (1.0 - beta1) * ascent[k];
    v[k] = beta2 * v[k] + (1.0 - beta2) * ascent[k] * ascent[k];
    params[k] += lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + eps);
  }
}

std::vector<double> reinforce_gradient(const FlowParameters& params, const std::vector<Rollout>& batch,
                                       double baseline) {
  if (batch.empty()) throw Error(ErrorCode::EmptyBatch, "REINFORCE batch is empty");
  std::vector<double> g(params.size(), 0.0);
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (const auto& r : batch) {
    const double adv = r.reward - baseline;
    if (adv == 0.0) continue;
    const auto gl = grad_log_likelihood(params, r.record);
    for (std::size_t k = 0; k < g.size(); ++k) g[k] += inv * adv * gl[k];
  }
  return g;
}

std::vector<double> reinforce_update(FlowParameters& params, const std::vector<Rollout>& batch, double baseline,
                                     double lr) {
  auto g = reinforce_gradient(params, batch, baseline);
  auto v = params.values();
  for (std::size_t k = 0; k < v.size(); ++k) v[k] += lr * g[k];
  return g;
}

FlowDims scenario_dims(const ScenarioSpec& spec) {
  return {spec.cg.max_physical_nodes(), spec.cg.size(), 3, 4};
}

Rollout rollout(const FlowParameters& params, const ScenarioSpec& spec, const TrainConfig& cfg, std::size_t episode) {
  SamplerConfig sc;
  sc.cg = spec.cg;
  sc.mode = cfg.mode;
  sc.temperature = cfg.temperature_at(episode);
  Rng rng = Rng::derive(cfg.seed, episode);
  Sample s = sample_bg(params, sc, rng);
  const ScenarioTrace trace = execute(s.graph, spec);
  return {std::move(s.record), static_cast<double>(objective(trace, cfg.epsilon.value_or(spec.epsilon)))};
}

TrainState initial_state(const ScenarioSpec& spec, const TrainConfig& cfg) {
  TrainState st;
  st.params = FlowParameters::create(scenario_dims(spec), cfg.flow, cfg.seed);
  st.adam.lr = cfg.learning_rate;
  return st;
}

namespace {

double moving_average(const std::vector<int>& xs, std::size_t window) {
  if (xs.empty()) return 0.0;
  const std::size_t n = std::min(window, xs.size());
  return std::accumulate(xs.end() - static_cast<std::ptrdiff_t>(n), xs.end(), 0.0) / static_cast<double>(n);
}

// Episode at which the moving average last improved on its running best.
std::size_t last_improvement(const std::vector<int>& xs, std::size_t window) {
  // Only full windows count; before the first one every episode is an improvement.
  if (xs.size() < window) return xs.size();
  double best = -1.0, sum = 0.0;
  std::size_t at = 0;
  for (std::size_t e = 0; e < xs.size(); ++e) {
    sum += xs[e];
    if (e >= window) sum -= xs[e - window];
    if (e + 1 < window) continue;
    const double ma = sum / static_cast<double>(window);
    if (ma > best) {
      best = ma;
      at = e + 1;
    }
  }
  return at;
}

void write_metrics_header(std::ostream& os) {
  os << "episode\tobjective\tmoving_average\tgrad_norm\ttemperature\tbaseline\n";
}

void append_metrics(std::ostream& os, const TrainMetrics& metrics, const UpdateMetrics& u) {
  os << std::setprecision(10);
  for (std::size_t e = 0; e < u.episodes; ++e) {
    const std::size_t ep = u.first_episode + e;
    os << ep << '\t' << metrics.objectives[ep] << '\t' << u.moving_average << '\t' << u.grad_norm << '\t'
       << u.temperature << '\t' << u.baseline << '\n';
  }
}

}  // namespace

void write_metrics_tsv(const std::string& path, const TrainMetrics& metrics, const TrainConfig&) {
  if (auto dir = std::filesystem::path(path).parent_path(); !dir.empty()) std::filesystem::create_directories(dir);
  std::ofstream os(path, std::ios::trunc);
  write_metrics_header(os);
  for (const auto& u : metrics.updates) append_metrics(os, metrics, u);
}

Checkpoint make_checkpoint(const TrainState& state, const TrainConfig& cfg) {
  Checkpoint c;
  c.params = state.params;
  nlohmann::json updates = nlohmann::json::array();
  for (const auto& u : state.metrics.updates)
    updates.push_back({u.update, u.first_episode, u.episodes, u.mean_objective, u.moving_average, u.grad_norm,
                       std::isnan(u.success_log_likelihood) ? nlohmann::json(nullptr)
                                                            : nlohmann::json(u.success_log_likelihood),
                       u.temperature, u.baseline, u.wall_seconds});
  c.extra = {{"config", to_json(cfg)},
             {"episode", state.episode},
             {"baseline", state.baseline},
             {"adam", {{"lr", state.adam.lr}, {"t", state.adam.t}, {"m", state.adam.m}, {"v", state.adam.v}}},
             {"objectives", state.metrics.objectives},
             {"updates", updates},
             {"converged", state.metrics.converged},
             {"converged_at", state.metrics.converged_at}};
  return c;
}

TrainState state_from_checkpoint(const Checkpoint& ckpt) {
  TrainState st;
  st.params = ckpt.params;
  const auto& x = ckpt.extra;
  try {
    st.episode = x.value("episode", std::size_t{0});
    st.baseline = x.value("baseline", 0.0);
    if (x.contains("adam")) {
      const auto& a = x["adam"];
      st.adam.lr = a.at("lr").get<double>();
      st.adam.t = a.at("t").get<std::uint64_t>();
      st.adam.m = a.at("m").get<std::vector<double>>();
      st.adam.v = a.at("v").get<std::vector<double>>();
    }
    if (x.contains("objectives")) st.metrics.objectives = x["objectives"].get<std::vector<int>>();
    if (x.contains("updates"))
      for (const auto& u : x["updates"]) {
        UpdateMetrics m;
        m.update = u.at(0).get<std::size_t>();
        m.first_episode = u.at(1).get<std::size_t>();
        m.episodes = u.at(2).get<std::size_t>();
        m.mean_objective = u.at(3).get<double>();
        m.moving_average = u.at(4).get<double>();
        m.grad_norm = u.at(5).get<double>();
        m.success_log_likelihood =
            u.at(6).is_null() ? std::numeric_limits<double>::quiet_NaN() : u.at(6).get<double>();
        m.temperature = u.at(7).get<double>();
        m.baseline = u.at(8).get<double>();
        m.wall_seconds = u.at(9).get<double>();
        st.metrics.updates.push_back(m);
      }
    st.metrics.converged = x.value("converged", false);
    st.metrics.converged_at = x.value("converged_at", std::size_t{0});
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("checkpoint training state: ") + e.what());
  }
  return st;
}

TrainResult train_from(TrainState st, const ScenarioSpec& spec, const TrainConfig& cfg,
                       const TrainCallback& callback) {
  cfg.validate();
  if (st.params.dims() != scenario_dims(spec))
    throw Error(ErrorCode::ShapeMismatch, "flow dimensions do not match the scenario");
  st.adam.lr = cfg.learning_rate;

  std::ofstream metrics_out;
  if (!cfg.metrics_path.empty()) {
    write_metrics_tsv(cfg.metrics_path, st.metrics, cfg);
    metrics_out.open(cfg.metrics_path, std::ios::app);
  }
  const auto t0 = std::chrono::steady_clock::now();
  std::size_t next_checkpoint =
      cfg.checkpoint_every ? (st.episode / cfg.checkpoint_every + 1) * cfg.checkpoint_every : 0;

  while (st.episode < cfg.episodes && !(cfg.stop_on_convergence && st.metrics.converged)) {
    const std::size_t count = std::min(cfg.batch_size, cfg.episodes - st.episode);
    std::vector<Rollout> batch;
    batch.reserve(count);
    for (std::size_t e = 0; e < count; ++e) batch.push_back(rollout(st.params, spec, cfg, st.episode + e));

    const double b = cfg.baseline == BaselineMode::MovingAverage ? st.baseline : 0.0;
    const auto g = reinforce_gradient(st.params, batch, b);
    double norm2 = 0.0;
    for (double x : g) norm2 += x * x;
    if (norm2 > 0.0) st.adam.step(st.params.values(), g);

    UpdateMetrics u;
    u.update = st.metrics.updates.size();
    u.first_episode = st.episode;
    u.episodes = count;
    u.temperature = cfg.temperature_at(st.episode);
    u.baseline = b;
    u.grad_norm = std::sqrt(norm2);
    double hits = 0.0, ll = 0.0;
    for (const auto& r : batch) {
      st.metrics.objectives.push_back(static_cast<int>(r.reward));
      if (cfg.baseline == BaselineMode::MovingAverage)
        st.baseline = cfg.baseline_decay * st.baseline + (1.0 - cfg.baseline_decay) * r.reward;
      u.mean_objective += r.reward / static_cast<double>(count);
      if (r.reward > 0.0) {
        hits += 1.0;
        ll += r.record.log_likelihood;
      }
    }
    u.success_log_likelihood = hits > 0.0 ? ll / hits : std::numeric_limits<double>::quiet_NaN();
    st.episode += count;
    u.moving_average = moving_average(st.metrics.objectives, cfg.convergence_window);
    u.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    st.metrics.updates.push_back(u);

    if (!st.metrics.converged &&
        st.episode >= last_improvement(st.metrics.objectives, cfg.convergence_window) + cfg.convergence_patience) {
      st.metrics.converged = true;
      st.metrics.converged_at = st.episode;
    }
    if (metrics_out.is_open()) {
      append_metrics(metrics_out, st.metrics, u);
      metrics_out.flush();
    }
    if (next_checkpoint && st.episode >= next_checkpoint && !cfg.checkpoint_dir.empty()) {
      std::ostringstream name;
      name << cfg.checkpoint_dir << "/checkpoint_" << std::setw(6) << std::setfill('0') << st.episode << ".json";
      save_checkpoint(name.str(), make_checkpoint(st, cfg));
      save_checkpoint(cfg.checkpoint_dir + "/latest.json", make_checkpoint(st, cfg));
      next_checkpoint = (st.episode / cfg.checkpoint_every + 1) * cfg.checkpoint_every;
    }
    if (callback && !callback(st, u)) break;
  }
  return {std::move(st.params), std::move(st.metrics)};
}

TrainResult train(const ScenarioSpec& spec, const TrainConfig& cfg, const TrainCallback& callback) {
  cfg.validate();
  return train_from(initial_state(spec, cfg), spec, cfg, callback);
}

RateEstimate collision_rate(const FlowParameters& params, const ScenarioSpec& spec, MaskMode mode,
                            double temperature, std::size_t n_samples, std::uint64_t seed) {
  RateEstimate est;
  est.samples = n_samples;
  if (n_samples == 0) return est;
  SamplerConfig sc;
  sc.cg = spec.cg;
  sc.mode = mode;
  sc.temperature = temperature;
  double hits = 0.0;
  for (std::size_t k = 0; k < n_samples; ++k) {
    Rng rng = Rng::derive(seed, k);
    const Sample s = sample_bg(params, sc, rng);
    hits += objective(execute(s.graph, spec), spec.epsilon);
  }
  est.rate = hits / static_cast<double>(n_samples);
  est.stderr_ = std::sqrt(est.rate * (1.0 - est.rate) / static_cast<double>(n_samples));
  return est;
}

ProbeReport likelihood_probe(const ScenarioSpec& spec, const std::vector<CausalGraph>& variants,
                             const TrainConfig& cfg, std::size_t n_samples) {
  ProbeReport report;
  if (n_samples == 0) return report;
  for (std::size_t k = 0; k < variants.size(); ++k) {
    ScenarioSpec s = spec;
    s.cg = variants[k];
    if (s.cg.names() != spec.cg.names())
      throw Error(ErrorCode::InvalidConfig, "probe variants must declare the scenario's types");
    const TrainResult r = train(s, cfg);
    ProbeEntry e;
    e.label = k == 0 ? "variant-0" : "variant-" + std::to_string(k);
    e.shd = spec.cg.shd(variants[k]);
    e.estimate = collision_rate(r.params, s, cfg.mode, cfg.temperature_at(cfg.episodes), n_samples,
                                cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    report.entries.push_back(e);
  }
  if (report.entries.size() >= 2) {
    auto sorted = report.entries;
    std::stable_sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.shd < b.shd; });
    bool ok = true;
    for (std::size_t k = 1; k < sorted.size(); ++k)
      if (sorted[k].shd > sorted[k - 1].shd && sorted[k].estimate.rate > sorted[k - 1].estimate.rate) ok = false;
    report.ordered = ok;
  }
  return report;
}

}  // namespace causalaf
