#include "causalaf/flow_model.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include <Eigen/Dense>

#include "causalaf/errors.hpp"

namespace causalaf {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatMap = Eigen::Map<const RowMatrix>;
using MatMap = Eigen::Map<RowMatrix>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;
using VecMap = Eigen::Map<Eigen::VectorXd>;

struct MlpCache {
  Eigen::VectorXd h1, h2;
};

Eigen::VectorXd mlp_forward(const MlpLayout& L, std::span<const double> w, std::span<const double> x,
                            MlpCache& cache) {
  const double* p = w.data();
  ConstMatMap W1(p + L.w1(), L.hidden, L.in);
  ConstVecMap b1(p + L.b1(), L.hidden);
  ConstMatMap W2(p + L.w2(), L.hidden, L.hidden);
  ConstVecMap b2(p + L.b2(), L.hidden);
  ConstMatMap W3(p + L.w3(), L.out, L.hidden);
  ConstVecMap b3(p + L.b3(), L.out);
  ConstVecMap input(x.data(), L.in);
  cache.h1 = (W1 * input + b1).array().tanh();
  cache.h2 = (W2 * cache.h1 + b2).array().tanh();
  return W3 * cache.h2 + b3;
}

void mlp_backward(const MlpLayout& L, std::span<const double> w, std::span<const double> x, const MlpCache& cache,
                  const Eigen::VectorXd& dout, std::span<double> grad) {
  const double* p = w.data();
  double* g = grad.data();
  ConstMatMap W2(p + L.w2(), L.hidden, L.hidden);
  ConstMatMap W3(p + L.w3(), L.out, L.hidden);
  ConstVecMap input(x.data(), L.in);

  MatMap(g + L.w3(), L.out, L.hidden).noalias() += dout * cache.h2.transpose();
  VecMap(g + L.b3(), L.out) += dout;
  Eigen::VectorXd da2 = (W3.transpose() * dout).array() * (1.0 - cache.h2.array().square());
  MatMap(g + L.w2(), L.hidden, L.hidden).noalias() += da2 * cache.h1.transpose();
  VecMap(g + L.b2(), L.hidden) += da2;
  Eigen::VectorXd da1 = (W2.transpose() * da2).array() * (1.0 - cache.h1.array().square());
  MatMap(g + L.w1(), L.hidden, L.in).noalias() += da1 * input.transpose();
  VecMap(g + L.b1(), L.hidden) += da1;
}

double bounded_log_sigma(double raw) { return kLogSigmaBound * std::tanh(raw / kLogSigmaBound); }

void check_dims(const FlowParameters& params, const BehavioralGraph& bg) {
  const auto& d = params.dims();
  if (bg.m() != d.m || bg.n() != d.n || bg.h1() != d.h1 || bg.h2() != d.h2)
    throw Error(ErrorCode::ShapeMismatch, "behavioral graph dims differ from flow dims");
}

}  // namespace

// ---------------------------------------------------------------------------
// Parameters

FlowParameters FlowParameters::create(const FlowDims& dims, const FlowConfig& cfg, std::uint64_t seed) {
  if (dims.m == 0 || dims.n == 0) throw Error(ErrorCode::InvalidConfig, "flow needs m >= 1 and n >= 1");
  if (cfg.layers == 0 || cfg.hidden == 0) throw Error(ErrorCode::InvalidConfig, "flow needs K >= 1 and hidden >= 1");
  FlowParameters p;
  p.dims_ = dims;
  p.cfg_ = cfg;
  std::size_t offset = 0;
  auto add = [&](std::vector<MlpLayout>& nets, std::size_t in, std::size_t out) {
    for (std::size_t k = 0; k < cfg.layers; ++k) {
      MlpLayout L{in, cfg.hidden, 2 * out, offset};
      offset = L.end();
      nets.push_back(L);
    }
  };
  add(p.node_nets_, p.context_size(StepKind::Node), dims.n);
  add(p.edge_nets_, p.context_size(StepKind::Edge), dims.edge_width());
  p.values_.assign(offset, 0.0);

  Rng rng(seed);
  auto init = [&](const MlpLayout& L) {
    const double s1 = 1.0 / std::sqrt(static_cast<double>(L.in));
    const double s2 = 1.0 / std::sqrt(static_cast<double>(L.hidden));
    for (std::size_t k = L.w1(); k < L.b1(); ++k) p.values_[k] = s1 * rng.gaussian();
    for (std::size_t k = L.w2(); k < L.b2(); ++k) p.values_[k] = s2 * rng.gaussian();
  };
  for (const auto& L : p.node_nets_) init(L);
  for (const auto& L : p.edge_nets_) init(L);
  return p;
}

const MlpLayout& FlowParameters::net(StepKind kind, std::size_t layer) const {
  return kind == StepKind::Node ? node_nets_.at(layer) : edge_nets_.at(layer);
}

std::size_t FlowParameters::context_size(StepKind kind) const {
  const std::size_t base = dims_.m * dims_.n + dims_.m * dims_.m * dims_.edge_width();
  return kind == StepKind::Node ? base + dims_.m : base + 2 * dims_.m;
}

std::vector<double> StepConditioning::sigma(std::size_t layer) const {
  std::vector<double> s(log_sigma.at(layer).size());
  std::transform(log_sigma[layer].begin(), log_sigma[layer].end(), s.begin(), [](double l) { return std::exp(l); });
  return s;
}

// ---------------------------------------------------------------------------
// Contexts

std::vector<double> node_context(const BehavioralGraph& bg, std::size_t i) {
  const std::size_t m = bg.m(), n = bg.n(), w = bg.edge_width();
  if (i >= m) throw Error(ErrorCode::IndexOutOfRange, "node step index");
  std::vector<double> ctx(m * n + m * m * w + m, 0.0);
  const auto& v = bg.node_data();
  const auto& e = bg.edge_data();
  std::copy_n(v.begin(), i * n, ctx.begin());
  std::copy_n(e.begin(), i * m * w, ctx.begin() + static_cast<std::ptrdiff_t>(m * n));
  ctx[m * n + m * m * w + i] = 1.0;
  return ctx;
}

std::vector<double> edge_context(const BehavioralGraph& bg, std::size_t i, std::size_t j) {
  const std::size_t m = bg.m(), n = bg.n(), w = bg.edge_width();
  if (i >= m || j > i) throw Error(ErrorCode::IndexOutOfRange, "edge step index");
  std::vector<double> ctx(m * n + m * m * w + 2 * m, 0.0);
  const auto& v = bg.node_data();
  std::copy_n(v.begin(), (i + 1) * n, ctx.begin());
  for (std::size_t r = 0; r <= i; ++r) {
    auto src = bg.edge_data().begin() + static_cast<std::ptrdiff_t>(r * m * w);
    std::copy_n(src, j * w, ctx.begin() + static_cast<std::ptrdiff_t>(m * n + r * m * w));
  }
  ctx[m * n + m * m * w + i] = 1.0;
  ctx[m * n + m * m * w + m + j] = 1.0;
  return ctx;
}

StepConditioning condition(const FlowParameters& params, StepKind kind, std::span<const double> context) {
  if (context.size() != params.context_size(kind)) throw Error(ErrorCode::ShapeMismatch, "context size");
  const std::size_t width = params.output_width(kind);
  StepConditioning c;
  MlpCache cache;
  for (std::size_t k = 0; k < params.config().layers; ++k) {
    Eigen::VectorXd out = mlp_forward(params.net(kind, k), params.values(), context, cache);
    std::vector<double> mu(width), ls(width);
    for (std::size_t d = 0; d < width; ++d) {
      mu[d] = out[static_cast<Eigen::Index>(d)];
      ls[d] = bounded_log_sigma(out[static_cast<Eigen::Index>(width + d)]);
    }
    c.mu.push_back(std::move(mu));
    c.log_sigma.push_back(std::move(ls));
  }
  return c;
}

StepConditioning condition_node(const FlowParameters& params, const BehavioralGraph& bg, std::size_t i) {
  check_dims(params, bg);
  return condition(params, StepKind::Node, node_context(bg, i));
}

StepConditioning condition_edge(const FlowParameters& params, const BehavioralGraph& bg, std::size_t i,
                                std::size_t j) {
  check_dims(params, bg);
  return condition(params, StepKind::Edge, edge_context(bg, i, j));
}

// ---------------------------------------------------------------------------
// Sampling primitives

std::vector<double> draw_latent(std::size_t width, double temperature, Rng& rng) {
  if (!(temperature > 0.0)) throw Error(ErrorCode::NonPositiveTemperature, "temperature must be > 0");
  const double scale = std::sqrt(temperature);
  std::vector<double> eps(width);
  for (auto& e : eps) e = scale * rng.gaussian();
  return eps;
}

std::vector<double> affine_transform(std::span<const double> mu, std::span<const double> sigma,
                                     std::span<const double> eps) {
  if (mu.size() != sigma.size() || mu.size() != eps.size()) throw Error(ErrorCode::ShapeMismatch, "affine widths");
  std::vector<double> x(mu.size());
  for (std::size_t d = 0; d < x.size(); ++d) x[d] = mu[d] + sigma[d] * eps[d];
  return x;
}

std::vector<double> affine_sample(std::span<const double> mu, std::span<const double> sigma, double temperature,
                                  Rng& rng) {
  auto eps = draw_latent(mu.size(), temperature, rng);
  return affine_transform(mu, sigma, eps);
}

std::vector<double> flow_forward(const StepConditioning& cond, std::span<const double> latent) {
  std::vector<double> z(latent.begin(), latent.end());
  for (std::size_t k = 0; k < cond.mu.size(); ++k) z = affine_transform(cond.mu[k], cond.sigma(k), z);
  return z;
}

std::vector<double> flow_inverse(const StepConditioning& cond, std::span<const double> value) {
  std::vector<double> z(value.begin(), value.end());
  for (std::size_t k = cond.mu.size(); k-- > 0;) {
    for (std::size_t d = 0; d < z.size(); ++d) z[d] = (z[d] - cond.mu[k][d]) * std::exp(-cond.log_sigma[k][d]);
  }
  return z;
}

std::vector<double> discretize(std::span<const double> v, std::size_t onehot_width) {
  if (onehot_width > v.size()) throw Error(ErrorCode::ShapeMismatch, "one-hot width exceeds vector length");
  std::vector<double> out(v.begin(), v.end());
  if (onehot_width == 0) return out;
  const std::size_t hot = static_cast<std::size_t>(std::max_element(v.begin(), v.begin() + onehot_width) - v.begin());
  std::fill_n(out.begin(), onehot_width, 0.0);
  out[hot] = 1.0;
  return out;
}

double step_log_density(const StepConditioning& cond, std::span<const double> value, double temperature,
                        std::span<const std::uint8_t> active) {
  if (!(temperature > 0.0)) throw Error(ErrorCode::NonPositiveTemperature, "temperature must be > 0");
  const auto z0 = flow_inverse(cond, value);
  const double log_norm = -0.5 * std::log(2.0 * std::numbers::pi * temperature);
  double lp = 0.0;
  for (std::size_t d = 0; d < z0.size(); ++d) {
    if (!active.empty() && !active[d]) continue;
    lp += log_norm - 0.5 * z0[d] * z0[d] / temperature;
    for (const auto& ls : cond.log_sigma) lp -= ls[d];
  }
  return lp;
}

// ---------------------------------------------------------------------------
// Likelihood and gradient

double log_likelihood(const SampleRecord& record) {
  if (!record.complete) throw Error(ErrorCode::IncompleteRecord, "record is not complete");
  return record.log_likelihood;
}

double log_likelihood(const FlowParameters& params, const SampleRecord& record) {
  if (!record.complete) throw Error(ErrorCode::IncompleteRecord, "record is not complete");
  if (params.dims() != record.dims) throw Error(ErrorCode::ShapeMismatch, "record dims");
  double total = 0.0;
  for (const auto& s : record.steps) {
    auto cond = condition(params, s.kind, s.context);
    total += step_log_density(cond, s.value, record.temperature, s.active);
  }
  return total;
}

std::vector<double> grad_log_likelihood(const FlowParameters& params, const SampleRecord& record) {
  if (!record.complete) throw Error(ErrorCode::IncompleteRecord, "record is not complete");
  if (params.dims() != record.dims) throw Error(ErrorCode::ShapeMismatch, "record dims");
  std::vector<double> grad(params.size(), 0.0);
  const std::size_t K = params.config().layers;
  const double T = record.temperature;

  for (const auto& s : record.steps) {
    const std::size_t width = params.output_width(s.kind);
    std::vector<MlpCache> caches(K);
    std::vector<Eigen::VectorXd> outs(K);
    StepConditioning cond;
    for (std::size_t k = 0; k < K; ++k) {
      outs[k] = mlp_forward(params.net(s.kind, k), params.values(), s.context, caches[k]);
      std::vector<double> mu(width), ls(width);
      for (std::size_t d = 0; d < width; ++d) {
        mu[d] = outs[k][static_cast<Eigen::Index>(d)];
        ls[d] = bounded_log_sigma(outs[k][static_cast<Eigen::Index>(width + d)]);
      }
      cond.mu.push_back(std::move(mu));
      cond.log_sigma.push_back(std::move(ls));
    }

    // z[k] is the variable after layer k; z[K] is the observed value.
    std::vector<std::vector<double>> z(K + 1);
    z[K] = s.value;
    for (std::size_t k = K; k-- > 0;) {
      z[k].resize(width);
      for (std::size_t d = 0; d < width; ++d) z[k][d] = (z[k + 1][d] - cond.mu[k][d]) * std::exp(-cond.log_sigma[k][d]);
    }

    // g = d logp / d z[k], propagated from z[0] upward.
    std::vector<double> g(width);
    for (std::size_t d = 0; d < width; ++d) g[d] = -z[0][d] / T;
    for (std::size_t k = 0; k < K; ++k) {
      Eigen::VectorXd dout = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(2 * width));
      for (std::size_t d = 0; d < width; ++d) {
        if (!s.active.empty() && !s.active[d]) continue;
        const double inv_sigma = std::exp(-cond.log_sigma[k][d]);
        const double d_mu = -g[d] * inv_sigma;
        const double d_log_sigma = -g[d] * z[k][d] - 1.0;
        const double ratio = cond.log_sigma[k][d] / kLogSigmaBound;
        dout[static_cast<Eigen::Index>(d)] = d_mu;
        dout[static_cast<Eigen::Index>(width + d)] = d_log_sigma * (1.0 - ratio * ratio);
      }
      for (std::size_t d = 0; d < width; ++d) g[d] *= std::exp(-cond.log_sigma[k][d]);
      mlp_backward(params.net(s.kind, k), params.values(), s.context, caches[k], dout, grad);
    }
  }
  return grad;
}

std::vector<std::vector<double>> invert(const FlowParameters& params, const SampleRecord& record) {
  if (params.dims() != record.dims) throw Error(ErrorCode::ShapeMismatch, "record dims");
  std::vector<std::vector<double>> latents;
  latents.reserve(record.steps.size());
  for (const auto& s : record.steps) latents.push_back(flow_inverse(condition(params, s.kind, s.context), s.value));
  return latents;
}

// ---------------------------------------------------------------------------
// Serialization

nlohmann::json to_json(const FlowParameters& params) {
  const auto& d = params.dims();
  return {{"format", "causalaf-flow"},
          {"version", 1},
          {"dims", {{"m", d.m}, {"n", d.n}, {"h1", d.h1}, {"h2", d.h2}}},
          {"hidden", params.config().hidden},
          {"layers", params.config().layers},
          {"values", std::vector<double>(params.values().begin(), params.values().end())}};
}

FlowParameters flow_parameters_from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("format") != "causalaf-flow" || doc.at("version") != 1)
      throw Error(ErrorCode::ParseError, "not a version-1 flow document");
    const auto& jd = doc.at("dims");
    FlowDims dims{jd.at("m").get<std::size_t>(), jd.at("n").get<std::size_t>(), jd.at("h1").get<std::size_t>(),
                  jd.at("h2").get<std::size_t>()};
    FlowConfig cfg{doc.at("hidden").get<std::size_t>(), doc.at("layers").get<std::size_t>()};
    FlowParameters p = FlowParameters::create(dims, cfg, 0);
    auto values = doc.at("values").get<std::vector<double>>();
    if (values.size() != p.values_.size()) throw Error(ErrorCode::ShapeMismatch, "parameter count");
    p.values_ = std::move(values);
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("flow parameters: ") + e.what());
  }
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  nlohmann::json doc = {{"format", "causalaf-checkpoint"},
                        {"version", 1},
                        {"flow", to_json(ckpt.params)},
                        {"rng_state", ckpt.rng_state},
                        {"extra", ckpt.extra}};
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::InvalidConfig, "cannot write " + path);
  out << doc.dump();
}

Checkpoint load_checkpoint(const std::string& path) {
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::MissingCheckpoint, path);
  std::ifstream in(path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, path + ": " + e.what());
  }
  if (doc.value("format", "") != "causalaf-checkpoint" || doc.value("version", 0) != 1)
    throw Error(ErrorCode::ParseError, path + ": not a version-1 checkpoint");
  Checkpoint ckpt;
  ckpt.params = flow_parameters_from_json(doc.at("flow"));
  ckpt.rng_state = doc.value("rng_state", "");
  ckpt.extra = doc.value("extra", nlohmann::json::object());
  return ckpt;
}

}  // namespace causalaf
