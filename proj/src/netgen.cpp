#include "featgenn/netgen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace featgenn {

std::string to_string(Pooling p) { return p == Pooling::correlation ? "correlation" : "max"; }

Pooling parse_pooling(const std::string& s) {
  if (s == "correlation" || s == "corr") return Pooling::correlation;
  if (s == "max") return Pooling::max;
  throw std::invalid_argument("unknown pooling mode: " + s);
}

void GeneratorConfig::validate() const {
  if (conv_layers < 1) throw std::invalid_argument("conv_layers must be >= 1");
  if (channels < 1) throw std::invalid_argument("channels must be >= 1");
  if (kernel < 1 || kernel % 2 == 0) throw std::invalid_argument("kernel must be odd");
  if (pool_group < 2) throw std::invalid_argument("pool_group must be >= 2");
  if (n_out < 1) throw std::invalid_argument("n_out must be >= 1");
  for (int h : mlp_hidden)
    if (h < 1) throw std::invalid_argument("hidden widths must be >= 1");
}

GenomeLayout GenomeLayout::for_config(const GeneratorConfig& cfg, std::size_t n_inputs) {
  cfg.validate();
  if (n_inputs == 0) throw std::invalid_argument("generator needs at least one input feature");
  GenomeLayout layout;
  layout.n_inputs = n_inputs;
  std::size_t offset = 0;
  auto add_block = [&](std::size_t weights, std::size_t biases, std::size_t fan_in, std::size_t fan_out) {
    ParamBlock b{offset, weights, offset + weights, biases, fan_in, fan_out};
    offset += weights + biases;
    return b;
  };

  const auto channels = static_cast<std::size_t>(cfg.channels);
  const auto kernel = static_cast<std::size_t>(cfg.kernel);
  const auto k = static_cast<std::size_t>(cfg.pool_group);
  std::size_t in_ch = 1;
  std::size_t positions = n_inputs;
  for (int l = 0; l < cfg.conv_layers; ++l) {
    layout.positions.push_back(positions);
    layout.conv.push_back(add_block(channels * in_ch * kernel, channels, in_ch * kernel, channels * kernel));
    in_ch = channels;
    positions = (positions + k - 1) / k;
  }
  layout.positions.push_back(positions);

  std::size_t width = channels * positions;
  for (int h : cfg.mlp_hidden) {
    const auto hw = static_cast<std::size_t>(h);
    layout.dense.push_back(add_block(width * hw, hw, width, hw));
    width = hw;
  }
  const auto n_out = static_cast<std::size_t>(cfg.n_out);
  layout.dense.push_back(add_block(width * n_out, n_out, width, n_out));
  layout.total = offset;
  return layout;
}

Genome init_genome(const GeneratorConfig& cfg, std::size_t n_inputs, std::uint64_t seed) {
  Genome g;
  g.layout = GenomeLayout::for_config(cfg, n_inputs);
  g.weights.assign(g.layout.total, 0.0);
  Rng rng(derive_seed(seed, {0x9e0e}));
  auto fill = [&](const ParamBlock& b) {
    const double limit = std::sqrt(6.0 / static_cast<double>(b.fan_in + b.fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (std::size_t i = 0; i < b.weight_count; ++i) g.weights[b.weight_offset + i] = dist(rng);
  };
  for (const auto& b : g.layout.conv) fill(b);
  for (const auto& b : g.layout.dense) fill(b);
  return g;
}

PoolPlan build_pool_plan(const CorrelationMatrix& m, int k, int layer) {
  if (k < 1) throw std::invalid_argument("pool group size must be >= 1");
  const std::size_t d = m.size();
  PoolPlan plan;
  plan.layer = layer;
  plan.scores = correlation_scores(m).cs;

  std::vector<bool> assigned(d, false);
  std::size_t remaining = d;
  while (remaining > 0) {
    std::size_t seed = d;
    double best_cs = -std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < d; ++p) {
      if (assigned[p]) continue;
      double sum = 0.0;
      for (std::size_t q = 0; q < d; ++q)
        if (!assigned[q]) sum += m.r(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q));
      const double cs = sum / static_cast<double>(remaining);
      if (cs > best_cs) {
        best_cs = cs;
        seed = p;
      }
    }
    assigned[seed] = true;
    --remaining;

    std::vector<std::size_t> peers;
    for (std::size_t q = 0; q < d; ++q)
      if (!assigned[q]) peers.push_back(q);
    const auto take = std::min(peers.size(), static_cast<std::size_t>(k - 1));
    std::stable_sort(peers.begin(), peers.end(), [&](std::size_t a, std::size_t b) {
      return std::abs(m.r(static_cast<Eigen::Index>(seed), static_cast<Eigen::Index>(a))) >
             std::abs(m.r(static_cast<Eigen::Index>(seed), static_cast<Eigen::Index>(b)));
    });
    std::vector<std::size_t> group{seed};
    for (std::size_t i = 0; i < take; ++i) {
      group.push_back(peers[i]);
      assigned[peers[i]] = true;
    }
    remaining -= take;
    std::sort(group.begin(), group.end());
    plan.groups.push_back(std::move(group));
  }
  return plan;
}

namespace {

std::vector<double> softmax_weights(const std::vector<std::size_t>& group, const std::vector<double>& cs) {
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t p : group) top = std::max(top, cs[p]);
  std::vector<double> w(group.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < group.size(); ++i) {
    w[i] = std::exp(cs[group[i]] - top);
    sum += w[i];
  }
  for (double& v : w) v /= sum;
  return w;
}

void check_plan(const PoolPlan& plan, std::size_t positions, std::size_t n_scores) {
  if (n_scores != positions) throw std::invalid_argument("correlation scores not aligned to positions");
  std::vector<bool> seen(positions, false);
  std::size_t covered = 0;
  for (const auto& g : plan.groups) {
    for (std::size_t p : g) {
      if (p >= positions || seen[p]) throw std::invalid_argument("pool plan is not a partition of the positions");
      seen[p] = true;
      ++covered;
    }
  }
  if (covered != positions) throw std::invalid_argument("pool plan does not cover every position");
}

// Pools each channel block of a channel-major activation matrix.
Matrix pool_channels(const Matrix& act, std::size_t channels, std::size_t positions, const GeneratorConfig& cfg,
                     const PoolPlan* plan) {
  std::vector<Matrix> pooled;
  Matrix block(act.rows(), static_cast<Eigen::Index>(positions));
  for (std::size_t c = 0; c < channels; ++c) {
    block = act.middleCols(static_cast<Eigen::Index>(c * positions), static_cast<Eigen::Index>(positions));
    if (cfg.pooling == Pooling::max) {
      pooled.push_back(max_pool(block, cfg.pool_group));
    } else {
      pooled.push_back(correlation_pool(block, *plan, CorrelationScores{plan->scores}));
    }
  }
  const auto width = pooled.front().cols();
  Matrix out(act.rows(), width * static_cast<Eigen::Index>(channels));
  for (std::size_t c = 0; c < channels; ++c) out.middleCols(static_cast<Eigen::Index>(c) * width, width) = pooled[c];
  return out;
}

// Same-padded stride-1 convolution over positions followed by tanh.
Matrix conv_tanh(const Matrix& in, std::size_t in_ch, std::size_t positions, const Genome& g, const ParamBlock& b,
                 std::size_t out_ch, std::size_t kernel) {
  const auto half = static_cast<std::ptrdiff_t>(kernel / 2);
  const auto P = static_cast<std::ptrdiff_t>(positions);
  const double* w = g.weights.data() + b.weight_offset;
  const double* bias = g.weights.data() + b.bias_offset;
  Matrix out(in.rows(), static_cast<Eigen::Index>(out_ch * positions));
  for (Eigen::Index r = 0; r < in.rows(); ++r) {
    const double* row = in.row(r).data();
    double* dst = out.row(r).data();
    for (std::size_t oc = 0; oc < out_ch; ++oc) {
      for (std::ptrdiff_t p = 0; p < P; ++p) {
        double acc = bias[oc];
        for (std::size_t ic = 0; ic < in_ch; ++ic) {
          const double* taps = w + (oc * in_ch + ic) * kernel;
          const double* src = row + ic * positions;
          for (std::ptrdiff_t t = 0; t < static_cast<std::ptrdiff_t>(kernel); ++t) {
            const std::ptrdiff_t q = p + t - half;
            if (q >= 0 && q < P) acc += taps[t] * src[q];
          }
        }
        dst[oc * positions + static_cast<std::size_t>(p)] = std::tanh(acc);
      }
    }
  }
  return out;
}

Matrix dense(const Matrix& in, const Genome& g, const ParamBlock& b, bool activate) {
  const auto n_in = static_cast<Eigen::Index>(b.fan_in);
  const auto n_out = static_cast<Eigen::Index>(b.fan_out);
  Eigen::Map<const Matrix> w(g.weights.data() + b.weight_offset, n_out, n_in);
  Eigen::Map<const Eigen::RowVectorXd> bias(g.weights.data() + b.bias_offset, n_out);
  Matrix out = in * w.transpose();
  out.rowwise() += bias;
  if (activate) out = out.array().tanh().matrix();
  return out;
}

void check_genome(const Matrix& x, const Genome& g, const GeneratorConfig& cfg, std::span<const PoolPlan> plans) {
  const auto expected = GenomeLayout::for_config(cfg, static_cast<std::size_t>(x.cols()));
  if (!(expected == g.layout) || g.weights.size() != g.layout.total)
    throw std::invalid_argument("genome layout does not match generator config");
  if (cfg.pooling == Pooling::correlation && plans.size() != static_cast<std::size_t>(cfg.conv_layers))
    throw std::invalid_argument("correlation pooling needs one pool plan per conv layer");
}

// Runs the conv stack; optionally records channel-averaged pooled activations.
Matrix conv_stack(const Matrix& x, const Genome& g, const GeneratorConfig& cfg, std::span<const PoolPlan> plans,
                  std::vector<Matrix>* trace) {
  const auto channels = static_cast<std::size_t>(cfg.channels);
  Matrix act = x;
  std::size_t in_ch = 1;
  for (int l = 0; l < cfg.conv_layers; ++l) {
    const auto li = static_cast<std::size_t>(l);
    const std::size_t positions = g.layout.positions[li];
    Matrix conv = conv_tanh(act, in_ch, positions, g, g.layout.conv[li], channels, static_cast<std::size_t>(cfg.kernel));
    const PoolPlan* plan = cfg.pooling == Pooling::correlation ? &plans[li] : nullptr;
    act = pool_channels(conv, channels, positions, cfg, plan);
    in_ch = channels;
    if (trace) {
      const auto pooled_positions = act.cols() / static_cast<Eigen::Index>(channels);
      Matrix mean = Matrix::Zero(act.rows(), pooled_positions);
      for (std::size_t c = 0; c < channels; ++c)
        mean += act.middleCols(static_cast<Eigen::Index>(c) * pooled_positions, pooled_positions);
      trace->push_back(mean / static_cast<double>(channels));
    }
  }
  return act;
}

}  // namespace

Matrix correlation_pool(const Matrix& act, const PoolPlan& plan, const CorrelationScores& cs) {
  check_plan(plan, static_cast<std::size_t>(act.cols()), cs.cs.size());
  Matrix out = Matrix::Zero(act.rows(), static_cast<Eigen::Index>(plan.groups.size()));
  for (std::size_t gi = 0; gi < plan.groups.size(); ++gi) {
    const auto& group = plan.groups[gi];
    const auto w = softmax_weights(group, cs.cs);
    for (std::size_t i = 0; i < group.size(); ++i)
      out.col(static_cast<Eigen::Index>(gi)) += w[i] * act.col(static_cast<Eigen::Index>(group[i]));
  }
  return out;
}

Matrix max_pool(const Matrix& act, int k) {
  if (k < 1) throw std::invalid_argument("max_pool: window must be >= 1");
  const auto P = act.cols();
  const auto G = (P + k - 1) / k;
  Matrix out(act.rows(), G);
  for (Eigen::Index g = 0; g < G; ++g) {
    const auto start = g * k;
    const auto len = std::min<Eigen::Index>(k, P - start);
    out.col(g) = act.middleCols(start, len).rowwise().maxCoeff();
  }
  return out;
}

Matrix network_forward(const Matrix& x, const Genome& g, const GeneratorConfig& cfg, std::span<const PoolPlan> plans) {
  check_genome(x, g, cfg, plans);
  Matrix h = conv_stack(x, g, cfg, plans, nullptr);
  for (std::size_t i = 0; i < g.layout.dense.size(); ++i) {
    const bool last = i + 1 == g.layout.dense.size();
    h = dense(h, g, g.layout.dense[i], !last);
  }
  return h;
}

std::vector<Matrix> layer_activations(const Matrix& x, const Genome& g, const GeneratorConfig& cfg,
                                      std::span<const PoolPlan> plans) {
  check_genome(x, g, cfg, plans);
  std::vector<Matrix> trace;
  conv_stack(x, g, cfg, plans, &trace);
  return trace;
}

std::vector<PoolPlan> update_pool_plans(const Genome& best, const GeneratorConfig& cfg, const Matrix& inputs,
                                        double fraction, std::uint64_t seed) {
  if (cfg.pooling != Pooling::correlation) return {};
  const RowIndex rows = subsample_rows(static_cast<std::size_t>(inputs.rows()), fraction, seed);
  const Matrix sample = take_rows(inputs, rows);

  std::vector<PoolPlan> plans;
  plans.push_back(build_pool_plan(correlation_matrix(sample), cfg.pool_group, 0));
  // Each deeper plan needs the pooled output of the layer before it, which in
  // turn depends on the plans built so far; run a truncated network per layer.
  for (int l = 1; l < cfg.conv_layers; ++l) {
    GeneratorConfig partial = cfg;
    partial.conv_layers = l;
    Genome head;
    head.layout = GenomeLayout::for_config(partial, best.layout.n_inputs);
    const auto& last_conv = head.layout.conv.back();
    head.weights.assign(best.weights.begin(),
                        best.weights.begin() + static_cast<std::ptrdiff_t>(last_conv.bias_offset + last_conv.bias_count));
    head.weights.resize(head.layout.total, 0.0);
    std::vector<Matrix> trace;
    conv_stack(sample, head, partial, plans, &trace);
    plans.push_back(build_pool_plan(correlation_matrix(trace.back()), cfg.pool_group, l));
  }
  return plans;
}

}  // namespace featgenn
