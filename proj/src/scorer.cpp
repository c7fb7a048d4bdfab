#include "ordlin/scorer.hpp"

#include <cmath>
#include <random>

#include "ordlin/errors.hpp"

namespace ordlin {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

int half(const ScorerConfig& c) { return c.hidden_dim / 2; }

int clamp_id(int id, int vocab) { return id >= 0 && id < vocab ? id : 0; }

// Gradient of psi(x, y) = max_k red(k, x) - blue(k, y) lands on the lowest maximizing k.
int psi_argmax(const Realizer& r, int red_col, int blue_col) {
  int arg = 0;
  double best = r.at(0, red_col) - r.at(0, blue_col);
  for (int k = 1; k < r.k(); ++k) {
    const double d = r.at(k, red_col) - r.at(k, blue_col);
    if (d > best) {
      best = d;
      arg = k;
    }
  }
  return arg;
}

}  // namespace

std::string to_string(ContextKind kind) { return kind == ContextKind::birnn ? "birnn" : "window-mlp"; }

ContextKind context_from_string(const std::string& name) {
  if (name == "birnn" || name == "bidirectional-recurrent") return ContextKind::birnn;
  if (name == "window-mlp" || name == "window") return ContextKind::window_mlp;
  throw DataError("unknown context encoder '" + name + "' (expected birnn or window-mlp)");
}

void ScorerConfig::validate() const {
  const auto positive = [](int v, const char* what) {
    if (v <= 0) throw ContractViolation(std::string("ScorerConfig: ") + what + " must be positive");
  };
  positive(vocab_size, "vocab_size");
  positive(embed_dim, "embed_dim");
  positive(hidden_dim, "hidden_dim");
  positive(k, "K");
  positive(label_count, "label_count");
  positive(epochs, "epochs");
  positive(batch_size, "batch_size");
  if (context == ContextKind::birnn && hidden_dim % 2 != 0) {
    throw ContractViolation("ScorerConfig: birnn needs an even hidden_dim");
  }
  if (!(learning_rate > 0.0) || !(grad_clip > 0.0)) {
    throw ContractViolation("ScorerConfig: learning_rate and grad_clip must be positive");
  }
}

void to_json(nlohmann::json& j, const ScorerConfig& c) {
  j = nlohmann::json{{"vocab_size", c.vocab_size}, {"embed_dim", c.embed_dim},
                     {"context", to_string(c.context)}, {"hidden_dim", c.hidden_dim},
                     {"K", c.k}, {"label_count", c.label_count},
                     {"seed", c.seed}, {"learning_rate", c.learning_rate},
                     {"grad_clip", c.grad_clip}, {"epochs", c.epochs},
                     {"batch_size", c.batch_size}};
}

void from_json(const nlohmann::json& j, ScorerConfig& c) {
  const ScorerConfig d;
  c.vocab_size = j.value("vocab_size", d.vocab_size);
  c.embed_dim = j.value("embed_dim", d.embed_dim);
  c.context = context_from_string(j.value("context", to_string(d.context)));
  c.hidden_dim = j.value("hidden_dim", d.hidden_dim);
  c.k = j.value("K", d.k);
  c.label_count = j.value("label_count", d.label_count);
  c.seed = j.value("seed", d.seed);
  c.learning_rate = j.value("learning_rate", d.learning_rate);
  c.grad_clip = j.value("grad_clip", d.grad_clip);
  c.epochs = j.value("epochs", d.epochs);
  c.batch_size = j.value("batch_size", d.batch_size);
}

ModelParameters::ModelParameters(const ScorerConfig& config) : config_(config) {
  config.validate();
  const int e = config.embed_dim;
  const int h = config.hidden_dim;
  add_block("embed", e, config.vocab_size);
  if (config.context == ContextKind::window_mlp) {
    add_block("ctx.W", h, 3 * e);
    add_block("ctx.b", h, 1);
  } else {
    for (const char* dir : {"fwd", "bwd"}) {
      add_block(std::string(dir) + ".Wx", half(config), e);
      add_block(std::string(dir) + ".Wh", half(config), half(config));
      add_block(std::string(dir) + ".b", half(config), 1);
    }
  }
  add_block("rank.W", 2 * config.k, h);
  add_block("rank.b", 2 * config.k, 1);
  add_block("label.W", config.label_count, h);
  add_block("label.b", config.label_count, 1);
}

void ModelParameters::add_block(const std::string& name, int rows, int cols) {
  ParamBlock b{name, rows, cols, values_.size()};
  values_.resize(values_.size() + b.size(), 0.0);
  blocks_.push_back(std::move(b));
}

ModelParameters ModelParameters::initialize(const ScorerConfig& config) {
  ModelParameters p(config);
  std::mt19937_64 rng(config.seed);
  for (const ParamBlock& b : p.blocks_) {
    auto m = p.matrix(b.name);
    if (b.name == "embed") {
      std::normal_distribution<double> dist(0.0, 1.0 / std::sqrt(static_cast<double>(b.rows)));
      for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
    } else if (b.cols > 1) {
      const double a = std::sqrt(6.0 / (b.rows + b.cols));
      std::uniform_real_distribution<double> dist(-a, a);
      for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
    }
  }
  return p;
}

const ParamBlock& ModelParameters::block(const std::string& name) const {
  for (const ParamBlock& b : blocks_) {
    if (b.name == name) return b;
  }
  throw ContractViolation("ModelParameters: no block named '" + name + "'");
}

Eigen::Map<Eigen::MatrixXd> ModelParameters::matrix(const std::string& name) {
  const ParamBlock& b = block(name);
  return {values_.data() + b.offset, b.rows, b.cols};
}

Eigen::Map<const Eigen::MatrixXd> ModelParameters::matrix(const std::string& name) const {
  const ParamBlock& b = block(name);
  return {values_.data() + b.offset, b.rows, b.cols};
}

Eigen::Map<Eigen::MatrixXd> ModelParameters::matrix(const std::string& name, std::span<double> buf) const {
  const ParamBlock& b = block(name);
  if (buf.size() != values_.size()) throw ContractViolation("ModelParameters: gradient buffer has the wrong size");
  return {buf.data() + b.offset, b.rows, b.cols};
}

void ModelParameters::check_finite(std::span<const double> buf, const char* what) const {
  std::string bad;
  for (const ParamBlock& b : blocks_) {
    for (std::size_t i = 0; i < b.size(); ++i) {
      if (!std::isfinite(buf[b.offset + i])) {
        bad += (bad.empty() ? "'" : ", '") + b.name + "'";
        break;
      }
    }
  }
  if (!bad.empty()) throw NumericsError(std::string("non-finite ") + what + " in parameter blocks " + bad);
}

Encoded encode(const ModelParameters& params, std::span<const int> ids) {
  const ScorerConfig& c = params.config();
  const int m = static_cast<int>(ids.size());
  const int e = c.embed_dim;
  Encoded out;
  out.ids.reserve(m);
  for (int id : ids) out.ids.push_back(clamp_id(id, c.vocab_size));
  const auto embed = params.matrix("embed");

  if (c.context == ContextKind::window_mlp) {
    out.inputs = MatrixXd::Zero(3 * e, m);
    for (int i = 0; i < m; ++i) {
      if (i > 0) out.inputs.block(0, i, e, 1) = embed.col(out.ids[i - 1]);
      out.inputs.block(e, i, e, 1) = embed.col(out.ids[i]);
      if (i + 1 < m) out.inputs.block(2 * e, i, e, 1) = embed.col(out.ids[i + 1]);
    }
    out.hidden = params.matrix("ctx.W") * out.inputs;
    out.hidden.colwise() += VectorXd(params.matrix("ctx.b").col(0));
    out.hidden = out.hidden.array().tanh().matrix();
    return out;
  }

  const int h2 = half(c);
  out.inputs.resize(e, m);
  for (int i = 0; i < m; ++i) out.inputs.col(i) = embed.col(out.ids[i]);
  out.fwd = MatrixXd::Zero(h2, m);
  out.bwd = MatrixXd::Zero(h2, m);
  const auto fx = params.matrix("fwd.Wx");
  const auto fh = params.matrix("fwd.Wh");
  const auto fb = params.matrix("fwd.b");
  const auto bx = params.matrix("bwd.Wx");
  const auto bh = params.matrix("bwd.Wh");
  const auto bb = params.matrix("bwd.b");
  const MatrixXd fx_in = fx * out.inputs;
  const MatrixXd bx_in = bx * out.inputs;
  for (int t = 0; t < m; ++t) {
    VectorXd z = fx_in.col(t) + fb.col(0);
    if (t > 0) z += fh * out.fwd.col(t - 1);
    out.fwd.col(t) = z.array().tanh();
  }
  for (int t = m - 1; t >= 0; --t) {
    VectorXd z = bx_in.col(t) + bb.col(0);
    if (t + 1 < m) z += bh * out.bwd.col(t + 1);
    out.bwd.col(t) = z.array().tanh();
  }
  out.hidden.resize(2 * h2, m);
  out.hidden.topRows(h2) = out.fwd;
  out.hidden.bottomRows(h2) = out.bwd;
  return out;
}

Realizer realize_ranks(const ModelParameters& params, const Encoded& enc) {
  const int k = params.config().k;
  const int m = enc.length();
  Realizer r(k, 2 * m);
  if (m == 0) return r;
  MatrixXd scores = params.matrix("rank.W") * enc.hidden;
  scores.colwise() += VectorXd(params.matrix("rank.b").col(0));
  for (int row = 0; row < k; ++row) {
    for (int x = 0; x < m; ++x) {
      r.at(row, x) = scores(row, x);
      r.at(row, m + x) = scores(k + row, x);
    }
  }
  return r;
}

Eigen::MatrixXd label_scores(const ModelParameters& params, const Encoded& enc) {
  MatrixXd s = params.matrix("label.W") * enc.hidden;
  s.colwise() += VectorXd(params.matrix("label.b").col(0));
  for (Eigen::Index i = 0; i < s.cols(); ++i) {
    const double mx = s.col(i).maxCoeff();
    s.col(i) = (s.col(i).array() - mx).exp();
    s.col(i) /= s.col(i).sum();
  }
  return s;
}

OrderLoss order_loss(const Realizer& ranks, const TokenSplitStructure& gold, const OrderLossOptions& opts) {
  const int m = ranks.tokens();
  const int k = ranks.k();
  if (gold.n != m || ranks.columns() != 2 * m) {
    throw ContractViolation("order_loss: ranks cover " + std::to_string(m) + " tokens, gold has " +
                            std::to_string(gold.n));
  }
  OrderLoss out;
  out.d_ranks.assign(ranks.data().size(), 0.0);
  if (m == 0) return out;
  const RankView red = RankView::red(ranks);
  const RankView blue = RankView::blue(ranks);
  const auto add_dpsi = [&](int x, int y, double w) {
    const int arg = psi_argmax(ranks, x, m + y);
    out.d_ranks[static_cast<std::size_t>(arg) * 2 * m + x] += w;
    out.d_ranks[static_cast<std::size_t>(arg) * 2 * m + m + y] -= w;
  };

  OffEdgeOptions off;
  off.include_diagonal = true;
  off.first_source = opts.first_source;
  off.path = opts.path;
  const auto mass = offedge_log_mass(red, blue, gold.edges, off);
  if (mass.log_mass == -kInf) {
    out.off_edge = opts.floor;
    out.clamped = true;
  } else {
    out.off_edge = mass.log_mass;
    for (int row = 0; row < k; ++row) {
      for (int x = 0; x < m; ++x) {
        out.d_ranks[static_cast<std::size_t>(row) * 2 * m + x] += mass.d_red[static_cast<std::size_t>(row) * m + x];
        out.d_ranks[static_cast<std::size_t>(row) * 2 * m + m + x] +=
            mass.d_blue[static_cast<std::size_t>(row) * m + x];
      }
    }
  }

  // Second term: log sum over gold edges of exp(psi), direct in |E|.
  std::vector<std::pair<int, int>> edges;
  for (const Arc& e : gold.edges) {
    if (e.from - 1 >= opts.first_source) edges.emplace_back(e.from - 1, e.to - 1);
  }
  if (edges.empty()) {
    out.no_edges = true;
  } else {
    std::vector<double> psi;
    psi.reserve(edges.size());
    for (const auto& [x, y] : edges) psi.push_back(ranks.psi(x, m + y));
    const double mx = *std::max_element(psi.begin(), psi.end());
    double sum = 0.0;
    for (double p : psi) sum += std::exp(p - mx);
    out.on_edge = mx + std::log(sum);
    for (std::size_t i = 0; i < edges.size(); ++i) {
      add_dpsi(edges[i].first, edges[i].second, std::exp(psi[i] - out.on_edge));
    }
  }
  out.value = out.off_edge + out.on_edge;
  return out;
}

LossGrad loss_grad(const ModelParameters& params, const Example& ex, const OrderLossOptions& opts) {
  const ScorerConfig& c = params.config();
  const int m = static_cast<int>(ex.ids.size());
  if (!ex.labels.empty() && static_cast<int>(ex.labels.size()) != m) {
    throw ContractViolation("loss_grad: labels and ids differ in length");
  }
  LossGrad out;
  out.grad.assign(params.size(), 0.0);
  if (m == 0) return out;

  const Encoded enc = encode(params, ex.ids);
  const Realizer ranks = realize_ranks(params, enc);
  const OrderLoss ol = order_loss(ranks, ex.gold, opts);
  out.order = ol.value;
  out.clamped = ol.clamped;
  std::span<double> g(out.grad);

  // Rank head.
  const int k = c.k;
  MatrixXd d_scores(2 * k, m);
  for (int row = 0; row < k; ++row) {
    for (int x = 0; x < m; ++x) {
      d_scores(row, x) = ol.d_ranks[static_cast<std::size_t>(row) * 2 * m + x];
      d_scores(k + row, x) = ol.d_ranks[static_cast<std::size_t>(row) * 2 * m + m + x];
    }
  }
  params.matrix("rank.W", g) += d_scores * enc.hidden.transpose();
  params.matrix("rank.b", g) += d_scores.rowwise().sum();
  MatrixXd d_hidden = params.matrix("rank.W").transpose() * d_scores;

  // Label head: mean cross-entropy over tokens with a target.
  int labeled = 0;
  for (int y : ex.labels) labeled += y >= 0;
  if (labeled > 0) {
    const MatrixXd probs = label_scores(params, enc);
    MatrixXd d_logits = MatrixXd::Zero(c.label_count, m);
    for (int i = 0; i < m; ++i) {
      const int y = ex.labels[i];
      if (y < 0) continue;
      if (y >= c.label_count) throw ContractViolation("loss_grad: label id out of range");
      out.label -= std::log(std::max(probs(y, i), 1e-300)) / labeled;
      d_logits.col(i) = probs.col(i) / labeled;
      d_logits(y, i) -= 1.0 / labeled;
    }
    params.matrix("label.W", g) += d_logits * enc.hidden.transpose();
    params.matrix("label.b", g) += d_logits.rowwise().sum();
    d_hidden += params.matrix("label.W").transpose() * d_logits;
  }

  // Encoder.
  auto d_embed = params.matrix("embed", g);
  const int e = c.embed_dim;
  if (c.context == ContextKind::window_mlp) {
    const MatrixXd dz = (d_hidden.array() * (1.0 - enc.hidden.array().square())).matrix();
    params.matrix("ctx.W", g) += dz * enc.inputs.transpose();
    params.matrix("ctx.b", g) += dz.rowwise().sum();
    const MatrixXd d_in = params.matrix("ctx.W").transpose() * dz;
    for (int i = 0; i < m; ++i) {
      if (i > 0) d_embed.col(enc.ids[i - 1]) += d_in.block(0, i, e, 1);
      d_embed.col(enc.ids[i]) += d_in.block(e, i, e, 1);
      if (i + 1 < m) d_embed.col(enc.ids[i + 1]) += d_in.block(2 * e, i, e, 1);
    }
  } else {
    const int h2 = half(c);
    MatrixXd d_in = MatrixXd::Zero(e, m);
    // Backprop through time for one direction; `step` is +1 for the forward
    // chain (state t depends on t - 1) and -1 for the backward chain.
    const auto through_time = [&](const char* dir, const MatrixXd& states, const MatrixXd& d_states, int step) {
      const std::string p(dir);
      auto dwx = params.matrix(p + ".Wx", g);
      auto dwh = params.matrix(p + ".Wh", g);
      auto db = params.matrix(p + ".b", g);
      const auto wx = params.matrix(p + ".Wx");
      const auto wh = params.matrix(p + ".Wh");
      VectorXd carry = VectorXd::Zero(h2);
      const int first = step > 0 ? m - 1 : 0;
      const int last = step > 0 ? -1 : m;
      for (int t = first; t != last; t -= step) {
        const VectorXd dz = ((d_states.col(t) + carry).array() * (1.0 - states.col(t).array().square())).matrix();
        dwx += dz * enc.inputs.col(t).transpose();
        db += dz;
        d_in.col(t) += wx.transpose() * dz;
        const int prev = t - step;
        if (prev >= 0 && prev < m) {
          dwh += dz * states.col(prev).transpose();
          carry = wh.transpose() * dz;
        } else {
          carry.setZero();
        }
      }
    };
    through_time("fwd", enc.fwd, d_hidden.topRows(h2), +1);
    through_time("bwd", enc.bwd, d_hidden.bottomRows(h2), -1);
    for (int i = 0; i < m; ++i) d_embed.col(enc.ids[i]) += d_in.col(i);
  }

  params.check_finite(out.grad, "gradient");
  return out;
}

namespace {

// Sums parts[lo, hi) in a fixed binary tree so the rounding never depends
// on thread scheduling.
void tree_sum(std::vector<LossGrad>& parts, std::size_t lo, std::size_t hi) {
  if (hi - lo <= 1) return;
  const std::size_t mid = lo + (hi - lo) / 2;
  tree_sum(parts, lo, mid);
  tree_sum(parts, mid, hi);
  LossGrad& a = parts[lo];
  const LossGrad& b = parts[mid];
  a.order += b.order;
  a.label += b.label;
  a.clamped = a.clamped || b.clamped;
  for (std::size_t i = 0; i < a.grad.size(); ++i) a.grad[i] += b.grad[i];
}

}  // namespace

LossGrad batch_loss_grad(const ModelParameters& params, std::span<const Example> batch, const OrderLossOptions& opts) {
  if (batch.empty()) throw ContractViolation("batch_loss_grad: empty batch");
  const int count = static_cast<int>(batch.size());
  std::vector<LossGrad> parts(batch.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < count; ++i) {
    try {
      parts[i] = loss_grad(params, batch[i], opts);
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  tree_sum(parts, 0, parts.size());
  LossGrad out = std::move(parts[0]);
  const double scale = 1.0 / count;
  out.order *= scale;
  out.label *= scale;
  for (double& v : out.grad) v *= scale;
  return out;
}

double clip_global_norm(std::span<double> grad, double max_norm) {
  double sq = 0.0;
  for (double v : grad) sq += v * v;
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double s = max_norm / norm;
    for (double& v : grad) v *= s;
  }
  return norm;
}

void Adam::step(std::span<double> params, std::span<const double> grad) {
  if (params.size() != grad.size()) throw ContractViolation("Adam: parameter and gradient sizes differ");
  if (m_.empty()) {
    m_.assign(params.size(), 0.0);
    v_.assign(params.size(), 0.0);
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
    params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
  }
}

}  // namespace ordlin
