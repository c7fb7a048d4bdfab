#pragma once

// Small trainable realizer: embeddings, a contextual encoder, and linear
// heads producing K red and K blue ranks per token plus label scores.
// Parameters live in one flat double vector split into named blocks; the
// gradient uses the same layout.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "ordlin/aggregation.hpp"
#include "ordlin/order_core.hpp"

namespace ordlin {

enum class ContextKind { window_mlp, birnn };

std::string to_string(ContextKind kind);
ContextKind context_from_string(const std::string& name);

struct ScorerConfig {
  int vocab_size = 2;
  int embed_dim = 64;
  ContextKind context = ContextKind::birnn;
  int hidden_dim = 128;
  int k = 2;
  int label_count = 1;
  std::uint64_t seed = 0;
  double learning_rate = 1e-3;
  double grad_clip = 1.0;
  int epochs = 10;
  int batch_size = 8;

  void validate() const;
  bool operator==(const ScorerConfig&) const = default;
};

void to_json(nlohmann::json& j, const ScorerConfig& c);
void from_json(const nlohmann::json& j, ScorerConfig& c);

struct ParamBlock {
  std::string name;
  int rows = 0;
  int cols = 0;
  std::size_t offset = 0;
  std::size_t size() const { return static_cast<std::size_t>(rows) * cols; }
};

class ModelParameters {
 public:
  ModelParameters() = default;
  /// Zero-filled parameters with the block layout implied by `config`.
  explicit ModelParameters(const ScorerConfig& config);
  /// Random initialization from config.seed.
  static ModelParameters initialize(const ScorerConfig& config);

  const ScorerConfig& config() const { return config_; }
  const std::vector<ParamBlock>& blocks() const { return blocks_; }
  const ParamBlock& block(const std::string& name) const;
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }

  /// Column-major view of one block (rows x cols).
  Eigen::Map<Eigen::MatrixXd> matrix(const std::string& name);
  Eigen::Map<const Eigen::MatrixXd> matrix(const std::string& name) const;
  Eigen::Map<Eigen::MatrixXd> matrix(const std::string& name, std::span<double> buf) const;

  /// Throws NumericsError naming every block that holds a non-finite value.
  void check_finite(std::span<const double> buf, const char* what) const;

  bool operator==(const ModelParameters& o) const { return config_ == o.config_ && values_ == o.values_; }

 private:
  void add_block(const std::string& name, int rows, int cols);

  ScorerConfig config_;
  std::vector<ParamBlock> blocks_;
  std::vector<double> values_;
};

/// Forward pass result with what backprop needs.
struct Encoded {
  std::vector<int> ids;
  Eigen::MatrixXd hidden;  // hidden_dim x m
  Eigen::MatrixXd inputs;  // window-mlp: stacked neighbor embeddings; birnn: embeddings
  Eigen::MatrixXd fwd;     // birnn forward states (half x m)
  Eigen::MatrixXd bwd;     // birnn backward states
  int length() const { return static_cast<int>(ids.size()); }
};

/// Out-of-range ids map to 0 (UNK).
Encoded encode(const ModelParameters& params, std::span<const int> ids);

/// K x 2m realizer: column x holds the red ranks of token x + 1, column m + x the blue ranks.
Realizer realize_ranks(const ModelParameters& params, const Encoded& enc);

/// Softmax label distributions, label_count x m.
Eigen::MatrixXd label_scores(const ModelParameters& params, const Encoded& enc);

struct OrderLossOptions {
  /// Sources before this 0-based token index are left out (virtual root).
  int first_source = 0;
  AggregationPath path = AggregationPath::fast;
  double floor = OffEdgeOptions{}.floor;
};

struct OrderLoss {
  double value = 0.0;
  double off_edge = 0.0;  // log sum over the complement of exp(-psi)
  double on_edge = 0.0;   // log sum over the edges of exp(psi)
  bool clamped = false;   // complement mass fell below the floor
  bool no_edges = false;  // second term undefined and left out
  std::vector<double> d_ranks;  // same layout as the realizer data
};

/// Order loss over a token-split gold structure with its gradient in the ranks.
OrderLoss order_loss(const Realizer& ranks, const TokenSplitStructure& gold, const OrderLossOptions& opts = {});

struct Example {
  std::vector<int> ids;
  TokenSplitStructure gold;  // over ids.size() tokens
  std::vector<int> labels;   // per token, -1 = no label target
};

struct LossGrad {
  double order = 0.0;
  double label = 0.0;  // mean cross-entropy over labeled tokens
  bool clamped = false;
  std::vector<double> grad;
  double total() const { return order + label; }
};

LossGrad loss_grad(const ModelParameters& params, const Example& ex, const OrderLossOptions& opts = {});

/// Mean loss and gradient over a batch. Per-example work may run on several
/// threads; partial sums are combined in a fixed pairwise tree.
LossGrad batch_loss_grad(const ModelParameters& params, std::span<const Example> batch,
                         const OrderLossOptions& opts = {});

/// Scales `grad` so its Euclidean norm is at most `max_norm`; returns the norm before clipping.
double clip_global_norm(std::span<double> grad, double max_norm);

class Adam {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}
  void step(std::span<double> params, std::span<const double> grad);
  long steps() const { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<double> m_, v_;
};

}  // namespace ordlin
