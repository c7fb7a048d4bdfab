#include <gtest/gtest.h>

#include <cmath>

#include "ordlin/errors.hpp"
#include "ordlin/random_instances.hpp"
#include "ordlin/scorer.hpp"
#include "ordlin/verify.hpp"

using namespace ordlin;
using ordlin::testing::Rng;
using ordlin::testing::uniform_int;

namespace {

ScorerConfig small_config(ContextKind ctx, std::uint64_t seed = 1) {
  ScorerConfig c;
  c.vocab_size = 12;
  c.embed_dim = 5;
  c.hidden_dim = 8;
  c.context = ctx;
  c.label_count = 4;
  c.seed = seed;
  return c;
}

// Direct O(n^2) order loss over the model tokens, first source included.
double direct_order_loss(const Realizer& r, const TokenSplitStructure& gold, int first_source) {
  const int m = r.tokens();
  double off = 0.0, on = 0.0;
  for (int x = first_source; x < m; ++x) {
    for (int y = 0; y < m; ++y) {
      const double psi = r.psi(x, m + y);
      if (gold.edges.contains({x + 1, y + 1})) {
        on += std::exp(psi);
      } else {
        off += std::exp(-psi);
      }
    }
  }
  return std::log(off) + std::log(on);
}

}  // namespace

TEST(Encode, EmptyAndDeterministic) {
  const auto p = ModelParameters::initialize(small_config(ContextKind::birnn));
  EXPECT_EQ(encode(p, std::vector<int>{}).hidden.cols(), 0);
  const std::vector<int> ids{1, 4, 5, 6};
  EXPECT_EQ(encode(p, ids).hidden, encode(p, ids).hidden);
  EXPECT_EQ(encode(p, ids).hidden.cols(), 4);
}

TEST(Encode, OutOfVocabularyMapsToUnk) {
  const auto p = ModelParameters::initialize(small_config(ContextKind::window_mlp));
  const std::vector<int> oov{1, 99, -3};
  const std::vector<int> unk{1, 0, 0};
  EXPECT_EQ(encode(p, oov).hidden, encode(p, unk).hidden);
}

TEST(Encode, SwapChangesContextualOutputs) {
  for (auto ctx : {ContextKind::birnn, ContextKind::window_mlp}) {
    const auto p = ModelParameters::initialize(small_config(ctx, 7));
    const auto a = encode(p, std::vector<int>{1, 2, 3, 4, 5}).hidden;
    const auto b = encode(p, std::vector<int>{1, 2, 4, 3, 5}).hidden;
    EXPECT_GT((a.col(2) - b.col(2)).norm(), 1e-9);
    EXPECT_GT((a.col(3) - b.col(3)).norm(), 1e-9);
    EXPECT_GT((a.col(1) - b.col(1)).norm(), 1e-9);  // neighbor of the swapped pair
  }
}

TEST(RealizeRanks, ZeroWeightsGiveZeroRanks) {
  ModelParameters p(small_config(ContextKind::birnn));
  const auto r = realize_ranks(p, encode(p, std::vector<int>{1, 2, 3}));
  EXPECT_EQ(r.k(), 2);
  EXPECT_EQ(r.columns(), 6);
  for (double v : r.data()) EXPECT_EQ(v, 0.0);
  EXPECT_TRUE(intersect_total_orders(r, 3).edges.empty());
}

TEST(RealizeRanks, DecodedEdgesSatisfyAxioms) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto p = ModelParameters::initialize(small_config(seed % 2 ? ContextKind::birnn : ContextKind::window_mlp, seed));
    Rng rng(seed);
    std::vector<int> ids(uniform_int(rng, 1, 15));
    for (int& id : ids) id = uniform_int(rng, 0, 11);
    const auto r = realize_ranks(p, encode(p, ids));
    const auto t = intersect_total_orders(r, static_cast<int>(ids.size()));
    ASSERT_TRUE(check_order_axioms(2 * t.n, as_relation(t)).partial_order());
  }
}

TEST(LabelScores, SingleLabelAndUniform) {
  auto c = small_config(ContextKind::birnn);
  c.label_count = 1;
  const auto p = ModelParameters::initialize(c);
  const auto s = label_scores(p, encode(p, std::vector<int>{1, 2}));
  EXPECT_EQ(s.rows(), 1);
  EXPECT_DOUBLE_EQ(s(0, 1), 1.0);
  ModelParameters zero(small_config(ContextKind::birnn));
  const auto u = label_scores(zero, encode(zero, std::vector<int>{1, 2}));
  for (Eigen::Index i = 0; i < u.size(); ++i) EXPECT_DOUBLE_EQ(u.data()[i], 0.25);
}

TEST(OrderLoss, SingleSelfEdgeHandComputed) {
  Realizer r(2, 2, {0.0, 1.0, 0.0, 1.0});
  const TokenSplitStructure gold{1, {{1, 1}}};
  const auto l = order_loss(r, gold);
  EXPECT_TRUE(l.clamped);
  EXPECT_DOUBLE_EQ(l.on_edge, -1.0);
  EXPECT_DOUBLE_EQ(l.value, -1.0 + OffEdgeOptions{}.floor);
}

TEST(OrderLoss, NoEdgesFlagged) {
  Realizer r(2, 4, {0.0, 1.0, 0.5, -0.5, 0.0, 1.0, 0.3, 0.2});
  const auto l = order_loss(r, TokenSplitStructure{2, {}});
  EXPECT_TRUE(l.no_edges);
  EXPECT_EQ(l.on_edge, 0.0);
  EXPECT_DOUBLE_EQ(l.value, l.off_edge);
}

TEST(OrderLoss, MatchesDirectDoubleSum) {
  Rng rng(91);
  for (int trial = 0; trial < 200; ++trial) {
    const int m = uniform_int(rng, 2, 40);
    const auto r = ordlin::testing::random_realizer(rng, 2, m);
    const auto gold = token_split(ordlin::testing::random_head_function(rng, m));
    if (gold.edges.empty()) continue;
    OrderLossOptions opts;
    opts.first_source = trial % 2;
    bool has_active_edge = false;
    for (const Arc& a : gold.edges) has_active_edge |= a.from - 1 >= opts.first_source;
    if (!has_active_edge) continue;
    const double want = direct_order_loss(r, gold, opts.first_source);
    for (auto path : {AggregationPath::fast, AggregationPath::naive}) {
      opts.path = path;
      ASSERT_NEAR(order_loss(r, gold, opts).value, want, 1e-6 * std::max(1.0, std::abs(want)));
    }
  }
}

TEST(OrderLoss, ShiftInvariant) {
  Rng rng(92);
  for (int trial = 0; trial < 50; ++trial) {
    const int m = uniform_int(rng, 2, 30);
    auto r = ordlin::testing::random_realizer(rng, 2, m);
    const auto gold = token_split(ordlin::testing::random_tree(rng, m));
    const double before = order_loss(r, gold).value;
    const double c = std::normal_distribution<double>(0.0, 5.0)(rng);
    for (int k = 0; k < 2; ++k) {
      for (double& v : r.row(k)) v += c;
    }
    ASSERT_NEAR(order_loss(r, gold).value, before, 1e-9 * std::max(1.0, std::abs(before)));
  }
}

TEST(LossGrad, FiniteDifferences) {
  std::size_t checked = 0, passed = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto gc = random_gradcheck_case(seed, seed % 2 ? ContextKind::window_mlp : ContextKind::birnn);
    OrderLossOptions opts;
    opts.first_source = 1;
    const auto rep = gradient_check(gc.params, gc.example, opts);
    checked += rep.checked;
    passed += rep.passed;
  }
  EXPECT_GE(passed, 0.99 * checked) << passed << "/" << checked;
}

TEST(LossGrad, FastAndNaivePathsAgree) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto gc = random_gradcheck_case(100 + seed, seed % 2 ? ContextKind::window_mlp : ContextKind::birnn);
    OrderLossOptions opts;
    opts.first_source = 1;
    const auto fast = loss_grad(gc.params, gc.example, opts);
    opts.path = AggregationPath::naive;
    const auto naive = loss_grad(gc.params, gc.example, opts);
    ASSERT_NEAR(fast.total(), naive.total(), 1e-10);
    for (std::size_t i = 0; i < fast.grad.size(); ++i) ASSERT_NEAR(fast.grad[i], naive.grad[i], 1e-8);
  }
}

TEST(LossGrad, AbsentTokensGetZeroEmbeddingGradient) {
  auto gc = random_gradcheck_case(5, ContextKind::birnn);
  const auto g = loss_grad(gc.params, gc.example).grad;
  const auto d_embed = gc.params.matrix("embed", std::span<double>(const_cast<double*>(g.data()), g.size()));
  std::set<int> present(gc.example.ids.begin(), gc.example.ids.end());
  for (int id = 0; id < gc.params.config().vocab_size; ++id) {
    if (!present.contains(id)) EXPECT_EQ(d_embed.col(id).norm(), 0.0) << "id " << id;
  }
}

TEST(LossGrad, NonFiniteGradientNamesBlock) {
  auto gc = random_gradcheck_case(6, ContextKind::window_mlp);
  gc.params.matrix("label.W")(0, 0) = std::numeric_limits<double>::infinity();
  try {
    loss_grad(gc.params, gc.example);
    FAIL() << "expected NumericsError";
  } catch (const NumericsError& e) {
    EXPECT_NE(std::string(e.what()).find("label."), std::string::npos) << e.what();
  }
}

TEST(LossGrad, BatchReductionIsDeterministic) {
  std::vector<Example> batch;
  auto base = random_gradcheck_case(8, ContextKind::birnn);
  for (std::uint64_t s = 0; s < 9; ++s) batch.push_back(random_gradcheck_case(200 + s, ContextKind::birnn).example);
  const auto a = batch_loss_grad(base.params, batch);
  const auto b = batch_loss_grad(base.params, batch);
  EXPECT_EQ(a.grad, b.grad);
  EXPECT_EQ(a.total(), b.total());
}

TEST(Training, LossDecreasesOverFirstSteps) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto gc = random_gradcheck_case(300 + seed, ContextKind::birnn);
    std::vector<Example> batch;
    for (std::uint64_t s = 0; s < 4; ++s) batch.push_back(random_gradcheck_case(400 + 10 * seed + s, ContextKind::birnn).example);
    double prev = batch_loss_grad(gc.params, batch).total();
    for (int step = 0; step < 10; ++step) {
      auto lg = batch_loss_grad(gc.params, batch);
      for (std::size_t i = 0; i < lg.grad.size(); ++i) gc.params.values()[i] -= 1e-3 * lg.grad[i];
      const double now = batch_loss_grad(gc.params, batch).total();
      ASSERT_LT(now, prev) << "seed " << seed << " step " << step;
      prev = now;
    }
  }
}

TEST(Optim, ClipGlobalNorm) {
  std::vector<double> g{3.0, 4.0};
  EXPECT_DOUBLE_EQ(clip_global_norm(g, 1.0), 5.0);
  EXPECT_NEAR(std::hypot(g[0], g[1]), 1.0, 1e-15);
  std::vector<double> small{0.1};
  clip_global_norm(small, 1.0);
  EXPECT_EQ(small[0], 0.1);
}

TEST(Optim, AdamFirstStepMovesByLearningRate) {
  std::vector<double> p{1.0, -2.0};
  const std::vector<double> g{0.5, -3.0};
  Adam adam(0.1);
  adam.step(p, g);
  EXPECT_NEAR(p[0], 0.9, 1e-6);
  EXPECT_NEAR(p[1], -1.9, 1e-6);
}

TEST(Config, RejectsBadDimensions) {
  auto c = small_config(ContextKind::birnn);
  c.hidden_dim = 7;
  EXPECT_THROW(c.validate(), ContractViolation);
  c.hidden_dim = 8;
  c.k = 0;
  EXPECT_THROW(ModelParameters{c}, ContractViolation);
}

TEST(Config, JsonRoundTrip) {
  auto c = small_config(ContextKind::window_mlp, 1234567890123ULL);
  c.learning_rate = 3e-4;
  const nlohmann::json j = c;
  EXPECT_EQ(j.get<ScorerConfig>(), c);
}
