#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "ordlin/bench.hpp"
#include "ordlin/errors.hpp"

using namespace ordlin;

namespace {

BenchOptions quick(std::vector<int> sizes, const std::string& semiring = "min") {
  BenchOptions o;
  o.sizes = std::move(sizes);
  o.trials = 1;
  o.semiring = semiring;
  o.seed = 17;
  o.min_batch_ns = 1e4;
  return o;
}

// Timing-dependent fields replaced so the report can be compared as text.
nlohmann::json masked(nlohmann::json j) {
  for (auto& row : j["rows"]) {
    for (const char* k : {"fast_ns", "naive_ns", "fast_calls", "naive_calls", "naive_over_fast"}) row[k] = "*";
  }
  for (auto& r : j["doubling"]) r["r_fast"] = r["r_naive"] = "*";
  j["peak_rss_kb"] = "*";
  return j;
}

}  // namespace

TEST(Bench, SmokeRow) {
  const auto rep = bench_aggregation(quick({64}));
  ASSERT_EQ(rep.rows.size(), 1u);
  const auto& r = rep.rows[0];
  EXPECT_EQ(r.n, 64);
  EXPECT_EQ(r.semiring, "min");
  EXPECT_GT(r.fast_ns, 0.0);
  EXPECT_GT(r.naive_ns, 0.0);
  EXPECT_GE(r.fast_calls, 1);
  EXPECT_EQ(r.input_hash.size(), 16u);
  EXPECT_TRUE(rep.ratios.empty());
}

TEST(Bench, AllSemiringsValueCheck) {
  for (const char* s : {"min", "min-argmin", "log-sum-exp"}) {
    const auto rep = bench_aggregation(quick({64, 128, 256}, s));
    ASSERT_EQ(rep.rows.size(), 3u) << s;
    ASSERT_EQ(rep.ratios.size(), 2u) << s;
    EXPECT_EQ(rep.ratios[0].n, 64);
    EXPECT_GT(rep.ratios[1].r_naive, 0.0);
  }
}

TEST(Bench, SameSeedSameInputs) {
  const auto a = bench_aggregation(quick({64, 128}));
  const auto b = bench_aggregation(quick({64, 128}));
  for (std::size_t i = 0; i < a.rows.size(); ++i) EXPECT_EQ(a.rows[i].input_hash, b.rows[i].input_hash);
  auto o = quick({64});
  o.seed = 18;
  EXPECT_NE(bench_aggregation(o).rows[0].input_hash, a.rows[0].input_hash);
  EXPECT_EQ(bench_ranks(17, 64), bench_ranks(17, 64));
}

TEST(Bench, RejectsBadOptions) {
  EXPECT_THROW(bench_aggregation(quick({32})), ContractViolation);
  EXPECT_THROW(bench_aggregation(quick({128, 64})), ContractViolation);
  EXPECT_THROW(bench_aggregation(quick({128, 128})), ContractViolation);
  EXPECT_THROW(bench_aggregation(quick({})), ContractViolation);
  EXPECT_THROW(bench_aggregation(quick({64}, "max")), ContractViolation);
}

TEST(Bench, MedianRatio) {
  BenchReport rep;
  rep.ratios = {{1024, 9.0, 9.0}, {4096, 2.0, 4.0}, {8192, 2.2, 3.0}, {16384, 2.4, 5.0}};
  EXPECT_DOUBLE_EQ(median_ratio(rep, 4096, true), 2.2);
  EXPECT_DOUBLE_EQ(median_ratio(rep, 4096, false), 4.0);
  EXPECT_TRUE(std::isnan(median_ratio(rep, 1 << 20, true)));
}

TEST(Bench, JsonSchemaMatchesGolden) {
  const auto rep = bench_aggregation(quick({64, 128}));
  std::ifstream in(std::string(ORDLIN_GOLDEN_DIR) + "/bench_report.json");
  ASSERT_TRUE(in) << "missing golden file";
  const auto golden = nlohmann::json::parse(in);
  EXPECT_EQ(masked(to_json(rep)), golden) << masked(to_json(rep)).dump(2);
}

TEST(Bench, TsvHasOneLinePerRow) {
  const auto rep = bench_aggregation(quick({64, 128}));
  std::ostringstream out;
  write_tsv(out, rep);
  std::istringstream lines(out.str());
  std::string header, l1, l2, extra;
  std::getline(lines, header);
  std::getline(lines, l1);
  std::getline(lines, l2);
  EXPECT_FALSE(std::getline(lines, extra));
  EXPECT_EQ(header.rfind("n\tsemiring", 0), 0u);
  EXPECT_EQ(l1.rfind("64\tmin\t17\t", 0), 0u);
  EXPECT_NE(l2.find("\t-\t-"), std::string::npos);
}
