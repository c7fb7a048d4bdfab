#pragma once

// Timing harness for fast vs naive aggregation. Times are per call, median
// over trials; each trial times a batch of calls large enough for the clock.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

namespace ordlin {

struct BenchOptions {
  std::vector<int> sizes;  // strictly increasing, each >= 64
  int trials = 3;
  std::string semiring = "min";  // min | min-argmin | log-sum-exp
  std::uint64_t seed = 0;
  /// A timed batch shorter than this is repeated with twice the calls.
  double min_batch_ns = 2e6;
  bool time_naive = true;
};

struct BenchRow {
  int n = 0;
  double fast_ns = 0.0;
  double naive_ns = 0.0;  // 0 when naive timing was skipped
  long fast_calls = 0;    // calls per timed batch
  long naive_calls = 0;
  std::string semiring;
  std::uint64_t seed = 0;
  std::string input_hash;
};

/// Doubling ratio between a row and the row of size 2n.
struct DoublingRatio {
  int n = 0;
  double r_fast = 0.0;
  double r_naive = 0.0;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  std::vector<DoublingRatio> ratios;
  int trials = 0;
  long peak_rss_kb = 0;
};

/// Random ranks for one bench size; depends only on (seed, n).
std::vector<double> bench_ranks(std::uint64_t seed, int n);
/// FNV-1a over the bytes of the ranks, as 16 hex digits.
std::string hash_ranks(const std::vector<double>& ranks);

/// Throws ContractViolation on bad sizes or semiring, and when the fast and
/// naive results disagree at any size.
BenchReport bench_aggregation(const BenchOptions& opts);

/// Median of the doubling ratios of rows with n >= min_n; NaN when none.
double median_ratio(const BenchReport& report, int min_n, bool fast);

nlohmann::json to_json(const BenchReport& report);
void write_tsv(std::ostream& out, const BenchReport& report);

}  // namespace ordlin
