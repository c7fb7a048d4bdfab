#include "ordlin/bench.hpp"

#include <sys/resource.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <omp.h>

#include "ordlin/aggregation.hpp"
#include "ordlin/random_instances.hpp"

namespace ordlin {
namespace {

using Clock = std::chrono::steady_clock;

// Restores the OpenMP thread count on scope exit.
class OneThread {
 public:
  OneThread() : saved_(omp_get_max_threads()) { omp_set_num_threads(1); }
  ~OneThread() { omp_set_num_threads(saved_); }
  OneThread(const OneThread&) = delete;
  OneThread& operator=(const OneThread&) = delete;

 private:
  int saved_;
};

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

template <class F>
long calibrate(F&& call, double min_batch_ns) {
  for (long calls = 1;; calls *= 2) {
    const auto t0 = Clock::now();
    for (long i = 0; i < calls; ++i) call();
    const double ns = std::chrono::duration<double, std::nano>(Clock::now() - t0).count();
    if (ns >= min_batch_ns || calls >= (1L << 30)) return calls;
  }
}

template <class F>
double time_per_call(F&& call, long calls) {
  const auto t0 = Clock::now();
  for (long i = 0; i < calls; ++i) call();
  return std::chrono::duration<double, std::nano>(Clock::now() - t0).count() / calls;
}

bool same(double a, double b, bool approx) {
  if (!approx) return a == b || (std::isnan(a) && std::isnan(b));
  if (a == b) return true;
  return std::abs(a - b) <= 1e-9 * std::max({1.0, std::abs(a), std::abs(b)});
}
bool same(const Scored& a, const Scored& b, bool) { return a == b; }

template <Semiring S>
void bench_rows(const BenchOptions& opts, BenchReport& report) {
  constexpr bool approx = std::is_same_v<S, LogSumExpSemiring>;
  for (int n : opts.sizes) {
    const std::vector<double> ranks = bench_ranks(opts.seed, n);
    const Realizer r(2, 2 * n, ranks);
    const RankView red = RankView::red(r), blue = RankView::blue(r);

    AggregationResult<S> fast, naive;
    auto run_fast = [&] { fast = aggregate_fast_k2<S>(red, blue, false); };
    auto run_naive = [&] { naive = aggregate_naive<S>(red, blue, false); };

    BenchRow row;
    row.n = n;
    row.semiring = S::name;
    row.seed = opts.seed;
    row.input_hash = hash_ranks(ranks);

    row.fast_calls = calibrate(run_fast, opts.min_batch_ns);
    std::vector<double> ft;
    for (int t = 0; t < opts.trials; ++t) ft.push_back(time_per_call(run_fast, row.fast_calls));
    row.fast_ns = median(ft);

    if (opts.time_naive) {
      row.naive_calls = calibrate(run_naive, opts.min_batch_ns);
      std::vector<double> nt;
      for (int t = 0; t < opts.trials; ++t) nt.push_back(time_per_call(run_naive, row.naive_calls));
      row.naive_ns = median(nt);
    } else {
      run_naive();
    }

    bool ok = same(fast.global, naive.global, approx);
    for (int x = 0; ok && x < n; ++x) ok = same(fast.per_source[x], naive.per_source[x], approx);
    if (!ok) {
      throw ContractViolation("bench: fast and naive " + row.semiring + " aggregation disagree at n = " +
                              std::to_string(n));
    }
    report.rows.push_back(std::move(row));
  }
}

}  // namespace

std::vector<double> bench_ranks(std::uint64_t seed, int n) {
  testing::Rng rng(seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(n));
  return testing::random_ranks(rng, static_cast<std::size_t>(4) * n);
}

std::string hash_ranks(const std::vector<double>& ranks) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double v : ranks) {
    unsigned char bytes[sizeof v];
    std::memcpy(bytes, &v, sizeof v);
    for (unsigned char b : bytes) {
      h ^= b;
      h *= 0x100000001b3ULL;
    }
  }
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << h;
  return s.str();
}

BenchReport bench_aggregation(const BenchOptions& opts) {
  if (opts.sizes.empty()) throw ContractViolation("bench: no sizes");
  for (std::size_t i = 0; i < opts.sizes.size(); ++i) {
    if (opts.sizes[i] < 64) throw ContractViolation("bench: size " + std::to_string(opts.sizes[i]) + " is below 64");
    if (i > 0 && opts.sizes[i] <= opts.sizes[i - 1]) throw ContractViolation("bench: sizes must strictly increase");
  }
  if (opts.trials < 1) throw ContractViolation("bench: trials must be positive");

  OneThread pin;
  BenchReport report;
  report.trials = opts.trials;
  if (opts.semiring == "min") {
    bench_rows<MinSemiring>(opts, report);
  } else if (opts.semiring == "min-argmin") {
    bench_rows<MinArgminSemiring>(opts, report);
  } else if (opts.semiring == "log-sum-exp") {
    bench_rows<LogSumExpSemiring>(opts, report);
  } else {
    throw ContractViolation("bench: unknown semiring '" + opts.semiring + "' (min, min-argmin, log-sum-exp)");
  }

  for (std::size_t i = 0; i + 1 < report.rows.size(); ++i) {
    const BenchRow& a = report.rows[i];
    const auto b = std::find_if(report.rows.begin() + i + 1, report.rows.end(),
                                [&](const BenchRow& r) { return r.n == 2 * a.n; });
    if (b == report.rows.end()) continue;
    report.ratios.push_back({a.n, b->fast_ns / a.fast_ns, a.naive_ns > 0 ? b->naive_ns / a.naive_ns : 0.0});
  }

  rusage ru{};
  if (getrusage(RUSAGE_SELF, &ru) == 0) report.peak_rss_kb = ru.ru_maxrss;
  return report;
}

double median_ratio(const BenchReport& report, int min_n, bool fast) {
  std::vector<double> v;
  for (const auto& r : report.ratios) {
    if (r.n >= min_n) v.push_back(fast ? r.r_fast : r.r_naive);
  }
  return v.empty() ? std::nan("") : median(v);
}

nlohmann::json to_json(const BenchReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"n", r.n},
                    {"fast_ns", r.fast_ns},
                    {"naive_ns", r.naive_ns},
                    {"fast_calls", r.fast_calls},
                    {"naive_calls", r.naive_calls},
                    {"semiring", r.semiring},
                    {"seed", r.seed},
                    {"input_hash", r.input_hash},
                    {"naive_over_fast", r.naive_ns > 0 ? r.naive_ns / r.fast_ns : 0.0}});
  }
  nlohmann::json ratios = nlohmann::json::array();
  for (const auto& r : report.ratios) ratios.push_back({{"n", r.n}, {"r_fast", r.r_fast}, {"r_naive", r.r_naive}});
  return {{"format", "ordlin-bench"},
          {"version", 1},
          {"trials", report.trials},
          {"threads", 1},
          {"rows", rows},
          {"doubling", ratios},
          {"peak_rss_kb", report.peak_rss_kb}};
}

void write_tsv(std::ostream& out, const BenchReport& report) {
  out << "n\tsemiring\tseed\tinput_hash\tfast_ns\tnaive_ns\tnaive_over_fast\tr_fast\tr_naive\n";
  for (const auto& r : report.rows) {
    out << r.n << '\t' << r.semiring << '\t' << r.seed << '\t' << r.input_hash << '\t' << r.fast_ns << '\t'
        << r.naive_ns << '\t' << (r.naive_ns > 0 ? r.naive_ns / r.fast_ns : 0.0);
    const auto d = std::find_if(report.ratios.begin(), report.ratios.end(),
                                [&](const DoublingRatio& x) { return x.n == r.n; });
    if (d != report.ratios.end()) {
      out << '\t' << d->r_fast << '\t' << d->r_naive << '\n';
    } else {
      out << "\t-\t-\n";
    }
  }
}

}  // namespace ordlin
