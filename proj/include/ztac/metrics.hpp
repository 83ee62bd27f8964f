#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <ostream>
#include <string>

namespace ztac {

// Microsecond latency histogram with fixed logarithmic-ish buckets. Writers
// only increment atomics; render() gives a point-in-time view.
class LatencyHistogram {
 public:
  static constexpr std::array<std::int64_t, 11> kBoundsUs = {
      50, 100, 200, 500, 1000, 2000, 5000, 10000, 50000, 100000, 500000};

  void observe(std::int64_t us) {
    std::size_t i = 0;
    while (i < kBoundsUs.size() && us > kBoundsUs[i]) ++i;
    buckets_[i].fetch_add(1, std::memory_order_relaxed);
    count_.fetch_add(1, std::memory_order_relaxed);
    sum_us_.fetch_add(us, std::memory_order_relaxed);
  }

  // Flat cumulative lines: <prefix>_le_<bound>, <prefix>_le_inf,
  // <prefix>_count, <prefix>_sum_us.
  void render(std::ostream& os, const std::string& prefix) const {
    std::uint64_t running = 0;
    for (std::size_t i = 0; i < kBoundsUs.size(); ++i) {
      running += buckets_[i].load(std::memory_order_relaxed);
      os << prefix << "_le_" << kBoundsUs[i] << " " << running << "\n";
    }
    running += buckets_[kBoundsUs.size()].load(std::memory_order_relaxed);
    os << prefix << "_le_inf " << running << "\n";
    os << prefix << "_count " << count_.load(std::memory_order_relaxed) << "\n";
    os << prefix << "_sum_us " << sum_us_.load(std::memory_order_relaxed) << "\n";
  }

 private:
  std::array<std::atomic<std::uint64_t>, kBoundsUs.size() + 1> buckets_{};
  std::atomic<std::uint64_t> count_{0};
  std::atomic<std::int64_t> sum_us_{0};
};

struct Metrics {
  std::atomic<std::uint64_t> decisions_total{0};
  std::atomic<std::uint64_t> decisions_permit{0};
  std::atomic<std::uint64_t> decisions_deny{0};
  std::atomic<std::uint64_t> decision_errors{0};
  std::atomic<std::uint64_t> cache_hits{0};
  std::atomic<std::uint64_t> cache_misses{0};
  std::atomic<std::uint64_t> backing_store_round_trips{0};
  LatencyHistogram policy_resolve_us;
  LatencyHistogram attribute_fetch_us;
  LatencyHistogram engine_compute_us;
  LatencyHistogram total_us;
};

}  // namespace ztac
