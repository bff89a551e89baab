#pragma once

#include <cstdint>
#include <deque>
#include <queue>
#include <span>
#include <unordered_set>
#include <vector>

namespace pade {

enum class Layout { BitInterleaved, RowMajor };

struct DramConfig {
  std::uint32_t latency_cycles = 40;  // tRC 50 ns at 800 MHz
  std::uint32_t channels = 16;
  std::uint32_t banks_per_channel = 16;
  std::uint32_t row_bytes = 1024;
  std::uint32_t bytes_per_transaction = 32;  // BL4 x 64 bit
  std::uint32_t max_outstanding = 16;        // per channel
  std::uint32_t activation_penalty = 20;     // extra cycles on a row-buffer miss
  std::uint32_t issue_interval = 2;          // cycles between transactions on one channel
  std::uint32_t scheduling_window = 1;       // queued requests searched for a row hit (1 = FIFO)

  void validate() const;
};

struct DramCoord {
  std::uint32_t channel = 0;
  std::uint32_t bank = 0;
  std::uint64_t row = 0;    // globally unique DRAM row id
  std::uint64_t block = 0;  // globally unique transaction-sized block id
  bool operator==(const DramCoord&) const = default;
};

struct KPlaneRef {
  std::uint32_t head = 0;
  std::uint32_t key = 0;
  std::uint32_t plane = 0;
  bool operator==(const KPlaneRef&) const = default;
};

/// Places K (bit planes), and V (row-major INT8 rows) in DRAM.
///
/// Each K array occupies one bank; arrays are dealt over channels, then banks.
/// BitInterleaved: one array per (head, plane), so a transaction carries the
/// same plane of several consecutive keys and same-plane fetches stay in one row.
/// RowMajor: one array per head with the planes of a key back to back, so
/// consecutive keys' same-plane fetches stride by a whole key across rows.
class AddressMap {
 public:
  AddressMap(const DramConfig& cfg, Layout layout, std::size_t seq_len, std::size_t head_dim, int bits);

  Layout layout() const { return layout_; }
  std::size_t plane_bytes() const { return plane_bytes_; }

  DramCoord k_plane(const KPlaneRef& ref) const;
  /// Every K plane stored in the same transaction block as `ref`.
  std::vector<KPlaneRef> k_block_planes(const KPlaneRef& ref) const;
  /// Blocks covering one V row.
  std::vector<DramCoord> v_row(std::uint32_t head, std::uint32_t key) const;

  std::vector<DramCoord> map_stream(std::span<const KPlaneRef> stream) const;

 private:
  DramCoord linear(std::uint64_t addr) const;

  DramConfig cfg_;
  Layout layout_;
  std::size_t seq_len_;
  std::size_t head_dim_;
  int bits_;
  std::size_t plane_bytes_;
  std::uint64_t plane_array_bytes_;  // row-aligned size of one plane array
  std::uint64_t v_base_;
};

struct DramStats {
  std::uint64_t transactions = 0;
  std::uint64_t row_activations = 0;
  std::uint64_t merged_requests = 0;
  std::uint64_t bytes = 0;
};

/// Fixed-latency multi-channel DRAM with bounded outstanding transactions,
/// open-row banks and request merging at transaction-block granularity.
class DramModel {
 public:
  explicit DramModel(const DramConfig& cfg);

  /// Queues a read of the block. A block already queued or in flight absorbs
  /// the request. Returns true when merged. Background requests issue only
  /// when a channel has no foreground request waiting.
  bool submit(const DramCoord& coord, bool background = false);

  /// Advances to `cycle` (monotone): retires finished transactions, then issues
  /// queued ones. Returns the blocks that completed at or before `cycle`.
  std::vector<std::uint64_t> tick(std::uint64_t cycle);

  bool idle() const;
  std::size_t outstanding() const;
  const DramStats& stats() const { return stats_; }
  const DramConfig& config() const { return cfg_; }

 private:
  struct Channel {
    std::deque<DramCoord> queue;
    std::deque<DramCoord> background;
    std::uint32_t outstanding = 0;
    std::uint64_t next_issue = 0;
    std::vector<std::int64_t> open_row;
    std::vector<std::uint64_t> row_ready;  // cycle the open row finishes activating
  };
  struct InFlight {
    std::uint64_t done;
    std::uint64_t seq;
    std::uint64_t block;
    std::uint32_t channel;
    bool operator>(const InFlight& o) const { return done != o.done ? done > o.done : seq > o.seq; }
  };

  DramConfig cfg_;
  std::vector<Channel> channels_;
  std::unordered_set<std::uint64_t> pending_blocks_;
  std::priority_queue<InFlight, std::vector<InFlight>, std::greater<>> in_flight_;
  std::uint64_t seq_ = 0;
  DramStats stats_;
};

struct DramAccessSummary {
  std::uint64_t transactions = 0;
  std::uint64_t row_activations = 0;
  std::uint64_t cycles = 0;
};

/// Replays a request stream issued all at cycle 0, in order.
DramAccessSummary model_dram_access(std::span<const DramCoord> stream, const DramConfig& cfg);

/// Convenience: maps a K-plane stream under `layout` and replays it.
DramAccessSummary model_dram_access(std::span<const KPlaneRef> stream, Layout layout, const DramConfig& cfg,
                                    std::size_t seq_len, std::size_t head_dim, int bits);

}  // namespace pade
