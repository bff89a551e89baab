#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "pade/bitplane.hpp"
#include "pade/buigf.hpp"

namespace pade {

struct RetainedKey {
  std::size_t key = 0;
  std::int64_t score = 0;  // exact integer score
  bool operator==(const RetainedKey&) const = default;
};

using Tile = std::vector<RetainedKey>;

/// Buffer of keys that survived every bit round; emits a tile each time it
/// holds `tile_size` entries.
class RetainedKeyBoard {
 public:
  explicit RetainedKeyBoard(std::size_t tile_size = 16);

  /// Adds a retained key. Returns the completed tile when the board fills.
  std::optional<Tile> push(std::size_t key, std::int64_t score);

  /// Emits the final partial tile, if any.
  std::optional<Tile> flush();

  std::size_t pending() const { return pending_.size(); }
  std::size_t tile_size() const { return tile_size_; }

 private:
  std::size_t tile_size_;
  Tile pending_;
};

/// Online-softmax accumulator carried across tiles.
template <std::floating_point Real>
struct BasicTileState {
  Real m = -std::numeric_limits<Real>::infinity();
  Real l = 0;
  std::vector<Real> o;
  std::size_t rescale_ops = 0;
  std::size_t tiles = 0;

  explicit BasicTileState(std::size_t dim = 0) : o(dim, Real{0}) {}
};

using TileState = BasicTileState<float>;

/// Folds one tile of logits (one per row of `value_rows`) into the state.
/// A strict increase of the running max rescales l and O; the first non-empty
/// tile only initialises the max.
template <std::floating_point Real>
void accumulate_tile(BasicTileState<Real>& state, std::span<const double> logits,
                     std::span<const std::span<const double>> value_rows) {
  if (logits.size() != value_rows.size()) throw std::invalid_argument("accumulate_tile: size mismatch");
  if (logits.empty()) return;
  Real tile_max = -std::numeric_limits<Real>::infinity();
  for (double s : logits) tile_max = std::max(tile_max, static_cast<Real>(s));
  const bool first = state.tiles == 0;
  if (tile_max > state.m) {
    if (!first) {
      const Real f = std::exp(state.m - tile_max);
      state.l *= f;
      for (auto& x : state.o) x *= f;
      ++state.rescale_ops;
    }
    state.m = tile_max;
  }
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const Real w = std::exp(static_cast<Real>(logits[i]) - state.m);
    state.l += w;
    const auto& v = value_rows[i];
    for (std::size_t c = 0; c < state.o.size(); ++c) state.o[c] += w * static_cast<Real>(v[c]);
  }
  ++state.tiles;
}

template <std::floating_point Real>
std::vector<Real> finalize(const BasicTileState<Real>& state) {
  std::vector<Real> out(state.o.size(), Real{0});
  if (state.l > 0) {
    for (std::size_t c = 0; c < out.size(); ++c) out[c] = state.o[c] / state.l;
  }
  return out;
}

enum class TileOrder { LeftToRight, HeadTail };

/// 0, T-1, 1, T-2, 2, ... each tile exactly once.
std::vector<std::size_t> head_tail_order(std::size_t num_tiles);

std::vector<std::size_t> tile_order(std::size_t num_tiles, TileOrder policy);

/// Streaming BUI-GF over an observation window that grows in `arrival` order.
/// Decisions only see keys already inside the window, so a pruned key stays
/// pruned however far the window later grows.
PruneTrace tile_prune_window(std::span<const std::int8_t> q_row, std::span<const BitPlaneSet> keys,
                             std::span<const std::size_t> arrival, const PruneConfig& cfg);

/// Splits retained keys (in the given order) into tiles of `tile_size`,
/// flushing a trailing partial tile.
std::vector<Tile> make_tiles(std::span<const RetainedKey> retained, std::size_t tile_size);

struct IstaOptions {
  std::size_t tile_size = 16;
  TileOrder order = TileOrder::HeadTail;
};

struct IstaMetrics {
  std::size_t rescale_ops = 0;
  std::size_t retained = 0;
  std::size_t planes_fetched = 0;
  std::size_t tiles = 0;
};

struct IstaRowResult {
  std::vector<float> output;
  IstaMetrics metrics;
  PruneTrace trace;
};

/// Runs a sequence of tiles through the online softmax. `score_scale` converts
/// integer scores to logits; `values` are dequantized V rows.
template <std::floating_point Real>
BasicTileState<Real> run_tiles(std::span<const Tile> tiles, std::span<const std::size_t> order, double score_scale,
                               const RealMatrix& values) {
  BasicTileState<Real> state(values.cols());
  std::vector<double> logits;
  std::vector<std::span<const double>> rows;
  for (std::size_t t : order) {
    logits.clear();
    rows.clear();
    for (const auto& rk : tiles[t]) {
      logits.push_back(static_cast<double>(rk.score) * score_scale);
      rows.push_back(values.row(rk.key));
    }
    accumulate_tile<Real>(state, logits, rows);
  }
  return state;
}

/// Full tiled sparse attention for one query row: guarded filtering in key
/// order, tiles of retained keys, online softmax in the chosen tile order.
IstaRowResult sparse_attention_row(std::span<const std::int8_t> q_row, std::span<const BitPlaneSet> key_planes,
                                   const RealMatrix& values, const PruneConfig& cfg, const IstaOptions& opts);

}  // namespace pade
