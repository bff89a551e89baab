#include "pade/ista.hpp"

#include <stdexcept>

namespace pade {

RetainedKeyBoard::RetainedKeyBoard(std::size_t tile_size) : tile_size_(tile_size) {
  if (tile_size == 0) throw std::invalid_argument("RetainedKeyBoard: tile size must be positive");
  pending_.reserve(tile_size);
}

std::optional<Tile> RetainedKeyBoard::push(std::size_t key, std::int64_t score) {
  pending_.push_back(RetainedKey{key, score});
  if (pending_.size() < tile_size_) return std::nullopt;
  Tile out = std::move(pending_);
  pending_ = Tile{};
  pending_.reserve(tile_size_);
  return out;
}

std::optional<Tile> RetainedKeyBoard::flush() {
  if (pending_.empty()) return std::nullopt;
  Tile out = std::move(pending_);
  pending_ = Tile{};
  return out;
}

std::vector<std::size_t> head_tail_order(std::size_t num_tiles) {
  std::vector<std::size_t> order;
  order.reserve(num_tiles);
  std::size_t lo = 0;
  std::size_t hi = num_tiles;
  while (lo < hi) {
    order.push_back(lo++);
    if (lo < hi) order.push_back(--hi);
  }
  return order;
}

std::vector<std::size_t> tile_order(std::size_t num_tiles, TileOrder policy) {
  if (policy == TileOrder::HeadTail) return head_tail_order(num_tiles);
  std::vector<std::size_t> order(num_tiles);
  for (std::size_t t = 0; t < num_tiles; ++t) order[t] = t;
  return order;
}

PruneTrace tile_prune_window(std::span<const std::int8_t> q_row, std::span<const BitPlaneSet> keys,
                             std::span<const std::size_t> arrival, const PruneConfig& cfg) {
  return filter_row_ordered(q_row, keys, arrival, cfg);
}

std::vector<Tile> make_tiles(std::span<const RetainedKey> retained, std::size_t tile_size) {
  RetainedKeyBoard board(tile_size);
  std::vector<Tile> tiles;
  for (const auto& rk : retained) {
    if (auto t = board.push(rk.key, rk.score)) tiles.push_back(std::move(*t));
  }
  if (auto t = board.flush()) tiles.push_back(std::move(*t));
  return tiles;
}

IstaRowResult sparse_attention_row(std::span<const std::int8_t> q_row, std::span<const BitPlaneSet> key_planes,
                                   const RealMatrix& values, const PruneConfig& cfg, const IstaOptions& opts) {
  if (values.rows() != key_planes.size()) throw std::invalid_argument("sparse_attention_row: K/V length mismatch");
  IstaRowResult result;
  result.trace = filter_row(q_row, key_planes, cfg);

  std::vector<RetainedKey> retained;
  for (std::size_t j = 0; j < result.trace.keys.size(); ++j) {
    if (result.trace.keys[j].retained) retained.push_back(RetainedKey{j, result.trace.keys[j].score});
  }
  const auto tiles = make_tiles(retained, opts.tile_size);
  const auto order = tile_order(tiles.size(), opts.order);
  const auto state = run_tiles<float>(tiles, order, cfg.score_scale, values);

  result.output = finalize(state);
  result.metrics.rescale_ops = state.rescale_ops;
  result.metrics.retained = retained.size();
  result.metrics.planes_fetched = result.trace.planes_fetched();
  result.metrics.tiles = tiles.size();
  return result;
}

}  // namespace pade
