#include "pade/dram.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace pade {

void DramConfig::validate() const {
  auto positive = [](std::uint32_t v, const char* name) {
    if (v == 0) throw std::invalid_argument(std::string("dram.") + name + ": must be positive");
  };
  positive(latency_cycles, "latency_cycles");
  positive(channels, "channels");
  positive(banks_per_channel, "banks_per_channel");
  positive(row_bytes, "row_bytes");
  positive(bytes_per_transaction, "bytes_per_transaction");
  positive(max_outstanding, "max_outstanding");
  positive(issue_interval, "issue_interval");
  positive(scheduling_window, "scheduling_window");
  if (row_bytes % bytes_per_transaction != 0) {
    throw std::invalid_argument("dram.row_bytes: must be a multiple of bytes_per_transaction");
  }
}

AddressMap::AddressMap(const DramConfig& cfg, Layout layout, std::size_t seq_len, std::size_t head_dim, int bits)
    : cfg_(cfg), layout_(layout), seq_len_(seq_len), head_dim_(head_dim), bits_(bits), plane_bytes_(head_dim / 8) {
  cfg_.validate();
  if (head_dim == 0 || head_dim % 8 != 0) throw std::invalid_argument("AddressMap: head_dim must be a multiple of 8");
  if (plane_bytes_ > cfg.bytes_per_transaction || cfg.bytes_per_transaction % plane_bytes_ != 0) {
    throw std::invalid_argument("AddressMap: one bit plane must tile a transaction evenly");
  }
  const std::uint64_t raw = static_cast<std::uint64_t>(seq_len) * plane_bytes_;
  plane_array_bytes_ = (raw + cfg.row_bytes - 1) / cfg.row_bytes * cfg.row_bytes;
  v_base_ = std::uint64_t{1} << 40;
}

DramCoord AddressMap::linear(std::uint64_t addr) const {
  const std::uint64_t g = addr / cfg_.row_bytes;
  DramCoord c;
  c.channel = static_cast<std::uint32_t>(g % cfg_.channels);
  c.bank = static_cast<std::uint32_t>((g / cfg_.channels) % cfg_.banks_per_channel);
  c.row = g;
  c.block = addr / cfg_.bytes_per_transaction;
  return c;
}

DramCoord AddressMap::k_plane(const KPlaneRef& ref) const {
  // Each K array lives in one bank: one array per (head, plane) when bit
  // interleaved, one per head when row-major. Arrays are dealt over channels first.
  std::uint64_t array = 0, offset = 0, array_bytes = 0;
  if (layout_ == Layout::RowMajor) {
    array = ref.head;
    offset = (static_cast<std::uint64_t>(ref.key) * bits_ + ref.plane) * plane_bytes_;
    array_bytes = plane_array_bytes_ * static_cast<std::uint64_t>(bits_);
  } else {
    array = static_cast<std::uint64_t>(ref.head) * bits_ + ref.plane;
    offset = static_cast<std::uint64_t>(ref.key) * plane_bytes_;
    array_bytes = plane_array_bytes_;
  }
  const std::uint64_t addr = array * array_bytes + offset;
  DramCoord c;
  c.channel = static_cast<std::uint32_t>(array % cfg_.channels);
  c.bank = static_cast<std::uint32_t>((array / cfg_.channels) % cfg_.banks_per_channel);
  c.row = addr / cfg_.row_bytes;
  c.block = addr / cfg_.bytes_per_transaction;
  return c;
}

std::vector<KPlaneRef> AddressMap::k_block_planes(const KPlaneRef& ref) const {
  std::vector<KPlaneRef> out;
  const std::uint64_t per_block = cfg_.bytes_per_transaction / plane_bytes_;
  if (layout_ == Layout::RowMajor) {
    const std::uint64_t idx = (static_cast<std::uint64_t>(ref.head) * seq_len_ + ref.key) * bits_ + ref.plane;
    const std::uint64_t first = idx / per_block * per_block;
    const std::uint64_t total = static_cast<std::uint64_t>(seq_len_) * bits_;
    for (std::uint64_t i = first; i < first + per_block; ++i) {
      const std::uint64_t h = i / total;
      if (h != ref.head) continue;
      const std::uint64_t within = i % total;
      out.push_back(KPlaneRef{ref.head, static_cast<std::uint32_t>(within / bits_),
                              static_cast<std::uint32_t>(within % bits_)});
    }
    return out;
  }
  const std::uint64_t first = ref.key / per_block * per_block;
  for (std::uint64_t k = first; k < first + per_block && k < seq_len_; ++k) {
    out.push_back(KPlaneRef{ref.head, static_cast<std::uint32_t>(k), ref.plane});
  }
  return out;
}

std::vector<DramCoord> AddressMap::v_row(std::uint32_t head, std::uint32_t key) const {
  std::vector<DramCoord> out;
  const std::uint64_t addr = v_base_ + (static_cast<std::uint64_t>(head) * seq_len_ + key) * head_dim_;
  for (std::uint64_t off = 0; off < head_dim_; off += cfg_.bytes_per_transaction) {
    const auto c = linear(addr + off);
    if (out.empty() || out.back().block != c.block) out.push_back(c);
  }
  const auto last = linear(addr + head_dim_ - 1);
  if (out.back().block != last.block) out.push_back(last);
  return out;
}

std::vector<DramCoord> AddressMap::map_stream(std::span<const KPlaneRef> stream) const {
  std::vector<DramCoord> out;
  out.reserve(stream.size());
  for (const auto& r : stream) out.push_back(k_plane(r));
  return out;
}

DramModel::DramModel(const DramConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  channels_.resize(cfg_.channels);
  for (auto& ch : channels_) {
    ch.open_row.assign(cfg_.banks_per_channel, -1);
    ch.row_ready.assign(cfg_.banks_per_channel, 0);
  }
}

bool DramModel::submit(const DramCoord& coord, bool background) {
  if (!pending_blocks_.insert(coord.block).second) {
    ++stats_.merged_requests;
    return true;
  }
  auto& ch = channels_.at(coord.channel);
  (background ? ch.background : ch.queue).push_back(coord);
  return false;
}

std::vector<std::uint64_t> DramModel::tick(std::uint64_t cycle) {
  std::vector<std::uint64_t> done;
  while (!in_flight_.empty() && in_flight_.top().done <= cycle) {
    const auto f = in_flight_.top();
    in_flight_.pop();
    --channels_[f.channel].outstanding;
    pending_blocks_.erase(f.block);
    done.push_back(f.block);
  }
  for (std::uint32_t c = 0; c < channels_.size(); ++c) {
    Channel& ch = channels_[c];
    if (cycle < ch.next_issue || ch.outstanding >= cfg_.max_outstanding) continue;
    auto& q = ch.queue.empty() ? ch.background : ch.queue;
    if (q.empty()) continue;
    // First-ready: the oldest row hit within the scheduling window goes ahead of older misses.
    auto pick = q.begin();
    const auto window = q.begin() + static_cast<std::ptrdiff_t>(std::min<std::size_t>(q.size(), cfg_.scheduling_window));
    for (auto it = q.begin(); it != window; ++it) {
      if (ch.open_row[it->bank] == static_cast<std::int64_t>(it->row)) {
        pick = it;
        break;
      }
    }
    const DramCoord req = *pick;
    q.erase(pick);
    auto& open = ch.open_row[req.bank];
    auto& ready = ch.row_ready[req.bank];
    if (open != static_cast<std::int64_t>(req.row)) {
      open = static_cast<std::int64_t>(req.row);
      ++stats_.row_activations;
      ready = std::max(cycle, ready) + cfg_.activation_penalty;
    }
    // A hit cannot overtake the activation that opened its row.
    const std::uint64_t done = std::max(cycle, ready) + cfg_.latency_cycles;
    ++ch.outstanding;
    ch.next_issue = cycle + cfg_.issue_interval;
    ++stats_.transactions;
    stats_.bytes += cfg_.bytes_per_transaction;
    in_flight_.push(InFlight{done, seq_++, req.block, c});
  }
  return done;
}

bool DramModel::idle() const { return pending_blocks_.empty(); }

std::size_t DramModel::outstanding() const { return pending_blocks_.size(); }

DramAccessSummary model_dram_access(std::span<const DramCoord> stream, const DramConfig& cfg) {
  DramAccessSummary out;
  if (stream.empty()) return out;
  DramModel dram(cfg);
  for (const auto& c : stream) dram.submit(c);
  std::uint64_t cycle = 0;
  while (!dram.idle()) {
    if (!dram.tick(cycle).empty()) out.cycles = cycle;
    ++cycle;
  }
  out.transactions = dram.stats().transactions;
  out.row_activations = dram.stats().row_activations;
  return out;
}

DramAccessSummary model_dram_access(std::span<const KPlaneRef> stream, Layout layout, const DramConfig& cfg,
                                    std::size_t seq_len, std::size_t head_dim, int bits) {
  const AddressMap map(cfg, layout, seq_len, head_dim, bits);
  const auto coords = map.map_stream(stream);
  return model_dram_access(coords, cfg);
}

}  // namespace pade
