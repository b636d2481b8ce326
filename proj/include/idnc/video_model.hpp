#pragma once

// Layered GOP model. A GOP is split into L ordered layers; layer l decodes only
// when every packet of layers 1..l has arrived. Quality after the deadline is a
// table lookup: psnr_table[l] is the mean PSNR with the first l layers decoded
// and the rest concealed from the nearest decoded frames.

#include "idnc/core_model.hpp"
#include "idnc/errors.hpp"

#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace idnc {

class GopModel {
public:
  GopModel(std::vector<std::size_t> packets_per_layer, std::vector<double> psnr_table,
           std::optional<double> rate = std::nullopt)
      : packets_per_layer_(std::move(packets_per_layer)), psnr_table_(std::move(psnr_table)),
        rate_(rate) {
    validate();
  }

  std::size_t layers() const noexcept { return packets_per_layer_.size(); }
  std::size_t packets() const noexcept {
    return std::accumulate(packets_per_layer_.begin(), packets_per_layer_.end(), std::size_t{0});
  }
  const std::vector<std::size_t>& packets_per_layer() const noexcept { return packets_per_layer_; }
  const std::vector<double>& psnr_table() const noexcept { return psnr_table_; }
  std::optional<double> rate() const noexcept { return rate_; }

  /// PSNR with the first `decoded` layers available.
  double psnr(std::size_t decoded) const { return psnr_table_.at(decoded); }

  /// 1-based layer of packet l (packets are numbered layer by layer).
  std::size_t layer_of(PacketId l) const {
    std::size_t first = 0;
    for (std::size_t layer = 0; layer < layers(); ++layer) {
      first += packets_per_layer_[layer];
      if (l < first) return layer + 1;
    }
    throw std::out_of_range("packet index beyond the GOP");
  }

  void validate() const {
    if (packets_per_layer_.empty()) throw ConfigError("a GOP needs at least one layer");
    for (std::size_t c : packets_per_layer_)
      if (c == 0) throw ConfigError("every layer needs at least one packet");
    if (psnr_table_.size() != layers() + 1) {
      throw ConfigError("psnr_table needs layers + 1 entries (0 decoded layers up to all)");
    }
    for (std::size_t i = 0; i < psnr_table_.size(); ++i) {
      if (!std::isfinite(psnr_table_[i])) throw ConfigError("psnr_table entries must be finite");
      if (i > 0 && !(psnr_table_[i] > psnr_table_[i - 1])) {
        throw ConfigError("psnr_table must be strictly increasing");
      }
    }
    if (rate_ && !(*rate_ > 0.0)) throw ConfigError("rate must be positive");
  }

private:
  std::vector<std::size_t> packets_per_layer_;
  std::vector<double> psnr_table_;
  std::optional<double> rate_;
};

/// Four layers of 8, 3, 3, 3 packets. Only the all-layers PSNR (35.64 dB) is a
/// measured value; the lower entries are placeholders with the right shape.
inline GopModel default_gop() { return GopModel({8, 3, 3, 3}, {20.0, 28.0, 31.0, 33.5, 35.64}); }

/// Packets per layer for the given layer sizes in bytes.
inline std::vector<std::size_t> packetize(const std::vector<std::size_t>& layer_bytes,
                                          std::size_t payload = 1400) {
  if (payload == 0) throw ConfigError("payload must be positive");
  std::vector<std::size_t> out;
  out.reserve(layer_bytes.size());
  for (std::size_t sigma : layer_bytes) {
    if (sigma == 0) throw ConfigError("layer size must be positive");
    out.push_back((sigma + payload - 1) / payload);
  }
  return out;
}

/// Slots available for one GOP: floor(gop_frames * rate / (fps * packet_bits)).
inline std::size_t slots_per_gop(double rate_bps, double gop_frames = 8, double fps = 30,
                                 double packet_bits = 1500 * 8) {
  if (!(rate_bps > 0 && gop_frames > 0 && fps > 0 && packet_bits > 0)) {
    throw ConfigError("slots_per_gop arguments must be positive");
  }
  return static_cast<std::size_t>(std::floor(gop_frames * rate_bps / (fps * packet_bits)));
}

/// Losing a packet of layer l truncates decoding to layers < l, so its
/// importance is psnr(L) - psnr(l - 1).
inline std::vector<double> packet_importance(const GopModel& g) {
  std::vector<double> out;
  out.reserve(g.packets());
  const double full = g.psnr(g.layers());
  for (std::size_t layer = 1; layer <= g.layers(); ++layer)
    for (std::size_t j = 0; j < g.packets_per_layer()[layer - 1]; ++j)
      out.push_back(full - g.psnr(layer - 1));
  return out;
}

inline ImportanceMatrix importance_matrix(const GopModel& g, std::size_t devices) {
  return ImportanceMatrix::replicate(devices, packet_importance(g));
}

/// Number of leading layers whose packets are all in `has` (sorted).
inline std::size_t decodable_prefix(const GopModel& g, const PacketSet& has) {
  std::vector<bool> present(g.packets(), false);
  for (PacketId l : has)
    if (l < present.size()) present[l] = true;
  PacketId next = 0;
  for (std::size_t layer = 0; layer < g.layers(); ++layer) {
    for (std::size_t j = 0; j < g.packets_per_layer()[layer]; ++j, ++next)
      if (!present[next]) return layer;
  }
  return g.layers();
}

inline std::size_t decodable_prefix(const GopModel& g, const StatusMatrix& f, DeviceId k) {
  return decodable_prefix(g, has_set(f, k));
}

struct QualityReport {
  std::vector<std::size_t> decoded_layers;
  std::vector<double> psnr;
  std::vector<double> residual_distortion;
  double mean_psnr = 0.0;
};

/// Per-device decodable prefix and PSNR; residual distortion is the additive
/// distortion under `delta`.
inline QualityReport quality_report(const GopModel& g, const StatusMatrix& f,
                                    const ImportanceMatrix& delta) {
  if (f.packets() != g.packets()) {
    throw ConfigError("status matrix has " + std::to_string(f.packets()) +
                      " packets but the GOP has " + std::to_string(g.packets()));
  }
  check_dimensions(f, delta);
  QualityReport r;
  double sum = 0.0;
  for (DeviceId k = 0; k < f.devices(); ++k) {
    const std::size_t layers = decodable_prefix(g, f, k);
    r.decoded_layers.push_back(layers);
    r.psnr.push_back(g.psnr(layers));
    r.residual_distortion.push_back(individual_distortion(f, delta, k));
    sum += g.psnr(layers);
  }
  r.mean_psnr = f.devices() == 0 ? 0.0 : sum / static_cast<double>(f.devices());
  return r;
}

inline QualityReport quality_report(const GopModel& g, const StatusMatrix& f) {
  return quality_report(g, f, importance_matrix(g, f.devices()));
}

} // namespace idnc
