#pragma once

// Network and session state: link reception probabilities, packet reception
// status, importance weights and the derived per-device sets.

#include "idnc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace idnc {

using DeviceId = std::size_t;
using PacketId = std::size_t;
using DeviceSet = std::vector<DeviceId>; // sorted ascending
using PacketSet = std::vector<PacketId>; // sorted ascending

namespace detail {

inline std::string device_label(DeviceId k) { return "R" + std::to_string(k + 1); }

inline void check_index(std::size_t index, std::size_t bound, const char* what) {
  if (index >= bound) {
    throw std::out_of_range(std::string(what) + " index " + std::to_string(index) +
                            " out of range [0, " + std::to_string(bound) + ")");
  }
}

} // namespace detail

/// Symmetric M x M matrix of packet reception probabilities between devices.
/// A zero entry means the two devices are not directly connected; the diagonal is 1.
class ConnectivityMatrix {
public:
  ConnectivityMatrix() = default;

  /// M isolated devices (identity matrix).
  explicit ConnectivityMatrix(std::size_t m) : m_(m), y_(m * m, 0.0) {
    for (std::size_t i = 0; i < m; ++i) y_[i * m + i] = 1.0;
  }

  static ConnectivityMatrix from_rows(const std::vector<std::vector<double>>& rows) {
    ConnectivityMatrix out(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != rows.size()) {
        throw ConfigError("connectivity matrix row " + std::to_string(i + 1) + " has " +
                          std::to_string(rows[i].size()) + " entries, expected " +
                          std::to_string(rows.size()));
      }
      for (std::size_t k = 0; k < rows.size(); ++k) out.y_[i * out.m_ + k] = rows[i][k];
    }
    out.validate();
    return out;
  }

  std::size_t devices() const noexcept { return m_; }

  double reception(DeviceId i, DeviceId k) const { return y_[i * m_ + k]; }
  double erasure(DeviceId i, DeviceId k) const { return 1.0 - reception(i, k); }

  /// True when k is in the coverage zone of i (always true for i == k).
  bool connected(DeviceId i, DeviceId k) const { return reception(i, k) != 0.0; }

  /// Sets both y[i][k] and y[k][i].
  void set_link(DeviceId i, DeviceId k, double probability) {
    detail::check_index(i, m_, "device");
    detail::check_index(k, m_, "device");
    if (i == k) throw ConfigError("cannot set a link from a device to itself");
    if (!(probability >= 0.0 && probability <= 1.0)) {
      throw ConfigError("link probability must lie in [0, 1]");
    }
    y_[i * m_ + k] = probability;
    y_[k * m_ + i] = probability;
  }

  std::vector<std::vector<double>> rows() const {
    std::vector<std::vector<double>> out(m_, std::vector<double>(m_));
    for (std::size_t i = 0; i < m_; ++i)
      for (std::size_t k = 0; k < m_; ++k) out[i][k] = reception(i, k);
    return out;
  }

  void validate() const {
    for (std::size_t i = 0; i < m_; ++i) {
      if (reception(i, i) != 1.0) {
        throw ConfigError("connectivity matrix diagonal entry for " + detail::device_label(i) +
                          " must be 1");
      }
      for (std::size_t k = 0; k < m_; ++k) {
        const double v = reception(i, k);
        if (!(v >= 0.0 && v <= 1.0)) {
          throw ConfigError("connectivity entry (" + detail::device_label(i) + ", " +
                            detail::device_label(k) + ") outside [0, 1]");
        }
        if (v != reception(k, i)) {
          throw ConfigError("connectivity matrix is not symmetric at pair (" +
                            detail::device_label(i) + ", " + detail::device_label(k) + ")");
        }
      }
    }
  }

  friend bool operator==(const ConnectivityMatrix&, const ConnectivityMatrix&) = default;

private:
  std::size_t m_ = 0;
  std::vector<double> y_;
};

/// M x N binary matrix; entry (k, l) is 1 when packet l is missing at device k.
class StatusMatrix {
public:
  StatusMatrix() = default;

  /// All packets missing everywhere. Not a valid session state on its own; callers
  /// fill it in and may call validate().
  StatusMatrix(std::size_t m, std::size_t n) : m_(m), n_(n), f_(m * n, 1) {}

  static StatusMatrix from_rows(const std::vector<std::vector<int>>& rows) {
    const std::size_t n = rows.empty() ? 0 : rows.front().size();
    StatusMatrix out(rows.size(), n);
    for (std::size_t k = 0; k < rows.size(); ++k) {
      if (rows[k].size() != n) {
        throw ConfigError("status matrix row " + std::to_string(k + 1) + " has " +
                          std::to_string(rows[k].size()) + " entries, expected " +
                          std::to_string(n));
      }
      for (std::size_t l = 0; l < n; ++l) {
        if (rows[k][l] != 0 && rows[k][l] != 1) {
          throw ConfigError("status matrix entry (" + detail::device_label(k) + ", P" +
                            std::to_string(l + 1) + ") must be 0 or 1");
        }
        out.f_[k * n + l] = static_cast<std::uint8_t>(rows[k][l]);
      }
    }
    out.validate();
    return out;
  }

  std::size_t devices() const noexcept { return m_; }
  std::size_t packets() const noexcept { return n_; }

  bool missing(DeviceId k, PacketId l) const { return f_[k * n_ + l] != 0; }
  bool holds(DeviceId k, PacketId l) const { return f_[k * n_ + l] == 0; }

  void mark_received(DeviceId k, PacketId l) { f_[k * n_ + l] = 0; }
  void mark_missing(DeviceId k, PacketId l) { f_[k * n_ + l] = 1; }

  std::size_t wants_count(DeviceId k) const {
    return static_cast<std::size_t>(
        std::count(f_.begin() + static_cast<std::ptrdiff_t>(k * n_),
                   f_.begin() + static_cast<std::ptrdiff_t>((k + 1) * n_), std::uint8_t{1}));
  }

  bool complete() const {
    return std::none_of(f_.begin(), f_.end(), [](std::uint8_t v) { return v != 0; });
  }

  std::vector<std::vector<int>> rows() const {
    std::vector<std::vector<int>> out(m_, std::vector<int>(n_));
    for (std::size_t k = 0; k < m_; ++k)
      for (std::size_t l = 0; l < n_; ++l) out[k][l] = f_[k * n_ + l];
    return out;
  }

  /// Every packet must be held by at least one device.
  void validate() const {
    for (std::size_t l = 0; l < n_; ++l) {
      bool held = false;
      for (std::size_t k = 0; k < m_ && !held; ++k) held = holds(k, l);
      if (!held) {
        throw ConfigError("packet P" + std::to_string(l + 1) + " is not held by any device");
      }
    }
  }

  /// True when every entry of *this is <= the matching entry of `earlier`
  /// (nothing received has been lost).
  bool descends_from(const StatusMatrix& earlier) const {
    if (earlier.m_ != m_ || earlier.n_ != n_) return false;
    for (std::size_t i = 0; i < f_.size(); ++i)
      if (f_[i] > earlier.f_[i]) return false;
    return true;
  }

  /// Row-major bit packing (bit k*N + l set when missing). Requires M*N <= 64.
  std::uint64_t pack() const {
    if (f_.size() > 64) throw GuardExceeded("status matrix has more than 64 entries");
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < f_.size(); ++i)
      if (f_[i] != 0) bits |= std::uint64_t{1} << i;
    return bits;
  }

  static StatusMatrix unpack(std::uint64_t bits, std::size_t m, std::size_t n) {
    StatusMatrix out(m, n);
    for (std::size_t i = 0; i < m * n; ++i) out.f_[i] = (bits >> i) & 1U;
    return out;
  }

  friend bool operator==(const StatusMatrix&, const StatusMatrix&) = default;

private:
  std::size_t m_ = 0;
  std::size_t n_ = 0;
  std::vector<std::uint8_t> f_;
};

/// Slot clock of the D2D phase: theta slots in total, current slot t in [1, theta].
class SessionClock {
public:
  SessionClock(int theta, int t) : theta_(theta), t_(t) {
    if (theta < 1) throw ConfigError("theta must be a positive number of slots");
    if (t < 1 || t > theta) {
      throw ConfigError("slot index " + std::to_string(t) + " outside [1, " +
                        std::to_string(theta) + "]");
    }
  }

  int theta() const noexcept { return theta_; }
  int slot() const noexcept { return t_; }
  /// Q = theta - t + 1.
  int remaining() const noexcept { return theta_ - t_ + 1; }

private:
  int theta_;
  int t_;
};

/// Nonnegative distortion weight of each (device, packet) pair.
class ImportanceMatrix {
public:
  ImportanceMatrix() = default;
  ImportanceMatrix(std::size_t m, std::size_t n, double value = 0.0)
      : m_(m), n_(n), delta_(m * n, value) {}

  /// Every device gets the same per-packet weights.
  static ImportanceMatrix replicate(std::size_t m, const std::vector<double>& per_packet) {
    ImportanceMatrix out(m, per_packet.size());
    for (std::size_t k = 0; k < m; ++k)
      std::copy(per_packet.begin(), per_packet.end(),
                out.delta_.begin() + static_cast<std::ptrdiff_t>(k * out.n_));
    out.validate();
    return out;
  }

  static ImportanceMatrix from_rows(const std::vector<std::vector<double>>& rows) {
    const std::size_t n = rows.empty() ? 0 : rows.front().size();
    ImportanceMatrix out(rows.size(), n);
    for (std::size_t k = 0; k < rows.size(); ++k) {
      if (rows[k].size() != n) {
        throw ConfigError("importance matrix row " + std::to_string(k + 1) +
                          " has the wrong length");
      }
      std::copy(rows[k].begin(), rows[k].end(),
                out.delta_.begin() + static_cast<std::ptrdiff_t>(k * n));
    }
    out.validate();
    return out;
  }

  std::size_t devices() const noexcept { return m_; }
  std::size_t packets() const noexcept { return n_; }
  double operator()(DeviceId k, PacketId l) const { return delta_[k * n_ + l]; }

  std::vector<std::vector<double>> rows() const {
    std::vector<std::vector<double>> out(m_, std::vector<double>(n_));
    for (std::size_t k = 0; k < m_; ++k)
      for (std::size_t l = 0; l < n_; ++l) out[k][l] = (*this)(k, l);
    return out;
  }

  void validate() const {
    for (double d : delta_) {
      if (!std::isfinite(d) || d < 0.0) {
        throw ConfigError("importance weights must be finite and nonnegative");
      }
    }
  }

private:
  std::size_t m_ = 0;
  std::size_t n_ = 0;
  std::vector<double> delta_;
};

inline PacketSet has_set(const StatusMatrix& f, DeviceId k) {
  detail::check_index(k, f.devices(), "device");
  PacketSet out;
  for (PacketId l = 0; l < f.packets(); ++l)
    if (f.holds(k, l)) out.push_back(l);
  return out;
}

inline PacketSet wants_set(const StatusMatrix& f, DeviceId k) {
  detail::check_index(k, f.devices(), "device");
  PacketSet out;
  for (PacketId l = 0; l < f.packets(); ++l)
    if (f.missing(k, l)) out.push_back(l);
  return out;
}

/// Devices directly connected to i, including i itself.
inline DeviceSet coverage_zone(const ConnectivityMatrix& y, DeviceId i) {
  detail::check_index(i, y.devices(), "device");
  DeviceSet out;
  for (DeviceId k = 0; k < y.devices(); ++k)
    if (y.connected(i, k)) out.push_back(k);
  return out;
}

/// Devices whose missing-packet count is at least the remaining slot budget Q.
inline DeviceSet critical_set(const StatusMatrix& f, const SessionClock& clock) {
  DeviceSet out;
  const auto q = static_cast<std::size_t>(clock.remaining());
  for (DeviceId k = 0; k < f.devices(); ++k) {
    const std::size_t w = f.wants_count(k);
    if (w > 0 && w >= q) out.push_back(k);
  }
  return out;
}

/// Devices with 0 < W_k < Q.
inline DeviceSet non_critical_set(const StatusMatrix& f, const SessionClock& clock) {
  DeviceSet out;
  const auto q = static_cast<std::size_t>(clock.remaining());
  for (DeviceId k = 0; k < f.devices(); ++k) {
    const std::size_t w = f.wants_count(k);
    if (w > 0 && w < q) out.push_back(k);
  }
  return out;
}

/// Additive distortion of device k: sum of the importance of its missing packets.
inline double individual_distortion(const StatusMatrix& f, const ImportanceMatrix& delta,
                                    DeviceId k) {
  detail::check_index(k, f.devices(), "device");
  double d = 0.0;
  for (PacketId l = 0; l < f.packets(); ++l)
    if (f.missing(k, l)) d += delta(k, l);
  return d;
}

inline double mean_distortion(const StatusMatrix& f, const ImportanceMatrix& delta) {
  if (f.devices() == 0) return 0.0;
  double sum = 0.0;
  for (DeviceId k = 0; k < f.devices(); ++k) sum += individual_distortion(f, delta, k);
  return sum / static_cast<double>(f.devices());
}

/// Mean erasure probability over the links of device k; nullopt for an isolated device.
inline std::optional<double> try_average_erasure(const ConnectivityMatrix& y, DeviceId k) {
  detail::check_index(k, y.devices(), "device");
  double sum = 0.0;
  std::size_t neighbours = 0;
  for (DeviceId i = 0; i < y.devices(); ++i) {
    if (i == k || !y.connected(i, k)) continue;
    sum += y.erasure(i, k);
    ++neighbours;
  }
  if (neighbours == 0) return std::nullopt;
  return sum / static_cast<double>(neighbours);
}

inline double average_erasure(const ConnectivityMatrix& y, DeviceId k) {
  auto e = try_average_erasure(y, k);
  if (!e) throw UnreachableDevice(detail::device_label(k) + " has no direct neighbour");
  return *e;
}

/// Sum of all entries (unit diagonal included) divided by M^2. This is the
/// canonical connectivity index used for scenario targets.
inline double connectivity_index(const ConnectivityMatrix& y) {
  const std::size_t m = y.devices();
  if (m == 0) return 0.0;
  double sum = 0.0;
  for (DeviceId i = 0; i < m; ++i)
    for (DeviceId k = 0; k < m; ++k) sum += y.reception(i, k);
  return sum / static_cast<double>(m * m);
}

/// Mean over the M(M-1) off-diagonal entries; reported next to connectivity_index.
inline double off_diagonal_connectivity(const ConnectivityMatrix& y) {
  const std::size_t m = y.devices();
  if (m < 2) return 0.0;
  double sum = 0.0;
  for (DeviceId i = 0; i < m; ++i)
    for (DeviceId k = 0; k < m; ++k)
      if (i != k) sum += y.reception(i, k);
  return sum / static_cast<double>(m * (m - 1));
}

/// True when the link graph of y is a single component.
inline bool is_connected_topology(const ConnectivityMatrix& y) {
  const std::size_t m = y.devices();
  if (m == 0) return true;
  std::vector<bool> seen(m, false);
  std::vector<DeviceId> stack{0};
  seen[0] = true;
  std::size_t count = 1;
  while (!stack.empty()) {
    const DeviceId i = stack.back();
    stack.pop_back();
    for (DeviceId k = 0; k < m; ++k) {
      if (!seen[k] && y.connected(i, k)) {
        seen[k] = true;
        ++count;
        stack.push_back(k);
      }
    }
  }
  return count == m;
}

inline void check_dimensions(const ConnectivityMatrix& y, const StatusMatrix& f) {
  if (y.devices() != f.devices()) {
    throw ConfigError("connectivity matrix has " + std::to_string(y.devices()) +
                      " devices but status matrix has " + std::to_string(f.devices()));
  }
}

inline void check_dimensions(const StatusMatrix& f, const ImportanceMatrix& delta) {
  if (f.devices() != delta.devices() || f.packets() != delta.packets()) {
    throw ConfigError("importance matrix dimensions do not match the status matrix");
  }
}

} // namespace idnc
