#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "marlob/ippo/net.hpp"

// Versioned binary checkpoint: magic, format version, resolved-config hash,
// then each type's name, dimensions and raw little-endian double arrays in
// the fixed parameter order.
namespace marlob::ippo {

inline constexpr char kCheckpointMagic[8] = {'M', 'R', 'L', 'B', 'N', 'E', 'T', '1'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

template <class T>
void write_pod(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_pod(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("checkpoint: truncated file");
  return v;
}

inline void write_doubles(std::ofstream& out, const std::vector<double>& v) {
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
}

inline void read_doubles(std::ifstream& in, std::vector<double>& v, std::size_t n) {
  v.resize(n);
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
  if (!in) throw std::runtime_error("checkpoint: truncated parameter block");
}

}  // namespace detail

inline void save_checkpoint(const std::string& path, const std::vector<PolicyNet>& nets,
                            const std::vector<std::string>& type_names,
                            std::uint64_t config_hash) {
  if (nets.size() != type_names.size())
    throw std::invalid_argument("save_checkpoint: one name per type required");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
  out.write(kCheckpointMagic, sizeof kCheckpointMagic);
  detail::write_pod(out, kCheckpointVersion);
  detail::write_pod(out, config_hash);
  detail::write_pod(out, static_cast<std::uint32_t>(nets.size()));
  for (std::size_t i = 0; i < nets.size(); ++i) {
    const PolicyNet& net = nets[i];
    detail::write_pod(out, static_cast<std::uint32_t>(type_names[i].size()));
    out.write(type_names[i].data(), static_cast<std::streamsize>(type_names[i].size()));
    detail::write_pod(out, static_cast<std::uint32_t>(net.obs_dim));
    detail::write_pod(out, static_cast<std::uint32_t>(net.hidden));
    detail::write_pod(out, static_cast<std::uint32_t>(net.n_actions));
    detail::write_doubles(out, net.w_ih);
    detail::write_doubles(out, net.w_hh);
    detail::write_doubles(out, net.b_ih);
    detail::write_doubles(out, net.b_hh);
    detail::write_doubles(out, net.w_actor);
    detail::write_doubles(out, net.b_actor);
    detail::write_doubles(out, net.w_critic);
    detail::write_pod(out, net.b_critic);
  }
  if (!out) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

struct Checkpoint {
  std::uint64_t config_hash = 0;
  std::vector<PolicyNet> nets;
  std::vector<std::string> type_names;
};

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0)
    throw std::runtime_error("load_checkpoint: " + path + " is not a checkpoint file");
  const auto version = detail::read_pod<std::uint32_t>(in);
  if (version != kCheckpointVersion)
    throw std::runtime_error("load_checkpoint: unsupported version " +
                             std::to_string(version));
  Checkpoint ckpt;
  ckpt.config_hash = detail::read_pod<std::uint64_t>(in);
  const auto n_types = detail::read_pod<std::uint32_t>(in);
  for (std::uint32_t i = 0; i < n_types; ++i) {
    const auto name_len = detail::read_pod<std::uint32_t>(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    PolicyNet net;
    net.obs_dim = static_cast<int>(detail::read_pod<std::uint32_t>(in));
    net.hidden = static_cast<int>(detail::read_pod<std::uint32_t>(in));
    net.n_actions = static_cast<int>(detail::read_pod<std::uint32_t>(in));
    const auto h = static_cast<std::size_t>(net.hidden);
    detail::read_doubles(in, net.w_ih, 3 * h * static_cast<std::size_t>(net.obs_dim));
    detail::read_doubles(in, net.w_hh, 3 * h * h);
    detail::read_doubles(in, net.b_ih, 3 * h);
    detail::read_doubles(in, net.b_hh, 3 * h);
    detail::read_doubles(in, net.w_actor, static_cast<std::size_t>(net.n_actions) * h);
    detail::read_doubles(in, net.b_actor, static_cast<std::size_t>(net.n_actions));
    detail::read_doubles(in, net.w_critic, h);
    net.b_critic = detail::read_pod<double>(in);
    ckpt.nets.push_back(std::move(net));
    ckpt.type_names.push_back(std::move(name));
  }
  return ckpt;
}

}  // namespace marlob::ippo
