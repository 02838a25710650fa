#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "relabel/errors.hpp"
#include "relabel/graph.hpp"
#include "relabel/tensor.hpp"

namespace relabel::autodiff {

// Binary parameter snapshot. Layout, all integers little-endian:
//   "RLBL"  u32 version=1
//   then per parameter, in store order:
//     u64 name_len, name bytes, u64 rank, u64 dims[rank], f64 values
// Values are written as raw IEEE-754 doubles so save/load round-trips are
// bit-exact regardless of locale or formatting.
namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t x) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((x >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline void put_u64(std::ostream& os, std::uint64_t x) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((x >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 8);
}

inline void put_f64(std::ostream& os, double x) {
  std::uint64_t bits;
  std::memcpy(&bits, &x, 8);
  put_u64(os, bits);
}

inline bool get_u32(std::istream& is, std::uint32_t& x) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) return false;
  x = 0;
  for (int i = 0; i < 4; ++i) x |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return true;
}

inline bool get_u64(std::istream& is, std::uint64_t& x) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) return false;
  x = 0;
  for (int i = 0; i < 8; ++i) x |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return true;
}

inline bool get_f64(std::istream& is, double& x) {
  std::uint64_t bits;
  if (!get_u64(is, bits)) return false;
  std::memcpy(&x, &bits, 8);
  return true;
}

}  // namespace detail

template <typename Scalar>
void save_params(const ParamStore<Scalar>& store, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw data_error("cannot open checkpoint for writing: " + path);
  os.write("RLBL", 4);
  detail::put_u32(os, 1);
  for (const std::string& name : store.names()) {
    const Tensor<Scalar>& t = store.at(name);
    detail::put_u64(os, name.size());
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    detail::put_u64(os, static_cast<std::uint64_t>(t.rank()));
    for (int d : t.dims) detail::put_u64(os, static_cast<std::uint64_t>(d));
    for (std::int64_t i = 0; i < t.size(); ++i)
      detail::put_f64(os, static_cast<double>(t.v(i)));
  }
  if (!os) throw data_error("checkpoint write failed: " + path);
}

// Reads every parameter record in file order. Each store entry is created as
// the file presents it, so a reload reproduces the original store order.
template <typename Scalar>
void load_params(ParamStore<Scalar>& store, const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw data_error("cannot open checkpoint: " + path);
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "RLBL", 4) != 0)
    throw data_error("not a checkpoint file (bad magic): " + path);
  std::uint32_t version = 0;
  if (!detail::get_u32(is, version) || version != 1)
    throw data_error("unsupported checkpoint version in " + path);
  while (true) {
    std::uint64_t name_len = 0;
    if (!detail::get_u64(is, name_len)) break;  // clean EOF
    std::string name(name_len, '\0');
    if (!is.read(name.data(), static_cast<std::streamsize>(name_len)))
      throw data_error("truncated checkpoint (name): " + path);
    std::uint64_t rank = 0;
    if (!detail::get_u64(is, rank) || rank > 8)
      throw data_error("truncated checkpoint (rank): " + path);
    Dims dims(static_cast<std::size_t>(rank));
    for (auto& d : dims) {
      std::uint64_t v = 0;
      if (!detail::get_u64(is, v)) throw data_error("truncated checkpoint (dims): " + path);
      d = static_cast<int>(v);
    }
    Tensor<Scalar>& t = store.has(name) ? store.at(name) : store.create(name, dims);
    if (t.dims != dims)
      throw data_error("checkpoint shape mismatch for '" + name + "' in " + path);
    for (std::int64_t i = 0; i < t.size(); ++i) {
      double x;
      if (!detail::get_f64(is, x)) throw data_error("truncated checkpoint (values): " + path);
      t.v(i) = static_cast<Scalar>(x);
    }
  }
}

}  // namespace relabel::autodiff
