#pragma once

// Binary checkpoint container. Layout (all integers little-endian):
//
//   "GRNNCKPT"  u32 version  u32 record_count
//   record := u16 name_len, name, u8 kind, payload
//     kind 1  i64
//     kind 2  f64 (IEEE-754 bits)
//     kind 3  string      u64 len, bytes
//     kind 4  string list u64 count, then strings
//     kind 5  matrix      u64 rows, u64 cols, rows*cols f64 column-major
//
// Writing is a pure function of the record list, so save -> load -> save
// reproduces the same bytes.

#include <Eigen/Dense>

#include <bit>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "grnn/error.hpp"
#include "grnn/model.hpp"
#include "grnn/panel.hpp"
#include "grnn/text.hpp"

namespace grnn {

inline constexpr std::string_view kCheckpointMagic = "GRNNCKPT";
inline constexpr std::uint32_t kCheckpointVersion = 1;

using RecordValue = std::variant<std::int64_t, double, std::string, std::vector<std::string>, Eigen::MatrixXd>;

struct Record {
  std::string name;
  RecordValue value;
};

namespace detail {

class ByteWriter {
 public:
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u16(std::uint16_t v) { le(v, 2); }
  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void bytes(std::string_view s) { out_.append(s); }
  void str(std::string_view s) {
    u64(s.size());
    bytes(s);
  }
  std::string take() { return std::move(out_); }

 private:
  void le(std::uint64_t v, int width) {
    for (int i = 0; i < width; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  std::string out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view data) : data_(data) {}
  std::uint8_t u8() { return static_cast<std::uint8_t>(le(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(le(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  std::uint64_t u64() { return le(8); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string_view bytes(std::size_t n) {
    need(n);
    auto s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::string str() { return std::string(bytes(u64())); }
  bool done() const { return pos_ == data_.size(); }

 private:
  void need(std::uint64_t n) const {
    if (n > data_.size() - pos_) throw ValidationError("checkpoint truncated");
  }
  std::uint64_t le(int width) {
    need(static_cast<std::uint64_t>(width));
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += static_cast<std::size_t>(width);
    return v;
  }
  std::string_view data_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string encode_records(const std::vector<Record>& records) {
  detail::ByteWriter w;
  w.bytes(kCheckpointMagic);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(records.size()));
  for (const auto& r : records) {
    if (r.name.size() > 0xffff) throw ContractError("record name too long");
    w.u16(static_cast<std::uint16_t>(r.name.size()));
    w.bytes(r.name);
    w.u8(static_cast<std::uint8_t>(r.value.index() + 1));
    std::visit(
        [&](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, std::int64_t>) {
            w.u64(static_cast<std::uint64_t>(v));
          } else if constexpr (std::is_same_v<T, double>) {
            w.f64(v);
          } else if constexpr (std::is_same_v<T, std::string>) {
            w.str(v);
          } else if constexpr (std::is_same_v<T, std::vector<std::string>>) {
            w.u64(v.size());
            for (const auto& s : v) w.str(s);
          } else {
            w.u64(static_cast<std::uint64_t>(v.rows()));
            w.u64(static_cast<std::uint64_t>(v.cols()));
            for (Eigen::Index i = 0; i < v.size(); ++i) w.f64(v.data()[i]);
          }
        },
        r.value);
  }
  return w.take();
}

inline std::vector<Record> decode_records(std::string_view data) {
  detail::ByteReader r(data);
  if (r.bytes(kCheckpointMagic.size()) != kCheckpointMagic) throw ValidationError("not a GRNN checkpoint");
  if (const auto v = r.u32(); v != kCheckpointVersion) {
    throw ValidationError("unsupported checkpoint version " + std::to_string(v));
  }
  const auto count = r.u32();
  std::vector<Record> out;
  out.reserve(count);
  for (std::uint32_t k = 0; k < count; ++k) {
    Record rec;
    rec.name = std::string(r.bytes(r.u16()));
    switch (r.u8()) {
      case 1: rec.value = static_cast<std::int64_t>(r.u64()); break;
      case 2: rec.value = r.f64(); break;
      case 3: rec.value = r.str(); break;
      case 4: {
        const auto n = r.u64();
        std::vector<std::string> list;
        for (std::uint64_t i = 0; i < n; ++i) list.push_back(r.str());
        rec.value = std::move(list);
        break;
      }
      case 5: {
        const auto rows = r.u64(), cols = r.u64();
        if (rows > (1u << 30) || cols > (1u << 30)) throw ValidationError("checkpoint matrix too large");
        Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = r.f64();
        rec.value = std::move(m);
        break;
      }
      default: throw ValidationError("checkpoint record '" + rec.name + "' has unknown kind");
    }
    out.push_back(std::move(rec));
  }
  if (!r.done()) throw ValidationError("trailing bytes after checkpoint records");
  return out;
}

/// Lookup helper over a decoded record list.
class RecordView {
 public:
  explicit RecordView(const std::vector<Record>& records) : records_(records) {}

  bool has(std::string_view name) const { return find(name) != nullptr; }

  template <class T>
  const T& get(std::string_view name) const {
    const auto* r = find(name);
    if (!r) throw ValidationError("checkpoint is missing '" + std::string(name) + "'");
    const auto* v = std::get_if<T>(&r->value);
    if (!v) throw ValidationError("checkpoint field '" + std::string(name) + "' has the wrong kind");
    return *v;
  }

 private:
  const Record* find(std::string_view name) const {
    for (const auto& r : records_) {
      if (r.name == name) return &r;
    }
    return nullptr;
  }
  const std::vector<Record>& records_;
};

/// Model snapshot: dimensions, alpha, node order, parameters, hidden state
/// and normalisation bounds. `extra` carries caller-defined records.
struct Checkpoint {
  ModelParams params;
  double alpha = 0.5;
  std::vector<std::string> nodes;
  Eigen::MatrixXd hidden;
  std::int64_t hidden_timestamp = 0;
  std::optional<Normalizer> normalizer;
  std::vector<Record> extra;
};

inline std::string encode_checkpoint(const Checkpoint& c) {
  c.params.check_shapes();
  if (static_cast<Eigen::Index>(c.nodes.size()) != c.params.num_nodes()) {
    throw ContractError("checkpoint node list does not match params");
  }
  std::vector<Record> rec;
  rec.push_back({"format", std::string("grnn-checkpoint")});
  rec.push_back({"hidden_dim", static_cast<std::int64_t>(c.params.hidden_dim())});
  rec.push_back({"num_nodes", static_cast<std::int64_t>(c.params.num_nodes())});
  rec.push_back({"input_dim", static_cast<std::int64_t>(c.params.input_dim())});
  rec.push_back({"alpha", c.alpha});
  rec.push_back({"nodes", c.nodes});
  c.params.for_each([&](std::string_view name, const Matrix& m) { rec.push_back({"param." + std::string(name), m}); });
  rec.push_back({"hidden", c.hidden});
  rec.push_back({"hidden_timestamp", c.hidden_timestamp});
  if (c.normalizer) {
    rec.push_back({"normalizer.min", c.normalizer->min});
    rec.push_back({"normalizer.max", c.normalizer->max});
    rec.push_back({"normalizer.lo", c.normalizer->lo});
    rec.push_back({"normalizer.hi", c.normalizer->hi});
  }
  for (const auto& r : c.extra) {
    if (r.name.rfind("run.", 0) != 0) throw ContractError("extra checkpoint records must be prefixed 'run.'");
    rec.push_back(r);
  }
  return encode_records(rec);
}

inline Checkpoint decode_checkpoint(std::string_view data) {
  const auto records = decode_records(data);
  RecordView v(records);
  if (v.get<std::string>("format") != "grnn-checkpoint") throw ValidationError("unknown checkpoint format tag");
  Checkpoint c;
  const auto D = v.get<std::int64_t>("hidden_dim");
  const auto n = v.get<std::int64_t>("num_nodes");
  const auto d = v.get<std::int64_t>("input_dim");
  c.params = ModelParams::zeros(D, n, d);
  c.params.for_each([&](std::string_view name, Matrix& m) { m = v.get<Eigen::MatrixXd>("param." + std::string(name)); });
  try {
    c.params.check_shapes();
  } catch (const ContractError& e) {
    throw ValidationError(std::string("checkpoint: ") + e.what());
  }
  c.alpha = v.get<double>("alpha");
  c.nodes = v.get<std::vector<std::string>>("nodes");
  if (static_cast<std::int64_t>(c.nodes.size()) != n) throw ValidationError("checkpoint node list length != num_nodes");
  c.hidden = v.get<Eigen::MatrixXd>("hidden");
  if (c.hidden.rows() != D || c.hidden.cols() != n) throw ValidationError("checkpoint hidden state has wrong shape");
  c.hidden_timestamp = v.get<std::int64_t>("hidden_timestamp");
  if (v.has("normalizer.min")) {
    c.normalizer = Normalizer{v.get<double>("normalizer.min"), v.get<double>("normalizer.max"),
                              v.get<double>("normalizer.lo"), v.get<double>("normalizer.hi")};
  }
  for (const auto& r : records) {
    if (r.name.rfind("run.", 0) == 0) c.extra.push_back(r);
  }
  return c;
}

inline void save_checkpoint(const std::string& path, const Checkpoint& c) { text::write_file(path, encode_checkpoint(c)); }
inline Checkpoint load_checkpoint(const std::string& path) { return decode_checkpoint(text::read_file(path)); }

}  // namespace grnn
