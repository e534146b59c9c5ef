/* Copyright 2026 The ERN Runtime Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// .ern layout, all integers little-endian:
//   "ERN1" u32:version
//   u32:0x01020304 arch u32:k f64:c u32:layer_count
//   layer_count x { u8:tag u16+bytes:name body }
//     tag 1 conv / 3 final conv: u32 OC IC KH KW SH SW PH PW, u8 const_scaled,
//       u64 word_count, u64 words...; final conv adds u32 n, f64 head_scale[n]
//     tag 2 bnact: u32 C, u8 post_scale, C x { i64 t1 t2 t3, u8 dir, u8 degenerate }
//   u32:crc32 of every byte after the version field

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <zlib.h>

#include "ern/compiler.hpp"
#include "ern/error.hpp"

namespace ern::compiler {

namespace {

constexpr char kMagic[4] = {'E', 'R', 'N', '1'};
constexpr std::uint32_t kEndianTag = 0x01020304u;
constexpr std::uint8_t kTagConv = 1;
constexpr std::uint8_t kTagBnAct = 2;
constexpr std::uint8_t kTagFinal = 3;

class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u16(std::uint16_t v) { le(v, 2); }
  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void i64(std::int64_t v) { le(static_cast<std::uint64_t>(v), 8); }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v), 8); }
  void str(const std::string& s) {
    if (s.size() > 0xffff) throw DomainError("name too long for the model format");
    u16(static_cast<std::uint16_t>(s.size()));
    buf_.insert(buf_.end(), s.begin(), s.end());
  }
  void bytes(const char* p, std::size_t n) { buf_.insert(buf_.end(), p, p + n); }
  std::vector<std::uint8_t>& buf() { return buf_; }

 private:
  void le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> buf_;
};

struct OutOfBytes {};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}
  std::uint8_t u8() { return static_cast<std::uint8_t>(le(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(le(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  std::uint64_t u64() { return le(8); }
  std::int64_t i64() { return static_cast<std::int64_t>(le(8)); }
  double f64() { return std::bit_cast<double>(le(8)); }
  std::string str() {
    const std::size_t n = u16();
    need(n);
    std::string s(reinterpret_cast<const char*>(b_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  void skip(std::uint64_t n) {
    if (remaining() < n) throw OutOfBytes{};
    pos_ += static_cast<std::size_t>(n);
  }
  std::size_t remaining() const { return b_.size() - pos_; }
  void need(std::size_t n) const {
    if (remaining() < n) throw OutOfBytes{};
  }

 private:
  std::uint64_t le(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = n - 1; i >= 0; --i) v = (v << 8) | b_[pos_ + static_cast<std::size_t>(i)];
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

[[noreturn]] void malformed(const std::string& what) { throw FormatError(FormatError::Kind::malformed, what); }

void write_arch(Writer& w, const graph::ArchConfig& a) {
  w.str(a.name);
  w.u8(static_cast<std::uint8_t>(a.block));
  w.u32(static_cast<std::uint32_t>(a.blocks.size()));
  for (std::size_t s = 0; s < a.blocks.size(); ++s) {
    w.u32(static_cast<std::uint32_t>(a.blocks[s]));
    w.u32(static_cast<std::uint32_t>(a.widths[s]));
  }
  w.u32(static_cast<std::uint32_t>(a.stem_channels));
  w.u32(static_cast<std::uint32_t>(a.num_classes));
  w.u8(a.stride_on_first_conv ? 1 : 0);
  w.u32(static_cast<std::uint32_t>(a.lane_multiple));
}

graph::ArchConfig read_arch(Reader& r) {
  graph::ArchConfig a;
  a.name = r.str();
  const std::uint8_t block = r.u8();
  if (block > 1) malformed("unknown block type");
  a.block = static_cast<graph::BlockType>(block);
  const std::uint32_t stages = r.u32();
  r.need(std::size_t{stages} * 8);
  for (std::uint32_t s = 0; s < stages; ++s) {
    a.blocks.push_back(r.u32());
    a.widths.push_back(r.u32());
  }
  a.stem_channels = r.u32();
  a.num_classes = r.u32();
  a.stride_on_first_conv = r.u8() != 0;
  a.lane_multiple = r.u32();
  return a;
}

// Limits well beyond any ERN variant, so a corrupt header cannot request a
// huge graph.
void check_arch_limits(const graph::ArchConfig& a, std::uint32_t k) {
  std::size_t total = 0;
  for (std::size_t b : a.blocks) total += b;
  bool ok = a.blocks.size() <= 16 && total <= 1024 && a.stem_channels <= 65536 && a.num_classes <= (1u << 20) &&
            k >= 1 && k <= 4096;
  for (std::size_t w : a.widths) ok = ok && w <= 65536;
  if (!ok) malformed("architecture header out of range");
}

// Walks the record framing only; used to tell truncation from corruption
// when the checksum fails.
void scan(std::span<const std::uint8_t> body) {
  Reader r(body);
  r.u32();
  read_arch(r);
  r.u32();
  r.f64();
  const std::uint32_t layers = r.u32();
  for (std::uint32_t i = 0; i < layers; ++i) {
    const std::uint8_t tag = r.u8();
    r.str();
    if (tag == kTagConv || tag == kTagFinal) {
      r.skip(8 * 4 + 1);
      r.skip(r.u64() * 8);
      if (tag == kTagFinal) r.skip(std::uint64_t{r.u32()} * 8);
    } else {
      const std::uint32_t c = r.u32();
      r.skip(1 + std::uint64_t{c} * 26);
    }
  }
}

void write_conv(Writer& w, const kernels::ConvSpec& s, const PackedWeights& pw) {
  for (std::size_t v : {s.out_ch, s.in_ch, s.kh, s.kw, s.stride_h, s.stride_w, s.pad_h, s.pad_w})
    w.u32(static_cast<std::uint32_t>(v));
  w.u8(pw.const_scaled ? 1 : 0);
  w.u64(pw.bits.size());
  for (std::uint64_t word : pw.bits) w.u64(word);
}

PackedWeights read_conv(Reader& r, const graph::Node& n, const kernels::ConvSpec& spec) {
  kernels::ConvSpec s;
  s.out_ch = r.u32();
  s.in_ch = r.u32();
  s.kh = r.u32();
  s.kw = r.u32();
  s.stride_h = r.u32();
  s.stride_w = r.u32();
  s.pad_h = r.u32();
  s.pad_w = r.u32();
  if (!(s == spec)) malformed("layer '" + n.name + "': conv geometry does not match the architecture");
  PackedWeights pw;
  pw.out_ch = s.out_ch;
  pw.in_ch = s.in_ch;
  pw.kh = s.kh;
  pw.kw = s.kw;
  pw.const_scaled = r.u8() != 0;
  const std::uint64_t words = r.u64();
  if (words != pw.out_ch * pw.words_per_filter()) malformed("layer '" + n.name + "': wrong weight word count");
  r.need(words * 8);
  pw.bits.resize(words);
  for (std::uint64_t& word : pw.bits) word = r.u64();
  return pw;
}

CompiledModel parse(std::span<const std::uint8_t> body) {
  Reader r(body);
  if (r.u32() != kEndianTag) malformed("bad endianness tag");
  CompiledModel m;
  m.arch = read_arch(r);
  m.thermo_k = static_cast<int>(r.u32());
  m.shared_const = r.f64();
  const std::uint32_t layers = r.u32();
  check_arch_limits(m.arch, static_cast<std::uint32_t>(m.thermo_k));
  try {
    m.graph = graph::build_model(m.arch, m.thermo_k);
  } catch (const Error& e) {
    malformed(std::string("invalid architecture: ") + e.what());
  }
  m.params.resize(m.graph.nodes.size());
  std::uint32_t seen = 0;
  for (std::size_t i = 0; i < m.graph.nodes.size(); ++i) {
    const graph::Node& n = m.graph.nodes[i];
    const bool parametric = std::holds_alternative<graph::ConvOp>(n.op) ||
                            std::holds_alternative<graph::BnActOp>(n.op) ||
                            std::holds_alternative<graph::FinalConvOp>(n.op);
    if (!parametric) continue;
    if (seen++ == layers) malformed("fewer layer records than the architecture needs");
    const std::uint8_t tag = r.u8();
    const std::string name = r.str();
    if (name != n.name) malformed("layer record '" + name + "' where '" + n.name + "' was expected");
    if (const auto* c = std::get_if<graph::ConvOp>(&n.op)) {
      if (tag != kTagConv) malformed("layer '" + n.name + "': wrong record type");
      m.params[i] = read_conv(r, n, c->spec);
    } else if (const auto* f = std::get_if<graph::FinalConvOp>(&n.op)) {
      if (tag != kTagFinal) malformed("layer '" + n.name + "': wrong record type");
      m.params[i] = read_conv(r, n, f->spec);
      const std::uint32_t count = r.u32();
      r.need(std::size_t{count} * 8);
      m.head_scale.resize(count);
      for (double& s : m.head_scale) s = r.f64();
    } else {
      const auto& b = std::get<graph::BnActOp>(n.op);
      if (tag != kTagBnAct) malformed("layer '" + n.name + "': wrong record type");
      const std::uint32_t channels = r.u32();
      const bool post_scale = r.u8() != 0;
      if (channels != b.channels || post_scale != b.post_scale)
        malformed("layer '" + n.name + "': activation record does not match the architecture");
      r.need(std::size_t{channels} * 26);
      quant::ThresholdTable tbl;
      tbl.channels.resize(channels);
      for (auto& ch : tbl.channels) {
        for (auto& t : ch.t) t = r.i64();
        const std::uint8_t dir = r.u8();
        if (dir > 1) malformed("layer '" + n.name + "': bad threshold direction");
        ch.dir = static_cast<quant::Direction>(dir);
        ch.degenerate = r.u8() != 0;
      }
      m.params[i] = std::move(tbl);
    }
  }
  if (seen != layers) malformed("more layer records than the architecture needs");
  if (r.remaining() != 0) malformed("trailing bytes after the last layer");
  try {
    check_model(m);
  } catch (const ConfigError& e) {
    malformed(e.what());
  }
  return m;
}

std::uint32_t crc_of(std::span<const std::uint8_t> b) {
  uLong crc = crc32(0L, Z_NULL, 0);
  std::size_t off = 0;
  while (off < b.size()) {
    const std::size_t n = std::min<std::size_t>(b.size() - off, 1u << 30);
    crc = crc32(crc, b.data() + off, static_cast<uInt>(n));
    off += n;
  }
  return static_cast<std::uint32_t>(crc);
}

}  // namespace

std::vector<std::uint8_t> serialize(const CompiledModel& m) {
  check_model(m);
  Writer w;
  w.bytes(kMagic, 4);
  w.u32(kFormatVersion);
  w.u32(kEndianTag);
  write_arch(w, m.arch);
  w.u32(static_cast<std::uint32_t>(m.thermo_k));
  w.f64(m.shared_const);
  std::uint32_t layers = 0;
  for (const auto& p : m.params) layers += !std::holds_alternative<std::monostate>(p);
  w.u32(layers);
  for (std::size_t i = 0; i < m.graph.nodes.size(); ++i) {
    const graph::Node& n = m.graph.nodes[i];
    if (const auto* c = std::get_if<graph::ConvOp>(&n.op)) {
      w.u8(kTagConv);
      w.str(n.name);
      write_conv(w, c->spec, std::get<PackedWeights>(m.params[i]));
    } else if (const auto* f = std::get_if<graph::FinalConvOp>(&n.op)) {
      w.u8(kTagFinal);
      w.str(n.name);
      write_conv(w, f->spec, std::get<PackedWeights>(m.params[i]));
      w.u32(static_cast<std::uint32_t>(m.head_scale.size()));
      for (double s : m.head_scale) w.f64(s);
    } else if (const auto* b = std::get_if<graph::BnActOp>(&n.op)) {
      w.u8(kTagBnAct);
      w.str(n.name);
      w.u32(static_cast<std::uint32_t>(b->channels));
      w.u8(b->post_scale ? 1 : 0);
      for (const auto& ch : std::get<quant::ThresholdTable>(m.params[i]).channels) {
        for (std::int64_t t : ch.t) w.i64(t);
        w.u8(static_cast<std::uint8_t>(ch.dir));
        w.u8(ch.degenerate ? 1 : 0);
      }
    }
  }
  std::vector<std::uint8_t>& buf = w.buf();
  w.u32(crc_of(std::span<const std::uint8_t>(buf).subspan(8)));
  return std::move(buf);
}

CompiledModel load(std::span<const std::uint8_t> bytes) {
  using Kind = FormatError::Kind;
  if (bytes.size() < 4) throw FormatError(Kind::truncated, "file too short for the model header");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError(Kind::bad_magic, "not an .ern model (bad magic)");
  if (bytes.size() < 8) throw FormatError(Kind::truncated, "file too short for the model header");
  Reader head(bytes.subspan(4, 4));
  const std::uint32_t version = head.u32();
  if (version != kFormatVersion)
    throw FormatError(Kind::version_mismatch, "model format version " + std::to_string(version) +
                                                  " is not supported (expected " +
                                                  std::to_string(kFormatVersion) + ")");
  if (bytes.size() < 12) throw FormatError(Kind::truncated, "file ends before the checksum");
  const auto body = bytes.subspan(8, bytes.size() - 12);
  Reader tail(bytes.subspan(bytes.size() - 4));
  if (tail.u32() != crc_of(body)) {
    try {
      scan(body);
    } catch (const OutOfBytes&) {
      throw FormatError(Kind::truncated, "model file is truncated");
    } catch (const FormatError&) {
    }
    throw FormatError(Kind::checksum_mismatch, "checksum mismatch");
  }
  try {
    return parse(body);
  } catch (const OutOfBytes&) {
    malformed("layer records overrun the file");
  }
}

void save_file(const CompiledModel& m, const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = serialize(m);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InputError("cannot write model '" + path.string() + "'");
}

CompiledModel load_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read model '" + path.string() + "'");
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return load(bytes);
}

}  // namespace ern::compiler
