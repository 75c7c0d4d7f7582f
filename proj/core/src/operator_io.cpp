#include "memdes/operator_io.hpp"

#include "memdes/errors.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iostream>
#include <iterator>
#include <map>
#include <set>

namespace memdes {
namespace {

constexpr std::array<char, 4> kMagic{'O', 'P', 'B', '1'};
constexpr std::size_t kTagBytes = 8;

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const std::uint8_t*>(p);
    buf_.insert(buf_.end(), c, c + n);
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double d) {
    std::uint64_t v;
    std::memcpy(&v, &d, sizeof v);
    u64(v);
  }
  void tag(const char* t) {
    std::array<char, kTagBytes> padded{};
    std::memcpy(padded.data(), t, std::min(std::strlen(t), kTagBytes));
    bytes(padded.data(), kTagBytes);
  }
  std::vector<std::uint8_t> take() { return std::move(buf_); }

 private:
  std::vector<std::uint8_t> buf_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}

  std::size_t remaining() const { return b_.size() - pos_; }
  void need(std::size_t n, const char* what) const {
    if (remaining() < n) throw IoError(std::string("truncated OPB1 stream while reading ") + what);
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b_[pos_ + static_cast<std::size_t>(i)]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b_[pos_ + static_cast<std::size_t>(i)]) << (8 * i);
    pos_ += 8;
    return v;
  }
  double f64(const char* what) {
    const std::uint64_t v = u64(what);
    double d;
    std::memcpy(&d, &v, sizeof d);
    return d;
  }
  std::span<const std::uint8_t> take(std::size_t n, const char* what) {
    need(n, what);
    auto s = b_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

void put_matrix(Writer& w, const char* tag, const CMatrix& m) {
  w.tag(tag);
  w.u64(static_cast<std::uint64_t>(m.size()) * 16u);
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) {
      w.f64(m(r, c).real());
      w.f64(m(r, c).imag());
    }
}

void put_rows(Writer& w, const char* tag, Index n, const auto& rows) {
  CMatrix m(static_cast<Index>(rows.size()), n);
  for (std::size_t i = 0; i < rows.size(); ++i) m.row(static_cast<Index>(i)) = rows[i];
  put_matrix(w, tag, m);
}

void put_mask(Writer& w, const char* tag, const Mask& m) {
  w.tag(tag);
  w.u64(m.size());
  w.bytes(m.data(), m.size());
}

CMatrix get_matrix(std::span<const std::uint8_t> payload, Index rows, Index cols, const std::string& tag) {
  const std::size_t expect = static_cast<std::size_t>(rows * cols) * 16u;
  if (payload.size() != expect)
    throw FormatError("section " + tag + " has " + std::to_string(payload.size()) + " bytes, expected " +
                      std::to_string(expect));
  Reader r(payload);
  CMatrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) {
      const double re = r.f64(tag.c_str());
      const double im = r.f64(tag.c_str());
      m(i, j) = cplx(re, im);
    }
  return m;
}

Index row_count(std::span<const std::uint8_t> payload, Index n, const std::string& tag) {
  const std::size_t row_bytes = static_cast<std::size_t>(n) * 16u;
  if (payload.size() % row_bytes != 0)
    throw FormatError("section " + tag + " length is not a whole number of rows");
  return static_cast<Index>(payload.size() / row_bytes);
}

Mask get_mask(std::span<const std::uint8_t> payload, Index n, const std::string& tag) {
  if (payload.size() != static_cast<std::size_t>(n))
    throw FormatError("section " + tag + " has " + std::to_string(payload.size()) + " bytes, expected " +
                      std::to_string(n));
  return Mask(payload.begin(), payload.end());
}

}  // namespace

std::vector<std::uint8_t> serialize_bundle(const OperatorBundle& b) {
  std::uint32_t sections = 6;  // Zmat R0mt Xmat FIXM CTRL META
  sections += b.W.has_value() + b.R_rho.has_value() + !b.F.empty() + !b.V.empty() + b.chip_mask.has_value() +
              b.tm_projector.has_value();

  Writer w;
  w.bytes(kMagic.data(), kMagic.size());
  w.u32(kOpbVersion);
  w.u32(static_cast<std::uint32_t>(b.n_dof));
  w.u32(sections);
  put_matrix(w, "Zmat", b.Z);
  put_matrix(w, "R0mt", b.R0);
  put_matrix(w, "Xmat", b.X);
  if (b.W) put_matrix(w, "Wmat", *b.W);
  if (b.R_rho) put_matrix(w, "Rrho", *b.R_rho);
  if (!b.F.empty()) put_rows(w, "Fmat", b.n_dof, b.F);
  if (!b.V.empty()) {
    CMatrix m(static_cast<Index>(b.V.size()), b.n_dof);
    for (std::size_t i = 0; i < b.V.size(); ++i) m.row(static_cast<Index>(i)) = b.V[i].transpose();
    put_matrix(w, "Vexc", m);
  }
  put_mask(w, "FIXM", b.fixed_mask);
  put_mask(w, "CTRL", b.controllable_mask);
  if (b.chip_mask) put_mask(w, "CHIP", *b.chip_mask);
  if (b.tm_projector) put_matrix(w, "TMPR", *b.tm_projector);
  w.tag("META");
  w.u64(24);
  w.f64(b.meta.frequency_hz);
  w.f64(b.meta.wavenumber);
  w.f64(b.meta.radius);
  return w.take();
}

OperatorBundle deserialize_bundle(std::span<const std::uint8_t> bytes, std::vector<std::string>* warnings) {
  Reader r(bytes);
  auto magic = r.take(4, "magic");
  if (!std::equal(magic.begin(), magic.end(), kMagic.begin())) throw FormatError("bad magic: not an OPB1 file");
  const std::uint32_t version = r.u32("version");
  if (version != kOpbVersion) throw FormatError("unsupported OPB1 version " + std::to_string(version));
  const Index n = r.u32("N");
  if (n == 0) throw FormatError("OPB1 file declares zero DOF");
  const std::uint32_t count = r.u32("section count");

  std::map<std::string, std::span<const std::uint8_t>> sections;
  for (std::uint32_t s = 0; s < count; ++s) {
    auto raw = r.take(kTagBytes, "section tag");
    std::string tag(reinterpret_cast<const char*>(raw.data()), kTagBytes);
    tag.erase(tag.find_last_not_of('\0') + 1);
    const std::uint64_t len = r.u64("section length");
    if (len > r.remaining()) throw IoError("truncated OPB1 payload in section " + tag);
    auto payload = r.take(static_cast<std::size_t>(len), "section payload");
    if (!sections.emplace(tag, payload).second) throw FormatError("duplicate section " + tag);
  }

  static const std::set<std::string> known{"Zmat", "R0mt", "Xmat", "Wmat", "Rrho", "Fmat",
                                           "Vexc", "FIXM", "CTRL", "CHIP", "TMPR", "META"};
  for (const auto& [tag, payload] : sections) {
    if (known.count(tag)) continue;
    const std::string msg = "skipping unknown OPB1 section '" + tag + "'";
    if (warnings)
      warnings->push_back(msg);
    else
      std::clog << "warning: " << msg << '\n';
  }

  auto required = [&](const char* tag) {
    auto it = sections.find(tag);
    if (it == sections.end()) throw FormatError(std::string("missing required section ") + tag);
    return it->second;
  };
  auto optional_section = [&](const char* tag) -> const std::span<const std::uint8_t>* {
    auto it = sections.find(tag);
    return it == sections.end() ? nullptr : &it->second;
  };

  OperatorBundle b;
  b.n_dof = n;
  b.Z = get_matrix(required("Zmat"), n, n, "Zmat");
  b.R0 = get_matrix(required("R0mt"), n, n, "R0mt");
  b.X = get_matrix(required("Xmat"), n, n, "Xmat");
  if (auto* p = optional_section("Wmat")) b.W = get_matrix(*p, n, n, "Wmat");
  if (auto* p = optional_section("Rrho")) b.R_rho = get_matrix(*p, n, n, "Rrho");
  if (auto* p = optional_section("Fmat")) {
    const CMatrix m = get_matrix(*p, row_count(*p, n, "Fmat"), n, "Fmat");
    for (Index i = 0; i < m.rows(); ++i) b.F.emplace_back(m.row(i));
  }
  if (auto* p = optional_section("Vexc")) {
    const CMatrix m = get_matrix(*p, row_count(*p, n, "Vexc"), n, "Vexc");
    for (Index i = 0; i < m.rows(); ++i) b.V.emplace_back(m.row(i).transpose());
  }
  b.fixed_mask = get_mask(required("FIXM"), n, "FIXM");
  b.controllable_mask = get_mask(required("CTRL"), n, "CTRL");
  if (auto* p = optional_section("CHIP")) b.chip_mask = get_mask(*p, n, "CHIP");
  if (auto* p = optional_section("TMPR")) b.tm_projector = get_matrix(*p, row_count(*p, n, "TMPR"), n, "TMPR");
  if (auto* p = optional_section("META")) {
    if (p->size() != 24) throw FormatError("section META must hold three float64");
    Reader m(*p);
    b.meta.frequency_hz = m.f64("META");
    b.meta.wavenumber = m.f64("META");
    b.meta.radius = m.f64("META");
  }
  validate(b);
  return b;
}

void write_bundle(const OperatorBundle& bundle, const std::filesystem::path& path) {
  const auto bytes = serialize_bundle(bundle);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw IoError("failed writing " + path.string());
}

OperatorBundle read_bundle(const std::filesystem::path& path, std::vector<std::string>* warnings) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return deserialize_bundle(bytes, warnings);
}

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::uint8_t c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t bundle_hash(const OperatorBundle& bundle) { return fnv1a64(serialize_bundle(bundle)); }

std::string hash_hex(std::uint64_t hash) {
  char buf[19];
  std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

}  // namespace memdes
