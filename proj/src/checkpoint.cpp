#include "entype/checkpoint.hpp"

#include <fstream>

#include "entype/errors.hpp"

namespace entype {

namespace {

constexpr char kMagic[8] = {'E', 'N', 'T', 'Y', 'P', 'C', 'K', '1'};
constexpr std::uint32_t kVersion = 1;

void w32(std::string& b, std::uint32_t x) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<char>((x >> (8 * i)) & 0xFF));
}

void w64(std::string& b, std::uint64_t x) {
  for (int i = 0; i < 8; ++i) b.push_back(static_cast<char>((x >> (8 * i)) & 0xFF));
}

void wstr(std::string& b, const std::string& s) {
  w32(b, static_cast<std::uint32_t>(s.size()));
  b.append(s);
}

struct Reader {
  const std::string& buf;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > buf.size())
      throw FormatError("checkpoint truncated at byte " + std::to_string(pos));
  }
  std::uint32_t r32() {
    need(4);
    std::uint32_t x = 0;
    for (int i = 0; i < 4; ++i) x |= std::uint32_t(static_cast<unsigned char>(buf[pos++])) << (8 * i);
    return x;
  }
  std::uint64_t r64() {
    need(8);
    std::uint64_t x = 0;
    for (int i = 0; i < 8; ++i) x |= std::uint64_t(static_cast<unsigned char>(buf[pos++])) << (8 * i);
    return x;
  }
  std::string rstr() {
    std::uint32_t n = r32();
    need(n);
    std::string s = buf.substr(pos, n);
    pos += n;
    return s;
  }
};

}  // namespace

const std::string& Checkpoint::meta_at(const std::string& key) const {
  for (const auto& [k, v] : meta)
    if (k == key) return v;
  throw FormatError("checkpoint has no meta key '" + key + "'");
}

std::size_t Checkpoint::meta_num(const std::string& key) const {
  const std::string& v = meta_at(key);
  try {
    std::size_t used = 0;
    std::size_t x = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw FormatError("checkpoint meta '" + key + "' is not a number: '" + v + "'");
  }
}

const std::vector<std::string>& Checkpoint::list_at(const std::string& name) const {
  for (const auto& [k, v] : lists)
    if (k == name) return v;
  throw FormatError("checkpoint has no list '" + name + "'");
}

const CkTensor& Checkpoint::tensor_at(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return t;
  throw FormatError("checkpoint has no tensor '" + name + "'");
}

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  std::string b;
  b.append(kMagic, sizeof kMagic);
  w32(b, kVersion);
  b.push_back(static_cast<char>(ck.precision));
  wstr(b, ck.config_hash);
  w32(b, static_cast<std::uint32_t>(ck.meta.size()));
  for (const auto& [k, v] : ck.meta) {
    wstr(b, k);
    wstr(b, v);
  }
  w32(b, static_cast<std::uint32_t>(ck.lists.size()));
  for (const auto& [name, items] : ck.lists) {
    wstr(b, name);
    w32(b, static_cast<std::uint32_t>(items.size()));
    for (const auto& s : items) wstr(b, s);
  }
  w32(b, static_cast<std::uint32_t>(ck.tensors.size()));
  for (const auto& t : ck.tensors) {
    wstr(b, t.name);
    w64(b, t.rows);
    w64(b, t.cols);
    b.append(reinterpret_cast<const char*>(t.bytes.data()), t.bytes.size());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint '" + path + "'");
  out.write(b.data(), static_cast<std::streamsize>(b.size()));
  if (!out) throw IoError("short write on checkpoint '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint '" + path + "'");
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Reader r{buf};
  r.need(sizeof kMagic);
  if (buf.compare(0, sizeof kMagic, kMagic, sizeof kMagic) != 0)
    throw FormatError("'" + path + "' is not an entype checkpoint");
  r.pos = sizeof kMagic;
  std::uint32_t version = r.r32();
  if (version != kVersion)
    throw FormatError("checkpoint version " + std::to_string(version) + " is not supported");
  Checkpoint ck;
  r.need(1);
  ck.precision = static_cast<std::uint8_t>(buf[r.pos++]);
  if (ck.precision > 1)
    throw FormatError("unknown checkpoint precision tag " + std::to_string(ck.precision));
  const std::size_t esize = ck.precision == 0 ? 8 : 4;
  ck.config_hash = r.rstr();
  std::uint32_t n_meta = r.r32();
  for (std::uint32_t i = 0; i < n_meta; ++i) {
    std::string k = r.rstr();
    ck.meta.emplace_back(std::move(k), r.rstr());
  }
  std::uint32_t n_lists = r.r32();
  for (std::uint32_t i = 0; i < n_lists; ++i) {
    std::string name = r.rstr();
    std::uint32_t n = r.r32();
    std::vector<std::string> items;
    items.reserve(n);
    for (std::uint32_t j = 0; j < n; ++j) items.push_back(r.rstr());
    ck.lists.emplace_back(std::move(name), std::move(items));
  }
  std::uint32_t n_tensors = r.r32();
  for (std::uint32_t i = 0; i < n_tensors; ++i) {
    CkTensor t;
    t.name = r.rstr();
    t.rows = r.r64();
    t.cols = r.r64();
    const std::size_t bytes = t.rows * t.cols * esize;
    r.need(bytes);
    t.bytes.assign(buf.begin() + static_cast<std::ptrdiff_t>(r.pos),
                   buf.begin() + static_cast<std::ptrdiff_t>(r.pos + bytes));
    r.pos += bytes;
    ck.tensors.push_back(std::move(t));
  }
  if (r.pos != buf.size())
    throw FormatError("checkpoint has " + std::to_string(buf.size() - r.pos) +
                      " trailing bytes");
  return ck;
}

}  // namespace entype
