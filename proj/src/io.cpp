#include "uqbench/io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <string_view>
#include <charconv>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_set>

#include "json.hpp"
#include "uqbench/errors.hpp"

namespace uqbench::io {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_failure, "cannot open '" + path.string() + "' for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const fs::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io_failure, "cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::io_failure, "write to '" + path.string() + "' failed");
}

std::string read_text(const fs::path& path) {
  const auto bytes = read_bytes(path);
  return {bytes.begin(), bytes.end()};
}

void write_text(const fs::path& path, const std::string& text) {
  write_bytes(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

std::string file_sha256(const fs::path& path) {
  const auto bytes = read_bytes(path);
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error(Errc::io_failure, "SHA-256 of '" + path.string() + "' failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

namespace {

// Calls fn(object, line_number) for every non-blank line of a JSONL file.
template <typename Fn>
void for_each_json_line(const fs::path& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_failure, "cannot open '" + path.string() + "' for reading");
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(Errc::parse_error,
                  path.string() + ":" + std::to_string(line_no) + ": malformed JSON (" + e.what() + ")");
    }
    if (!obj.is_object()) {
      throw Error(Errc::parse_error,
                  path.string() + ":" + std::to_string(line_no) + ": expected a JSON object");
    }
    fn(obj, line_no);
  }
}

// Top-level fields of a flat JSON object, collected by a SAX pass so hot
// readers avoid building a DOM per line. Nested values are recorded as
// `other`.
struct FlatField {
  enum class Kind { number, string, boolean, null, other };
  std::string key;
  Kind kind = Kind::other;
  double number = 0.0;
  std::string text;
  bool boolean = false;
};

class FlatObject : public nlohmann::json_sax<json> {
 public:
  void reset() {
    fields_.clear();
    depth_ = 0;
    top_is_object_ = false;
    error_.clear();
  }
  bool top_is_object() const { return top_is_object_; }
  const std::string& error() const { return error_; }
  const FlatField* find(std::string_view key) const {
    for (const auto& f : fields_) {
      if (f.key == key) return &f;
    }
    return nullptr;
  }

  bool null() override { return scalar(FlatField::Kind::null); }
  bool boolean(bool v) override {
    if (auto* f = scalar(FlatField::Kind::boolean)) f->boolean = v;
    return true;
  }
  bool number_integer(number_integer_t v) override { return number(static_cast<double>(v)); }
  bool number_unsigned(number_unsigned_t v) override { return number(static_cast<double>(v)); }
  bool number_float(number_float_t v, const string_t&) override { return number(v); }
  bool string(string_t& v) override {
    if (auto* f = scalar(FlatField::Kind::string)) f->text = std::move(v);
    return true;
  }
  bool binary(binary_t&) override { return scalar(FlatField::Kind::other); }
  bool start_object(std::size_t) override {
    if (depth_ == 0) top_is_object_ = true;
    else nested();
    ++depth_;
    return true;
  }
  bool key(string_t& k) override {
    if (depth_ == 1) {
      fields_.emplace_back();
      fields_.back().key = std::move(k);
    }
    return true;
  }
  bool end_object() override {
    --depth_;
    return true;
  }
  bool start_array(std::size_t) override {
    nested();
    ++depth_;
    return true;
  }
  bool end_array() override {
    --depth_;
    return true;
  }
  bool parse_error(std::size_t, const std::string&, const nlohmann::detail::exception& e) override {
    error_ = e.what();
    return false;
  }

 private:
  bool number(double v) {
    if (auto* f = scalar(FlatField::Kind::number)) f->number = v;
    return true;
  }
  // The field a scalar at the current position belongs to, or null when the
  // scalar is nested or the document is not an object.
  FlatField* scalar(FlatField::Kind kind) {
    if (depth_ != 1 || fields_.empty()) return nullptr;
    fields_.back().kind = kind;
    return &fields_.back();
  }
  void nested() {
    if (depth_ == 1 && !fields_.empty()) fields_.back().kind = FlatField::Kind::other;
  }

  std::vector<FlatField> fields_;
  int depth_ = 0;
  bool top_is_object_ = false;
  std::string error_;
};

// Like for_each_json_line, for files of flat objects.
template <typename Fn>
void for_each_flat_line(const fs::path& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_failure, "cannot open '" + path.string() + "' for reading");
  std::string line;
  std::size_t line_no = 0;
  FlatObject obj;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    obj.reset();
    if (!json::sax_parse(line, &obj)) {
      throw Error(Errc::parse_error, path.string() + ":" + std::to_string(line_no) +
                                         ": malformed JSON (" + obj.error() + ")");
    }
    if (!obj.top_is_object()) {
      throw Error(Errc::parse_error,
                  path.string() + ":" + std::to_string(line_no) + ": expected a JSON object");
    }
    fn(static_cast<const FlatObject&>(obj), line_no);
  }
}

[[noreturn]] void fail_field(const fs::path& path, std::size_t line, const std::string& what) {
  throw Error(Errc::parse_error, path.string() + ":" + std::to_string(line) + ": " + what);
}

std::string get_id(const json& obj, const fs::path& path, std::size_t line) {
  auto it = obj.find("system_id");
  if (it == obj.end() || !it->is_string()) fail_field(path, line, "missing string 'system_id'");
  auto id = it->get<std::string>();
  if (id.empty()) fail_field(path, line, "empty 'system_id'");
  return id;
}

std::string get_id(const FlatObject& obj, const fs::path& path, std::size_t line) {
  const auto* f = obj.find("system_id");
  if (f == nullptr || f->kind != FlatField::Kind::string) fail_field(path, line, "missing string 'system_id'");
  if (f->text.empty()) fail_field(path, line, "empty 'system_id'");
  return f->text;
}

double get_number(const FlatObject& obj, const char* key, const fs::path& path, std::size_t line) {
  const auto* f = obj.find(key);
  if (f == nullptr || f->kind != FlatField::Kind::number) {
    fail_field(path, line, std::string("missing numeric '") + key + "'");
  }
  if (!std::isfinite(f->number)) fail_field(path, line, std::string("non-finite '") + key + "'");
  return f->number;
}

void check_unique(std::unordered_set<std::string>& seen, const std::string& id,
                  const fs::path& path, std::size_t line) {
  if (!seen.insert(id).second) {
    throw Error(Errc::duplicate_id, path.string() + ":" + std::to_string(line) +
                                        ": duplicate system_id '" + id + "'");
  }
}

// Streams JSON objects one per line. Numbers use the shortest text that
// reads back to the same double; ids are escaped only when they need it.
class JsonLines {
 public:
  JsonLines& begin() {
    first_ = true;
    text_ += '{';
    return *this;
  }
  JsonLines& end() {
    text_ += "}\n";
    return *this;
  }
  JsonLines& string(std::string_view key, std::string_view value) {
    this->key(key);
    const bool plain = std::none_of(value.begin(), value.end(), [](char c) {
      return c == '"' || c == '\\' || static_cast<unsigned char>(c) < 0x20;
    });
    if (plain) {
      text_ += '"';
      text_ += value;
      text_ += '"';
    } else {
      text_ += json(std::string(value)).dump();
    }
    return *this;
  }
  JsonLines& number(std::string_view key, double value) {
    this->key(key);
    append_number(value);
    return *this;
  }
  JsonLines& boolean(std::string_view key, bool value) {
    this->key(key);
    text_ += value ? "true" : "false";
    return *this;
  }
  JsonLines& matrix(std::string_view key, const std::vector<std::vector<double>>& rows) {
    this->key(key);
    text_ += '[';
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (r) text_ += ',';
      text_ += '[';
      for (std::size_t c = 0; c < rows[r].size(); ++c) {
        if (c) text_ += ',';
        append_number(rows[r][c]);
      }
      text_ += ']';
    }
    text_ += ']';
    return *this;
  }
  const std::string& text() const { return text_; }

 private:
  void key(std::string_view k) {
    if (!first_) text_ += ',';
    first_ = false;
    text_ += '"';
    text_ += k;
    text_ += "\":";
  }
  void append_number(double v) {
    if (!std::isfinite(v)) {
      text_ += "null";
      return;
    }
    std::array<char, 32> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    text_.append(buf.data(), res.ptr);
  }

  std::string text_;
  bool first_ = true;
};

}  // namespace

std::vector<EnergyRecord> read_records(const fs::path& path) {
  std::vector<EnergyRecord> out;
  std::unordered_set<std::string> seen;
  for_each_flat_line(path, [&](const FlatObject& obj, std::size_t line) {
    EnergyRecord r;
    r.system_id = get_id(obj, path, line);
    r.e_pred = get_number(obj, "e_pred", path, line);
    r.e_true = get_number(obj, "e_true", path, line);
    check_unique(seen, r.system_id, path, line);
    out.push_back(std::move(r));
  });
  return out;
}

void write_records(const fs::path& path, std::span<const EnergyRecord> records) {
  JsonLines out;
  for (const auto& r : records) {
    out.begin().string("system_id", r.system_id).number("e_pred", r.e_pred).number("e_true", r.e_true).end();
  }
  write_text(path, out.text());
}

std::vector<UncertaintyEstimate> read_sigmas(const fs::path& path) {
  std::vector<UncertaintyEstimate> out;
  std::unordered_set<std::string> seen;
  for_each_flat_line(path, [&](const FlatObject& obj, std::size_t line) {
    UncertaintyEstimate e;
    e.system_id = get_id(obj, path, line);
    e.sigma = get_number(obj, "sigma", path, line);
    if (e.sigma < 0.0) {
      throw Error(Errc::negative_sigma, path.string() + ":" + std::to_string(line) +
                                            ": negative sigma for '" + e.system_id + "'");
    }
    const auto* method = obj.find("method");
    if (method == nullptr || method->kind != FlatField::Kind::string) {
      fail_field(path, line, "missing string 'method'");
    }
    try {
      e.method = parse_uq_method(method->text);
    } catch (const Error& err) {
      fail_field(path, line, err.what());
    }
    const auto* cal = obj.find("calibrated");
    if (cal == nullptr || cal->kind != FlatField::Kind::boolean) {
      fail_field(path, line, "missing boolean 'calibrated'");
    }
    e.calibrated = cal->boolean;
    check_unique(seen, e.system_id, path, line);
    out.push_back(std::move(e));
  });
  return out;
}

void write_sigmas(const fs::path& path, std::span<const UncertaintyEstimate> estimates) {
  JsonLines out;
  for (const auto& e : estimates) {
    out.begin()
        .string("system_id", e.system_id)
        .number("sigma", e.sigma)
        .string("method", to_string(e.method))
        .boolean("calibrated", e.calibrated)
        .end();
  }
  write_text(path, out.text());
}

std::vector<TrajectoryEnsemble> read_trajectories(const fs::path& path) {
  std::vector<TrajectoryEnsemble> out;
  std::unordered_set<std::string> seen;
  for_each_json_line(path, [&](const json& obj, std::size_t line) {
    auto id = get_id(obj, path, line);
    auto frames_it = obj.find("frames");
    if (frames_it == obj.end() || !frames_it->is_array() || frames_it->empty()) {
      fail_field(path, line, "missing non-empty array 'frames'");
    }
    std::vector<std::vector<double>> frames;
    for (const auto& frame : *frames_it) {
      if (!frame.is_array()) fail_field(path, line, "each frame must be an array of numbers");
      std::vector<double> members;
      for (const auto& v : frame) {
        if (!v.is_number()) fail_field(path, line, "frame members must be numbers");
        members.push_back(v.get<double>());
      }
      frames.push_back(std::move(members));
    }
    check_unique(seen, id, path, line);
    try {
      out.emplace_back(std::move(id), std::move(frames));
    } catch (const Error& e) {
      throw Error(e.code(), path.string() + ":" + std::to_string(line) + ": " + e.what());
    }
  });
  return out;
}

void write_trajectories(const fs::path& path, std::span<const TrajectoryEnsemble> trajectories) {
  JsonLines out;
  for (const auto& t : trajectories) out.begin().string("system_id", t.system_id()).matrix("frames", t.frames()).end();
  write_text(path, out.text());
}

namespace {

class ByteWriter {
 public:
  void bytes(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }
  void u16(std::uint16_t v) { put(v, 2); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f32(float v) { put(std::bit_cast<std::uint32_t>(v), 4); }
  void append(std::span<const std::uint8_t> other) { buf_.insert(buf_.end(), other.begin(), other.end()); }
  std::vector<std::uint8_t> take() { return std::move(buf_); }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  void magic(std::string_view expected) {
    need(expected.size(), "magic");
    if (std::memcmp(bytes_.data() + pos_, expected.data(), expected.size()) != 0) {
      throw Error(Errc::bad_magic, "expected magic '" + std::string(expected) + "'");
    }
    pos_ += expected.size();
  }
  std::string str(std::size_t n) {
    need(n, "system id");
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::uint16_t u16(const char* what) { return static_cast<std::uint16_t>(get(2, what)); }
  std::uint32_t u32(const char* what) { return static_cast<std::uint32_t>(get(4, what)); }
  std::uint64_t u64(const char* what) { return get(8, what); }
  float f32(const char* what) { return std::bit_cast<float>(static_cast<std::uint32_t>(get(4, what))); }
  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }
  void need(std::size_t n, const char* what) const {
    if (remaining() < n) {
      throw Error(Errc::truncated_file, std::string("file ends inside ") + what + " at byte " +
                                            std::to_string(pos_));
    }
  }

 private:
  std::uint64_t get(int n, const char* what) {
    need(static_cast<std::size_t>(n), what);
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= std::uint64_t{bytes_[pos_ + static_cast<std::size_t>(i)]} << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

void encode_latents_into(ByteWriter& w, const LatentMatrix& m) {
  w.bytes("UQLT");
  w.u32(kFormatVersion);
  w.u32(m.dim());
  w.u64(m.n_systems());
  for (std::size_t s = 0; s < m.n_systems(); ++s) {
    const auto& id = m.system_ids()[s];
    if (id.size() > 0xFFFF) throw Error(Errc::invalid_argument, "system id longer than 65535 bytes");
    w.u16(static_cast<std::uint16_t>(id.size()));
    w.bytes(id);
    w.u32(m.atom_counts()[s]);
  }
  for (float v : m.data()) w.f32(v);
}

void check_version(ByteReader& r, const char* format) {
  const std::uint32_t version = r.u32("version");
  if (version != kFormatVersion) {
    throw Error(Errc::version_unsupported, std::string(format) + " version " +
                                              std::to_string(version) + " is not supported");
  }
}

LatentMatrix decode_latents_from(ByteReader& r) {
  r.magic("UQLT");
  check_version(r, "UQLT");
  const std::uint32_t dim = r.u32("dim");
  if (dim == 0) throw Error(Errc::parse_error, "UQLT header declares latent dimension 0");
  const std::uint64_t n_systems = r.u64("system count");
  // every system header takes at least 6 bytes
  if (n_systems > r.remaining() / 6) {
    throw Error(Errc::truncated_file, "header declares " + std::to_string(n_systems) +
                                          " systems but the file is too short");
  }
  std::vector<std::string> ids;
  std::vector<std::uint32_t> counts;
  ids.reserve(n_systems);
  counts.reserve(n_systems);
  std::uint64_t rows = 0;
  for (std::uint64_t s = 0; s < n_systems; ++s) {
    const std::uint16_t len = r.u16("system id length");
    ids.push_back(r.str(len));
    counts.push_back(r.u32("atom count"));
    rows += counts.back();
  }
  const std::uint64_t n_values = rows * dim;
  if (n_values > r.remaining() / 4) {
    throw Error(Errc::truncated_file, "header declares " + std::to_string(rows) + " rows of dim " +
                                          std::to_string(dim) + " but only " +
                                          std::to_string(r.remaining()) + " bytes remain");
  }
  std::vector<float> data(n_values);
  for (auto& v : data) v = r.f32("latent data");
  try {
    return LatentMatrix(dim, std::move(ids), std::move(counts), std::move(data));
  } catch (const Error& e) {
    throw Error(e.code() == Errc::duplicate_id ? Errc::duplicate_id : Errc::parse_error, e.what());
  }
}

}  // namespace

std::vector<std::uint8_t> encode_latents(const LatentMatrix& latents) {
  ByteWriter w;
  encode_latents_into(w, latents);
  return w.take();
}

LatentMatrix decode_latents(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  auto m = decode_latents_from(r);
  if (r.remaining() != 0) {
    throw Error(Errc::parse_error, std::to_string(r.remaining()) + " trailing bytes after UQLT payload");
  }
  return m;
}

LatentMatrix read_latents(const fs::path& path) {
  const auto bytes = read_bytes(path);
  try {
    return decode_latents(bytes);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

void write_latents(const fs::path& path, const LatentMatrix& latents) {
  write_bytes(path, encode_latents(latents));
}

std::vector<std::uint8_t> encode_index(const DistanceIndex& index) {
  ByteWriter w;
  w.bytes("UQIX");
  w.u32(kFormatVersion);
  encode_latents_into(w, index.train());
  w.u64(index.train().n_systems());
  for (float v : index.system_means()) w.f32(v);
  return w.take();
}

DistanceIndex decode_index(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  r.magic("UQIX");
  check_version(r, "UQIX");
  LatentMatrix train = decode_latents_from(r);
  const std::uint64_t n_means = r.u64("system means count");
  if (n_means != train.n_systems()) {
    throw Error(Errc::parse_error, "index holds " + std::to_string(n_means) + " system means for " +
                                       std::to_string(train.n_systems()) + " systems");
  }
  const std::uint64_t n_values = n_means * train.dim();
  if (n_values > r.remaining() / 4) throw Error(Errc::truncated_file, "system means block is truncated");
  std::vector<float> means(n_values);
  for (auto& v : means) v = r.f32("system means");
  if (r.remaining() != 0) {
    throw Error(Errc::parse_error, std::to_string(r.remaining()) + " trailing bytes after UQIX payload");
  }
  try {
    return DistanceIndex(std::move(train), std::move(means));
  } catch (const Error& e) {
    throw Error(e.code() == Errc::empty_train_set ? Errc::empty_train_set : Errc::parse_error, e.what());
  }
}

DistanceIndex read_index(const fs::path& path) {
  const auto bytes = read_bytes(path);
  try {
    return decode_index(bytes);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

void write_index(const fs::path& path, const DistanceIndex& index) {
  write_bytes(path, encode_index(index));
}

DatasetSplit split_records(std::span<const EnergyRecord> records, double calibration_fraction,
                           std::uint64_t seed) {
  if (!(calibration_fraction > 0.0 && calibration_fraction < 1.0)) {
    throw Error(Errc::invalid_argument, "calibration fraction must lie in (0, 1)");
  }
  std::vector<std::string> ids;
  ids.reserve(records.size());
  for (const auto& r : records) ids.push_back(r.system_id);
  index_ids(ids, "records");

  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 gen(seed);
  std::shuffle(order.begin(), order.end(), gen);
  const auto n_cal = static_cast<std::size_t>(
      std::llround(calibration_fraction * static_cast<double>(records.size())));
  std::vector<bool> to_cal(records.size(), false);
  for (std::size_t i = 0; i < n_cal; ++i) to_cal[order[i]] = true;

  DatasetSplit out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    (to_cal[i] ? out.calibration : out.test).push_back(records[i]);
  }
  return out;
}

void require_disjoint(std::span<const EnergyRecord> a, std::span<const EnergyRecord> b) {
  std::unordered_set<std::string> ids;
  for (const auto& r : a) ids.insert(r.system_id);
  for (const auto& r : b) {
    if (ids.contains(r.system_id)) {
      throw Error(Errc::join_failure, "system '" + r.system_id + "' appears in both splits");
    }
  }
}

std::vector<UncertaintyEstimate> align_estimates(std::span<const EnergyRecord> records,
                                                 std::span<const UncertaintyEstimate> estimates) {
  std::vector<std::string> ids;
  ids.reserve(estimates.size());
  for (const auto& e : estimates) ids.push_back(e.system_id);
  const auto pos = index_ids(ids, "estimates");
  std::vector<UncertaintyEstimate> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    const auto it = pos.find(r.system_id);
    if (it == pos.end()) {
      throw Error(Errc::join_failure, "record '" + r.system_id + "' has no uncertainty estimate");
    }
    out.push_back(estimates[it->second]);
  }
  return out;
}

}  // namespace uqbench::io
