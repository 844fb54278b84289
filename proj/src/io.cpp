#include "divens/io.hpp"

#include <array>
#include <atomic>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include <unistd.h>

#include <json.hpp>

#include "divens/config_json.hpp"

namespace divens::io {

namespace fs = std::filesystem;

namespace {

constexpr char kMatrixMagic[4] = {'D', 'I', 'V', 'M'};
constexpr char kFrameMagic[4] = {'D', 'I', 'V', 'F'};
constexpr std::size_t kMatrixHeaderBytes = 4 + 4 + 8 + 8;

template <typename U>
void put_le(std::string& out, U value) {
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    out.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
  }
}

template <typename U>
U get_le(const unsigned char* p) {
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(p[i]) << (8 * i);
  return value;
}

void put_f32(std::string& out, float x) { put_le(out, std::bit_cast<std::uint32_t>(x)); }

// Appends n floats in little-endian order.
void put_f32_block(std::string& out, std::span<const float> xs) {
  if constexpr (std::endian::native == std::endian::little) {
    out.append(reinterpret_cast<const char*>(xs.data()), xs.size() * sizeof(float));
  } else {
    for (float x : xs) put_f32(out, x);
  }
}

void get_f32_block(const unsigned char* src, std::span<float> dst) {
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(dst.data(), src, dst.size() * sizeof(float));
  } else {
    for (std::size_t i = 0; i < dst.size(); ++i) {
      dst[i] = std::bit_cast<float>(get_le<std::uint32_t>(src + 4 * i));
    }
  }
}

[[noreturn]] void format_error(const std::string& what, std::size_t offset) {
  throw FormatError(what + " at byte offset " + std::to_string(offset));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::size_t offset() const { return pos_; }
  bool at_end() const { return pos_ == bytes_.size(); }
  std::size_t remaining() const { return bytes_.size() - pos_; }

  void need(std::size_t n, const char* what) const {
    if (remaining() < n) {
      format_error(std::string("truncated ") + what + " (need " + std::to_string(n) + " bytes, " +
                       std::to_string(remaining()) + " left)",
                   pos_);
    }
  }

  template <typename U>
  U take(const char* what) {
    need(sizeof(U), what);
    const U v = get_le<U>(data() + pos_);
    pos_ += sizeof(U);
    return v;
  }

  std::string_view take_bytes(std::size_t n, const char* what) {
    need(n, what);
    const auto v = bytes_.substr(pos_, n);
    pos_ += n;
    return v;
  }

  void take_floats(std::span<float> dst, const char* what) {
    // Guard the multiplication before need().
    if (dst.size() > remaining() / sizeof(float)) {
      format_error(std::string("truncated ") + what, pos_);
    }
    get_f32_block(data() + pos_, dst);
    pos_ += dst.size() * sizeof(float);
  }

 private:
  const unsigned char* data() const { return reinterpret_cast<const unsigned char*>(bytes_.data()); }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

void check_magic(Reader& r, const char (&magic)[4], const char* format) {
  const auto m = r.take_bytes(4, "magic");
  if (std::memcmp(m.data(), magic, 4) != 0) {
    format_error(std::string("bad magic for ") + format + " file", 0);
  }
  const auto version = r.take<std::uint32_t>("version");
  if (version != kFormatVersion) {
    format_error("unsupported " + std::string(format) + " version " + std::to_string(version), 4);
  }
}

// Writes to a sibling temporary file and renames it over the target on commit.
class AtomicFile {
 public:
  explicit AtomicFile(fs::path target) : target_(std::move(target)) {
    static std::atomic<unsigned> counter{0};
    tmp_ = target_;
    tmp_ += ".tmp." + std::to_string(::getpid()) + "." + std::to_string(counter++);
    if (target_.has_parent_path()) fs::create_directories(target_.parent_path());
    out_.open(tmp_, std::ios::binary | std::ios::trunc);
    if (!out_) throw std::runtime_error("cannot open '" + tmp_.string() + "' for writing");
  }
  AtomicFile(const AtomicFile&) = delete;
  AtomicFile& operator=(const AtomicFile&) = delete;
  ~AtomicFile() {
    if (!committed_) {
      out_.close();
      std::error_code ec;
      fs::remove(tmp_, ec);
    }
  }

  std::ofstream& stream() { return out_; }

  void commit() {
    out_.close();
    if (!out_) throw std::runtime_error("failed writing '" + tmp_.string() + "'");
    fs::rename(tmp_, target_);
    committed_ = true;
  }

 private:
  fs::path target_;
  fs::path tmp_;
  std::ofstream out_;
  bool committed_ = false;
};

std::string matrix_header(std::uint64_t rows, std::uint64_t cols) {
  std::string out(kMatrixMagic, 4);
  put_le<std::uint32_t>(out, kFormatVersion);
  put_le<std::uint64_t>(out, rows);
  put_le<std::uint64_t>(out, cols);
  return out;
}

nlohmann::json read_json(const fs::path& path) {
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("malformed JSON in '" + path.string() + "' at byte offset " +
                      std::to_string(e.byte));
  }
}

fs::path sidecar_path(const fs::path& path) {
  fs::path p = path;
  p += ".json";
  return p;
}

}  // namespace

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

void write_file_atomic(const fs::path& path, std::string_view contents) {
  AtomicFile f(path);
  f.stream().write(contents.data(), static_cast<std::streamsize>(contents.size()));
  f.commit();
}

std::string encode_matrix(const MatrixF& m) {
  std::string out = matrix_header(m.rows(), m.cols());
  out.reserve(out.size() + m.size() * sizeof(float));
  put_f32_block(out, m.values());
  return out;
}

MatrixF decode_matrix(std::string_view bytes) {
  Reader r(bytes);
  check_magic(r, kMatrixMagic, "matrix");
  const auto rows = r.take<std::uint64_t>("rows");
  const auto cols = r.take<std::uint64_t>("cols");
  if (cols != 0 && rows > (r.remaining() / sizeof(float)) / cols) {
    format_error("payload shorter than " + std::to_string(rows) + "x" + std::to_string(cols) +
                     " floats",
                 r.offset());
  }
  const std::size_t count = rows * cols;
  if (r.remaining() != count * sizeof(float)) {
    format_error("payload is " + std::to_string(r.remaining()) + " bytes, expected " +
                     std::to_string(count * sizeof(float)),
                 r.offset());
  }
  std::vector<float> data(count);
  r.take_floats(data, "matrix payload");
  return MatrixF(rows, cols, std::move(data));
}

void write_matrix(const fs::path& path, const MatrixF& m) {
  AtomicFile f(path);
  const std::string header = matrix_header(m.rows(), m.cols());
  f.stream().write(header.data(), static_cast<std::streamsize>(header.size()));
  if constexpr (std::endian::native == std::endian::little) {
    f.stream().write(reinterpret_cast<const char*>(m.data()),
                     static_cast<std::streamsize>(m.size() * sizeof(float)));
  } else {
    std::string payload;
    put_f32_block(payload, m.values());
    f.stream().write(payload.data(), static_cast<std::streamsize>(payload.size()));
  }
  f.commit();
}

MatrixF read_matrix(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path.string() + "'");
  std::string header(kMatrixHeaderBytes, '\0');
  in.read(header.data(), static_cast<std::streamsize>(header.size()));
  header.resize(static_cast<std::size_t>(in.gcount()));
  Reader r(header);
  check_magic(r, kMatrixMagic, "matrix");
  const auto rows = r.take<std::uint64_t>("rows");
  const auto cols = r.take<std::uint64_t>("cols");

  const std::uintmax_t file_size = fs::file_size(path);
  const std::uintmax_t payload = file_size - kMatrixHeaderBytes;
  if (cols != 0 && rows > (payload / sizeof(float)) / cols) {
    format_error("payload shorter than " + std::to_string(rows) + "x" + std::to_string(cols) +
                     " floats",
                 kMatrixHeaderBytes);
  }
  if (payload != rows * cols * sizeof(float)) {
    format_error("payload is " + std::to_string(payload) + " bytes, expected " +
                     std::to_string(rows * cols * sizeof(float)),
                 kMatrixHeaderBytes);
  }
  std::vector<float> data(rows * cols);
  in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(payload));
  if (static_cast<std::uintmax_t>(in.gcount()) != payload) {
    format_error("short read of matrix payload", kMatrixHeaderBytes);
  }
  if constexpr (std::endian::native != std::endian::little) {
    std::vector<float> swapped(data.size());
    get_f32_block(reinterpret_cast<const unsigned char*>(data.data()), swapped);
    data = std::move(swapped);
  }
  return MatrixF(rows, cols, std::move(data));
}

void write_predictions(const fs::path& path, const PredictionMatrix& p) {
  write_matrix(path, p.matrix());
}

PredictionMatrix read_predictions(const fs::path& path) {
  MatrixF m = read_matrix(path);
  if (m.rows() == 0 || m.cols() == 0) {
    throw FormatError("prediction matrix '" + path.string() + "' is empty");
  }
  return PredictionMatrix(std::move(m));
}

std::string encode_frames(std::span<const FrameSequence> videos) {
  std::string out(kFrameMagic, 4);
  put_le<std::uint32_t>(out, kFormatVersion);
  for (const auto& v : videos) {
    if (v.video_id().size() > 0xFFFF) throw std::invalid_argument("video id longer than 65535 bytes");
    put_le<std::uint16_t>(out, static_cast<std::uint16_t>(v.video_id().size()));
    out.append(v.video_id());
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(v.num_frames()));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(v.dim()));
    put_f32_block(out, v.frames().values());
  }
  return out;
}

std::vector<FrameSequence> decode_frames(std::string_view bytes) {
  Reader r(bytes);
  check_magic(r, kFrameMagic, "frame");
  std::vector<FrameSequence> videos;
  while (!r.at_end()) {
    const std::size_t record_start = r.offset();
    const auto id_len = r.take<std::uint16_t>("record id length");
    std::string id(r.take_bytes(id_len, "record id"));
    const auto T = r.take<std::uint32_t>("record frame count");
    const auto d = r.take<std::uint32_t>("record dim");
    const std::uint64_t count = static_cast<std::uint64_t>(T) * d;
    if (count > r.remaining() / sizeof(float)) {
      format_error("record '" + id + "' declares " + std::to_string(T) + "x" + std::to_string(d) +
                       " values but only " + std::to_string(r.remaining()) + " bytes remain",
                   r.offset());
    }
    std::vector<float> data(count);
    r.take_floats(data, "record payload");
    try {
      videos.emplace_back(std::move(id), MatrixF(T, d, std::move(data)));
    } catch (const std::invalid_argument& e) {
      format_error(std::string("invalid record: ") + e.what(), record_start);
    }
  }
  return videos;
}

void write_frames(const fs::path& path, std::span<const FrameSequence> videos) {
  write_file_atomic(path, encode_frames(videos));
}

std::vector<FrameSequence> read_frames(const fs::path& path) { return decode_frames(read_file(path)); }

std::string encode_labels(std::span<const std::string> video_ids, const LabelSet& labels) {
  if (video_ids.size() != labels.num_videos()) {
    throw DimensionError("encode_labels: id count differs from label count");
  }
  std::string out = "#classes=" + std::to_string(labels.num_classes()) + "\n";
  for (std::size_t v = 0; v < video_ids.size(); ++v) {
    out += video_ids[v];
    out += ',';
    const auto pos = labels.positives(v);
    for (std::size_t i = 0; i < pos.size(); ++i) {
      if (i) out += ' ';
      out += std::to_string(pos[i]);
    }
    out += '\n';
  }
  return out;
}

LabelFile decode_labels(std::string_view text) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  auto next_line = [&](std::string_view& line) {
    if (pos >= text.size()) return false;
    const std::size_t end = text.find('\n', pos);
    line = text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = end == std::string_view::npos ? text.size() : end + 1;
    ++line_no;
    return true;
  };
  auto fail = [&](const std::string& what) -> void {
    throw FormatError("label file line " + std::to_string(line_no) + ": " + what);
  };

  std::string_view line;
  if (!next_line(line)) throw FormatError("label file line 1: missing '#classes=' header");
  constexpr std::string_view kHeader = "#classes=";
  if (line.substr(0, kHeader.size()) != kHeader) fail("expected '#classes=<C>' header");
  std::size_t num_classes = 0;
  {
    const auto digits = line.substr(kHeader.size());
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), num_classes);
    if (ec != std::errc() || ptr != digits.data() + digits.size() || num_classes == 0) {
      fail("invalid class count");
    }
  }

  std::vector<std::string> ids;
  std::vector<std::vector<ClassId>> positives;
  std::set<std::string, std::less<>> seen;
  while (next_line(line)) {
    if (line.empty()) continue;
    const std::size_t comma = line.find(',');
    if (comma == std::string_view::npos) fail("missing ',' after video id");
    const auto id = line.substr(0, comma);
    if (id.empty()) fail("empty video id");
    if (seen.count(id)) fail("duplicate video id '" + std::string(id) + "'");
    seen.emplace(id);

    std::vector<ClassId> cls;
    auto rest = line.substr(comma + 1);
    while (!rest.empty()) {
      if (rest.front() == ' ') {
        rest.remove_prefix(1);
        continue;
      }
      const std::size_t sp = rest.find(' ');
      const auto tok = rest.substr(0, sp);
      ClassId c = 0;
      const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), c);
      if (ec != std::errc() || ptr != tok.data() + tok.size()) {
        fail("invalid class id '" + std::string(tok) + "'");
      }
      if (c >= num_classes) {
        fail("class id " + std::to_string(c) + " >= " + std::to_string(num_classes));
      }
      if (!cls.empty() && c <= cls.back()) fail("class ids not strictly ascending");
      cls.push_back(c);
      rest = sp == std::string_view::npos ? std::string_view{} : rest.substr(sp);
    }
    ids.emplace_back(id);
    positives.push_back(std::move(cls));
  }
  return {std::move(ids), LabelSet(num_classes, std::move(positives))};
}

void write_labels(const fs::path& path, std::span<const std::string> video_ids,
                  const LabelSet& labels) {
  write_file_atomic(path, encode_labels(video_ids, labels));
}

LabelFile read_labels(const fs::path& path) { return decode_labels(read_file(path)); }

void write_split(const fs::path& path, const Split& split) {
  const nlohmann::json j = {{"train", split.train}, {"validation", split.validation}};
  write_file_atomic(path, j.dump() + "\n");
}

Split read_split(const fs::path& path) {
  const auto j = read_json(path);
  try {
    return {j.at("train").get<std::vector<std::size_t>>(),
            j.at("validation").get<std::vector<std::size_t>>()};
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("malformed split file '" + path.string() + "': " + e.what());
  }
}

void write_codebook(const fs::path& path, const Codebook& codebook) {
  write_matrix(path, codebook.centroids());
  const nlohmann::json meta = {{"kind", "codebook"}, {"k", codebook.k()}, {"dim", codebook.dim()}};
  write_file_atomic(sidecar_path(path), meta.dump(2) + "\n");
}

Codebook read_codebook(const fs::path& path) {
  const auto meta = read_json(sidecar_path(path));
  if (meta.value("kind", "") != "codebook") throw FormatError("'" + path.string() + "' is not a codebook");
  MatrixF m = read_matrix(path);
  if (m.rows() != meta.value("k", 0u) || m.cols() != meta.value("dim", 0u)) {
    throw FormatError("codebook sidecar does not match matrix shape");
  }
  return Codebook(std::move(m));
}

void write_whitening(const fs::path& path, const PcaWhitenModel& model, double eps) {
  const std::size_t d = model.dim();
  MatrixF m(d + 2, d);
  for (std::size_t j = 0; j < d; ++j) {
    m(0, j) = static_cast<float>(model.mean()[j]);
    m(1, j) = static_cast<float>(model.scale()[j]);
  }
  for (std::size_t r = 0; r < d; ++r) {
    for (std::size_t c = 0; c < d; ++c) m(r + 2, c) = static_cast<float>(model.basis()(r, c));
  }
  write_matrix(path, m);
  const nlohmann::json meta = {{"kind", "pca_whiten"},
                               {"dim", d},
                               {"eps", eps},
                               {"layout", "row0=mean,row1=scale,rows2..=basis (eigenvectors as columns)"}};
  write_file_atomic(sidecar_path(path), meta.dump(2) + "\n");
}

PcaWhitenModel read_whitening(const fs::path& path) {
  const auto meta = read_json(sidecar_path(path));
  if (meta.value("kind", "") != "pca_whiten") {
    throw FormatError("'" + path.string() + "' is not a whitening model");
  }
  const MatrixF m = read_matrix(path);
  const std::size_t d = m.cols();
  if (m.rows() != d + 2 || d != meta.value("dim", 0u)) {
    throw FormatError("whitening model sidecar does not match matrix shape");
  }
  std::vector<double> mean(d), scale(d);
  MatrixD basis(d, d);
  for (std::size_t j = 0; j < d; ++j) {
    mean[j] = m(0, j);
    scale[j] = m(1, j);
  }
  for (std::size_t r = 0; r < d; ++r) {
    for (std::size_t c = 0; c < d; ++c) basis(r, c) = m(r + 2, c);
  }
  return PcaWhitenModel(std::move(mean), std::move(basis), std::move(scale));
}

void write_checkpoint(const fs::path& dir, const Network& net, const CheckpointInfo& info) {
  fs::create_directories(dir);
  for (std::size_t l = 0; l < kNumLayers; ++l) {
    const auto& layer = net.layers[l];
    write_matrix(dir / ("layer" + std::to_string(l) + "_weights.divm"), layer.weights);
    write_matrix(dir / ("layer" + std::to_string(l) + "_bias.divm"),
                 MatrixF(1, layer.bias.size(), layer.bias));
  }
  const nlohmann::json manifest = {{"config", net.config},
                                   {"epoch", info.epoch},
                                   {"step", net.step},
                                   {"metrics", {{"train_loss", info.train_loss}, {"val_gap", info.val_gap}}}};
  write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

Network read_checkpoint(const fs::path& dir) {
  const auto manifest = read_json(dir / "manifest.json");
  NetworkConfig config;
  try {
    config = manifest.at("config").get<NetworkConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("malformed checkpoint manifest in '" + dir.string() + "': " + e.what());
  }
  Network net = init_network<float>(config);
  net.step = manifest.value("step", std::uint64_t{0});
  for (std::size_t l = 0; l < kNumLayers; ++l) {
    auto& layer = net.layers[l];
    MatrixF w = read_matrix(dir / ("layer" + std::to_string(l) + "_weights.divm"));
    MatrixF b = read_matrix(dir / ("layer" + std::to_string(l) + "_bias.divm"));
    if (w.rows() != layer.fan_in() || w.cols() != layer.fan_out() || b.rows() != 1 ||
        b.cols() != layer.fan_out()) {
      throw DimensionError("checkpoint layer " + std::to_string(l) + " shape does not match config");
    }
    layer.weights = std::move(w);
    layer.bias.assign(b.values().begin(), b.values().end());
  }
  return net;
}

}  // namespace divens::io
