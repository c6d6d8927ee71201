#include "cxrlabel/labeler/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "cxrlabel/error.hpp"

namespace cxrlabel::labeler {
namespace {

constexpr char kMagic[8] = {'C', 'X', 'R', 'L', 'C', 'K', 'P', 'T'};

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u64(s.size());
    out_.insert(out_.end(), s.begin(), s.end());
  }
  void raw(const char* p, std::size_t n) { out_.insert(out_.end(), p, p + n); }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& in) : in_(in) {}

  std::uint8_t u8() {
    need(1);
    return in_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{in_[pos_++]} << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{in_[pos_++]} << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const auto n = u64();
    need(n);
    std::string s(in_.begin() + static_cast<std::ptrdiff_t>(pos_),
                  in_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == in_.size(); }
  void need(std::uint64_t n) const {
    if (n > in_.size() - pos_) corrupt("truncated checkpoint");
  }
  [[noreturn]] static void corrupt(const std::string& why) {
    throw Error(ErrorKind::input, "labeler", "bad-checkpoint", why);
  }

 private:
  const std::vector<std::uint8_t>& in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize(const ModelParams& params) {
  Writer w;
  w.raw(kMagic, sizeof kMagic);
  w.u32(kCheckpointVersion);
  const auto& c = params.config;
  w.u64(c.encoder.embedding_dim);
  w.u64(c.encoder.max_seq_len);
  w.u8(c.encoder.pooling == Pooling::attention ? 1 : 0);
  w.f64(c.encoder.dropout_rate);
  w.u8(c.dual_encoder ? 1 : 0);
  w.f64(c.threshold);
  w.u64(params.seed);
  w.str(params.provenance);

  w.u64(params.vocab.size());
  for (const auto& t : params.vocab.tokens()) w.str(t);

  const auto tensors = params.weights.tensors();
  const auto& names = Weights::tensor_names();
  w.u64(tensors.size());
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    w.str(names[i]);
    w.u64(tensors[i]->rows);
    w.u64(tensors[i]->cols);
    for (double v : tensors[i]->values) w.f64(v);
  }
  return w.take();
}

ModelParams deserialize(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < sizeof kMagic ||
      std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    Reader::corrupt("not a cxrlabel checkpoint (bad magic)");
  }
  Reader r(bytes);
  for (std::size_t i = 0; i < sizeof kMagic; ++i) r.u8();
  const auto version = r.u32();
  if (version != kCheckpointVersion) {
    Reader::corrupt("unsupported checkpoint version " + std::to_string(version));
  }

  ModelParams p;
  auto& c = p.config;
  c.encoder.embedding_dim = r.u64();
  c.encoder.max_seq_len = r.u64();
  c.encoder.pooling = r.u8() ? Pooling::attention : Pooling::mean;
  c.encoder.dropout_rate = r.f64();
  c.dual_encoder = r.u8() != 0;
  c.threshold = r.f64();
  p.seed = r.u64();
  p.provenance = r.str();

  const auto vocab_size = r.u64();
  std::vector<std::string> tokens;
  for (std::uint64_t i = 0; i < vocab_size; ++i) tokens.push_back(r.str());
  p.vocab = Vocab::from_tokens(std::move(tokens));

  auto tensors = p.weights.tensors();
  const auto& names = Weights::tensor_names();
  if (r.u64() != tensors.size()) Reader::corrupt("unexpected tensor count");
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    if (r.str() != names[i]) Reader::corrupt("unexpected tensor " + names[i]);
    const auto rows = r.u64();
    const auto cols = r.u64();
    r.need(rows * cols * 8);
    *tensors[i] = Tensor(rows, cols);
    for (auto& v : tensors[i]->values) v = r.f64();
  }
  if (!r.done()) Reader::corrupt("trailing bytes after tensors");
  try {
    c.encoder.validate();
  } catch (const Error& e) {
    Reader::corrupt(e.detail());
  }
  return p;
}

void save(const ModelParams& params, const std::filesystem::path& path) {
  const auto bytes = serialize(params);
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw Error(ErrorKind::input, "labeler", "unwritable",
                "cannot write checkpoint " + path.string());
  }
}

ModelParams load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::input, "labeler", "unreadable",
                "cannot read checkpoint " + path.string());
  }
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

}  // namespace cxrlabel::labeler
