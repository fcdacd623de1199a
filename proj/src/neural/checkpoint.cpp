#include "propdetect/neural/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>

#include "propdetect/util/errors.hpp"

namespace propdetect::neural {

namespace {

constexpr char kMagic[6] = {'p', 'd', 'c', 'k', 'p', 't'};
constexpr uint32_t kVersion = 1;

void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) {
  put_u64(out, std::bit_cast<uint64_t>(v));
}

void put_string(std::string& out, const std::string& s) {
  put_u32(out, static_cast<uint32_t>(s.size()));
  out.append(s);
}

struct Reader {
  std::string_view bytes;
  size_t pos = 0;

  void require(size_t n) const {
    if (pos + n > bytes.size()) throw LoadError("checkpoint truncated");
  }
  uint32_t u32() {
    require(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<uint32_t>(static_cast<unsigned char>(bytes[pos + i]))
           << (8 * i);
    pos += 4;
    return v;
  }
  uint64_t u64() {
    require(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<uint64_t>(static_cast<unsigned char>(bytes[pos + i]))
           << (8 * i);
    pos += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    uint32_t n = u32();
    if (n > (1u << 30)) throw LoadError("checkpoint string length implausible");
    require(n);
    std::string s(bytes.substr(pos, n));
    pos += n;
    return s;
  }
};

}  // namespace

std::string save_checkpoint(const Checkpoint& ck) {
  std::string out;
  out.append(kMagic, sizeof kMagic);
  put_u32(out, kVersion);

  const EncoderConfig& c = ck.config;
  put_u64(out, c.vocab_size);
  put_u64(out, c.hidden_dim);
  put_u64(out, c.layers);
  put_u64(out, c.heads);
  put_u64(out, c.max_seq_len);
  out.push_back(c.encoder_kind == EncoderKind::transformer ? 0 : 1);
  put_f64(out, c.dropout);
  out.push_back(c.embedding_source == EmbeddingSource::internal ? 0 : 1);
  put_string(out, c.embedding_file);

  put_u64(out, ck.step);
  put_f64(out, ck.step_fraction);

  put_u32(out, static_cast<uint32_t>(ck.metadata.size()));
  for (const auto& [k, v] : ck.metadata) {
    put_string(out, k);
    put_string(out, v);
  }

  put_u32(out, static_cast<uint32_t>(ck.tensors.size()));
  for (const auto& [name, m] : ck.tensors) {
    put_string(out, name);
    put_u64(out, m.rows());
    put_u64(out, m.cols());
    for (size_t i = 0; i < m.size(); ++i) put_f64(out, m.data()[i]);
  }
  return out;
}

Checkpoint load_checkpoint(std::string_view bytes) {
  Reader r{bytes};
  r.require(sizeof kMagic);
  if (bytes.substr(0, sizeof kMagic) != std::string_view(kMagic, sizeof kMagic))
    throw LoadError("not a checkpoint file (bad magic)");
  r.pos = sizeof kMagic;
  uint32_t version = r.u32();
  if (version != kVersion)
    throw LoadError("unsupported checkpoint version " +
                    std::to_string(version));

  Checkpoint ck;
  EncoderConfig& c = ck.config;
  c.vocab_size = r.u64();
  c.hidden_dim = r.u64();
  c.layers = r.u64();
  c.heads = r.u64();
  c.max_seq_len = r.u64();
  r.require(1);
  uint8_t kind = static_cast<uint8_t>(bytes[r.pos++]);
  if (kind > 1) throw LoadError("unknown encoder kind tag in checkpoint");
  c.encoder_kind = kind == 0 ? EncoderKind::transformer : EncoderKind::bilstm;
  c.dropout = r.f64();
  r.require(1);
  uint8_t src = static_cast<uint8_t>(bytes[r.pos++]);
  if (src > 1) throw LoadError("unknown embedding source tag in checkpoint");
  c.embedding_source =
      src == 0 ? EmbeddingSource::internal : EmbeddingSource::external;
  c.embedding_file = r.str();

  ck.step = r.u64();
  ck.step_fraction = r.f64();

  uint32_t meta_count = r.u32();
  for (uint32_t i = 0; i < meta_count; ++i) {
    std::string k = r.str();
    std::string v = r.str();
    ck.metadata.emplace(std::move(k), std::move(v));
  }

  uint32_t tensor_count = r.u32();
  for (uint32_t i = 0; i < tensor_count; ++i) {
    std::string name = r.str();
    uint64_t rows = r.u64();
    uint64_t cols = r.u64();
    if (rows > (1u << 24) || cols > (1u << 24))
      throw LoadError("tensor '" + name + "' has implausible shape");
    r.require(rows * cols * 8);
    Matrix m(rows, cols);
    for (size_t j = 0; j < m.size(); ++j) m.data()[j] = r.f64();
    ck.tensors.emplace(std::move(name), std::move(m));
  }

  if (r.pos != bytes.size())
    throw LoadError("trailing bytes after checkpoint payload");
  return ck;
}

void write_checkpoint_file(const Checkpoint& ck, const std::string& path) {
  std::string bytes = save_checkpoint(ck);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw LoadError("cannot open checkpoint path for writing: " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw LoadError("checkpoint write failed: " + path);
}

Checkpoint read_checkpoint_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open checkpoint file: " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  return load_checkpoint(bytes);
}

void store_params(Checkpoint& ck, const std::vector<NamedParam>& params,
                  const std::string& prefix) {
  for (const auto& p : params) ck.tensors[prefix + p.name] = *p.value;
}

void load_params(const Checkpoint& ck, const std::vector<NamedParam>& params,
                 const std::string& prefix) {
  for (const auto& p : params) {
    auto it = ck.tensors.find(prefix + p.name);
    if (it == ck.tensors.end())
      throw LoadError("checkpoint missing tensor '" + prefix + p.name + "'");
    if (!it->second.same_shape(*p.value))
      throw LoadError("tensor '" + prefix + p.name + "' has shape " +
                      std::to_string(it->second.rows()) + "x" +
                      std::to_string(it->second.cols()) + ", expected " +
                      std::to_string(p.value->rows()) + "x" +
                      std::to_string(p.value->cols()));
    *p.value = it->second;
  }
}

std::unique_ptr<Encoder> encoder_from_checkpoint(const Checkpoint& ck) {
  auto enc = make_encoder(ck.config);
  load_params(ck, enc->named_params(), "encoder.");
  return enc;
}

}  // namespace propdetect::neural
