#include "vigil/model_io.hpp"

#include <array>
#include <cstring>
#include <fstream>

namespace vigil {

namespace {

constexpr char kMagic[4] = {'V', 'G', 'L', '1'};
constexpr uint32_t kVersion = 1;

std::array<uint32_t, 256> make_crc_table() {
  std::array<uint32_t, 256> table{};
  for (uint32_t i = 0; i < 256; ++i) {
    uint32_t c = i;
    for (int k = 0; k < 8; ++k)
      c = (c & 1u) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
    table[i] = c;
  }
  return table;
}

const std::array<uint32_t, 256>& crc_table() {
  static const std::array<uint32_t, 256> table = make_crc_table();
  return table;
}

void put_u16(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v & 0xFF));
  out.push_back(static_cast<uint8_t>(v >> 8));
}

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void put_f32(std::vector<uint8_t>& out, float v) {
  uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

// Sequential reader that reports the byte offset of any violation.
class Reader {
public:
  explicit Reader(std::span<const uint8_t> bytes) : bytes_(bytes) {}

  size_t offset() const { return pos_; }
  size_t remaining() const { return bytes_.size() - pos_; }

  void need(size_t n, const char* what) const {
    if (remaining() < n)
      throw FormatError(std::string("weight file truncated: need ") +
                        std::to_string(n) + " bytes for " + what +
                        " at offset " + std::to_string(pos_));
  }

  uint8_t u8(const char* what) {
    need(1, what);
    return bytes_[pos_++];
  }

  uint16_t u16(const char* what) {
    need(2, what);
    uint16_t v = static_cast<uint16_t>(bytes_[pos_] | (bytes_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }

  uint32_t u32(const char* what) {
    need(4, what);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }

  float f32(const char* what) {
    const uint32_t bits = u32(what);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }

  std::string str(size_t n, const char* what) {
    need(n, what);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

private:
  std::span<const uint8_t> bytes_;
  size_t pos_ = 0;
};

struct NamedTensor {
  std::string name;
  std::vector<uint32_t> extents;
  std::vector<float> data;
};

void append_tensor(std::vector<NamedTensor>& out, const std::string& name,
                   std::vector<uint32_t> extents, const std::vector<float>& data) {
  out.push_back({name, std::move(extents), data});
}

// Flattens the weights into the named-tensor sequence the file stores,
// in plan order.
std::vector<NamedTensor> named_tensors(const ModelSpec& spec,
                                       const ModelWeights& weights) {
  const Plan plan = compile(spec);
  std::vector<NamedTensor> out;
  for (const PlanStep& step : plan.steps) {
    if (step.param < 0) continue;
    const ParamSet& p = weights.params[static_cast<size_t>(step.param)];
    switch (step.op) {
      case PlanStep::Conv:
      case PlanStep::Depthwise:
      case PlanStep::Pointwise:
        append_tensor(out, step.name + ".w",
                      {static_cast<uint32_t>(p.w.n()), static_cast<uint32_t>(p.w.c()),
                       static_cast<uint32_t>(p.w.h()), static_cast<uint32_t>(p.w.w())},
                      p.w.raw());
        if (step.has_bias)
          append_tensor(out, step.name + ".b",
                        {static_cast<uint32_t>(p.bias.size())}, p.bias);
        break;
      case PlanStep::FullyConnected:
        append_tensor(out, step.name + ".w",
                      {static_cast<uint32_t>(p.w.n()), static_cast<uint32_t>(p.w.c())},
                      p.w.raw());
        if (step.has_bias)
          append_tensor(out, step.name + ".b",
                        {static_cast<uint32_t>(p.bias.size())}, p.bias);
        break;
      case PlanStep::BatchNorm:
        append_tensor(out, step.name + ".gamma",
                      {static_cast<uint32_t>(p.gamma.size())}, p.gamma);
        append_tensor(out, step.name + ".beta",
                      {static_cast<uint32_t>(p.beta.size())}, p.beta);
        append_tensor(out, step.name + ".running_mean",
                      {static_cast<uint32_t>(p.running_mean.size())},
                      p.running_mean);
        append_tensor(out, step.name + ".running_var",
                      {static_cast<uint32_t>(p.running_var.size())},
                      p.running_var);
        break;
      default:
        break;
    }
  }
  return out;
}

}  // namespace

uint32_t crc32_update(uint32_t state, std::span<const uint8_t> bytes) {
  const auto& table = crc_table();
  for (uint8_t b : bytes) state = table[(state ^ b) & 0xFFu] ^ (state >> 8);
  return state;
}

uint32_t crc32(std::span<const uint8_t> bytes) {
  return crc32_update(0xFFFFFFFFu, bytes) ^ 0xFFFFFFFFu;
}

std::vector<uint8_t> encode_weights(const ModelSpec& spec,
                                    const ModelWeights& weights) {
  std::vector<uint8_t> out;
  out.insert(out.end(), kMagic, kMagic + 4);
  put_u32(out, kVersion);

  const std::string config = model_to_config(spec, weights.seed);
  put_u32(out, static_cast<uint32_t>(config.size()));
  out.insert(out.end(), config.begin(), config.end());

  const std::vector<NamedTensor> tensors = named_tensors(spec, weights);
  put_u32(out, static_cast<uint32_t>(tensors.size()));
  for (const NamedTensor& t : tensors) {
    put_u16(out, static_cast<uint16_t>(t.name.size()));
    out.insert(out.end(), t.name.begin(), t.name.end());
    out.push_back(static_cast<uint8_t>(t.extents.size()));
    for (uint32_t e : t.extents) put_u32(out, e);
    for (float v : t.data) put_f32(out, v);
  }

  put_u32(out, crc32(out));
  return out;
}

std::pair<ModelSpec, ModelWeights> decode_weights(std::span<const uint8_t> bytes) {
  if (bytes.size() < 4 + 4 + 4 + 4 + 4)
    throw FormatError("weight file truncated: only " +
                      std::to_string(bytes.size()) + " bytes");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw FormatError("weight file: bad magic at offset 0");

  // Structural pass: sizes and offsets only, so truncation is reported as a
  // format error with the offending offset before the checksum is consulted.
  const std::span<const uint8_t> body = bytes.first(bytes.size() - 4);
  Reader in(body);
  in.str(4, "magic");
  const uint32_t version = in.u32("version");
  if (version != kVersion)
    throw FormatError("weight file: unsupported version " +
                      std::to_string(version) + " at offset 4");

  const uint32_t config_len = in.u32("config length");
  const std::string config_text = in.str(config_len, "config text");

  struct RawTensor {
    size_t offset;
    std::string name;
    std::vector<uint32_t> extents;
    std::vector<float> data;
  };
  const uint32_t count = in.u32("tensor count");
  std::vector<RawTensor> read;
  read.reserve(count);
  for (uint32_t t = 0; t < count; ++t) {
    RawTensor nt;
    nt.offset = in.offset();
    const uint16_t name_len = in.u16("tensor name length");
    nt.name = in.str(name_len, "tensor name");
    const uint8_t rank = in.u8("tensor rank");
    size_t elems = 1;
    for (int r = 0; r < rank; ++r) {
      nt.extents.push_back(in.u32("tensor extent"));
      elems *= nt.extents.back();
    }
    in.need(elems * 4, "tensor payload");
    nt.data.resize(elems);
    for (size_t i = 0; i < elems; ++i) nt.data[i] = in.f32("tensor payload");
    read.push_back(std::move(nt));
  }
  if (in.remaining() != 0)
    throw FormatError("weight file: trailing bytes at offset " +
                      std::to_string(in.offset()));

  // Checksum over everything before the trailing CRC word.
  Reader tail(bytes.subspan(bytes.size() - 4));
  const uint32_t stored_crc = tail.u32("crc");
  const uint32_t actual_crc = crc32(body);
  if (stored_crc != actual_crc) {
    char msg[96];
    std::snprintf(msg, sizeof(msg),
                  "weight file checksum mismatch: stored %08x, computed %08x",
                  stored_crc, actual_crc);
    throw IntegrityError(msg);
  }

  // Semantic pass: interpret the config and match tensors against the plan.
  ConfigDoc doc = ConfigDoc::parse(config_text);
  ModelSpec spec = model_from_config(doc);
  ModelWeights weights;
  weights.seed = static_cast<uint64_t>(doc.get_int("seed", 0));

  ModelWeights shaped = build_model(spec, weights.seed);
  weights.params = std::move(shaped.params);

  const std::vector<NamedTensor> expect = named_tensors(spec, weights);
  if (count != expect.size())
    throw FormatError("weight file: tensor count " + std::to_string(count) +
                      " does not match the " + std::to_string(expect.size()) +
                      " tensors implied by the embedded model config");
  for (uint32_t t = 0; t < count; ++t) {
    if (read[t].name != expect[t].name || read[t].extents != expect[t].extents)
      throw FormatError("weight file: tensor " + std::to_string(t) + " (\"" +
                        read[t].name + "\") at offset " +
                        std::to_string(read[t].offset) +
                        " does not match the model's \"" + expect[t].name + "\"");
  }

  // Scatter back into the parameter sets, mirroring named_tensors order.
  const Plan plan = compile(spec);
  size_t next = 0;
  auto take = [&]() -> std::vector<float>& { return read[next++].data; };
  for (const PlanStep& step : plan.steps) {
    if (step.param < 0) continue;
    ParamSet& p = weights.params[static_cast<size_t>(step.param)];
    switch (step.op) {
      case PlanStep::Conv:
      case PlanStep::Depthwise:
      case PlanStep::Pointwise:
      case PlanStep::FullyConnected: {
        const Shape4 s = p.w.shape();
        p.w = Tensor::from(s.n, s.c, s.h, s.w, std::move(take()));
        if (step.has_bias) p.bias = std::move(take());
        break;
      }
      case PlanStep::BatchNorm:
        p.gamma = std::move(take());
        p.beta = std::move(take());
        p.running_mean = std::move(take());
        p.running_var = std::move(take());
        break;
      default:
        break;
    }
  }
  return {std::move(spec), std::move(weights)};
}

void save_weights(const ModelSpec& spec, const ModelWeights& weights,
                  const std::string& path) {
  const std::vector<uint8_t> bytes = encode_weights(spec, weights);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open weight file for writing: " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path);
}

std::pair<ModelSpec, ModelWeights> load_weights(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open weight file: " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  return decode_weights(bytes);
}

}  // namespace vigil
