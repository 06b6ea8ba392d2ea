#include "vsr/checkpoint.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <sstream>

namespace vsr {

std::uint32_t crc32(const unsigned char* data, std::size_t len) {
  static const std::array<std::uint32_t, 256> table = [] {
    std::array<std::uint32_t, 256> t{};
    for (std::uint32_t i = 0; i < 256; ++i) {
      std::uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  std::uint32_t crc = 0xFFFFFFFFu;
  for (std::size_t i = 0; i < len; ++i) crc = table[(crc ^ data[i]) & 0xffu] ^ (crc >> 8);
  return crc ^ 0xFFFFFFFFu;
}

namespace {

constexpr std::uint32_t kFormatVersion = 1;
constexpr std::uint8_t kDtypeF64 = 0;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_string(std::string& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.append(s);
}

void put_tensor(std::string& out, const NamedTensor& nt) {
  put_string(out, nt.name);
  out.push_back(static_cast<char>(kDtypeF64));
  put_u32(out, static_cast<std::uint32_t>(nt.tensor.rank()));
  for (std::int64_t e : nt.tensor.shape()) put_u64(out, static_cast<std::uint64_t>(e));
  const std::size_t bytes = static_cast<std::size_t>(nt.tensor.numel()) * sizeof(double);
  const std::size_t off = out.size();
  out.resize(off + bytes);
  std::memcpy(out.data() + off, nt.tensor.data(), bytes);  // doubles are stored little-endian
}

struct Reader {
  const std::string& buf;
  std::size_t pos = 0;
  const std::string& path;

  void need(std::size_t n) const {
    if (pos + n > buf.size()) throw CheckpointError("checkpoint: truncated file " + path);
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    pos += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    pos += 8;
    return v;
  }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s = buf.substr(pos, n);
    pos += n;
    return s;
  }
  NamedTensor tensor() {
    NamedTensor out;
    out.name = str();
    need(1);
    const std::uint8_t dtype = static_cast<std::uint8_t>(buf[pos++]);
    if (dtype != kDtypeF64)
      throw CheckpointError("checkpoint: unknown dtype code in " + path);
    const std::uint32_t rank = u32();
    if (rank > 8) throw CheckpointError("checkpoint: implausible tensor rank in " + path);
    Shape shape;
    for (std::uint32_t i = 0; i < rank; ++i) shape.push_back(static_cast<std::int64_t>(u64()));
    out.tensor = Tensor(shape);
    const std::size_t bytes = static_cast<std::size_t>(out.tensor.numel()) * sizeof(double);
    need(bytes);
    std::memcpy(out.tensor.data(), buf.data() + pos, bytes);
    pos += bytes;
    return out;
  }
};

}  // namespace

const NamedTensor* CheckpointData::find(const std::string& name) const {
  for (const NamedTensor& nt : tensors)
    if (nt.name == name) return &nt;
  return nullptr;
}

void save_checkpoint(const std::string& path, const CheckpointData& data) {
  std::string buf;
  buf.append("VSRC");
  put_u32(buf, kFormatVersion);
  put_string(buf, data.kind);

  std::string config_text;
  for (const auto& [k, v] : data.config) config_text += k + "=" + v + "\n";
  put_string(buf, config_text);

  put_u32(buf, static_cast<std::uint32_t>(data.tensors.size()));
  for (const NamedTensor& nt : data.tensors) put_tensor(buf, nt);

  buf.push_back(data.has_optimizer ? 1 : 0);
  if (data.has_optimizer) {
    put_u32(buf, static_cast<std::uint32_t>(data.optimizer.size()));
    for (const NamedTensor& nt : data.optimizer) put_tensor(buf, nt);
  }

  put_u32(buf, crc32(reinterpret_cast<const unsigned char*>(buf.data()), buf.size()));

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("checkpoint: cannot write " + path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("checkpoint: write failed for " + path);
}

CheckpointData load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("checkpoint: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string buf = ss.str();
  if (buf.size() < 8 || buf.compare(0, 4, "VSRC") != 0)
    throw CheckpointError("checkpoint: bad magic in " + path);

  const std::size_t body = buf.size() - 4;
  std::uint32_t stored = 0;
  for (int i = 0; i < 4; ++i)
    stored |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[body + i])) << (8 * i);
  if (crc32(reinterpret_cast<const unsigned char*>(buf.data()), body) != stored)
    throw CheckpointError("checkpoint: CRC mismatch in " + path);

  const std::string body_str = buf.substr(0, body);
  Reader r{body_str, 4, path};
  CheckpointData data;
  if (r.u32() != kFormatVersion)
    throw CheckpointError("checkpoint: unsupported format version in " + path);
  data.kind = r.str();

  const std::string config_text = r.str();
  std::istringstream cfg(config_text);
  std::string line;
  while (std::getline(cfg, line)) {
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw CheckpointError("checkpoint: malformed config line '" + line + "' in " + path);
    data.config.emplace_back(line.substr(0, eq), line.substr(eq + 1));
  }

  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) data.tensors.push_back(r.tensor());

  r.need(1);
  data.has_optimizer = r.buf[r.pos++] != 0;
  if (data.has_optimizer) {
    const std::uint32_t opt_count = r.u32();
    for (std::uint32_t i = 0; i < opt_count; ++i) data.optimizer.push_back(r.tensor());
  }
  if (r.pos != r.buf.size())
    throw CheckpointError("checkpoint: trailing garbage in " + path);
  return data;
}

namespace {

std::string cfg_get(const CheckpointData& data, const std::string& key) {
  for (const auto& [k, v] : data.config)
    if (k == key) return v;
  throw CheckpointError("checkpoint: missing config key '" + key + "'");
}

int cfg_int(const CheckpointData& data, const std::string& key) {
  return std::stoi(cfg_get(data, key));
}

std::vector<int> cfg_int_list(const CheckpointData& data, const std::string& key) {
  std::vector<int> out;
  std::istringstream ss(cfg_get(data, key));
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(std::stoi(item));
  return out;
}

std::string join_ints(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(v[i]);
  }
  return out;
}

template <typename Net>
void append_params(const Net& net, CheckpointData* data) {
  for (const Parameter* p : net.params()) data->tensors.push_back({p->name, p->value});
}

template <typename Net>
void append_optimizer(const Net& net, std::int64_t step, CheckpointData* data) {
  data->has_optimizer = true;
  for (const Parameter* p : net.params()) {
    data->optimizer.push_back({"opt." + p->name + ".m", p->adam_m});
    data->optimizer.push_back({"opt." + p->name + ".v", p->adam_v});
  }
  data->optimizer.push_back({"opt.step", Tensor::scalar(static_cast<double>(step))});
}

// Copy checkpoint tensors onto the constructed network's parameters; error
// lists every missing or shape-mismatched name.
template <typename Net>
void restore_params(Net& net, const CheckpointData& data, std::int64_t* step) {
  std::string bad;
  for (Parameter* p : net.params()) {
    const NamedTensor* nt = data.find(p->name);
    if (!nt || nt->tensor.shape() != p->value.shape()) {
      bad += (bad.empty() ? "" : ", ") + p->name;
      continue;
    }
    p->value = nt->tensor;
    p->grad.zero();
    p->adam_m.zero();
    p->adam_v.zero();
  }
  if (!bad.empty())
    throw CheckpointError("checkpoint: missing or mismatched tensors: " + bad);

  if (step) *step = 0;
  if (data.has_optimizer) {
    for (Parameter* p : net.params()) {
      for (const NamedTensor& nt : data.optimizer) {
        if (nt.name == "opt." + p->name + ".m" && nt.tensor.shape() == p->value.shape())
          p->adam_m = nt.tensor;
        if (nt.name == "opt." + p->name + ".v" && nt.tensor.shape() == p->value.shape())
          p->adam_v = nt.tensor;
      }
    }
    if (step) {
      for (const NamedTensor& nt : data.optimizer)
        if (nt.name == "opt.step") *step = static_cast<std::int64_t>(nt.tensor[0]);
    }
  }
}

}  // namespace

CheckpointData generator_to_checkpoint(const Generator& g, bool with_optimizer,
                                       std::int64_t step) {
  const GeneratorConfig& c = g.config();
  CheckpointData data;
  data.kind = "generator";
  data.config = {{"input_frames", std::to_string(c.input_frames)},
                 {"base_channels", std::to_string(c.base_channels)},
                 {"num_res_blocks", std::to_string(c.num_res_blocks)},
                 {"kernel", std::to_string(c.kernel)},
                 {"patch_size", std::to_string(c.patch_size)}};
  append_params(g, &data);
  if (with_optimizer) append_optimizer(g, step, &data);
  return data;
}

Generator generator_from_checkpoint(const CheckpointData& data, std::int64_t* step) {
  if (data.kind != "generator")
    throw CheckpointError("checkpoint: expected kind generator, got " + data.kind);
  GeneratorConfig cfg;
  cfg.input_frames = cfg_int(data, "input_frames");
  cfg.base_channels = cfg_int(data, "base_channels");
  cfg.num_res_blocks = cfg_int(data, "num_res_blocks");
  cfg.kernel = cfg_int(data, "kernel");
  cfg.patch_size = cfg_int(data, "patch_size");
  Generator g(cfg, 0);
  restore_params(g, data, step);
  return g;
}

CheckpointData discriminator_to_checkpoint(Discriminator& d, bool with_optimizer,
                                           std::int64_t step) {
  const DiscriminatorConfig& c = d.config();
  CheckpointData data;
  data.kind = "discriminator";
  data.config = {{"conv_channels", join_ints(c.conv_channels)},
                 {"kernel", std::to_string(c.kernel)},
                 {"stride", std::to_string(c.stride)},
                 {"leaky_slope", format_double(c.leaky_slope)},
                 {"input_size", std::to_string(c.input_size)}};
  append_params(d, &data);
  for (const auto& [name, tensor] : d.state_tensors()) data.tensors.push_back({name, *tensor});
  if (with_optimizer) append_optimizer(d, step, &data);
  return data;
}

Discriminator discriminator_from_checkpoint(const CheckpointData& data, std::int64_t* step) {
  if (data.kind != "discriminator")
    throw CheckpointError("checkpoint: expected kind discriminator, got " + data.kind);
  DiscriminatorConfig cfg;
  cfg.conv_channels = cfg_int_list(data, "conv_channels");
  cfg.kernel = cfg_int(data, "kernel");
  cfg.stride = cfg_int(data, "stride");
  cfg.leaky_slope = std::stod(cfg_get(data, "leaky_slope"));
  cfg.input_size = cfg_int(data, "input_size");
  Discriminator d(cfg, 0);
  restore_params(d, data, step);
  std::string bad;
  for (auto& [name, tensor] : d.state_tensors()) {
    const NamedTensor* nt = data.find(name);
    if (!nt || nt->tensor.shape() != tensor->shape()) {
      bad += (bad.empty() ? "" : ", ") + name;
      continue;
    }
    *tensor = nt->tensor;
  }
  if (!bad.empty())
    throw CheckpointError("checkpoint: missing or mismatched tensors: " + bad);
  return d;
}

CheckpointData featurenet_to_checkpoint(const FeatureNet& fn) {
  const FeatureNetSpec& s = fn.spec();
  CheckpointData data;
  data.kind = "featurenet";
  data.config = {{"channels", join_ints(s.channels)},
                 {"pool_after", join_ints(s.pool_after)},
                 {"taps", join_ints(s.taps)},
                 {"seed", std::to_string(s.seed)}};
  append_params(fn, &data);
  return data;
}

FeatureNet featurenet_from_checkpoint(const CheckpointData& data) {
  if (data.kind != "featurenet")
    throw CheckpointError("checkpoint: expected kind featurenet, got " + data.kind);
  FeatureNetSpec spec;
  spec.channels = cfg_int_list(data, "channels");
  spec.pool_after = cfg_int_list(data, "pool_after");
  spec.taps = cfg_int_list(data, "taps");
  spec.seed = static_cast<std::uint64_t>(std::stoull(cfg_get(data, "seed")));
  FeatureNet fn(spec);
  restore_params(fn, data, nullptr);
  return fn;
}

FeatureNet make_feature_net(const FeatureNetSpec& spec) {
  if (spec.weight_file.empty()) return FeatureNet(spec);
  FeatureNet fn = featurenet_from_checkpoint(load_checkpoint(spec.weight_file));
  if (fn.spec().channels != spec.channels || fn.spec().taps != spec.taps ||
      fn.spec().pool_after != spec.pool_after)
    throw CheckpointError("featurenet: weight file " + spec.weight_file +
                          " does not match the requested spec");
  return fn;
}

}  // namespace vsr
