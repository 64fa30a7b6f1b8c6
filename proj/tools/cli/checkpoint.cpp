#include "checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>

#include "ttk/error.hpp"

namespace ttk::cli {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'T', 'T', 'K', 'C', 'K', 'P', 'T', '\0'};

std::vector<Index> to_dims(const json& j) { return j.get<std::vector<Index>>(); }

class Writer {
 public:
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  template <typename T>
  void le(T v) {
    for (std::size_t s = 0; s < sizeof(T); ++s) out_.push_back(static_cast<std::uint8_t>(v >> (8 * s)));
  }
  void f64(double d) { le(std::bit_cast<std::uint64_t>(d)); }
  void bytes(const std::string& s) { raw(s.data(), s.size()); }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}

  void need(std::size_t n) const {
    if (b_.size() - pos_ < n) throw FormatError("checkpoint truncated");
  }
  template <typename T>
  T le() {
    need(sizeof(T));
    T v = 0;
    for (std::size_t s = 0; s < sizeof(T); ++s) v |= static_cast<T>(static_cast<T>(b_[pos_ + s]) << (8 * s));
    pos_ += sizeof(T);
    return v;
  }
  double f64() { return std::bit_cast<double>(le<std::uint64_t>()); }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(b_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == b_.size(); }

 private:
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

json metrics_to_json(std::span<const EpochMetrics> metrics) {
  json arr = json::array();
  for (const EpochMetrics& m : metrics) {
    arr.push_back({{"epoch", m.epoch}, {"train_ce", m.train_ce}, {"val_ce", m.val_ce}, {"val_acc", m.val_acc}});
  }
  return arr;
}

std::vector<EpochMetrics> metrics_from_json(const json& arr) {
  std::vector<EpochMetrics> out;
  for (const json& j : arr) {
    out.push_back({j.at("epoch").get<Index>(), j.at("train_ce").get<double>(), j.at("val_ce").get<double>(),
                   j.at("val_acc").get<double>()});
  }
  return out;
}

}  // namespace

json config_to_json(const ModelConfig& cfg) {
  json j;
  j["conv_channels"] = cfg.conv_channels;
  j["conv_kernels"] = cfg.conv_kernels;
  j["conv_strides"] = cfg.conv_strides;
  j["pool_kernel"] = cfg.pool_kernel;
  j["fc_dims"] = cfg.fc_dims;
  j["fc_input_shape"] = cfg.fc_input_shape.dims();
  json shapes = json::array();
  for (const Shape& s : cfg.fc_shapes) shapes.push_back(s.dims());
  j["fc_shapes"] = shapes;
  j["num_classes"] = cfg.num_classes;
  j["head_kind"] = to_string(cfg.head_kind);
  json tt = json::array();
  for (const RankVector& r : cfg.tt_ranks) tt.push_back(r.values());
  j["tt_ranks"] = tt;
  json tucker = json::array();
  for (const TuckerRanks& r : cfg.tucker_ranks) tucker.push_back(std::vector<Index>(r.begin(), r.end()));
  j["tucker_ranks"] = tucker;
  j["seed"] = cfg.seed;
  return j;
}

ModelConfig config_from_json(const json& j) {
  try {
    ModelConfig cfg;
    cfg.conv_channels = j.at("conv_channels").get<std::vector<Index>>();
    cfg.conv_kernels = j.at("conv_kernels").get<std::vector<Index>>();
    cfg.conv_strides = j.at("conv_strides").get<std::vector<Index>>();
    cfg.pool_kernel = j.at("pool_kernel").get<Index>();
    cfg.fc_dims = j.at("fc_dims").get<std::vector<Index>>();
    cfg.fc_input_shape = Shape(to_dims(j.at("fc_input_shape")));
    cfg.fc_shapes.clear();
    for (const json& s : j.at("fc_shapes")) cfg.fc_shapes.emplace_back(to_dims(s));
    cfg.num_classes = j.at("num_classes").get<Index>();
    const auto head = parse_head_kind(j.at("head_kind").get<std::string>());
    if (!head) throw FormatError("unknown head kind in checkpoint");
    cfg.head_kind = *head;
    for (const json& r : j.at("tt_ranks")) cfg.tt_ranks.emplace_back(to_dims(r));
    for (const json& r : j.at("tucker_ranks")) {
      const auto v = to_dims(r);
      if (v.size() != 4) throw FormatError("Tucker ranks need four entries");
      cfg.tucker_ranks.push_back({v[0], v[1], v[2], v[3]});
    }
    cfg.seed = j.at("seed").get<std::uint64_t>();
    return cfg;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed model config: ") + e.what());
  } catch (const ShapeError& e) {
    throw FormatError(std::string("malformed model config: ") + e.what());
  }
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  Writer w;
  w.raw(kMagic, sizeof kMagic);
  w.le<std::uint32_t>(ckpt.format_version);
  const std::string config = config_to_json(ckpt.config).dump();
  w.le<std::uint64_t>(config.size());
  w.bytes(config);
  const std::string metrics = ckpt.metrics.empty() ? std::string() : metrics_to_json(ckpt.metrics).dump();
  w.le<std::uint64_t>(metrics.size());
  w.bytes(metrics);
  w.le<std::uint64_t>(ckpt.tensors.size());
  for (const NamedTensor& t : ckpt.tensors) {
    w.le<std::uint32_t>(static_cast<std::uint32_t>(t.name.size()));
    w.bytes(t.name);
    w.le<std::uint32_t>(static_cast<std::uint32_t>(t.tensor.rank()));
    for (Index d : t.tensor.shape().dims()) w.le<std::uint64_t>(d);
    for (double v : t.tensor.data()) w.f64(v);
  }
  return w.take();
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  if (r.str(sizeof kMagic) != std::string(kMagic, sizeof kMagic)) throw FormatError("not a ttk checkpoint");
  Checkpoint ckpt;
  ckpt.format_version = r.le<std::uint32_t>();
  if (ckpt.format_version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(ckpt.format_version));
  }
  try {
    ckpt.config = config_from_json(json::parse(r.str(r.le<std::uint64_t>())));
    const std::string metrics = r.str(r.le<std::uint64_t>());
    if (!metrics.empty()) ckpt.metrics = metrics_from_json(json::parse(metrics));
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed checkpoint header: ") + e.what());
  }
  const auto count = r.le<std::uint64_t>();
  for (std::uint64_t n = 0; n < count; ++n) {
    NamedTensor t;
    t.name = r.str(r.le<std::uint32_t>());
    const auto rank = r.le<std::uint32_t>();
    std::vector<Index> dims(rank);
    for (auto& d : dims) d = r.le<std::uint64_t>();
    Shape shape;
    try {
      shape = Shape(dims);
    } catch (const ShapeError&) {
      throw FormatError("tensor " + t.name + " has a zero dimension");
    }
    if (shape.numel() > bytes.size() / 8) throw FormatError("checkpoint truncated");
    std::vector<double> data(shape.numel());
    for (double& v : data) v = r.f64();
    t.tensor = DenseTensor(std::move(shape), std::move(data));
    ckpt.tensors.push_back(std::move(t));
  }
  if (!r.done()) throw FormatError("trailing bytes after checkpoint payload");
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const auto bytes = encode_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

Checkpoint checkpoint_from_model(Model& model, std::vector<EpochMetrics> metrics) {
  Checkpoint ckpt;
  ckpt.config = model.config();
  for (const ParamRef& p : model.parameters()) ckpt.tensors.push_back({p.name, *p.value});
  for (const ParamRef& p : model.buffers()) ckpt.tensors.push_back({p.name, *p.value});
  ckpt.metrics = std::move(metrics);
  return ckpt;
}

Model model_from_checkpoint(const Checkpoint& ckpt) {
  Model model = [&] {
    try {
      return build_model(ckpt.config);
    } catch (const ConfigError& e) {
      throw FormatError(std::string("checkpoint config invalid: ") + e.what());
    }
  }();
  std::map<std::string, const DenseTensor*> by_name;
  for (const NamedTensor& t : ckpt.tensors) {
    if (!by_name.emplace(t.name, &t.tensor).second) throw FormatError("duplicate tensor " + t.name);
  }
  std::vector<ParamRef> slots = model.parameters();
  for (ParamRef& b : model.buffers()) slots.push_back(b);
  if (slots.size() != by_name.size()) {
    throw FormatError("checkpoint holds " + std::to_string(by_name.size()) + " tensors, model expects " +
                      std::to_string(slots.size()));
  }
  for (const ParamRef& slot : slots) {
    auto it = by_name.find(slot.name);
    if (it == by_name.end()) throw FormatError("checkpoint is missing tensor " + slot.name);
    if (it->second->shape() != slot.value->shape()) {
      throw FormatError("tensor " + slot.name + " has shape " + it->second->shape().to_string() +
                        ", expected " + slot.value->shape().to_string());
    }
    *slot.value = *it->second;
  }
  return model;
}

void write_metrics_csv(const std::filesystem::path& path, std::span<const EpochMetrics> metrics) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "epoch,train_ce,val_ce,val_acc\n";
  char line[160];
  for (const EpochMetrics& m : metrics) {
    std::snprintf(line, sizeof line, "%zu,%.17g,%.17g,%.17g\n", m.epoch, m.train_ce, m.val_ce, m.val_acc);
    out << line;
  }
}

}  // namespace ttk::cli
