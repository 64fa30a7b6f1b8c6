#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <set>

#include "ttk/error.hpp"
#include "ttk/speechcmd.hpp"

namespace ttk {

namespace fs = std::filesystem;

namespace {

std::set<std::string> read_list(const fs::path& file) {
  std::set<std::string> out;
  std::ifstream in(file);
  if (!in) return out;
  for (std::string line; std::getline(in, line);) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (!line.empty()) out.insert(line);
  }
  return out;
}

std::vector<std::string> command_dirs(const fs::path& root) {
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (!entry.is_directory()) continue;
    std::string name = entry.path().filename().string();
    if (name.empty() || name.front() == '_' || name.front() == '.') continue;
    names.push_back(std::move(name));
  }
  std::sort(names.begin(), names.end());
  return names;
}

std::vector<std::string> wav_files(const fs::path& dir) {
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".wav") {
      names.push_back(entry.path().filename().string());
    }
  }
  std::sort(names.begin(), names.end());
  return names;
}

}  // namespace

const char* to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::validation: return "validation";
    case Split::test: return "test";
  }
  return "unknown";
}

std::uint64_t split_hash(std::uint64_t seed, std::string_view path) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint8_t byte) {
    h ^= byte;
    h *= 0x100000001b3ULL;
  };
  for (int s = 0; s < 64; s += 8) mix(static_cast<std::uint8_t>(seed >> s));
  for (char c : path) mix(static_cast<std::uint8_t>(c));
  return h;
}

Dataset scan_dataset(const fs::path& root, const ScanOptions& options) {
  if (!fs::is_directory(root)) throw DataError("dataset root " + root.string() + " is not a directory");
  Dataset ds;
  ds.labels = command_dirs(root);
  if (ds.labels.empty()) throw DataError("no command directories under " + root.string());

  const std::set<std::string> testing = read_list(root / "testing_list.txt");
  const std::set<std::string> validation =
      options.honor_official_lists ? read_list(root / "validation_list.txt") : std::set<std::string>{};

  std::vector<ClipRecord> dev;
  for (Index label = 0; label < ds.labels.size(); ++label) {
    for (const std::string& file : wav_files(root / ds.labels[label])) {
      ClipRecord r;
      r.label = label;
      r.source_path = ds.labels[label] + "/" + file;
      if (testing.count(r.source_path)) {
        r.split = Split::test;
        ds.records.push_back(std::move(r));
      } else if (options.honor_official_lists) {
        r.split = validation.count(r.source_path) ? Split::validation : Split::train;
        ds.records.push_back(std::move(r));
      } else {
        dev.push_back(std::move(r));
      }
    }
  }

  if (!dev.empty()) {
    std::vector<Index> order(dev.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](Index a, Index b) {
      const auto ha = split_hash(options.seed, dev[a].source_path);
      const auto hb = split_hash(options.seed, dev[b].source_path);
      return ha != hb ? ha < hb : dev[a].source_path < dev[b].source_path;
    });
    const auto n_val = static_cast<Index>(std::llround(options.validation_fraction * static_cast<double>(dev.size())));
    for (Index k = 0; k < order.size(); ++k) {
      dev[order[k]].split = k < n_val ? Split::validation : Split::train;
    }
    for (ClipRecord& r : dev) ds.records.push_back(std::move(r));
  }

  if (testing.empty() && !options.test_root.empty()) {
    if (!fs::is_directory(options.test_root)) {
      throw DataError("test root " + options.test_root.string() + " is not a directory");
    }
    for (Index label = 0; label < ds.labels.size(); ++label) {
      const fs::path dir = options.test_root / ds.labels[label];
      if (!fs::is_directory(dir)) continue;
      for (const std::string& file : wav_files(dir)) {
        ClipRecord r;
        r.label = label;
        r.split = Split::test;
        r.source_path = fs::absolute(dir / file).string();
        ds.records.push_back(std::move(r));
      }
    }
  }

  std::sort(ds.records.begin(), ds.records.end(),
            [](const ClipRecord& a, const ClipRecord& b) { return a.source_path < b.source_path; });
  return ds;
}

void load_samples(ClipRecord& record, const fs::path& root) {
  const fs::path p(record.source_path);
  WavData wav = load_wav(p.is_absolute() ? p : root / p);
  if (wav.sample_rate == kSourceSampleRate) {
    wav.samples = downsample_2x(wav.samples, wav.sample_rate);
    wav.sample_rate = kTargetSampleRate;
  } else if (wav.sample_rate != kTargetSampleRate) {
    throw RateError(record.source_path + ": unsupported sample rate " + std::to_string(wav.sample_rate));
  }
  if (wav.samples.size() > kMaxClipSamples) wav.samples.resize(kMaxClipSamples);
  record.samples = std::move(wav.samples);
  record.sample_rate = wav.sample_rate;
}

void load_all(std::vector<ClipRecord>& records, const fs::path& root) {
  for (ClipRecord& r : records) load_samples(r, root);
}

std::vector<ClipRecord> select_split(std::span<const ClipRecord> records, Split split) {
  std::vector<ClipRecord> out;
  for (const ClipRecord& r : records) {
    if (r.split == split) out.push_back(r);
  }
  return out;
}

std::vector<Batch> make_batches(std::span<const ClipRecord> records, Index batch_size,
                                std::uint64_t seed, bool shuffle, Index min_length) {
  if (records.empty()) throw DataError("make_batches: no records");
  if (batch_size == 0) throw ConfigError("batch size must be >= 1");
  std::vector<Index> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  if (shuffle) {
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
  }

  std::vector<Batch> batches;
  for (Index start = 0; start < order.size(); start += batch_size) {
    const Index stop = std::min(order.size(), start + batch_size);
    Batch batch;
    Index longest = min_length;
    for (Index k = start; k < stop; ++k) longest = std::max(longest, records[order[k]].samples.size());
    if (longest == 0) throw DataError("make_batches: clips have no samples loaded");
    batch.inputs = DenseTensor(Shape{stop - start, 1, longest});
    for (Index k = start; k < stop; ++k) {
      const ClipRecord& r = records[order[k]];
      std::copy(r.samples.begin(), r.samples.end(),
                batch.inputs.data().begin() + static_cast<std::ptrdiff_t>((k - start) * longest));
      batch.labels.push_back(r.label);
      batch.lengths.push_back(r.samples.size());
    }
    batches.push_back(std::move(batch));
  }
  return batches;
}

std::vector<ClipRecord> synth_dataset(Index num_classes, Index clips_per_class, Index clip_len,
                                      std::uint64_t seed, double noise_sigma) {
  if (num_classes == 0 || clips_per_class == 0 || clip_len == 0) {
    throw ConfigError("synth_dataset: all sizes must be >= 1");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> amp_dist(0.5, 0.9);
  std::normal_distribution<double> noise(0.0, 1.0);

  std::vector<ClipRecord> out;
  out.reserve(num_classes * clips_per_class);
  for (Index c = 0; c < num_classes; ++c) {
    const double freq = 200.0 + 40.0 * static_cast<double>(c);
    for (Index i = 0; i < clips_per_class; ++i) {
      const double phase = phase_dist(rng);
      const double amp = amp_dist(rng);
      ClipRecord r;
      r.label = c;
      r.sample_rate = kTargetSampleRate;
      r.split = Split::train;
      r.source_path = "synthetic/" + std::to_string(c) + "/" + std::to_string(i);
      r.samples.resize(clip_len);
      for (Index n = 0; n < clip_len; ++n) {
        const double t = static_cast<double>(n) / kTargetSampleRate;
        const double v = amp * std::sin(2.0 * std::numbers::pi * freq * t + phase) + noise_sigma * noise(rng);
        r.samples[n] = std::clamp(v, -1.0, 1.0);
      }
      out.push_back(std::move(r));
    }
  }
  return out;
}

}  // namespace ttk
