#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ttk/tensor.hpp"

namespace ttk {

constexpr int kTargetSampleRate = 8000;
constexpr int kSourceSampleRate = 16000;
constexpr Index kMaxClipSamples = 8000;

enum class Split { train, validation, test };
const char* to_string(Split split);

struct ClipRecord {
  std::vector<double> samples;  // in [-1, 1]; empty until loaded
  int sample_rate = 0;
  Index label = 0;
  Split split = Split::train;
  std::string source_path;  // relative to the dataset root
};

struct Dataset {
  std::vector<std::string> labels;  // sorted command names
  std::vector<ClipRecord> records;  // sorted by source_path
};

struct ScanOptions {
  std::uint64_t seed = 0;
  double validation_fraction = 0.1;
  // Use validation_list.txt instead of the seeded split.
  bool honor_official_lists = false;
  // Clips under this directory (same <command>/<file>.wav layout) become the
  // test split when no testing_list.txt exists.
  std::filesystem::path test_root;
};

// Scans <root>/<command>/<file>.wav. Directories starting with '_' (the
// background-noise folder) are skipped. Throws DataError when the root is
// missing or holds no commands.
Dataset scan_dataset(const std::filesystem::path& root, const ScanOptions& options = {});

// 64-bit FNV-1a over the seed bytes and the path; drives the dev split.
std::uint64_t split_hash(std::uint64_t seed, std::string_view path);

struct WavData {
  std::vector<double> samples;
  int sample_rate = 0;
};

// 16-bit PCM mono RIFF/WAVE only; samples are divided by 32768. Throws
// FormatError for anything else.
WavData parse_wav(std::span<const std::uint8_t> bytes);
WavData load_wav(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_wav(std::span<const double> samples, int sample_rate);
void write_wav(const std::filesystem::path& path, std::span<const double> samples, int sample_rate);

// 31-tap Hamming-windowed sinc, cutoff at the 8 kHz output's Nyquist,
// normalized to unit DC gain.
std::vector<double> anti_alias_taps();

// Low-pass then keep every other sample; output length ceil(n / 2).
// Throws RateError unless rate == 16000.
std::vector<double> downsample_2x(std::span<const double> samples, int rate);

// Decodes the clip from root, resamples to 8 kHz when needed and truncates
// to 8000 samples.
void load_samples(ClipRecord& record, const std::filesystem::path& root);
void load_all(std::vector<ClipRecord>& records, const std::filesystem::path& root);

std::vector<ClipRecord> select_split(std::span<const ClipRecord> records, Split split);

struct Batch {
  DenseTensor inputs;         // batch × 1 × T
  std::vector<Index> labels;
  std::vector<Index> lengths;  // before padding
};

// Seeded shuffle, then zero-pad each batch to its longest clip (or to
// min_length when that is larger). The final partial batch is kept.
std::vector<Batch> make_batches(std::span<const ClipRecord> records, Index batch_size,
                                std::uint64_t seed, bool shuffle = true, Index min_length = 0);

// Class c is a sinusoid at 200 + 40c Hz (8 kHz rate, random phase and
// amplitude in [0.5, 0.9]) plus Gaussian noise.
std::vector<ClipRecord> synth_dataset(Index num_classes, Index clips_per_class, Index clip_len,
                                      std::uint64_t seed, double noise_sigma = 0.05);

}  // namespace ttk
