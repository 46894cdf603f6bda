#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qent/cae.hpp"
#include "qent/pipeline.hpp"
#include "qent/states.hpp"

namespace qent::io {

namespace fs = std::filesystem;

inline constexpr char kStateMagic[4] = {'Q', 'S', 'D', '1'};
inline constexpr std::uint32_t kStateVersion = 1;
inline constexpr std::size_t kStateHeaderBytes = 36;

struct StateFileHeader {
  std::uint32_t version = kStateVersion;
  std::uint32_t dim_a = 0;
  std::uint32_t dim_b = 0;
  std::uint64_t count = 0;
  StateFamily family = StateFamily::MixSep;
  std::uint64_t seed = 0;
};

/// Writes to a temporary sibling and renames it over `path` on success.
class AtomicFile {
 public:
  explicit AtomicFile(fs::path path);
  ~AtomicFile();
  AtomicFile(const AtomicFile&) = delete;
  AtomicFile& operator=(const AtomicFile&) = delete;

  std::ofstream& stream() { return out_; }
  void commit();

 private:
  fs::path path_;
  fs::path tmp_;
  std::ofstream out_;
  bool committed_ = false;
};

/// Streams states one at a time; payload is row-major interleaved (Re, Im)
/// little-endian doubles.
class StateReader {
 public:
  explicit StateReader(const fs::path& path);
  const StateFileHeader& header() const { return header_; }
  /// False once all header.count states were read.
  bool next(std::optional<DensityMatrix>& out);

 private:
  fs::path path_;
  std::ifstream in_;
  StateFileHeader header_;
  std::uint64_t read_ = 0;
  std::vector<unsigned char> buffer_;
};

void write_states(const fs::path& path, const StateFileHeader& header, const std::vector<DensityMatrix>& states);
void write_state_set(const fs::path& path, const LabeledStateSet& set);
LabeledStateSet read_state_set(const fs::path& path);

/// Little-endian helpers shared by the binary formats.
void put_u32(std::vector<unsigned char>& buf, std::uint32_t v);
void put_u64(std::vector<unsigned char>& buf, std::uint64_t v);
void put_f64(std::vector<unsigned char>& buf, double v);
void put_f32(std::vector<unsigned char>& buf, float v);
std::uint32_t get_u32(const unsigned char* p);
std::uint64_t get_u64(const unsigned char* p);
double get_f64(const unsigned char* p);
float get_f32(const unsigned char* p);

// Checkpoints.
inline constexpr char kCheckpointMagic[4] = {'Q', 'C', 'K', '1'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

nlohmann::json spec_to_json(const ArchitectureSpec& spec);
ArchitectureSpec spec_from_json(const nlohmann::json& j);
nlohmann::json threshold_to_json(const ThresholdRecord& t);
ThresholdRecord threshold_from_json(const nlohmann::json& j);
nlohmann::json train_config_to_json(const TrainConfig& cfg);

struct Checkpoint {
  CaeModel<float> model;
  ThresholdRecord threshold;
  nlohmann::json config;
  std::vector<EpochStats> history;
};

/// Stores the model with a reference input/output pair; load_checkpoint
/// reruns the reference and rejects the file unless the output matches
/// bit for bit.
void save_checkpoint(const fs::path& path, const CaeModel<float>& model, const ThresholdRecord& threshold,
                     const nlohmann::json& config, const std::vector<EpochStats>& history);
Checkpoint load_checkpoint(const fs::path& path);

/// Fixed reference state used by checkpoints of side n = d^2.
DensityMatrix reference_state(std::size_t d);

// Error traces.
inline constexpr std::string_view kCsvVersionLine = "# qent-errors v1";
inline constexpr std::string_view kCsvHeader = "sample_index,family,error,label";

void write_error_csv(const fs::path& path, const std::vector<SampleRow>& rows);
std::vector<SampleRow> read_error_csv(const fs::path& path);

}  // namespace qent::io
