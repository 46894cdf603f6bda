#include "qent/io.hpp"

#include <bit>
#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <sstream>

#include <unistd.h>

namespace qent::io {

using nlohmann::json;

namespace {

[[noreturn]] void io_fail(const std::string& what) { throw Error(ErrorCode::Io, what); }
[[noreturn]] void format_fail(const fs::path& path, const std::string& what) {
  throw Error(ErrorCode::Format, path.string() + ": " + what);
}

}  // namespace

void put_u32(std::vector<unsigned char>& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<unsigned char>(v >> (8 * i)));
}
void put_u64(std::vector<unsigned char>& buf, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<unsigned char>(v >> (8 * i)));
}
void put_f64(std::vector<unsigned char>& buf, double v) { put_u64(buf, std::bit_cast<std::uint64_t>(v)); }
void put_f32(std::vector<unsigned char>& buf, float v) { put_u32(buf, std::bit_cast<std::uint32_t>(v)); }

std::uint32_t get_u32(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}
std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}
double get_f64(const unsigned char* p) { return std::bit_cast<double>(get_u64(p)); }
float get_f32(const unsigned char* p) { return std::bit_cast<float>(get_u32(p)); }

AtomicFile::AtomicFile(fs::path path) : path_(std::move(path)) {
  tmp_ = path_;
  tmp_ += ".tmp." + std::to_string(::getpid());
  out_.open(tmp_, std::ios::binary | std::ios::trunc);
  if (!out_) io_fail("cannot open " + tmp_.string() + " for writing");
}

AtomicFile::~AtomicFile() {
  if (!committed_) {
    out_.close();
    std::error_code ec;
    fs::remove(tmp_, ec);
  }
}

void AtomicFile::commit() {
  out_.flush();
  if (!out_) io_fail("write to " + tmp_.string() + " failed");
  out_.close();
  std::error_code ec;
  fs::rename(tmp_, path_, ec);
  if (ec) io_fail("cannot rename " + tmp_.string() + " to " + path_.string() + ": " + ec.message());
  committed_ = true;
}

// ---------------------------------------------------------------- states

namespace {

std::vector<unsigned char> encode_header(const StateFileHeader& h) {
  std::vector<unsigned char> buf(kStateMagic, kStateMagic + 4);
  put_u32(buf, h.version);
  put_u32(buf, h.dim_a);
  put_u32(buf, h.dim_b);
  put_u64(buf, h.count);
  put_u32(buf, static_cast<std::uint32_t>(h.family));
  put_u64(buf, h.seed);
  return buf;
}

}  // namespace

void write_states(const fs::path& path, const StateFileHeader& header, const std::vector<DensityMatrix>& states) {
  if (header.count != states.size()) throw Error(ErrorCode::InvalidConfig, "header count differs from state count");
  const std::size_t n = static_cast<std::size_t>(header.dim_a) * header.dim_b;
  AtomicFile file(path);
  auto head = encode_header(header);
  file.stream().write(reinterpret_cast<const char*>(head.data()), static_cast<std::streamsize>(head.size()));
  std::vector<unsigned char> buf;
  buf.reserve(n * n * 16);
  for (const auto& rho : states) {
    if (rho.dim_a() != header.dim_a || rho.dim_b() != header.dim_b)
      throw Error(ErrorCode::DimensionMismatch, "state dimensions differ from the file header");
    buf.clear();
    for (const auto& z : rho.mat().data()) {
      put_f64(buf, z.real());
      put_f64(buf, z.imag());
    }
    file.stream().write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  }
  file.commit();
}

void write_state_set(const fs::path& path, const LabeledStateSet& set) {
  StateFileHeader h;
  h.dim_a = static_cast<std::uint32_t>(set.states.empty() ? set.d : set.states.front().dim_a());
  h.dim_b = static_cast<std::uint32_t>(set.states.empty() ? set.d : set.states.front().dim_b());
  h.count = set.states.size();
  h.family = set.label;
  h.seed = set.seed;
  write_states(path, h, set.states);
}

StateReader::StateReader(const fs::path& path) : path_(path), in_(path, std::ios::binary) {
  if (!in_) io_fail("cannot open " + path.string());
  unsigned char head[kStateHeaderBytes];
  if (!in_.read(reinterpret_cast<char*>(head), kStateHeaderBytes)) format_fail(path, "truncated header");
  if (std::memcmp(head, kStateMagic, 4) != 0) format_fail(path, "not a QSD1 state file");
  header_.version = get_u32(head + 4);
  if (header_.version != kStateVersion) format_fail(path, "unsupported version " + std::to_string(header_.version));
  header_.dim_a = get_u32(head + 8);
  header_.dim_b = get_u32(head + 12);
  header_.count = get_u64(head + 16);
  const std::uint32_t fam = get_u32(head + 24);
  if (fam > static_cast<std::uint32_t>(StateFamily::Named)) format_fail(path, "unknown family tag");
  header_.family = static_cast<StateFamily>(fam);
  header_.seed = get_u64(head + 28);
  if (header_.dim_a == 0 || header_.dim_b == 0) format_fail(path, "zero dimension");

  const std::uint64_t n = static_cast<std::uint64_t>(header_.dim_a) * header_.dim_b;
  std::error_code ec;
  const auto size = fs::file_size(path, ec);
  if (ec || size != kStateHeaderBytes + header_.count * n * n * 16)
    format_fail(path, "payload length does not match header count");
  buffer_.resize(n * n * 16);
}

bool StateReader::next(std::optional<DensityMatrix>& out) {
  if (read_ == header_.count) return false;
  if (!in_.read(reinterpret_cast<char*>(buffer_.data()), static_cast<std::streamsize>(buffer_.size())))
    format_fail(path_, "truncated payload");
  const std::size_t n = static_cast<std::size_t>(header_.dim_a) * header_.dim_b;
  ComplexMatrix m(n, n);
  auto data = m.data();
  for (std::size_t i = 0; i < n * n; ++i) data[i] = cplx(get_f64(&buffer_[16 * i]), get_f64(&buffer_[16 * i + 8]));
  try {
    out.emplace(header_.dim_a, header_.dim_b, std::move(m));
  } catch (const Error& e) {
    format_fail(path_, "state " + std::to_string(read_) + " is not a density matrix: " + e.what());
  }
  ++read_;
  return true;
}

LabeledStateSet read_state_set(const fs::path& path) {
  StateReader reader(path);
  LabeledStateSet set;
  set.label = reader.header().family;
  set.d = reader.header().dim_a;
  set.seed = reader.header().seed;
  set.states.reserve(reader.header().count);
  std::optional<DensityMatrix> rho;
  while (reader.next(rho)) set.states.push_back(std::move(*rho));
  return set;
}

// ------------------------------------------------------------ checkpoints

json spec_to_json(const ArchitectureSpec& spec) {
  auto layer = [](const LayerConfig& l) {
    return json{{"kind", layer_kind_name(l.kind)},
                {"in_channels", l.in_channels},
                {"out_channels", l.out_channels},
                {"kernel", l.kernel},
                {"stride", l.stride},
                {"padding", l.padding},
                {"output_padding", l.output_padding},
                {"negative_slope", l.negative_slope},
                {"dropout_rate", l.dropout_rate},
                {"epsilon", l.epsilon},
                {"momentum", l.momentum}};
  };
  json enc = json::array(), dec = json::array();
  for (const auto& l : spec.encoder_layers) enc.push_back(layer(l));
  for (const auto& l : spec.decoder_layers) dec.push_back(layer(l));
  return json{{"d", spec.d},
              {"encoder", enc},
              {"latent_batchnorm", layer(spec.latent_batchnorm)},
              {"decoder", dec},
              {"final_crop", spec.final_crop}};
}

ArchitectureSpec spec_from_json(const json& j) {
  auto layer = [](const json& l) {
    LayerConfig c;
    const auto kind = parse_layer_kind(l.at("kind").get<std::string>());
    if (!kind) throw Error(ErrorCode::Format, "unknown layer kind " + l.at("kind").get<std::string>());
    c.kind = *kind;
    c.in_channels = l.at("in_channels");
    c.out_channels = l.at("out_channels");
    c.kernel = l.at("kernel");
    c.stride = l.at("stride");
    c.padding = l.at("padding");
    c.output_padding = l.at("output_padding");
    c.negative_slope = l.at("negative_slope");
    c.dropout_rate = l.at("dropout_rate");
    c.epsilon = l.at("epsilon");
    c.momentum = l.at("momentum");
    return c;
  };
  ArchitectureSpec s;
  s.d = j.at("d");
  for (const auto& l : j.at("encoder")) s.encoder_layers.push_back(layer(l));
  s.latent_batchnorm = layer(j.at("latent_batchnorm"));
  for (const auto& l : j.at("decoder")) s.decoder_layers.push_back(layer(l));
  s.final_crop = j.at("final_crop");
  check_channel_chain(s);
  return s;
}

json threshold_to_json(const ThresholdRecord& t) {
  return json{{"d", t.d},
              {"task", task_name(t.task)},
              {"epsilon", t.epsilon},
              {"n_calibration", t.n_calibration},
              {"m_max", t.m_max},
              {"calibration_seed", t.calibration_seed},
              {"epoch", t.epoch}};
}

ThresholdRecord threshold_from_json(const json& j) {
  ThresholdRecord t;
  t.d = j.at("d");
  const auto task = parse_task(j.at("task").get<std::string>());
  if (!task) throw Error(ErrorCode::Format, "unknown task in threshold record");
  t.task = *task;
  t.epsilon = j.at("epsilon");
  t.n_calibration = j.at("n_calibration");
  t.m_max = j.at("m_max");
  t.calibration_seed = j.at("calibration_seed");
  t.epoch = j.at("epoch");
  return t;
}

json train_config_to_json(const TrainConfig& cfg) {
  return json{{"d", cfg.d},
              {"task", task_name(cfg.task)},
              {"n_samples", cfg.n_samples},
              {"m_max", cfg.m_max},
              {"epochs", cfg.epochs},
              {"batch_size", cfg.batch_size},
              {"learning_rate", cfg.learning_rate},
              {"threshold_set_size", cfg.threshold_set_size},
              {"seed", cfg.seed},
              {"regularization", cfg.regularization}};
}

DensityMatrix reference_state(std::size_t d) {
  Rng rng(0x51ed5eedULL + d);
  return hs_random_state(d, d, rng);
}

namespace {

void append_tensor(std::vector<unsigned char>& blob, std::span<const float> v) {
  for (float x : v) put_f32(blob, x);
}

}  // namespace

void save_checkpoint(const fs::path& path, const CaeModel<float>& model, const ThresholdRecord& threshold,
                     const json& config, const std::vector<EpochStats>& history) {
  if (!model.initialized()) throw Error(ErrorCode::UninitializedParameters, "refusing to save an uninitialized model");
  std::vector<unsigned char> blob;
  json index = json::array();
  for (const auto& nt : model.named_tensors()) {
    index.push_back(json{{"name", nt.name},
                         {"shape", nt.tensor.shape()},
                         {"dtype", "f32"},
                         {"offset", blob.size()},
                         {"count", nt.tensor.numel()}});
    append_tensor(blob, nt.tensor.values());
  }
  CaeModel<float> copy = model.cast<float>();
  const auto ref_in = encode_state<float>(reference_state(model.spec().d));
  nn::Tensor<float> ref_out;
  {
    nn::NoGradGuard guard;
    ref_out = copy.forward(ref_in, false);
  }
  const std::size_t in_offset = blob.size();
  append_tensor(blob, ref_in.values());
  const std::size_t out_offset = blob.size();
  append_tensor(blob, ref_out.values());

  json hist = json::array();
  for (const auto& h : history) hist.push_back(json{{"epoch", h.epoch}, {"mean_loss", h.mean_loss}});

  json header{{"format", "qent-checkpoint"},
              {"version", kCheckpointVersion},
              {"spec", spec_to_json(model.spec())},
              {"init_recipe", kInitRecipe},
              {"config", config},
              {"threshold", threshold_to_json(threshold)},
              {"history", hist},
              {"tensors", index},
              {"reference",
               {{"shape", ref_in.shape()}, {"input_offset", in_offset}, {"output_offset", out_offset}}}};
  const std::string text = header.dump();

  std::vector<unsigned char> head(kCheckpointMagic, kCheckpointMagic + 4);
  put_u32(head, kCheckpointVersion);
  put_u64(head, text.size());
  AtomicFile file(path);
  auto& out = file.stream();
  out.write(reinterpret_cast<const char*>(head.data()), static_cast<std::streamsize>(head.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.write(reinterpret_cast<const char*>(blob.data()), static_cast<std::streamsize>(blob.size()));
  file.commit();
}

namespace {

Checkpoint parse_checkpoint(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) io_fail("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0)
    format_fail(path, "not a QCK1 checkpoint");
  if (get_u32(bytes.data() + 4) != kCheckpointVersion) format_fail(path, "unsupported checkpoint version");
  const std::uint64_t len = get_u64(bytes.data() + 8);
  if (16 + len > bytes.size()) format_fail(path, "truncated header");
  json header;
  try {
    header = json::parse(bytes.begin() + 16, bytes.begin() + 16 + static_cast<std::ptrdiff_t>(len));
  } catch (const json::exception& e) {
    format_fail(path, std::string("bad header: ") + e.what());
  }
  const unsigned char* blob = bytes.data() + 16 + len;
  const std::size_t blob_size = bytes.size() - 16 - len;

  auto read_floats = [&](std::size_t offset, std::size_t count) {
    if (offset + count * 4 > blob_size) format_fail(path, "tensor data out of range");
    std::vector<float> v(count);
    for (std::size_t i = 0; i < count; ++i) v[i] = get_f32(blob + offset + 4 * i);
    return v;
  };

  Checkpoint ck{CaeModel<float>(spec_from_json(header.at("spec"))), threshold_from_json(header.at("threshold")),
                header.value("config", json::object()), {}};
  for (const auto& h : header.value("history", json::array()))
    ck.history.push_back({h.at("epoch").get<std::size_t>(), h.at("mean_loss").get<double>()});

  auto& model = ck.model;
  auto slots = model.named_tensors();
  const auto& index = header.at("tensors");
  if (index.size() != slots.size()) format_fail(path, "tensor count does not match the architecture");
  for (std::size_t k = 0; k < slots.size(); ++k) {
    const auto& entry = index[k];
    if (entry.at("name").get<std::string>() != slots[k].name ||
        entry.at("shape").get<nn::Shape>() != slots[k].tensor.shape())
      format_fail(path, "tensor " + slots[k].name + " does not match the architecture");
    auto v = read_floats(entry.at("offset"), entry.at("count"));
    std::copy(v.begin(), v.end(), slots[k].tensor.values().begin());
  }
  // Running statistics come back as copies; write them into the layers.
  const std::size_t n_enc = model.spec().encoder_layers.size();
  auto& layers = model.layers();
  const auto flat = model.spec().all_layers();
  for (std::size_t i = 0; i < flat.size(); ++i) {
    if (flat[i].kind != LayerKind::BatchNorm2D) continue;
    const std::string prefix = i < n_enc    ? "encoder." + std::to_string(i)
                               : i == n_enc ? std::string("latent")
                                            : "decoder." + std::to_string(i - n_enc - 1);
    for (const auto& nt : slots) {
      if (nt.name == prefix + ".running_mean") layers[i].bn.running_mean.assign(nt.tensor.values().begin(), nt.tensor.values().end());
      if (nt.name == prefix + ".running_var") layers[i].bn.running_var.assign(nt.tensor.values().begin(), nt.tensor.values().end());
    }
  }
  model.mark_initialized();

  const auto& ref = header.at("reference");
  const auto shape = ref.at("shape").get<nn::Shape>();
  const std::size_t count = nn::numel(shape);
  const auto input = nn::Tensor<float>::from(shape, read_floats(ref.at("input_offset"), count));
  const auto expected = read_floats(ref.at("output_offset"), count);
  nn::NoGradGuard guard;
  const auto got = model.forward(input, false);
  if (!std::equal(expected.begin(), expected.end(), got.values().begin(), [](float a, float b) {
        return std::bit_cast<std::uint32_t>(a) == std::bit_cast<std::uint32_t>(b);
      }))
    format_fail(path, "reference forward pass does not reproduce the stored output");
  return ck;
}

}  // namespace

Checkpoint load_checkpoint(const fs::path& path) {
  try {
    return parse_checkpoint(path);
  } catch (const json::exception& e) {
    format_fail(path, std::string("bad header: ") + e.what());
  }
}

// ------------------------------------------------------------------- CSV

void write_error_csv(const fs::path& path, const std::vector<SampleRow>& rows) {
  AtomicFile file(path);
  auto& out = file.stream();
  out << kCsvVersionLine << '\n' << kCsvHeader << '\n';
  char num[64];
  for (const auto& r : rows) {
    std::snprintf(num, sizeof num, "%.17g", r.error);
    out << r.index << ',' << family_name(r.family) << ',' << num << ',' << verdict_name(r.label) << '\n';
  }
  file.commit();
}

std::vector<SampleRow> read_error_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) io_fail("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kCsvVersionLine) format_fail(path, "missing version line");
  if (!std::getline(in, line) || line != kCsvHeader) format_fail(path, "unexpected CSV header");
  std::vector<SampleRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string idx, fam, err, label;
    if (!std::getline(ss, idx, ',') || !std::getline(ss, fam, ',') || !std::getline(ss, err, ',') ||
        !std::getline(ss, label))
      format_fail(path, "malformed row: " + line);
    SampleRow r;
    const auto family = parse_family(fam);
    if (!family) format_fail(path, "unknown family " + fam);
    r.family = *family;
    try {
      r.index = std::stoull(idx);
      r.error = std::stod(err);
    } catch (const std::exception&) {
      format_fail(path, "malformed row: " + line);
    }
    if (label == verdict_name(Verdict::InClass))
      r.label = Verdict::InClass;
    else if (label == verdict_name(Verdict::OutOfClass))
      r.label = Verdict::OutOfClass;
    else
      format_fail(path, "unknown label " + label);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace qent::io
