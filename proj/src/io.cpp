#include "flare/io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "flare/error.hpp"

namespace flare::io {

namespace {

static_assert(std::endian::native == std::endian::little,
              "binary formats are little-endian; add byte swapping for this target");

constexpr std::array<char, 4> kPointMagic{'F', 'L', 'D', '1'};
constexpr std::array<char, 4> kWeightMagic{'F', 'L', 'W', '1'};

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const char*>(p);
    buf_.insert(buf_.end(), c, c + n);
  }
  void u32(std::uint32_t v) { bytes(&v, sizeof v); }
  void f64(double v) { bytes(&v, sizeof v); }
  const std::string& str() const { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  Reader(std::string data, std::string what) : data_(std::move(data)), what_(std::move(what)) {}
  void bytes(void* p, std::size_t n) {
    if (n > data_.size() - at_)
      throw Error(ErrorCode::FormatError, what_ + ": truncated at byte " + std::to_string(at_));
    std::memcpy(p, data_.data() + at_, n);
    at_ += n;
  }
  std::uint32_t u32() {
    std::uint32_t v;
    bytes(&v, sizeof v);
    return v;
  }
  double f64() {
    double v;
    bytes(&v, sizeof v);
    return v;
  }
  std::size_t remaining() const { return data_.size() - at_; }

 private:
  std::string data_;
  std::string what_;
  std::size_t at_ = 0;
};

std::string read_binary(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::FormatError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json parse_json(const fs::path& path) {
  try {
    return nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::FormatError, path.string() + ": " + e.what());
  }
}

template <class T>
T get_field(const nlohmann::json& j, const char* key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::FormatError, where + ": field '" + key + "': " + e.what());
  }
}

std::string sample_file_name(std::uint32_t id) {
  char name[32];
  std::snprintf(name, sizeof name, "sample_%06u.fld", id);
  return name;
}

}  // namespace

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::FormatError, "cannot write " + path.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw Error(ErrorCode::FormatError, "write failed for " + path.string());
  }
  fs::rename(tmp, path);
}

std::string read_text(const fs::path& path) { return read_binary(path); }

nlohmann::json to_json(const Eigen::VectorXd& v) {
  return nlohmann::json(std::vector<double>(v.data(), v.data() + v.size()));
}

nlohmann::json to_json(const Eigen::MatrixXd& m) {
  auto rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(to_json(Eigen::VectorXd(m.row(r).transpose())));
  return rows;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
  try {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("expected numeric array: ") + e.what());
  }
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw Error(ErrorCode::FormatError, "expected array of rows");
  if (j.empty()) return {};
  const auto cols = vector_from_json(j.front()).size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), cols);
  for (std::size_t r = 0; r < j.size(); ++r) {
    const Eigen::VectorXd row = vector_from_json(j[r]);
    if (row.size() != cols) throw Error(ErrorCode::FormatError, "ragged matrix rows");
    m.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return m;
}

void write_point_file(const fs::path& path, const Eigen::MatrixXd& coords,
                      const Eigen::MatrixXd& targets) {
  if (coords.cols() != 3 || targets.cols() != 3 || coords.rows() != targets.rows())
    throw Error(ErrorCode::ShapeMismatch, "point file needs matching n x 3 coords and targets");
  Writer w;
  w.bytes(kPointMagic.data(), kPointMagic.size());
  w.u32(static_cast<std::uint32_t>(coords.rows()));
  for (Eigen::Index i = 0; i < coords.rows(); ++i) {
    for (int c = 0; c < 3; ++c) w.f64(coords(i, c));
    for (int c = 0; c < 3; ++c) w.f64(targets(i, c));
  }
  write_text(path, w.str());
}

void read_point_file(const fs::path& path, Eigen::MatrixXd& coords, Eigen::MatrixXd& targets) {
  Reader r(read_binary(path), path.string());
  std::array<char, 4> magic{};
  r.bytes(magic.data(), magic.size());
  if (magic != kPointMagic) throw Error(ErrorCode::FormatError, path.string() + ": bad magic");
  const std::uint32_t n = r.u32();
  if (r.remaining() != static_cast<std::size_t>(n) * 6 * sizeof(double))
    throw Error(ErrorCode::FormatError, path.string() + ": payload size does not match point count");
  Eigen::MatrixXd c(n, 3), t(n, 3);
  for (std::uint32_t i = 0; i < n; ++i) {
    for (int k = 0; k < 3; ++k) c(i, k) = r.f64();
    for (int k = 0; k < 3; ++k) t(i, k) = r.f64();
  }
  coords = std::move(c);
  targets = std::move(t);
}

void save_dataset(const fs::path& dir, const data::Dataset& dataset) {
  fs::create_directories(dir);
  nlohmann::json manifest;
  manifest["format"] = "flare-dataset";
  manifest["version"] = 1;
  manifest["family"] = dataset.family;
  manifest["parameter_names"] = std::vector<std::string>(kParamNames.begin(), kParamNames.end());
  manifest["bounds"] = {{"lo", to_json(dataset.bounds.lo)}, {"hi", to_json(dataset.bounds.hi)}};
  auto samples = nlohmann::json::array();
  for (const auto& s : dataset.samples) {
    const std::string file = sample_file_name(s.id);
    write_point_file(dir / file, s.coords, s.targets);
    nlohmann::json entry{{"id", s.id}, {"params", to_json(s.params)}, {"file", file},
                         {"corner", s.corner}};
    entry["feasible"] = s.feasible ? nlohmann::json(*s.feasible) : nlohmann::json(nullptr);
    samples.push_back(std::move(entry));
  }
  manifest["samples"] = std::move(samples);
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

data::Dataset load_dataset(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  const nlohmann::json manifest = parse_json(manifest_path);
  const std::string where = manifest_path.string();
  if (get_field<std::string>(manifest, "format", where) != "flare-dataset")
    throw Error(ErrorCode::FormatError, where + ": not a dataset manifest");
  if (get_field<int>(manifest, "version", where) != 1)
    throw Error(ErrorCode::VersionMismatch, where + ": unsupported dataset version");
  data::Dataset ds;
  try {
    ds.family = manifest.value("family", "");
    ds.bounds.lo = vector_from_json(manifest.at("bounds").at("lo"));
    ds.bounds.hi = vector_from_json(manifest.at("bounds").at("hi"));
    ds.bounds.validate();
    for (const auto& entry : manifest.at("samples")) {
      data::FieldSample s;
      s.id = get_field<std::uint32_t>(entry, "id", where);
      s.params = vector_from_json(entry.at("params"));
      if (s.params.size() != ds.bounds.dim())
        throw Error(ErrorCode::FormatError, where + ": parameter length mismatch");
      s.corner = entry.value("corner", false);
      if (entry.contains("feasible") && !entry.at("feasible").is_null())
        s.feasible = entry.at("feasible").get<bool>();
      read_point_file(dir / get_field<std::string>(entry, "file", where), s.coords, s.targets);
      ds.samples.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::FormatError, where + ": " + e.what());
  }
  return ds;
}

void save_split(const fs::path& path, const data::Split& split) {
  nlohmann::json j{{"format", "flare-split"},  {"version", 1},
                   {"kind", to_string(split.kind)}, {"seed", split.seed},
                   {"size", split.size},         {"train_ids", split.train_ids},
                   {"test_ids", split.test_ids}};
  write_text(path, j.dump(2) + "\n");
}

data::Split load_split(const fs::path& path) {
  const nlohmann::json j = parse_json(path);
  const std::string where = path.string();
  if (get_field<std::string>(j, "format", where) != "flare-split")
    throw Error(ErrorCode::FormatError, where + ": not a split file");
  data::Split split;
  split.kind = data::split_kind_from_string(get_field<std::string>(j, "kind", where));
  split.seed = get_field<std::uint64_t>(j, "seed", where);
  split.size = get_field<std::size_t>(j, "size", where);
  split.train_ids = get_field<std::vector<std::uint32_t>>(j, "train_ids", where);
  split.test_ids = get_field<std::vector<std::uint32_t>>(j, "test_ids", where);
  return split;
}

nn::Architecture Checkpoint::architecture() const {
  if (widths.size() < 3 || widths.front() != 3 + 6 * octaves || widths.back() != 3)
    throw Error(ErrorCode::FormatError, "checkpoint widths do not describe a field network");
  nn::Architecture arch;
  arch.octaves = static_cast<int>(octaves);
  arch.hidden.assign(widths.begin() + 1, widths.end() - 1);
  return arch;
}

Checkpoint Checkpoint::for_architecture(const nn::Architecture& arch, Eigen::MatrixXd columns) {
  Checkpoint c;
  c.octaves = static_cast<std::uint32_t>(arch.octaves);
  for (int w : arch.widths()) c.widths.push_back(static_cast<std::uint32_t>(w));
  c.columns = std::move(columns);
  return c;
}

fs::path sidecar_path(const fs::path& checkpoint) { return checkpoint.string() + ".json"; }

void save_checkpoint(const fs::path& path, const Checkpoint& ckpt) {
  Writer w;
  w.bytes(kWeightMagic.data(), kWeightMagic.size());
  w.u32(kCheckpointVersion);
  w.u32(ckpt.octaves);
  w.u32(static_cast<std::uint32_t>(ckpt.widths.size()));
  for (auto width : ckpt.widths) w.u32(width);
  w.u32(static_cast<std::uint32_t>(ckpt.columns.cols()));
  for (Eigen::Index c = 0; c < ckpt.columns.cols(); ++c)
    for (Eigen::Index r = 0; r < ckpt.columns.rows(); ++r) w.f64(ckpt.columns(r, c));
  write_text(path, w.str());
  nlohmann::json meta = ckpt.meta;
  meta["column_length"] = ckpt.columns.rows();
  write_text(sidecar_path(path), meta.dump(2) + "\n");
}

Checkpoint load_checkpoint(const fs::path& path) {
  Reader r(read_binary(path), path.string());
  std::array<char, 4> magic{};
  r.bytes(magic.data(), magic.size());
  if (magic != kWeightMagic) throw Error(ErrorCode::FormatError, path.string() + ": bad magic");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion)
    throw Error(ErrorCode::VersionMismatch,
                path.string() + ": checkpoint version " + std::to_string(version));
  Checkpoint c;
  c.octaves = r.u32();
  const std::uint32_t n_widths = r.u32();
  if (n_widths > r.remaining() / sizeof(std::uint32_t))
    throw Error(ErrorCode::FormatError, path.string() + ": implausible width count");
  for (std::uint32_t k = 0; k < n_widths; ++k) c.widths.push_back(r.u32());
  const std::uint32_t n_cols = r.u32();
  // Column length is implied by the payload size.
  const std::size_t payload = r.remaining();
  if (n_cols == 0 ? payload != 0 : payload % (static_cast<std::size_t>(n_cols) * sizeof(double)) != 0)
    throw Error(ErrorCode::FormatError, path.string() + ": payload size does not match header");
  const std::size_t n_rows = n_cols == 0 ? 0 : payload / (n_cols * sizeof(double));
  c.columns.resize(static_cast<Eigen::Index>(n_rows), n_cols);
  for (std::uint32_t col = 0; col < n_cols; ++col)
    for (std::size_t row = 0; row < n_rows; ++row)
      c.columns(static_cast<Eigen::Index>(row), col) = r.f64();
  const fs::path side = sidecar_path(path);
  if (fs::exists(side)) {
    c.meta = parse_json(side);
    if (!c.meta.is_object()) throw Error(ErrorCode::FormatError, side.string() + ": expected an object");
    const auto len = c.meta.value("column_length", nlohmann::json(n_rows));
    if (!len.is_number_unsigned() || len.get<std::size_t>() != n_rows)
      throw Error(ErrorCode::FormatError, path.string() + ": column length disagrees with sidecar");
  }
  return c;
}

}  // namespace flare::io
