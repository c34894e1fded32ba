#include "biotrom/binary_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

namespace biotrom {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

namespace {

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path) : path_(path), tmp_(path.string() + ".tmp") {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    out_.open(tmp_, std::ios::binary | std::ios::trunc);
    if (!out_) throw std::runtime_error("cannot write " + tmp_.string());
  }
  void magic(const char (&m)[9]) { out_.write(m, 8); }
  template <class T>
  void put(T v) {
    out_.write(reinterpret_cast<const char*>(&v), sizeof v);
  }
  void doubles(const double* p, std::size_t n) { out_.write(reinterpret_cast<const char*>(p), std::streamsize(n * 8)); }
  void norm(const Normalizer& n) {
    put<std::uint64_t>(n.lo.size());
    for (Eigen::Index j = 0; j < n.lo.size(); ++j) {
      put(n.lo[j]);
      put(n.hi[j]);
      put<std::uint8_t>(n.log_scale[j] ? 1 : 0);
    }
  }
  /// Write to a temporary then rename, so interrupted runs never leave a truncated file.
  void commit() {
    out_.close();
    if (!out_) throw std::runtime_error("write failed for " + tmp_.string());
    std::filesystem::rename(tmp_, path_);
  }

 private:
  std::filesystem::path path_, tmp_;
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw std::runtime_error("cannot open " + path.string());
  }
  void magic(const char (&m)[9]) {
    char buf[8];
    in_.read(buf, 8);
    if (!in_ || std::memcmp(buf, m, 8) != 0) {
      throw std::runtime_error(path_.string() + ": not a " + std::string(m, 8) + " file");
    }
  }
  template <class T>
  T get() {
    T v;
    in_.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in_) throw std::runtime_error(path_.string() + ": truncated file");
    return v;
  }
  void doubles(double* p, std::size_t n) {
    in_.read(reinterpret_cast<char*>(p), std::streamsize(n * 8));
    if (!in_) throw std::runtime_error(path_.string() + ": truncated file");
  }
  std::uint64_t count(std::uint64_t limit = (1ULL << 34)) {
    const auto n = get<std::uint64_t>();
    if (n > limit) throw std::runtime_error(path_.string() + ": implausible size field");
    return n;
  }
  Normalizer norm() {
    Normalizer n;
    const auto w = count(1 << 20);
    n.lo.resize(w);
    n.hi.resize(w);
    n.log_scale.resize(w);
    for (std::uint64_t j = 0; j < w; ++j) {
      n.lo[j] = get<double>();
      n.hi[j] = get<double>();
      n.log_scale[j] = static_cast<char>(get<std::uint8_t>());
    }
    return n;
  }
  FieldId field() {
    const auto f = get<std::uint32_t>();
    if (f > 1) throw std::runtime_error(path_.string() + ": unknown field id");
    return static_cast<FieldId>(f);
  }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
};

constexpr char kSnapMagic[9] = "BRSNAP01";
constexpr char kBasisMagic[9] = "BRBASIS1";
constexpr char kTableMagic[9] = "BRTABLE1";
constexpr char kMlpMagic[9] = "BRMLP001";

SnapshotFile read_snapshot_impl(const std::filesystem::path& path, bool with_data) {
  Reader r(path);
  r.magic(kSnapMagic);
  SnapshotFile s;
  s.field = r.field();
  const auto nh = r.count();
  const auto nt = r.count();
  const auto p = r.count(1024);
  s.mu.resize(p);
  r.doubles(s.mu.data(), p);
  s.times.resize(nt);
  r.doubles(s.times.data(), nt);
  s.hash = r.get<std::uint64_t>();
  if (with_data) {
    s.data.resize(static_cast<Eigen::Index>(nh), static_cast<Eigen::Index>(nt));
    r.doubles(s.data.data(), nh * nt);
  } else {
    s.data.resize(static_cast<Eigen::Index>(nh), 0);
  }
  return s;
}

}  // namespace

void write_snapshot(const std::filesystem::path& path, const SnapshotFile& s) {
  if (s.data.cols() != static_cast<Eigen::Index>(s.times.size())) {
    throw std::invalid_argument("write_snapshot: column count differs from time grid");
  }
  Writer w(path);
  w.magic(kSnapMagic);
  w.put(static_cast<std::uint32_t>(s.field));
  w.put<std::uint64_t>(s.data.rows());
  w.put<std::uint64_t>(s.data.cols());
  w.put<std::uint64_t>(s.mu.size());
  w.doubles(s.mu.data(), s.mu.size());
  w.doubles(s.times.data(), s.times.size());
  w.put(s.hash);
  w.doubles(s.data.data(), s.data.size());
  w.commit();
}

SnapshotFile read_snapshot(const std::filesystem::path& path) { return read_snapshot_impl(path, true); }
SnapshotFile read_snapshot_header(const std::filesystem::path& path) { return read_snapshot_impl(path, false); }

void write_basis(const std::filesystem::path& path, const ReducedBasis& b, std::uint64_t hash) {
  Writer w(path);
  w.magic(kBasisMagic);
  w.put(static_cast<std::uint32_t>(b.field));
  w.put<std::uint64_t>(b.modes.rows());
  w.put<std::uint64_t>(b.modes.cols());
  w.put<std::uint64_t>(b.singular_values.size());
  w.put(static_cast<std::uint32_t>(b.inner_product));
  w.put<std::uint64_t>(b.n_int);
  w.put(hash);
  w.doubles(b.singular_values.data(), b.singular_values.size());
  w.doubles(b.modes.data(), b.modes.size());
  w.commit();
}

ReducedBasis read_basis(const std::filesystem::path& path, std::uint64_t* hash) {
  Reader r(path);
  r.magic(kBasisMagic);
  ReducedBasis b;
  b.field = r.field();
  const auto nh = r.count();
  const auto n = r.count();
  const auto nsv = r.count();
  const auto ip = r.get<std::uint32_t>();
  if (ip > 1) throw std::runtime_error(path.string() + ": unknown inner product id");
  b.inner_product = static_cast<InnerProductKind>(ip);
  b.n_int = static_cast<int>(r.count());
  const auto h = r.get<std::uint64_t>();
  if (hash) *hash = h;
  b.singular_values.resize(static_cast<Eigen::Index>(nsv));
  r.doubles(b.singular_values.data(), nsv);
  b.modes.resize(static_cast<Eigen::Index>(nh), static_cast<Eigen::Index>(n));
  r.doubles(b.modes.data(), nh * n);
  return b;
}

void write_table(const std::filesystem::path& path, const CoefficientTable& t, std::uint64_t hash) {
  Writer w(path);
  w.magic(kTableMagic);
  w.put(static_cast<std::uint32_t>(t.field));
  w.put<std::uint64_t>(t.n);
  w.put<std::uint64_t>(t.m);
  w.put<std::uint64_t>(t.n_steps);
  w.put<std::uint64_t>(t.p);
  w.norm(t.input_norm);
  w.norm(t.output_norm);
  w.put(hash);
  for (int i = 0; i < t.rows(); ++i) {
    for (Eigen::Index j = 0; j < t.inputs.cols(); ++j) w.put(t.inputs(i, j));
    for (Eigen::Index j = 0; j < t.outputs.cols(); ++j) w.put(t.outputs(i, j));
  }
  w.commit();
}

CoefficientTable read_table(const std::filesystem::path& path, std::uint64_t* hash) {
  Reader r(path);
  r.magic(kTableMagic);
  CoefficientTable t;
  t.field = r.field();
  t.n = static_cast<int>(r.count(1 << 20));
  t.m = static_cast<int>(r.count(1 << 24));
  t.n_steps = static_cast<int>(r.count(1 << 24));
  t.p = static_cast<int>(r.count(1024));
  t.input_norm = r.norm();
  t.output_norm = r.norm();
  const auto h = r.get<std::uint64_t>();
  if (hash) *hash = h;
  const Eigen::Index rows = static_cast<Eigen::Index>(t.m) * (t.n_steps + 1);
  t.inputs.resize(rows, 1 + t.p);
  t.outputs.resize(rows, t.n);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < t.inputs.cols(); ++j) t.inputs(i, j) = r.get<double>();
    for (Eigen::Index j = 0; j < t.outputs.cols(); ++j) t.outputs(i, j) = r.get<double>();
  }
  return t;
}

void write_mlp(const std::filesystem::path& path, const MlpFile& m) {
  Writer w(path);
  w.magic(kMlpMagic);
  w.put<std::uint64_t>(m.net.sizes.size());
  for (int s : m.net.sizes) w.put<std::uint64_t>(s);
  w.put(static_cast<std::uint32_t>(m.net.activation));
  w.norm(m.input_norm);
  w.norm(m.output_norm);
  w.put(m.net.seed);
  w.put(m.hash);
  for (int l = 0; l < m.net.num_layers(); ++l) {
    const Matrix& W = m.net.weights[l];
    for (Eigen::Index i = 0; i < W.rows(); ++i)
      for (Eigen::Index j = 0; j < W.cols(); ++j) w.put(W(i, j));
    w.doubles(m.net.biases[l].data(), m.net.biases[l].size());
  }
  w.commit();
}

MlpFile read_mlp(const std::filesystem::path& path) {
  Reader r(path);
  r.magic(kMlpMagic);
  MlpFile m;
  const auto nsizes = r.count(1024);
  if (nsizes < 2) throw std::runtime_error(path.string() + ": network needs at least two layers of sizes");
  for (std::uint64_t i = 0; i < nsizes; ++i) m.net.sizes.push_back(static_cast<int>(r.count(1 << 20)));
  const auto act = r.get<std::uint32_t>();
  if (act > 1) throw std::runtime_error(path.string() + ": unknown activation id");
  m.net.activation = static_cast<Activation>(act);
  m.input_norm = r.norm();
  m.output_norm = r.norm();
  if (m.input_norm.size() != m.net.sizes.front() || m.output_norm.size() != m.net.sizes.back()) {
    throw std::runtime_error(path.string() + ": normalization ranges do not match the layer sizes");
  }
  m.net.seed = r.get<std::uint64_t>();
  m.hash = r.get<std::uint64_t>();
  for (std::size_t l = 0; l + 1 < m.net.sizes.size(); ++l) {
    Matrix W(m.net.sizes[l + 1], m.net.sizes[l]);
    for (Eigen::Index i = 0; i < W.rows(); ++i)
      for (Eigen::Index j = 0; j < W.cols(); ++j) W(i, j) = r.get<double>();
    Vector b(m.net.sizes[l + 1]);
    r.doubles(b.data(), b.size());
    m.net.weights.push_back(std::move(W));
    m.net.biases.push_back(std::move(b));
  }
  return m;
}

}  // namespace biotrom
