#include "biotrom/rom_runtime.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "biotrom/binary_io.hpp"

namespace biotrom {

using nlohmann::json;

void RomArtifact::validate() const {
  for (const FieldModel* m : {&u, &p}) {
    if (m->basis.size() != m->net.output_size()) {
      throw std::runtime_error("artifact: basis size " + std::to_string(m->basis.size()) +
                               " does not match network output width " + std::to_string(m->net.output_size()));
    }
    if (m->net.input_size() != 1 + static_cast<int>(box.size()) || m->input_norm.size() != m->net.input_size() ||
        m->output_norm.size() != m->net.output_size()) {
      throw std::runtime_error("artifact: normalization ranges or input width are inconsistent");
    }
  }
  if (times.size() < 2) throw std::runtime_error("artifact: time grid missing");
}

void save_artifact(const std::filesystem::path& dir, const RomArtifact& a) {
  a.validate();
  std::filesystem::create_directories(dir);
  json j;
  j["format"] = "biotrom-artifact-1";
  j["case"] = a.case_id;
  j["mesh"] = {{"n_x", a.mesh.n_x}, {"crossed", a.mesh.crossed_squares}};
  j["times"] = a.times;
  j["inner_product"] = to_string(a.inner_product);
  j["fom_hash"] = hex_hash(a.fom_hash);
  j["config_hash"] = hex_hash(a.config_hash);
  for (const auto& ax : a.box) j["box"].push_back({{"name", ax.name}, {"lo", ax.lo}, {"hi", ax.hi}, {"log", ax.log_spaced}});
  for (FieldId f : {FieldId::Displacement, FieldId::Pressure}) {
    const std::string tag = to_string(f);
    const auto& m = a.field(f);
    write_basis(dir / ("basis_" + tag + ".bin"), m.basis, a.fom_hash);
    write_mlp(dir / ("mlp_" + tag + ".bin"), {m.net, m.input_norm, m.output_norm, a.fom_hash});
    j["fields"][tag] = {{"basis", "basis_" + tag + ".bin"}, {"mlp", "mlp_" + tag + ".bin"}, {"n", m.basis.size()}};
  }
  std::ofstream out(dir / "artifact.json");
  if (!out) throw std::runtime_error("cannot write " + (dir / "artifact.json").string());
  out << j.dump(2) << "\n";
}

RomArtifact load_artifact(const std::filesystem::path& dir) {
  std::ifstream in(dir / "artifact.json");
  if (!in) throw std::runtime_error("no artifact.json in " + dir.string());
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw std::runtime_error("malformed artifact.json: " + std::string(e.what()));
  }
  RomArtifact a;
  try {
    a.case_id = j.at("case").get<int>();
    a.mesh.n_x = j.at("mesh").at("n_x").get<int>();
    a.mesh.crossed_squares = j.at("mesh").at("crossed").get<int>();
    a.times = j.at("times").get<std::vector<double>>();
    a.inner_product = parse_inner_product(j.at("inner_product").get<std::string>());
    a.fom_hash = std::stoull(j.at("fom_hash").get<std::string>(), nullptr, 16);
    a.config_hash = std::stoull(j.at("config_hash").get<std::string>(), nullptr, 16);
    for (const auto& ax : j.at("box")) {
      a.box.push_back({ax.at("name").get<std::string>(), ax.at("lo").get<double>(), ax.at("hi").get<double>(),
                       ax.at("log").get<bool>()});
    }
    for (FieldId f : {FieldId::Displacement, FieldId::Pressure}) {
      const auto& jf = j.at("fields").at(to_string(f));
      FieldModel& m = f == FieldId::Displacement ? a.u : a.p;
      std::uint64_t h = 0;
      m.basis = read_basis(dir / jf.at("basis").get<std::string>(), &h);
      if (h != a.fom_hash) throw std::runtime_error("basis file hash does not match the artifact");
      MlpFile mf = read_mlp(dir / jf.at("mlp").get<std::string>());
      if (mf.hash != a.fom_hash) throw std::runtime_error("network file hash does not match the artifact");
      m.net = std::move(mf.net);
      m.input_norm = std::move(mf.input_norm);
      m.output_norm = std::move(mf.output_norm);
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("artifact.json is missing fields: " + std::string(e.what()));
  }
  a.validate();
  return a;
}

Vector predict_coefficients(const FieldModel& m, double t, std::span<const double> mu, bool warn) {
  if (m.input_norm.size() == 0 || m.output_norm.size() == 0) throw std::runtime_error("model has no normalization ranges");
  Vector x(1 + mu.size());
  x[0] = t;
  for (std::size_t j = 0; j < mu.size(); ++j) x[1 + j] = mu[j];
  return m.output_norm.inverse(forward(m.net, m.input_norm.forward(x, true, warn)));
}

Vector reconstruct(const ReducedBasis& basis, const Vector& theta) {
  if (theta.size() != basis.size()) throw std::invalid_argument("reconstruct: coefficient count differs from basis size");
  return basis.modes * theta;
}

std::pair<Vector, Vector> reconstruct(const RomArtifact& a, double t, std::span<const double> mu, bool warn) {
  if (mu.size() != a.box.size()) throw std::invalid_argument("reconstruct: parameter count mismatch");
  return {reconstruct(a.u.basis, predict_coefficients(a.u, t, mu, warn)),
          reconstruct(a.p.basis, predict_coefficients(a.p, t, mu, warn))};
}

double mse_metric(const Vector& fom, const Vector& rom, const InnerProduct& ip) {
  if (fom.size() != rom.size()) throw std::invalid_argument("mse_metric: length mismatch");
  return ip.norm_squared(fom - rom);
}

double me_metric(const Vector& fom, const Vector& rom) {
  if (fom.size() != rom.size()) throw std::invalid_argument("me_metric: length mismatch");
  return fom.size() == 0 ? 0.0 : (fom - rom).cwiseAbs().maxCoeff();
}

namespace {
double mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}
double maxv(const std::vector<double>& v) { return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end()); }
}  // namespace

double ErrorSeries::mean_mse_u() const { return mean(mse_u); }
double ErrorSeries::mean_mse_p() const { return mean(mse_p); }
double ErrorSeries::max_me_u() const { return maxv(me_u); }
double ErrorSeries::max_me_p() const { return maxv(me_p); }

ErrorSeries error_series(const std::vector<double>& times, const Matrix& fom_u, const Matrix& rom_u,
                         const Matrix& fom_p, const Matrix& rom_p, const InnerProduct& ip_u,
                         const InnerProduct& ip_p) {
  const auto n = static_cast<Eigen::Index>(times.size());
  if (fom_u.cols() != n || rom_u.cols() != n || fom_p.cols() != n || rom_p.cols() != n) {
    throw std::invalid_argument("error_series: column counts differ from the time grid");
  }
  ErrorSeries e;
  e.times = times;
  for (Eigen::Index k = 0; k < n; ++k) {
    e.mse_u.push_back(mse_metric(fom_u.col(k), rom_u.col(k), ip_u));
    e.me_u.push_back(me_metric(fom_u.col(k), rom_u.col(k)));
    e.mse_p.push_back(mse_metric(fom_p.col(k), rom_p.col(k), ip_p));
    e.me_p.push_back(me_metric(fom_p.col(k), rom_p.col(k)));
  }
  return e;
}

BoxStats box_stats(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("box_stats: empty sample");
  std::sort(v.begin(), v.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
  };
  BoxStats s;
  s.count = static_cast<int>(v.size());
  s.q1 = quantile(0.25);
  s.median = quantile(0.5);
  s.q3 = quantile(0.75);
  const double iqr = s.q3 - s.q1;
  const double lo_fence = s.q1 - 1.5 * iqr, hi_fence = s.q3 + 1.5 * iqr;
  s.whisker_lo = s.q1;
  s.whisker_hi = s.q3;
  for (double x : v) {
    if (x < lo_fence || x > hi_fence) {
      ++s.outliers;
    } else {
      s.whisker_lo = std::min(s.whisker_lo, x);
      s.whisker_hi = std::max(s.whisker_hi, x);
    }
  }
  return s;
}

}  // namespace biotrom
