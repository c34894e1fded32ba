#include "biotrom/materials.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

#include <boost/math/special_functions/erf.hpp>

namespace biotrom {

std::array<double, 2> Tensor2::eigenvalues() const {
  const double m = 0.5 * (xx + yy);
  const double r = std::hypot(0.5 * (xx - yy), xy);
  return {m - r, m + r};
}

LameParameters lame_from_bulk_poisson(double K, double nu) {
  if (!(K > 0.0)) throw std::invalid_argument("lame_from_bulk_poisson: K must be positive");
  if (!(nu > 0.0 && nu < 0.5)) {
    throw std::invalid_argument("lame_from_bulk_poisson: Poisson ratio must lie in (0, 0.5), got " +
                                std::to_string(nu));
  }
  return {3.0 * K * nu / (1.0 + nu), 3.0 * K * (1.0 - 2.0 * nu) / (2.0 * (1.0 + nu))};
}

double biot_coefficient(double K, double Ks) {
  if (!(K > 0.0)) throw std::invalid_argument("biot_coefficient: K must be positive");
  if (K > Ks) throw std::invalid_argument("biot_coefficient: K > Ks gives a negative coefficient");
  if (std::isinf(Ks)) return 1.0;
  return 1.0 - K / Ks;
}

double biot_modulus_inverse(double phi, double cf, double alpha, double Ks) {
  const double fluid = phi * cf;
  if (std::isinf(Ks)) return fluid;
  return fluid + (alpha - phi) / Ks;
}

Tensor2 conductivity(const Tensor2& k, double mu_f) { return {k.xx / mu_f, k.xy / mu_f, k.yy / mu_f}; }

PermeabilityField build_permeability(PermeabilityKind kind, const Mesh& mesh, double k_xx,
                                     const std::vector<double>* cell_kxx) {
  PermeabilityField field;
  field.kind = kind;
  field.cells.resize(mesh.num_cells());
  for (int c = 0; c < mesh.num_cells(); ++c) {
    Tensor2 t;
    switch (kind) {
      case PermeabilityKind::IsotropicUniform:
        t = {k_xx, 0.0, k_xx};
        break;
      case PermeabilityKind::AnisotropicUniform:
        t = {k_xx, 0.1 * k_xx, 0.1 * k_xx};
        break;
      case PermeabilityKind::TwoLayer:
        t = mesh.subdomain(c) == Subdomain::Upper
                ? Tensor2{kTwoLayerUpperPermeability, 0.0, kTwoLayerUpperPermeability}
                : Tensor2{k_xx, 0.0, k_xx};
        break;
      case PermeabilityKind::Cellwise: {
        if (cell_kxx == nullptr) throw std::invalid_argument("build_permeability: cellwise field missing");
        if (static_cast<int>(cell_kxx->size()) != mesh.num_cells()) {
          throw std::invalid_argument("build_permeability: field has " + std::to_string(cell_kxx->size()) +
                                      " entries for " + std::to_string(mesh.num_cells()) + " cells");
        }
        const double k = (*cell_kxx)[c];
        t = {k, 0.0, k};
        break;
      }
    }
    if (!t.is_spd()) {
      throw std::invalid_argument("build_permeability: tensor of cell " + std::to_string(c) +
                                  " is not symmetric positive definite");
    }
    field.cells[c] = t;
  }
  return field;
}

std::vector<double> read_permeability_file(const std::filesystem::path& path, int num_cells) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open permeability file " + path.string());
  std::vector<double> kxx(num_cells, std::numeric_limits<double>::quiet_NaN());
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    long idx = -1;
    double k = 0.0;
    if (!(ss >> idx >> k) || idx < 0 || idx >= num_cells) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": bad entry");
    }
    kxx[idx] = k;
  }
  for (int c = 0; c < num_cells; ++c) {
    if (std::isnan(kxx[c])) throw std::runtime_error(path.string() + ": no value for cell " + std::to_string(c));
  }
  return kxx;
}

void write_permeability_file(const std::filesystem::path& path, const std::vector<double>& kxx) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.precision(17);
  for (std::size_t c = 0; c < kxx.size(); ++c) out << c << " " << kxx[c] << "\n";
}

std::vector<double> generate_lognormal_field(const Mesh& mesh, const LogNormalFieldOptions& opts) {
  if (!(opts.mean > 0.0 && opts.variance > 0.0 && opts.correlation_length > 0.0 && opts.num_modes > 0)) {
    throw std::invalid_argument("generate_lognormal_field: invalid options");
  }
  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 2.0 * std::numbers::pi);

  // Gaussian covariance exp(-r^2 / l^2): wave vectors ~ N(0, 2 / l^2).
  const double k_scale = std::sqrt(2.0) / opts.correlation_length;
  std::vector<std::array<double, 3>> modes(opts.num_modes);
  for (auto& m : modes) m = {k_scale * normal(rng), k_scale * normal(rng), uniform(rng)};

  const int n = mesh.num_cells();
  std::vector<double> y(n);
  const double amp = std::sqrt(2.0 / opts.num_modes);
  for (int c = 0; c < n; ++c) {
    const Point x = mesh.centroid(c);
    double s = 0.0;
    for (const auto& m : modes) s += std::cos(m[0] * x.x + m[1] * x.y + m[2]);
    y[c] = amp * s;
  }

  // Standardize the realization so the transforms below see N(0,1) marginals.
  auto standardize = [&] {
    double mean = 0.0, var = 0.0;
    for (double v : y) mean += v;
    mean /= n;
    for (double v : y) var += (v - mean) * (v - mean);
    var /= n;
    const double sd = var > 0.0 ? std::sqrt(var) : 1.0;
    for (double& v : y) v = (v - mean) / sd;
  };
  standardize();

  if (opts.zinn_harvey_high) {
    for (double& v : y) {
      const double f = std::erf(std::abs(v) / std::sqrt(2.0));
      const double clipped = std::clamp(2.0 * f - 1.0, -1.0 + 1e-15, 1.0 - 1e-15);
      v = -std::sqrt(2.0) * boost::math::erf_inv(clipped);
    }
    standardize();
  }

  // Log-normal with the requested arithmetic mean and variance.
  const double sigma2 = std::log1p(opts.variance / (opts.mean * opts.mean));
  const double mu = std::log(opts.mean) - 0.5 * sigma2;
  std::vector<double> k(n);
  for (int c = 0; c < n; ++c) k[c] = std::exp(mu + std::sqrt(sigma2) * y[c]);
  return k;
}

void MaterialConfig::validate() const {
  if (!(bulk_modulus > 0.0)) throw std::invalid_argument("material: K must be positive");
  if (!(poisson_ratio > 0.0 && poisson_ratio < 0.5)) throw std::invalid_argument("material: nu must lie in (0, 0.5)");
  if (!(porosity > 0.0 && porosity < 1.0)) throw std::invalid_argument("material: porosity must lie in (0, 1)");
  if (!(fluid_compressibility >= 0.0)) throw std::invalid_argument("material: c_f must be non-negative");
  if (!(fluid_viscosity > 0.0)) throw std::invalid_argument("material: fluid viscosity must be positive");
  const double a = alpha();
  if (!(a > 0.0 && a <= 1.0)) throw std::invalid_argument("material: Biot coefficient must lie in (0, 1]");
  for (const auto& t : permeability.cells) {
    if (!t.is_spd()) throw std::invalid_argument("material: permeability tensor not SPD");
  }
}

double MaterialConfig::alpha() const {
  return alpha_override ? *alpha_override : biot_coefficient(bulk_modulus, grain_modulus);
}

double MaterialConfig::inverse_biot_modulus() const {
  return biot_modulus_inverse(porosity, fluid_compressibility, alpha(), grain_modulus);
}

}  // namespace biotrom
