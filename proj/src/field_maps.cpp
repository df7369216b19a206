#include "cqed/field_maps.hpp"

#include "cqed/serialization.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

namespace cqed {

namespace {

std::size_t level_index(DriveLevel level) { return static_cast<std::size_t>(level); }

}  // namespace

std::string_view to_string(InversionBranch branch) {
  return branch == InversionBranch::outer ? "outer" : "inner";
}

InversionBranch parse_inversion_branch(std::string_view name) {
  if (name == "outer") return InversionBranch::outer;
  if (name == "inner") return InversionBranch::inner;
  throw std::invalid_argument("unknown inversion branch '" + std::string(name) + "'");
}

DiffusionModel DiffusionModel::recoil(const SystemParams& params) {
  const double recoil_momentum = kHbar * params.wavenumber();
  DiffusionModel model;
  model.recoil_scale = recoil_momentum * recoil_momentum * params.gamma;
  return model;
}

GaussianFit fit_gaussian_potential(const std::vector<double>& grid,
                                   const std::vector<double>& potential, double rho_limit) {
  std::vector<double> rho;
  std::vector<double> u;
  for (std::size_t i = 0; i < grid.size() && grid[i] <= rho_limit; ++i) {
    rho.push_back(grid[i]);
    u.push_back(potential[i]);
  }
  if (rho.size() < 3) throw MapError("too few grid points for a Gaussian fit");

  // For fixed w the amplitude is linear least squares; w by golden section.
  auto residual = [&](double w, double* amplitude) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < rho.size(); ++i) {
      const double e = std::exp(-rho[i] * rho[i] / (w * w));
      num += -u[i] * e;
      den += e * e;
    }
    const double a = num / den;
    double ss = 0.0;
    for (std::size_t i = 0; i < rho.size(); ++i) {
      const double r = u[i] + a * std::exp(-rho[i] * rho[i] / (w * w));
      ss += r * r;
    }
    if (amplitude) *amplitude = a;
    return ss;
  };

  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double lo = 0.05 * rho_limit;
  double hi = 2.0 * rho_limit;
  double c = hi - phi * (hi - lo);
  double d = lo + phi * (hi - lo);
  double fc = residual(c, nullptr);
  double fd = residual(d, nullptr);
  for (int it = 0; it < 200 && (hi - lo) > 1e-12 * rho_limit; ++it) {
    if (fc < fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - phi * (hi - lo);
      fc = residual(c, nullptr);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + phi * (hi - lo);
      fd = residual(d, nullptr);
    }
  }
  GaussianFit fit;
  fit.waist = 0.5 * (lo + hi);
  const double ss = residual(fit.waist, &fit.amplitude);
  fit.relative_rms = std::sqrt(ss / static_cast<double>(rho.size())) / std::abs(fit.amplitude);
  return fit;
}

void finalize_profile(LevelProfile& p, const std::vector<double>& grid, double waist,
                      InversionBranch branch) {
  const std::size_t n = grid.size();
  p.depth = -*std::min_element(p.potential.begin(), p.potential.end());
  if (p.depth > 0.0) {
    const auto fit = fit_gaussian_potential(grid, p.potential, 1.5 * waist);
    p.fitted_waist = fit.waist;
    p.fit_relative_rms = fit.relative_rms;
  } else {
    p.fitted_waist = 0.0;
    p.fit_relative_rms = 0.0;
  }

  const auto& t = p.transmission;
  p.peak_index = static_cast<std::size_t>(std::max_element(t.begin(), t.end()) - t.begin());
  const double t_edge = t.back();
  const double contrast = t[p.peak_index] - t_edge;
  const double flat_tol = 1e-4 * std::abs(contrast);
  const std::string name(to_string(p.level));

  if (branch == InversionBranch::outer) {
    p.branch_begin = p.peak_index;
    std::size_t end = p.peak_index;
    while (end + 1 < n && t[end + 1] < t[end]) ++end;
    // Past `end` the curve may only be numerically flat.
    if (end + 1 < n && t[end] - t_edge > flat_tol) {
      std::ostringstream msg;
      msg << "transmission for level " << name << " is not monotone on the outer branch: T rises at rho="
          << grid[end + 1] << " m";
      throw MapError(msg.str());
    }
    p.branch_end = end;
  } else {
    p.branch_begin = 0;
    p.branch_end = p.peak_index;
    for (std::size_t i = 1; i <= p.peak_index; ++i) {
      if (!(t[i] > t[i - 1])) {
        std::ostringstream msg;
        msg << "transmission for level " << name << " is not monotone on the inner branch at rho="
            << grid[i] << " m";
        throw MapError(msg.str());
      }
    }
  }
  if (p.branch_end <= p.branch_begin) {
    throw MapError("transmission branch for level " + name + " is degenerate");
  }
}

RadialMaps::RadialMaps(SystemParams params, HilbertSpace space, std::vector<double> grid,
                       std::vector<LevelProfile> profiles, DiffusionModel diffusion,
                       InversionBranch branch)
    : params_(params), space_(space), grid_(std::move(grid)), diffusion_(diffusion),
      branch_(branch) {
  if (grid_.size() < 3) throw MapError("radial grid needs at least 3 points");
  spacing_ = (grid_.back() - grid_.front()) / static_cast<double>(grid_.size() - 1);
  if (grid_.front() != 0.0) throw MapError("radial grid must start at rho = 0");
  for (std::size_t i = 1; i < grid_.size(); ++i) {
    const double expected = spacing_ * static_cast<double>(i);
    if (!(grid_[i] > grid_[i - 1]) || std::abs(grid_[i] - expected) > 1e-9 * grid_.back()) {
      throw MapError("radial grid must be uniform and strictly increasing");
    }
  }
  for (auto& p : profiles) {
    const std::size_t n = grid_.size();
    if (p.potential.size() != n || p.force.size() != n || p.transmission.size() != n ||
        p.excited_pop.size() != n) {
      throw MapError("level profile size does not match the grid");
    }
    profiles_[level_index(p.level)] = std::move(p);
  }
}

RadialMaps RadialMaps::with_diffusion(const DiffusionModel& model) const {
  RadialMaps copy = *this;
  copy.diffusion_ = model;
  return copy;
}

bool RadialMaps::has_level(DriveLevel level) const {
  return profiles_[level_index(level)].has_value();
}

const LevelProfile* RadialMaps::find(DriveLevel level) const {
  const auto& p = profiles_[level_index(level)];
  return p ? &*p : nullptr;
}

const LevelProfile& RadialMaps::profile(DriveLevel level) const {
  const auto* p = find(level);
  if (!p) throw std::out_of_range("no radial map for drive level " + std::string(to_string(level)));
  return *p;
}

std::vector<DriveLevel> RadialMaps::levels() const {
  std::vector<DriveLevel> out;
  for (auto level : kAllDriveLevels) {
    if (has_level(level)) out.push_back(level);
  }
  return out;
}

double RadialMaps::interpolate(const std::vector<double>& values, double rho) const {
  if (rho <= 0.0) return values.front();
  const double pos = rho / spacing_;
  const auto last = values.size() - 1;
  if (pos >= static_cast<double>(last)) return values.back();
  const auto i = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(i);
  return values[i] + frac * (values[i + 1] - values[i]);
}

RadialSample RadialMaps::sample(DriveLevel level, double rho) const {
  const auto& p = profile(level);
  RadialSample s;
  if (!(rho < grid_.back())) {
    s.potential = p.potential.back();
    s.force = p.force.back();
    s.excited_pop = p.excited_pop.back();
    s.transmission = p.transmission.back();
    return s;
  }
  const double pos = std::max(rho, 0.0) / spacing_;
  const auto i = static_cast<std::size_t>(pos);
  const double f = pos - static_cast<double>(i);
  auto lerp = [&](const std::vector<double>& v) { return v[i] + f * (v[i + 1] - v[i]); };
  s.potential = lerp(p.potential);
  s.force = lerp(p.force);
  s.excited_pop = lerp(p.excited_pop);
  s.transmission = lerp(p.transmission);
  return s;
}

double RadialMaps::potential(DriveLevel level, double rho) const {
  return interpolate(profile(level).potential, rho);
}

double RadialMaps::force(DriveLevel level, double rho) const {
  return interpolate(profile(level).force, rho);
}

double RadialMaps::excited_pop(DriveLevel level, double rho) const {
  return interpolate(profile(level).excited_pop, rho);
}

double RadialMaps::diffusion(DriveLevel level, double rho) const {
  return diffusion_.coefficient(excited_pop(level, rho));
}

double RadialMaps::transmission(DriveLevel level, double rho) const {
  return interpolate(profile(level).transmission, rho);
}

double RadialMaps::transmission(DriveLevel level, double x, double rho) const {
  return transmission(level, effective_radius(x, rho));
}

double RadialMaps::effective_radius(double x, double rho) const {
  const double c = std::abs(std::cos(params_.wavenumber() * x));
  if (c < 1e-300) return std::numeric_limits<double>::infinity();
  const double w = params_.waist;
  return std::sqrt(rho * rho - w * w * std::log(c));
}

double RadialMaps::empty_cavity_transmission(DriveLevel level) const {
  const double eps = drive_amplitude(params_, level);
  return eps * eps / (params_.kappa * params_.kappa + params_.delta_cp * params_.delta_cp);
}

double RadialMaps::invert_transmission(DriveLevel level, double t_value) const {
  const auto& p = profile(level);
  const auto& t = p.transmission;
  const std::size_t b = p.branch_begin;
  const std::size_t e = p.branch_end;
  if (branch_ == InversionBranch::outer) {
    // T decreasing on [b, e].
    if (t_value >= t[b]) return grid_[b];
    if (t_value <= t[e]) return grid_[e];
    std::size_t lo = b;
    std::size_t hi = e;
    while (hi - lo > 1) {
      const std::size_t mid = (lo + hi) / 2;
      if (t[mid] > t_value) lo = mid; else hi = mid;
    }
    const double f = (t[lo] - t_value) / (t[lo] - t[hi]);
    return grid_[lo] + f * (grid_[hi] - grid_[lo]);
  }
  // T increasing on [b, e].
  if (t_value <= t[b]) return grid_[b];
  if (t_value >= t[e]) return grid_[e];
  std::size_t lo = b;
  std::size_t hi = e;
  while (hi - lo > 1) {
    const std::size_t mid = (lo + hi) / 2;
    if (t[mid] < t_value) lo = mid; else hi = mid;
  }
  const double f = (t_value - t[lo]) / (t[hi] - t[lo]);
  return grid_[lo] + f * (grid_[hi] - grid_[lo]);
}

RadialMaps build_maps(const SystemParams& params, const HilbertSpace& space,
                      const MapBuildOptions& options, const DiffusionModel& diffusion) {
  params.validate();
  const std::size_t n = options.grid.points;
  if (n < 3) throw std::invalid_argument("grid needs at least 3 points");
  if (options.grid.rho_max_over_waist < 3.0) {
    throw std::invalid_argument("grid must extend to at least 3 waists");
  }
  std::vector<double> grid(n);
  const double rho_max = options.grid.rho_max_over_waist * params.waist;
  for (std::size_t i = 0; i < n; ++i) {
    grid[i] = rho_max * static_cast<double>(i) / static_cast<double>(n - 1);
  }

  std::vector<LevelProfile> profiles;
  for (auto level : options.levels) {
    LevelProfile p;
    p.level = level;
    p.potential.assign(n, 0.0);
    p.force.assign(n, 0.0);
    p.transmission.assign(n, 0.0);
    p.excited_pop.assign(n, 0.0);
    profiles.push_back(std::move(p));
  }

  // Every (level, radius) solve is independent; split the flat index range.
  const std::size_t total = profiles.size() * n;
  const unsigned jobs = std::max(1u, std::min<unsigned>(options.jobs, static_cast<unsigned>(total)));
  std::vector<std::exception_ptr> errors(jobs);
  auto worker = [&](unsigned w) {
    try {
      const SteadyStateSolver solver(params, space);
      for (std::size_t k = w; k < total; k += jobs) {
        auto& p = profiles[k / n];
        const std::size_t i = k % n;
        const double g = coupling(params, 0.0, grid[i]);
        const auto obs = solver.solve_observables(g, drive_amplitude(params, p.level));
        p.transmission[i] = obs.transmission;
        p.excited_pop[i] = obs.excited_pop;
        p.force[i] = -kHbar * coupling_radial_derivative(params, 0.0, grid[i]) * obs.dipole_corr;
      }
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  if (jobs == 1) {
    worker(0);
  } else {
    std::vector<std::thread> threads;
    for (unsigned w = 0; w < jobs; ++w) threads.emplace_back(worker, w);
    for (auto& t : threads) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  for (auto& p : profiles) {
    // U(rho) = -int F, trapezoid rule inward from the grid edge where U = 0.
    p.potential[n - 1] = 0.0;
    for (std::size_t i = n - 1; i-- > 0;) {
      p.potential[i] = p.potential[i + 1] + 0.5 * (p.force[i] + p.force[i + 1]) * (grid[i + 1] - grid[i]);
    }
    finalize_profile(p, grid, params.waist, options.branch);
  }
  DiffusionModel model = diffusion;
  if (model.recoil_scale == 0.0) {
    const auto recoil = DiffusionModel::recoil(params);
    model.recoil_scale = recoil.recoil_scale;
  }
  return RadialMaps(params, space, std::move(grid), std::move(profiles), model, options.branch);
}

// ---------------------------------------------------------------------------
// Table files

namespace {

constexpr const char* kMapsMagic = "# cqed-radial-maps v1";

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_maps_csv(const RadialMaps& maps, const std::string& path,
                    const std::string& extra_metadata_json) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");

  nlohmann::ordered_json meta;
  meta["system"] = to_json(maps.params());
  meta["hilbert"] = {{"n_fock", maps.space().n_fock}};
  meta["grid"] = {{"points", maps.grid().size()},
                  {"rho_max_m", maps.rho_max()}};
  meta["diffusion_model"] = to_json(maps.diffusion_model());
  meta["inversion_branch"] = std::string(to_string(maps.branch()));
  meta["extra"] = nlohmann::ordered_json::parse(extra_metadata_json);

  out << kMapsMagic << '\n';
  out << "# meta " << meta.dump() << '\n';
  out << "level,rho_m,U_J,F_N,T,D,pop_e\n";
  for (auto level : maps.levels()) {
    const auto& p = maps.profile(level);
    const auto name = std::string(to_string(level));
    for (std::size_t i = 0; i < maps.grid().size(); ++i) {
      out << name << ',' << format_double(maps.grid()[i]) << ',' << format_double(p.potential[i])
          << ',' << format_double(p.force[i]) << ',' << format_double(p.transmission[i]) << ','
          << format_double(maps.diffusion_model().coefficient(p.excited_pop[i])) << ','
          << format_double(p.excited_pop[i]) << '\n';
    }
  }
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

namespace {

nlohmann::json read_meta_line(std::istream& in, const std::string& path) {
  std::string line;
  if (!std::getline(in, line) || line != kMapsMagic) {
    throw MapError("'" + path + "' is not a radial map table (bad header)");
  }
  if (!std::getline(in, line) || line.rfind("# meta ", 0) != 0) {
    throw MapError("'" + path + "' is missing the metadata line");
  }
  try {
    return nlohmann::json::parse(line.substr(7));
  } catch (const nlohmann::json::exception& e) {
    throw MapError("'" + path + "' has malformed metadata: " + e.what());
  }
}

}  // namespace

std::string read_maps_metadata(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MapError("cannot open '" + path + "'");
  return read_meta_line(in, path).value("extra", nlohmann::json::object()).dump();
}

RadialMaps read_maps_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MapError("cannot open '" + path + "'");
  const auto meta = read_meta_line(in, path);

  SystemParams params;
  HilbertSpace space;
  DiffusionModel diffusion;
  InversionBranch branch = InversionBranch::outer;
  try {
    params = system_params_from_json(meta.at("system"));
    space.n_fock = meta.at("hilbert").at("n_fock").get<int>();
    diffusion = diffusion_model_from_json(meta.at("diffusion_model"));
    branch = parse_inversion_branch(meta.at("inversion_branch").get<std::string>());
  } catch (const std::exception& e) {
    throw MapError("'" + path + "' metadata: " + e.what());
  }

  std::string line;
  if (!std::getline(in, line) || line != "level,rho_m,U_J,F_N,T,D,pop_e") {
    throw MapError("'" + path + "' has an unexpected column header");
  }
  std::vector<double> grid;
  std::vector<LevelProfile> profiles;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++row;
    std::stringstream ss(line);
    std::string cell[7];
    for (auto& c : cell) {
      if (!std::getline(ss, c, ',')) throw MapError("'" + path + "' row " + std::to_string(row) + " is short");
    }
    DriveLevel level;
    double v[6];
    try {
      level = parse_drive_level(cell[0]);
      for (int k = 0; k < 6; ++k) {
        std::size_t used = 0;
        v[k] = std::stod(cell[k + 1], &used);
        if (used != cell[k + 1].size()) throw std::invalid_argument("trailing characters");
      }
    } catch (const std::exception& e) {
      throw MapError("'" + path + "' row " + std::to_string(row) + ": " + e.what());
    }
    if (profiles.empty() || profiles.back().level != level) {
      if (!profiles.empty() && profiles.back().potential.size() != grid.size()) {
        throw MapError("'" + path + "' levels have different row counts");
      }
      LevelProfile p;
      p.level = level;
      profiles.push_back(std::move(p));
    }
    auto& p = profiles.back();
    const std::size_t i = p.potential.size();
    if (profiles.size() == 1) {
      grid.push_back(v[0]);
    } else if (i >= grid.size() || grid[i] != v[0]) {
      throw MapError("'" + path + "' levels use different grids");
    }
    p.potential.push_back(v[1]);
    p.force.push_back(v[2]);
    p.transmission.push_back(v[3]);
    p.excited_pop.push_back(v[5]);
  }
  if (profiles.empty()) throw MapError("'" + path + "' contains no rows");
  for (auto& p : profiles) {
    if (p.potential.size() != grid.size()) throw MapError("'" + path + "' levels have different row counts");
    finalize_profile(p, grid, params.waist, branch);
  }
  return RadialMaps(params, space, std::move(grid), std::move(profiles), diffusion, branch);
}

}  // namespace cqed
