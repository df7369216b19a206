#include "cqed/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace cqed {

namespace {

constexpr double kTimeTolerance = 1e-9;  // s, for window edges on the sample grid

template <typename Fn>
void for_window(const TrajectoryRecord& rec, double begin, double end, Fn&& fn) {
  const double t0 = *rec.trigger_time;
  for (const auto& s : rec.samples) {
    const double rel = s.t - t0;
    if (rel + kTimeTolerance < begin) continue;
    if (rel + kTimeTolerance >= end) break;
    fn(s);
  }
}

bool covers(const TrajectoryRecord& rec, double end) {
  const auto dwell = rec.dwell();
  return dwell && *dwell + kTimeTolerance >= end;
}

}  // namespace

std::optional<double> window_variance(const TrajectoryRecord& rec, double begin, double end) {
  if (!covers(rec, end)) return std::nullopt;
  double sum = 0.0;
  double sum2 = 0.0;
  std::size_t n = 0;
  std::vector<double> values;
  for_window(rec, begin, end, [&](const TrajectorySample& s) { values.push_back(s.rho_dot_est); });
  n = values.size();
  if (n < 2) return std::nullopt;
  for (double v : values) sum += v;
  const double mean = sum / static_cast<double>(n);
  for (double v : values) sum2 += (v - mean) * (v - mean);
  return sum2 / static_cast<double>(n - 1);
}

MeritReport figure_of_merit(const TrajectoryRecord& rec, const MeritWindows& w) {
  MeritReport r;
  r.triggered = rec.trigger_time.has_value();
  r.termination = rec.termination;
  r.trigger_time = rec.trigger_time;
  r.dwell = rec.dwell();
  for (const auto& e : rec.events) {
    if (e.cause != EventCause::trigger) ++r.switch_count;
  }
  if (!r.triggered) return r;
  r.var_early = window_variance(rec, w.early_begin + w.shift, w.early_end + w.shift);
  r.var_late = window_variance(rec, w.late_begin + w.shift, w.late_end + w.shift);
  r.var_late_prime = window_variance(rec, w.late_prime_begin + w.shift, w.late_prime_end + w.shift);
  if (r.var_early && r.var_late && *r.var_late > 0.0) r.merit = *r.var_early / *r.var_late;
  if (r.var_early && r.var_late_prime && *r.var_late_prime > 0.0) {
    r.merit_prime = *r.var_early / *r.var_late_prime;
  }
  return r;
}

std::optional<EnergyChange> energy_accounting(const TrajectoryRecord& rec, double depth,
                                              const MeritWindows& w) {
  const double late_end = w.late_prime_end + w.shift;
  if (!covers(rec, late_end)) return std::nullopt;
  auto mean_in = [&](double b, double e) {
    double sum = 0.0;
    std::size_t n = 0;
    for_window(rec, b, e, [&](const TrajectorySample& s) {
      sum += s.energy_ref;
      ++n;
    });
    return n ? sum / static_cast<double>(n) : 0.0;
  };
  EnergyChange out;
  out.early = mean_in(w.early_begin + w.shift, w.early_end + w.shift);
  out.late = mean_in(w.late_prime_begin + w.shift, late_end);
  out.change = out.late - out.early;
  const double above_bottom = out.early + depth;
  out.fraction = above_bottom > 0.0 ? out.change / above_bottom : 0.0;
  return out;
}

LifetimeFit fit_lifetime(const std::vector<double>& dwell, const std::vector<bool>& escaped,
                         double burn_in) {
  if (dwell.size() != escaped.size()) throw std::invalid_argument("dwell/escape size mismatch");
  LifetimeFit fit;
  double exposure = 0.0;
  for (std::size_t i = 0; i < dwell.size(); ++i) {
    if (!(dwell[i] > burn_in)) continue;
    ++fit.samples;
    exposure += dwell[i] - burn_in;
    if (escaped[i]) ++fit.events;
  }
  if (fit.events == 0) return fit;
  fit.lifetime = exposure / static_cast<double>(fit.events);
  fit.standard_error = fit.lifetime / std::sqrt(static_cast<double>(fit.events));
  fit.valid = true;
  return fit;
}

namespace {

Histogram bin_values(const std::vector<double>& values, std::vector<double> edges,
                     bool logarithmic) {
  Histogram h;
  h.edges = std::move(edges);
  const std::size_t bins = h.edges.size() - 1;
  h.counts.assign(bins, 0);
  const double lo = h.edges.front();
  const double hi = h.edges.back();
  for (double v : values) {
    if (!(v >= lo)) {
      ++h.underflow;
      continue;
    }
    if (v >= hi) {
      ++h.overflow;
      continue;
    }
    const double pos = logarithmic ? std::log(v / lo) / std::log(hi / lo) : (v - lo) / (hi - lo);
    auto idx = static_cast<std::size_t>(pos * static_cast<double>(bins));
    if (idx >= bins) idx = bins - 1;
    ++h.counts[idx];
  }
  return h;
}

}  // namespace

Histogram log_histogram(const std::vector<double>& values, double lo, double hi,
                        std::size_t bins) {
  if (!(lo > 0.0) || !(hi > lo) || bins == 0) throw std::invalid_argument("bad histogram range");
  std::vector<double> edges(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) {
    edges[i] = lo * std::pow(hi / lo, static_cast<double>(i) / static_cast<double>(bins));
  }
  return bin_values(values, std::move(edges), true);
}

Histogram linear_histogram(const std::vector<double>& values, double lo, double hi,
                           std::size_t bins) {
  if (!(hi > lo) || bins == 0) throw std::invalid_argument("bad histogram range");
  std::vector<double> edges(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) {
    edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
  }
  return bin_values(values, std::move(edges), false);
}

MeanStat mean_stat(const std::vector<double>& v) {
  MeanStat s;
  s.n = v.size();
  if (s.n == 0) return s;
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / static_cast<double>(s.n);
  if (s.n > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.standard_error = std::sqrt(ss / static_cast<double>(s.n - 1) / static_cast<double>(s.n));
  }
  return s;
}

WelchResult welch_test(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() < 2 || b.size() < 2) throw std::invalid_argument("welch test needs >= 2 samples");
  const auto sa = mean_stat(a);
  const auto sb = mean_stat(b);
  WelchResult r;
  r.mean_a = sa.mean;
  r.mean_b = sb.mean;
  r.n_a = sa.n;
  r.n_b = sb.n;
  const double va = sa.standard_error * sa.standard_error;
  const double vb = sb.standard_error * sb.standard_error;
  const double se = std::sqrt(va + vb);
  r.t = se > 0.0 ? (sa.mean - sb.mean) / se : 0.0;
  const double denom = va * va / static_cast<double>(sa.n - 1) + vb * vb / static_cast<double>(sb.n - 1);
  r.dof = denom > 0.0 ? (va + vb) * (va + vb) / denom : 0.0;
  return r;
}

CampaignSummary summarize(const std::vector<MeritReport>& reports, double burn_in) {
  CampaignSummary s;
  s.drops = reports.size();
  std::vector<double> merit, merit_prime, dwell, energy;
  std::vector<bool> escaped;
  for (const auto& r : reports) {
    if (!r.triggered) continue;
    ++s.triggered;
    if (r.merit) merit.push_back(*r.merit);
    if (r.merit_prime) merit_prime.push_back(*r.merit_prime);
    if (r.energy_change_fraction) energy.push_back(*r.energy_change_fraction);
    if (r.dwell) {
      dwell.push_back(*r.dwell);
      escaped.push_back(r.termination == Termination::escaped);
    }
  }
  s.merit_eligible = merit.size();
  s.merit_prime_eligible = merit_prime.size();
  s.merit = mean_stat(merit);
  s.merit_prime = mean_stat(merit_prime);
  s.dwell = mean_stat(dwell);
  s.energy_fraction = mean_stat(energy);
  s.merit_histogram = log_histogram(merit, 0.1, 100.0, 16);
  s.merit_prime_histogram = log_histogram(merit_prime, 0.1, 100.0, 16);
  s.dwell_histogram = linear_histogram(dwell, 0.0, 5e-3, 50);
  s.lifetime = fit_lifetime(dwell, escaped, burn_in);
  return s;
}

TrajectoryRecord run_drop(const CampaignSpec& spec, const RadialMaps& maps, std::uint64_t index) {
  SimConfig sim = spec.sim;
  sim.rng_seed = spec.master_seed;
  return run_trajectory(sim, maps, spec.controller, spec.measurement, index);
}

MeritReport drop_report(const TrajectoryRecord& record, const CampaignSpec& spec,
                        const RadialMaps& maps, std::uint64_t index) {
  MeritReport r = figure_of_merit(record, spec.windows);
  r.index = index;
  const double depth = maps.depth(spec.measurement.energy_reference);
  if (const auto e = energy_accounting(record, depth, spec.windows)) {
    r.energy_change = e->change;
    r.energy_change_fraction = e->fraction;
  }
  return r;
}

CampaignResult run_campaign(const CampaignSpec& spec, const RadialMaps& maps) {
  CampaignResult out;
  out.reports.resize(spec.n_drops);

  unsigned jobs = spec.jobs ? spec.jobs : std::max(1u, std::thread::hardware_concurrency());
  jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, std::max<std::size_t>(spec.n_drops, 1)));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= spec.n_drops) return;
      try {
        out.reports[i] = drop_report(run_drop(spec, maps, i), spec, maps, i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(spec.n_drops);
        return;
      }
    }
  };
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  out.summary = summarize(out.reports, spec.lifetime_burn_in);
  return out;
}

namespace {

template <typename T>
nlohmann::ordered_json optional_json(const std::optional<T>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

std::optional<double> optional_double(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

nlohmann::ordered_json to_json(const MeanStat& s) {
  return {{"n", s.n}, {"mean", s.mean}, {"standard_error", s.standard_error}};
}

}  // namespace

nlohmann::ordered_json to_json(const MeritReport& r) {
  nlohmann::ordered_json j;
  j["index"] = r.index;
  j["triggered"] = r.triggered;
  j["termination"] = std::string(to_string(r.termination));
  j["trigger_time_s"] = optional_json(r.trigger_time);
  j["dwell_s"] = optional_json(r.dwell);
  j["var_early_m2_per_s2"] = optional_json(r.var_early);
  j["var_late_m2_per_s2"] = optional_json(r.var_late);
  j["var_late_prime_m2_per_s2"] = optional_json(r.var_late_prime);
  j["M"] = optional_json(r.merit);
  j["M_prime"] = optional_json(r.merit_prime);
  j["energy_change_J"] = optional_json(r.energy_change);
  j["energy_change_fraction"] = optional_json(r.energy_change_fraction);
  j["switch_count"] = r.switch_count;
  return j;
}

MeritReport merit_report_from_json(const nlohmann::json& j) {
  MeritReport r;
  r.index = j.at("index").get<std::uint64_t>();
  r.triggered = j.at("triggered").get<bool>();
  r.termination = parse_termination(j.at("termination").get<std::string>());
  r.trigger_time = optional_double(j, "trigger_time_s");
  r.dwell = optional_double(j, "dwell_s");
  r.var_early = optional_double(j, "var_early_m2_per_s2");
  r.var_late = optional_double(j, "var_late_m2_per_s2");
  r.var_late_prime = optional_double(j, "var_late_prime_m2_per_s2");
  r.merit = optional_double(j, "M");
  r.merit_prime = optional_double(j, "M_prime");
  r.energy_change = optional_double(j, "energy_change_J");
  r.energy_change_fraction = optional_double(j, "energy_change_fraction");
  r.switch_count = j.value("switch_count", std::size_t{0});
  return r;
}

nlohmann::ordered_json to_json(const Histogram& h) {
  return {{"edges", h.edges},
          {"counts", h.counts},
          {"underflow", h.underflow},
          {"overflow", h.overflow}};
}

nlohmann::ordered_json to_json(const LifetimeFit& f) {
  return {{"valid", f.valid},
          {"samples", f.samples},
          {"events", f.events},
          {"lifetime_s", f.lifetime},
          {"standard_error_s", f.standard_error}};
}

nlohmann::ordered_json to_json(const CampaignSummary& s) {
  nlohmann::ordered_json j;
  j["drops"] = s.drops;
  j["triggered"] = s.triggered;
  j["M_eligible"] = s.merit_eligible;
  j["M_prime_eligible"] = s.merit_prime_eligible;
  j["M"] = to_json(s.merit);
  j["M_prime"] = to_json(s.merit_prime);
  j["dwell_s"] = to_json(s.dwell);
  j["energy_change_fraction"] = to_json(s.energy_fraction);
  j["M_histogram"] = to_json(s.merit_histogram);
  j["M_prime_histogram"] = to_json(s.merit_prime_histogram);
  j["dwell_histogram_s"] = to_json(s.dwell_histogram);
  j["lifetime"] = to_json(s.lifetime);
  return j;
}

Reconstruction reconstruct_trajectory(const std::vector<double>& t, const std::vector<double>& rho,
                                      const RadialMaps& maps, DriveLevel level) {
  if (t.size() != rho.size() || t.size() < 3) {
    throw std::invalid_argument("reconstruction needs matching t/rho with >= 3 samples");
  }
  const double mass = maps.params().mass;
  Reconstruction out;
  out.t = t;
  out.rho = rho;
  out.ambiguities = {"handedness: sign of L is not observable from rho(t)",
                     "theta0: initial azimuth is arbitrary",
                     "antinode: the axial well index is not observable"};

  const auto [lo_it, hi_it] = std::minmax_element(rho.begin(), rho.end());
  const double mean_rho = 0.5 * (*lo_it + *hi_it);
  if (*hi_it - *lo_it <= 1e-6 * mean_rho) {
    out.circular = true;
    out.angular_momentum = std::sqrt(mass * std::pow(mean_rho, 3) * std::abs(maps.force(level, mean_rho)));
  } else {
    struct Turn {
      double rho;
      bool maximum;
    };
    std::vector<Turn> turns;
    for (std::size_t i = 1; i + 1 < rho.size(); ++i) {
      const double a = rho[i - 1], b = rho[i], c = rho[i + 1];
      const bool is_max = b > a && b >= c;
      const bool is_min = b < a && b <= c;
      if (!is_max && !is_min) continue;
      // vertex of the parabola through the three samples
      const double curv = a - 2.0 * b + c;
      double vertex = b;
      if (curv != 0.0) {
        const double off = 0.5 * (a - c) / curv;
        vertex = b - 0.25 * (a - c) * off;
      }
      turns.push_back({std::max(vertex, 0.0), is_max});
    }
    std::vector<double> l2;
    for (std::size_t i = 1; i < turns.size(); ++i) {
      if (turns[i].maximum == turns[i - 1].maximum) continue;
      const double r_in = turns[i].maximum ? turns[i - 1].rho : turns[i].rho;
      const double r_out = turns[i].maximum ? turns[i].rho : turns[i - 1].rho;
      if (!(r_in > 0.0) || !(r_out > r_in)) {
        l2.push_back(0.0);
        continue;
      }
      const double du = maps.potential(level, r_out) - maps.potential(level, r_in);
      const double inv = 1.0 / (r_in * r_in) - 1.0 / (r_out * r_out);
      l2.push_back(std::max(0.0, 2.0 * mass * du / inv));
    }
    out.turning_points = turns.size();
    if (l2.empty()) throw std::domain_error("no pair of radial turning points in the record");
    std::nth_element(l2.begin(), l2.begin() + static_cast<long>(l2.size() / 2), l2.end());
    out.angular_momentum = std::sqrt(l2[l2.size() / 2]);
  }

  out.theta.assign(t.size(), 0.0);
  auto rate = [&](std::size_t i) {
    return rho[i] > 0.0 ? out.angular_momentum / (mass * rho[i] * rho[i]) : 0.0;
  };
  for (std::size_t i = 1; i < t.size(); ++i) {
    out.theta[i] = out.theta[i - 1] + 0.5 * (rate(i) + rate(i - 1)) * (t[i] - t[i - 1]);
  }
  return out;
}

}  // namespace cqed
