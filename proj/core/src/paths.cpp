#include "cbi/paths.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cbi/csv.hpp"
#include "cbi/cumulant.hpp"
#include "cbi/errors.hpp"

namespace cbi::paths {

namespace {

std::size_t segment_index(const std::vector<double>& times, double t) {
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  const auto idx = static_cast<std::size_t>(
      std::max<std::ptrdiff_t>(1, std::distance(times.begin(), it)));
  return std::min(idx, times.size() - 1);
}

}  // namespace

double SamplePath::value_at(double t) const {
  if (t <= times.front()) return values.front();
  if (t >= times.back()) return values.back();
  const auto i = segment_index(times, t);
  const double h = times[i] - times[i - 1];
  if (h <= 0.0) return values[i];
  const double th = (t - times[i - 1]) / h;
  return values[i - 1] + th * (values[i] - values[i - 1]);
}

double SamplePath::integral_at(double t) const {
  if (t <= times.front()) return cum_integral.front();
  if (t >= times.back()) return cum_integral.back();
  const auto i = segment_index(times, t);
  const double h = times[i] - times[i - 1];
  if (h <= 0.0) return cum_integral[i];
  const double dtau = t - times[i - 1];
  const double y_t = value_at(t);
  return cum_integral[i - 1] + 0.5 * (values[i - 1] + y_t) * dtau;
}

void write_csv(const SamplePath& p, std::ostream& os) {
  os << "t,value,cum_integral,extinct\n";
  for (std::size_t i = 0; i < p.times.size(); ++i) {
    const bool extinct =
        p.extinct_at.has_value() && p.times[i] >= *p.extinct_at;
    os << csv::num(p.times[i]) << ',' << csv::num(p.values[i]) << ','
       << csv::num(p.cum_integral[i]) << ',' << (extinct ? '1' : '0') << '\n';
  }
}

RateSpec RateSpec::unit() {
  RateSpec r;
  return r;
}

RateSpec RateSpec::time_fn(std::function<double(double)> rho) {
  RateSpec r;
  r.drift_fn_ = std::move(rho);
  r.jump_fn_ = r.drift_fn_;
  return r;
}

RateSpec RateSpec::state_fn(std::function<double(double)> q,
                            double lipschitz_bound) {
  if (!(lipschitz_bound >= 0.0)) {
    throw DomainError("RateSpec: lipschitz bound must be >= 0");
  }
  RateSpec r;
  r.drift_fn_ = std::move(q);
  r.jump_fn_ = r.drift_fn_;
  r.state_based_ = true;
  r.lipschitz_ = lipschitz_bound;
  return r;
}

RateSpec RateSpec::two_state_fns(std::function<double(double)> drift_q,
                                 std::function<double(double)> jump_q,
                                 double lipschitz_bound) {
  if (!(lipschitz_bound >= 0.0)) {
    throw DomainError("RateSpec: lipschitz bound must be >= 0");
  }
  RateSpec r;
  r.drift_fn_ = std::move(drift_q);
  r.jump_fn_ = std::move(jump_q);
  r.state_based_ = true;
  r.lipschitz_ = lipschitz_bound;
  return r;
}

namespace {

double eval_rate(const std::function<double(double)>& fn, bool state_based,
                 double t, double y_left) {
  if (!fn) return 1.0;
  const double v = fn(state_based ? y_left : t);
  if (!(v >= 0.0)) throw DomainError("RateSpec: rate evaluated negative");
  return v;
}

}  // namespace

double RateSpec::drift_rate(double t, double y_left) const {
  return eval_rate(drift_fn_, state_based_, t, y_left);
}

double RateSpec::jump_rate(double t, double y_left) const {
  return eval_rate(jump_fn_, state_based_, t, y_left);
}

namespace {

struct PathBuilder {
  SamplePath p;
  void start(double t, double y) {
    p.times.push_back(t);
    p.values.push_back(y);
    p.cum_integral.push_back(0.0);
  }
  void push(double t, double y, double integral_inc) {
    p.times.push_back(t);
    p.values.push_back(y);
    p.cum_integral.push_back(p.cum_integral.back() + integral_inc);
  }
};

struct JumpBatch {
  double total = 0.0;
  double weighted_tail = 0.0;  // sum of size * (step_end - jump_time)
};

// Compound Poisson jumps inside (t, t+h]; records each jump on the path.
JumpBatch draw_jumps(const measures::LevyMeasure& mu, double eps,
                     double intensity, double t, double h, SamplePath& p,
                     rng::RandomStream& s) {
  JumpBatch batch;
  if (!(intensity > 0.0)) return batch;
  const std::int64_t count = rng::sample_poisson(s, intensity * h);
  for (std::int64_t i = 0; i < count; ++i) {
    const double size = mu.sample_jump_above(eps, s);
    const double tau = t + rng::uniform01(s) * h;
    p.jumps.emplace_back(tau, size);
    batch.total += size;
    batch.weighted_tail += size * (t + h - tau);
  }
  return batch;
}

}  // namespace

SamplePath simulate_cbi(const mech::BranchingMechanism& phi,
                        const mech::ImmigrationMechanism& psi,
                        const RateSpec& rate, double x0, double T,
                        const EulerOptions& opts, rng::RandomStream& s) {
  if (!(opts.dt > 0.0)) throw DomainError("simulate_cbi: dt must be > 0");
  if (!(opts.eps_jump > 0.0)) {
    throw DomainError("simulate_cbi: eps_jump must be > 0");
  }
  if (!(x0 >= 0.0) || !(T > 0.0)) {
    throw DomainError("simulate_cbi: x0 >= 0 and T > 0 required");
  }

  const auto& m = phi.jump_measure();
  const double b = phi.linear();
  const double c = phi.diffusion();
  const double m_mass = m.is_null() ? 0.0 : m.mass_above(opts.eps_jump);
  const double m_mean = m.is_null() ? 0.0 : m.mean_above(opts.eps_jump);
  const double m_var = m.is_null() ? 0.0 : m.second_moment_below(opts.eps_jump);

  const auto& n = psi.jump_measure();
  const bool n_present = !n.is_null();
  const double n_eps =
      n_present && !std::isfinite(n.mass_above(0.0)) ? opts.eps_jump : 0.0;
  const double n_mass = n_present ? n.mass_above(n_eps) : 0.0;
  const double n_small_mean = n_present ? n.mean_below(n_eps) : 0.0;
  const bool no_immigration = psi.is_null();

  PathBuilder out;
  out.start(0.0, x0);
  double y = x0;
  double t = 0.0;
  bool absorbed = no_immigration && y == 0.0;
  if (absorbed) out.p.extinct_at = 0.0;

  const auto n_steps = static_cast<std::int64_t>(std::ceil(T / opts.dt));
  for (std::int64_t step = 0; step < n_steps; ++step) {
    const double h = std::min(opts.dt, T - t);
    if (absorbed) {
      out.push(t + h, 0.0, 0.0);
      t += h;
      continue;
    }

    const double rate_d = rate.drift_rate(t, y);
    const double rate_j = rate.jump_rate(t, y);

    double y_cont = y + (psi.drift() * rate_d - b * y - y * m_mean) * h +
                    rate_j * n_small_mean * h;
    if (c > 0.0 && y > 0.0) {
      y_cont += std::sqrt(2.0 * c * y * h) * rng::normal(s);
    }
    if (opts.small_jump_gaussian && m_var > 0.0 && y > 0.0) {
      y_cont += std::sqrt(y * m_var * h) * rng::normal(s);
    }

    const JumpBatch branch =
        draw_jumps(m, opts.eps_jump, y * m_mass, t, h, out.p, s);
    const JumpBatch immig =
        draw_jumps(n, n_eps, rate_j * n_mass, t, h, out.p, s);

    const double integral_inc = 0.5 * (y + std::max(y_cont, 0.0)) * h +
                                branch.weighted_tail + immig.weighted_tail;
    double y_new = y_cont + branch.total + immig.total;
    if (y_new <= 0.0) {
      y_new = 0.0;
      if (no_immigration) {
        absorbed = true;
        if (!out.p.extinct_at) out.p.extinct_at = t + h;
      }
    }
    out.push(t + h, y_new, integral_inc);
    y = y_new;
    t += h;
  }
  return std::move(out.p);
}

SamplePath simulate_stable_cbi(double c, double sigma, double alpha, double b,
                               const mech::ImmigrationMechanism& psi, double x0,
                               double T, double dt, rng::RandomStream& s) {
  if (!(c >= 0.0)) throw DomainError("simulate_stable_cbi: c must be >= 0");
  if (sigma > 0.0 && !(alpha > 1.0 && alpha < 2.0)) {
    throw DomainError("simulate_stable_cbi: alpha must lie in (1,2)");
  }
  if (!(sigma >= 0.0)) throw DomainError("simulate_stable_cbi: sigma >= 0");
  if (!(dt > 0.0) || !(T > 0.0) || !(x0 >= 0.0)) {
    throw DomainError("simulate_stable_cbi: dt, T > 0 and x0 >= 0 required");
  }

  const auto& n = psi.jump_measure();
  const bool n_present = !n.is_null();
  const double n_eps =
      n_present && !std::isfinite(n.mass_above(0.0)) ? 1e-6 : 0.0;
  const double n_mass = n_present ? n.mass_above(n_eps) : 0.0;
  const double n_small_mean = n_present ? n.mean_below(n_eps) : 0.0;
  const bool no_immigration = psi.is_null();

  PathBuilder out;
  out.start(0.0, x0);
  double y = x0;
  double t = 0.0;
  bool absorbed = no_immigration && y == 0.0;
  if (absorbed) out.p.extinct_at = 0.0;

  const auto n_steps = static_cast<std::int64_t>(std::ceil(T / dt));
  for (std::int64_t step = 0; step < n_steps; ++step) {
    const double h = std::min(dt, T - t);
    if (absorbed) {
      out.push(t + h, 0.0, 0.0);
      t += h;
      continue;
    }

    double y_cont = y + (psi.drift() - b * y) * h + n_small_mean * h;
    if (c > 0.0 && y > 0.0) {
      y_cont += std::sqrt(2.0 * c * y * h) * rng::normal(s);
    }
    if (sigma > 0.0 && y > 0.0) {
      y_cont += std::pow(sigma * y, 1.0 / alpha) *
                rng::sample_stable_increment(s, alpha, h);
    }
    const JumpBatch immig = draw_jumps(n, n_eps, n_mass, t, h, out.p, s);

    const double integral_inc =
        0.5 * (y + std::max(y_cont, 0.0)) * h + immig.weighted_tail;
    double y_new = y_cont + immig.total;
    if (y_new <= 0.0) {
      y_new = 0.0;
      if (no_immigration) {
        absorbed = true;
        if (!out.p.extinct_at) out.p.extinct_at = t + h;
      }
    }
    out.push(t + h, y_new, integral_inc);
    y = y_new;
    t += h;
  }
  return std::move(out.p);
}

namespace {

// One exact Feller/CIR transition over a gap h. The branching part is a
// Poisson(y e^{-bh}/(c q)) mixed sum of mean-(c q) exponentials; immigration
// contributes an independent Gamma(beta/c, 1/(c q)).
double feller_exact_step(double c, double b, double beta, double y, double h,
                         rng::RandomStream& s) {
  const double q = cumulant::stable_qfactor(b, 1.0, h);
  const double scale = c * q;
  double next = 0.0;
  if (y > 0.0) {
    const std::int64_t count =
        rng::sample_poisson(s, y * std::exp(-b * h) / scale);
    if (count > 0) {
      next += rng::sample_gamma(s, static_cast<double>(count), 1.0 / scale);
    }
  }
  if (beta > 0.0) {
    next += rng::sample_gamma(s, beta / c, 1.0 / scale);
  }
  return next;
}

}  // namespace

SamplePath simulate_feller_exact(double c, double b, double beta, double x0,
                                 std::span<const double> t_grid,
                                 rng::RandomStream& s) {
  if (!(c > 0.0)) throw DomainError("simulate_feller_exact: c must be > 0");
  if (!(beta >= 0.0) || !(x0 >= 0.0)) {
    throw DomainError("simulate_feller_exact: beta and x0 must be >= 0");
  }
  if (t_grid.empty()) throw DomainError("simulate_feller_exact: empty grid");
  for (std::size_t i = 1; i < t_grid.size(); ++i) {
    if (!(t_grid[i] > t_grid[i - 1])) {
      throw DomainError("simulate_feller_exact: grid must be increasing");
    }
  }
  if (!(t_grid.front() >= 0.0)) {
    throw DomainError("simulate_feller_exact: grid must start at >= 0");
  }

  PathBuilder out;
  out.start(0.0, x0);
  double y = x0;
  double t = 0.0;
  if (beta == 0.0 && y == 0.0) out.p.extinct_at = 0.0;

  for (double tg : t_grid) {
    if (tg == 0.0) continue;
    const double h = tg - t;
    double y_new;
    if (y == 0.0 && beta == 0.0) {
      y_new = 0.0;
    } else {
      y_new = feller_exact_step(c, b, beta, y, h, s);
    }
    if (y_new == 0.0 && beta == 0.0 && !out.p.extinct_at) {
      out.p.extinct_at = tg;
    }
    out.push(tg, y_new, 0.5 * (y + y_new) * h);
    y = y_new;
    t = tg;
  }
  return std::move(out.p);
}

SamplePath simulate_levy(const mech::BranchingMechanism& phi, double x0,
                         double T, const EulerOptions& opts,
                         rng::RandomStream& s) {
  if (!(opts.dt > 0.0) || !(opts.eps_jump > 0.0)) {
    throw DomainError("simulate_levy: dt and eps_jump must be > 0");
  }
  if (!(x0 >= 0.0) || !(T > 0.0)) {
    throw DomainError("simulate_levy: x0 >= 0 and T > 0 required");
  }

  const auto& m = phi.jump_measure();
  const double b = phi.linear();
  const double c = phi.diffusion();
  const double m_mass = m.is_null() ? 0.0 : m.mass_above(opts.eps_jump);
  const double m_mean = m.is_null() ? 0.0 : m.mean_above(opts.eps_jump);
  const double m_var = m.is_null() ? 0.0 : m.second_moment_below(opts.eps_jump);

  PathBuilder out;
  out.start(0.0, x0);
  double y = x0;
  double t = 0.0;
  bool stopped = y == 0.0;
  if (stopped) out.p.extinct_at = 0.0;

  const auto n_steps = static_cast<std::int64_t>(std::ceil(T / opts.dt));
  for (std::int64_t step = 0; step < n_steps; ++step) {
    const double h = std::min(opts.dt, T - t);
    if (stopped) {
      out.push(t + h, 0.0, 0.0);
      t += h;
      continue;
    }

    double y_cont = y - b * h - m_mean * h;
    if (c > 0.0) y_cont += std::sqrt(2.0 * c * h) * rng::normal(s);
    if (opts.small_jump_gaussian && m_var > 0.0) {
      y_cont += std::sqrt(m_var * h) * rng::normal(s);
    }
    const JumpBatch jumps =
        draw_jumps(m, opts.eps_jump, m_mass, t, h, out.p, s);

    const double integral_inc = 0.5 * (y + std::max(y_cont, 0.0)) * h +
                                jumps.weighted_tail;
    double y_new = y_cont + jumps.total;
    if (y_new <= 0.0) {
      y_new = 0.0;
      stopped = true;
      out.p.extinct_at = t + h;
    }
    out.push(t + h, y_new, integral_inc);
    y = y_new;
    t += h;
  }
  return std::move(out.p);
}

SamplePath lamperti_forward(const SamplePath& p, double dt_new) {
  const std::size_t n = p.times.size();
  if (n < 2) throw DomainError("lamperti_forward: path needs >= 2 nodes");
  const double total = p.cum_integral.back();

  PathBuilder out;
  out.start(0.0, p.values.front());
  if (!(total > 0.0)) {
    if (p.extinct_at) out.p.extinct_at = 0.0;
    return std::move(out.p);
  }
  if (!(dt_new > 0.0)) dt_new = total / static_cast<double>(n - 1);

  std::size_t i = 0;  // memoized segment index; targets are increasing
  double prev_tau = 0.0;
  double prev_val = p.values.front();
  for (double tau = dt_new; tau < total; tau += dt_new) {
    while (i + 2 < n && p.cum_integral[i + 1] < tau) ++i;
    const double h = p.times[i + 1] - p.times[i];
    const double yi = p.values[i];
    const double slope = h > 0.0 ? (p.values[i + 1] - yi) / h : 0.0;
    const double rem = tau - p.cum_integral[i];
    double delta;
    if (std::fabs(slope) * h < 1e-14 * std::max(1.0, yi)) {
      delta = yi > 0.0 ? rem / yi : h;
    } else {
      const double disc = std::max(yi * yi + 2.0 * slope * rem, 0.0);
      delta = (-yi + std::sqrt(disc)) / slope;
    }
    delta = std::clamp(delta, 0.0, h);
    const double z = std::max(yi + slope * delta, 0.0);
    out.push(tau, z, 0.5 * (prev_val + z) * (tau - prev_tau));
    prev_tau = tau;
    prev_val = z;
  }
  // The new clock saturates at the total accumulated integral.
  const double z_end = p.extinct_at ? 0.0 : p.values.back();
  out.push(total, z_end, 0.5 * (prev_val + z_end) * (total - prev_tau));
  if (p.extinct_at) out.p.extinct_at = total;
  return std::move(out.p);
}

SamplePath lamperti_inverse(const SamplePath& p, double dt_new) {
  const std::size_t n = p.times.size();
  if (n < 2) throw DomainError("lamperti_inverse: path needs >= 2 nodes");

  // Accumulated integral of 1/Z up to each node, stopping at absorption.
  std::vector<double> recip_int(n, 0.0);
  std::size_t last = n - 1;
  bool reached_zero = false;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double y0 = p.values[i];
    const double y1 = p.values[i + 1];
    const double h = p.times[i + 1] - p.times[i];
    if (y0 <= 1e-12) {
      // Only valid as the absorption point: everything after must be zero.
      for (std::size_t j = i; j < n; ++j) {
        if (p.values[j] > 1e-12) {
          throw NumericError(
              "lamperti_inverse: path value below 1e-12 before absorption");
        }
      }
      last = i;
      reached_zero = true;
      break;
    }
    if (y1 <= 1e-12) {
      // Left-rectangle on the dying segment.
      recip_int[i + 1] = recip_int[i] + h / y0;
    } else {
      recip_int[i + 1] = recip_int[i] + 0.5 * (1.0 / y0 + 1.0 / y1) * h;
    }
  }
  if (!reached_zero && p.extinct_at) reached_zero = true;
  const double total = recip_int[last];

  PathBuilder out;
  out.start(0.0, p.values.front());
  if (!(total > 0.0)) {
    if (reached_zero) out.p.extinct_at = 0.0;
    return std::move(out.p);
  }
  if (!(dt_new > 0.0)) dt_new = total / static_cast<double>(n - 1);

  std::size_t i = 0;
  double prev_tau = 0.0;
  double prev_val = p.values.front();
  for (double tau = dt_new; tau < total; tau += dt_new) {
    while (i + 1 < last && recip_int[i + 1] < tau) ++i;
    const double seg = recip_int[i + 1] - recip_int[i];
    // theta(tau) lands at fraction frac of the segment; the path value is
    // interpolated at the same fraction.
    const double frac = seg > 0.0 ? (tau - recip_int[i]) / seg : 1.0;
    const double x =
        p.values[i] + frac * (p.values[i + 1] - p.values[i]);
    out.push(tau, std::max(x, 0.0), 0.5 * (prev_val + x) * (tau - prev_tau));
    prev_tau = tau;
    prev_val = x;
  }
  const double x_end = reached_zero ? 0.0 : p.values[last];
  out.push(total, x_end, 0.5 * (prev_val + x_end) * (total - prev_tau));
  if (reached_zero) out.p.extinct_at = total;
  return std::move(out.p);
}

SamplePath excursion_reconstruct_feller(double c, double b, double x,
                                        double t0,
                                        std::span<const double> t_grid,
                                        rng::RandomStream& s) {
  if (!(c > 0.0)) throw DomainError("excursion_reconstruct_feller: c > 0");
  if (!(t0 > 0.0)) throw DomainError("excursion_reconstruct_feller: t0 > 0");
  if (!(x >= 0.0)) throw DomainError("excursion_reconstruct_feller: x >= 0");
  if (t_grid.empty() || !(t_grid.front() >= t0)) {
    throw DomainError(
        "excursion_reconstruct_feller: grid must start at or after t0");
  }

  const double q0 = cumulant::stable_qfactor(b, 1.0, t0);
  const double vbar_t0 = std::exp(-b * t0) / (c * q0);
  const double exc_mean = c * q0;

  const std::int64_t count = rng::sample_poisson(s, x * vbar_t0);
  std::vector<double> states(static_cast<std::size_t>(count));
  double sum = 0.0;
  for (auto& v : states) {
    v = exc_mean * rng::exponential(s);
    sum += v;
  }

  PathBuilder out;
  out.p.times.push_back(t0);
  out.p.values.push_back(sum);
  out.p.cum_integral.push_back(0.0);
  if (sum == 0.0) out.p.extinct_at = t0;

  double t = t0;
  double prev_sum = sum;
  for (double tg : t_grid) {
    if (tg <= t) continue;
    const double h = tg - t;
    sum = 0.0;
    for (auto& v : states) {
      if (v > 0.0) v = feller_exact_step(c, b, 0.0, v, h, s);
      sum += v;
    }
    if (sum == 0.0 && !out.p.extinct_at) out.p.extinct_at = tg;
    out.push(tg, sum, 0.5 * (prev_sum + sum) * h);
    prev_sum = sum;
    t = tg;
  }
  return std::move(out.p);
}

SamplePath immigration_reconstruct_feller(double c, double b,
                                          const mech::ImmigrationMechanism& psi,
                                          double t0,
                                          std::span<const double> t_grid,
                                          double eps_jump,
                                          rng::RandomStream& s) {
  if (!(c > 0.0)) throw DomainError("immigration_reconstruct_feller: c > 0");
  if (!(t0 > 0.0)) throw DomainError("immigration_reconstruct_feller: t0 > 0");
  if (t_grid.empty()) {
    throw DomainError("immigration_reconstruct_feller: empty grid");
  }
  const double T = t_grid.back();
  const double beta = psi.drift();

  PathBuilder out;
  out.start(0.0, 0.0);
  if (psi.is_null()) {
    for (double tg : t_grid) {
      if (tg > 0.0) out.push(tg, 0.0, 0.0);
    }
    out.p.extinct_at = 0.0;
    return std::move(out.p);
  }

  const double q0 = cumulant::stable_qfactor(b, 1.0, t0);
  const double vbar_t0 = std::exp(-b * t0) / (c * q0);
  const double exc_mean = c * q0;

  struct Excursion {
    double t_cur;
    double value;
  };
  std::vector<Excursion> alive;

  // Event stream: beta-cohorts materializing at multiples of t0, plus
  // compound Poisson arrivals from the jump measure n.
  struct Event {
    double time;
    double value;  // initial excursion value
  };
  std::vector<Event> events;
  if (beta > 0.0) {
    const auto n_slots = static_cast<std::int64_t>(std::floor(T / t0 + 1e-12));
    for (std::int64_t j = 1; j <= n_slots; ++j) {
      const std::int64_t k = rng::sample_poisson(s, beta * t0 * vbar_t0);
      for (std::int64_t i = 0; i < k; ++i) {
        events.push_back(Event{static_cast<double>(j) * t0,
                               exc_mean * rng::exponential(s)});
      }
    }
  }
  const auto& n = psi.jump_measure();
  if (!n.is_null()) {
    const double n_eps = std::isfinite(n.mass_above(0.0)) ? 0.0 : eps_jump;
    const double rate = n.mass_above(n_eps);
    const std::int64_t arrivals = rng::sample_poisson(s, rate * T);
    for (std::int64_t i = 0; i < arrivals; ++i) {
      const double tau = rng::uniform01(s) * T;
      const double v0 = n.sample_jump_above(n_eps, s);
      events.push_back(Event{tau, v0});
      out.p.jumps.emplace_back(tau, v0);
    }
  }
  std::sort(events.begin(), events.end(),
            [](const Event& a, const Event& b2) { return a.time < b2.time; });

  std::size_t next_event = 0;
  double prev_t = 0.0;
  double prev_sum = 0.0;
  for (double tg : t_grid) {
    if (!(tg > prev_t) && tg != 0.0) {
      throw DomainError("immigration_reconstruct_feller: grid must increase");
    }
    if (tg == 0.0) continue;
    // Evolve everything alive to tg, admitting events along the way.
    for (auto& e : alive) {
      if (e.value > 0.0) {
        e.value = feller_exact_step(c, b, 0.0, e.value, tg - e.t_cur, s);
      }
      e.t_cur = tg;
    }
    while (next_event < events.size() && events[next_event].time <= tg) {
      const auto& ev = events[next_event++];
      double v = ev.value;
      if (tg > ev.time && v > 0.0) {
        v = feller_exact_step(c, b, 0.0, v, tg - ev.time, s);
      }
      alive.push_back(Excursion{tg, v});
    }
    double sum = 0.0;
    for (const auto& e : alive) sum += e.value;
    // Sub-resolution beta contributions: exact Gamma snapshot over the
    // window since the last materialized slot.
    if (beta > 0.0) {
      const double u = tg - t0 * std::floor(tg / t0 + 1e-12);
      if (u > 1e-12 * t0) {
        const double qu = cumulant::stable_qfactor(b, 1.0, u);
        sum += rng::sample_gamma(s, beta / c, 1.0 / (c * qu));
      }
    }
    out.push(tg, sum, 0.5 * (prev_sum + sum) * (tg - prev_t));
    prev_t = tg;
    prev_sum = sum;
  }
  return std::move(out.p);
}

}  // namespace cbi::paths
