#pragma once

// Monte Carlo oracle for both recursions. Replication r draws from its own
// mt19937_64 stream seeded with (seed, r); results are merged in replication
// order so estimates do not depend on thread scheduling.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <thread>
#include <vector>

#include "mmlindley/model1.hpp"
#include "mmlindley/model2.hpp"
#include "mmlindley/probcore.hpp"

namespace mmlindley {

inline double positive_part(double x) noexcept { return x > 0.0 ? x : 0.0; }
inline double negative_part(double x) noexcept { return x < 0.0 ? x : 0.0; }

struct SimConfig {
  std::uint64_t n_steps = 1000000;  // per replication, burn-in included
  std::uint64_t burn_in = 10000;
  std::uint64_t seed = 20240601;
  int replications = 16;
  std::vector<double> probes{0.5, 1.0, 2.0};
  bool tail = false;  // keep samples and fit the tail slope per replication
  int threads = 0;    // 0: hardware concurrency

  void validate() const {
    if (n_steps == 0) throw InvalidArgument("sim: n_steps must be positive");
    if (burn_in >= n_steps) throw InvalidArgument("sim: burn_in must be below n_steps");
    if (replications < 1) throw InvalidArgument("sim: replications must be at least 1");
    if (tail && replications < 2) throw InvalidArgument("sim: the tail-slope interval needs at least 2 replications");
  }
};

struct VectorEstimate {
  RVector value;
  RVector stderr_;
};

struct TailSlope {
  double slope = 0.0;
  double stderr_ = 0.0;
  double ci_low = 0.0, ci_high = 0.0;  // 95% normal interval from the replication spread
  std::vector<double> per_replication;
};

struct SimEstimate {
  VectorEstimate mean_by_state;                       // E[W 1{Z = i}]
  std::map<double, VectorEstimate> transform_by_state;  // E[exp(-sW) 1{Z = i}]
  VectorEstimate visit_frequencies;
  std::optional<TailSlope> tail_slope;
  std::uint64_t samples_per_replication = 0;
};

/// Least-squares slope of log P(W > x) on 50 points spanning the 50th to 99th
/// percentile of `samples`.
inline double tail_slope(std::vector<double> samples) {
  if (samples.size() < 100) throw InvalidArgument("insufficient tail mass");
  std::sort(samples.begin(), samples.end());
  const std::size_t n = samples.size();
  const double x50 = samples[n / 2], x99 = samples[static_cast<std::size_t>(0.99 * static_cast<double>(n - 1))];
  const auto lo = std::lower_bound(samples.begin(), samples.end(), x50);
  const auto hi = std::upper_bound(samples.begin(), samples.end(), x99);
  if (!(x99 > x50) || hi - lo < 100) throw InvalidArgument("insufficient tail mass");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const int pts = 50;
  int used = 0;
  for (int k = 0; k < pts; ++k) {
    const double x = x50 + (x99 - x50) * k / (pts - 1);
    const auto above = samples.end() - std::upper_bound(samples.begin(), samples.end(), x);
    if (above <= 0) continue;
    const double y = std::log(static_cast<double>(above) / static_cast<double>(n));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++used;
  }
  if (used < 2) throw InvalidArgument("insufficient tail mass");
  return (used * sxy - sx * sy) / (used * sxx - sx * sx);
}

/// Mean of per-replication slopes with a 95% interval from their spread.
inline TailSlope combine_slopes(std::vector<double> slopes) {
  if (slopes.size() < 2) throw InvalidArgument("tail slope: need at least 2 replications");
  TailSlope out;
  const double k = static_cast<double>(slopes.size());
  for (double s : slopes) out.slope += s / k;
  double var = 0.0;
  for (double s : slopes) var += (s - out.slope) * (s - out.slope);
  out.stderr_ = std::sqrt(var / (k - 1.0) / k);
  out.ci_low = out.slope - 1.96 * out.stderr_;
  out.ci_high = out.slope + 1.96 * out.stderr_;
  out.per_replication = std::move(slopes);
  return out;
}

inline TailSlope tail_decay_estimate(const std::vector<std::vector<double>>& replications) {
  std::size_t total = 0;
  for (const auto& r : replications) total += r.size();
  if (total < 100000) throw InvalidArgument("tail_decay_estimate: need at least 1e5 samples");
  std::vector<double> slopes;
  for (const auto& r : replications) slopes.push_back(tail_slope(r));
  return combine_slopes(std::move(slopes));
}

namespace detail {

struct ReplicationResult {
  RVector w_sum, visits;
  std::vector<RVector> transform_sum;
  std::vector<double> samples;
  std::optional<double> slope;
};

inline Rng replication_stream(std::uint64_t seed, int r) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(r)};
  return Rng(seq);
}

// step(z, w, rng) -> (z', w'); runs one replication of the chain.
template <class Step>
ReplicationResult run_replication(std::size_t n, const SimConfig& cfg, int r, Step&& step) {
  Rng rng = replication_stream(cfg.seed, r);
  ReplicationResult res;
  res.w_sum = RVector::Zero(static_cast<Eigen::Index>(n));
  res.visits = RVector::Zero(static_cast<Eigen::Index>(n));
  res.transform_sum.assign(cfg.probes.size(), RVector::Zero(static_cast<Eigen::Index>(n)));
  if (cfg.tail) res.samples.reserve(cfg.n_steps - cfg.burn_in);
  std::size_t z = 0;
  double w = 0.0;
  for (std::uint64_t k = 0; k < cfg.n_steps; ++k) {
    step(z, w, rng);
    if (k < cfg.burn_in) continue;
    res.w_sum(z) += w;
    res.visits(z) += 1.0;
    for (std::size_t p = 0; p < cfg.probes.size(); ++p) res.transform_sum[p](z) += std::exp(-cfg.probes[p] * w);
    if (cfg.tail) res.samples.push_back(w);
  }
  if (cfg.tail) {
    res.slope = tail_slope(std::move(res.samples));
    res.samples = {};
  }
  return res;
}

inline VectorEstimate summarize(const std::vector<RVector>& per_rep) {
  const auto k = static_cast<double>(per_rep.size());
  VectorEstimate e;
  e.value = RVector::Zero(per_rep.front().size());
  for (const auto& v : per_rep) e.value += v;
  e.value /= k;
  RVector var = RVector::Zero(e.value.size());
  for (const auto& v : per_rep) var += (v - e.value).cwiseAbs2();
  e.stderr_ = k > 1.0 ? (var / (k - 1.0) / k).cwiseSqrt() : RVector(RVector::Zero(e.value.size()));
  return e;
}

template <class MakeStep>
SimEstimate simulate(std::size_t n, const SimConfig& cfg, MakeStep&& make_step) {
  cfg.validate();
  std::vector<ReplicationResult> results(static_cast<std::size_t>(cfg.replications));
  int threads = cfg.threads > 0 ? cfg.threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = std::min(threads, cfg.replications);
  auto worker = [&](int first) {
    for (int r = first; r < cfg.replications; r += threads) results[r] = run_replication(n, cfg, r, make_step());
  };
  if (threads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker, t);
    for (auto& t : pool) t.join();
  }

  const double m = static_cast<double>(cfg.n_steps - cfg.burn_in);
  SimEstimate est;
  est.samples_per_replication = cfg.n_steps - cfg.burn_in;
  std::vector<RVector> means, visits;
  for (const auto& r : results) {
    means.push_back(r.w_sum / m);
    visits.push_back(r.visits / m);
  }
  est.mean_by_state = summarize(means);
  est.visit_frequencies = summarize(visits);
  for (std::size_t p = 0; p < cfg.probes.size(); ++p) {
    std::vector<RVector> tr;
    for (const auto& r : results) tr.push_back(r.transform_sum[p] / m);
    est.transform_by_state[cfg.probes[p]] = summarize(tr);
  }
  if (cfg.tail) {
    std::vector<double> slopes;
    for (const auto& r : results) slopes.push_back(*r.slope);
    est.tail_slope = combine_slopes(std::move(slopes));
  }
  return est;
}

}  // namespace detail

inline SimEstimate simulate_model1(const Model1Spec& spec, const SimConfig& cfg) {
  spec.validate();
  std::vector<PhaseMixture> service, inter;
  for (const auto& s : spec.service) {
    if (!s.mixture()) throw InvalidArgument("simulator needs phase-type service laws");
    service.push_back(*s.mixture());
  }
  for (const auto& a : spec.interarrival) {
    if (!a.mixture()) throw InvalidArgument("simulator needs phase-type interarrival laws");
    inter.push_back(*a.mixture());
  }
  auto make_step = [&]() {
    return [&](std::size_t& z, double& w, Rng& rng) {
      const std::size_t next = spec.chain.next(z, rng);
      const double s = service[z].sample(rng);
      const double a = inter[next].sample(rng);
      const double u = uniform01(rng);
      double v;
      if (u < spec.p1)
        v = 1.0;
      else if (u < spec.p1 + spec.p2)
        v = spec.a;
      else
        v = spec.v_negative.sample(rng);
      w = positive_part(v * w + s - a);
      z = next;
    };
  };
  return detail::simulate(spec.size(), cfg, make_step);
}

/// p3 = 1: W' = [V W + S - A']^+ with V drawn from the negative atoms and A' from a general law.
inline SimEstimate simulate_model1_special(const Model1SpecialSpec& spec, const SimConfig& cfg) {
  spec.validate();
  std::vector<PhaseMixture> service;
  for (const auto& s : spec.service) {
    if (!s.mixture()) throw InvalidArgument("simulator needs phase-type service laws");
    service.push_back(*s.mixture());
  }
  for (const auto& a : spec.interarrival)
    if (!a.has_sampler()) throw InvalidArgument("simulator needs samplers for every interarrival law");
  auto make_step = [&]() {
    return [&](std::size_t& z, double& w, Rng& rng) {
      const std::size_t next = spec.chain.next(z, rng);
      const double s = service[z].sample(rng);
      const double a = spec.interarrival[next].sample(rng);
      w = positive_part(spec.v_negative.sample(rng) * w + s - a);
      z = next;
    };
  };
  return detail::simulate(spec.size(), cfg, make_step);
}

inline SimEstimate simulate_model2(const Model2Spec& spec, const SimConfig& cfg) {
  spec.validate();
  for (std::size_t j = 0; j < spec.size(); ++j)
    if (!spec.beta[j].has_sampler() || !spec.c_star[j].has_sampler())
      throw InvalidArgument("simulator needs samplers for every service and C law");
  auto make_step = [&]() {
    return [&](std::size_t& z, double& w, Rng& rng) {
      const std::size_t next = spec.chain.next(z, rng);
      if (uniform01(rng) < spec.p) {
        const double s = spec.beta[z].sample(rng);
        const double a = exponential_draw(rng, spec.lambda[next]);
        w = positive_part(w + s - a);
      } else {
        const double c = spec.c_star[z].sample(rng);
        const double d = exponential_draw(rng, spec.mu[next]);
        w = positive_part(d - c - w);
      }
      z = next;
    };
  };
  return detail::simulate(spec.size(), cfg, make_step);
}

}  // namespace mmlindley
