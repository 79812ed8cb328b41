#include "pekar/gaussian_gas.hpp"

#include <cmath>

namespace pekar {

GaussianDiagonal mehler_density(int n_modes, double alpha, double h, double h_prime) {
  if (!(0 < h_prime && h_prime < h)) throw ComputeError("mehler_density: need 0 < h' < h");
  if (alpha < 1.0) throw ComputeError("mehler_density: need alpha >= 1");
  GaussianDiagonal d;
  d.n_modes = n_modes;
  d.alpha = alpha;
  d.h = h;
  d.h_prime = h_prime;
  double x = std::pow(alpha, h - h_prime);
  d.w = std::tanh(0.5 * x);
  d.log_geometric = -n_modes * std::log1p(-std::exp(-x));
  d.log_exponential = std::pow(alpha, 2.0 - h_prime);
  d.log_gauss_norm = 0.5 * n_modes * std::log(alpha * alpha * d.w / M_PI);
  return d;
}

namespace {

// eigenvalues of (beta'/w) A^2 with the spectral-radius guard
DVec deformation_spectrum(const TailQuery& q, const GaussianDiagonal& d, double beta_prime) {
  Eigen::SelfAdjointEigenSolver<DMat> es(q.A);
  DVec s = es.eigenvalues();
  for (int i = 0; i < s.size(); ++i) {
    if (s[i] < -1e-10) throw ComputeError("gaussian_tail: deformation not PSD");
    double m = beta_prime / d.w * s[i] * s[i];
    if (m >= 1.0)
      throw ComputeError("gaussian_tail: spectral radius violated by eigenvalue " +
                         std::to_string(s[i]));
  }
  return s;
}

}  // namespace

double gaussian_tail(const TailQuery& q, const GaussianDiagonal& d, double beta_prime) {
  DVec s = deformation_spectrum(q, d, beta_prime);
  double a2 = d.alpha * d.alpha;
  double tr_inv = 0.0, logdet = 0.0;
  for (int i = 0; i < s.size(); ++i) {
    double m = beta_prime / d.w * s[i] * s[i];
    tr_inv += 1.0 / (1.0 - m);
    logdet += std::log1p(-m);
  }
  double log_bound = d.log_geometric + d.log_exponential +
                     std::log((d.w + tr_inv / a2) / d.w) - 0.5 * logdet -
                     beta_prime * q.eps * q.eps * a2;
  return std::exp(log_bound);
}

std::pair<double, double> gaussian_tail_mc(const TailQuery& q, const GaussianDiagonal& d,
                                           int samples, uint64_t seed) {
  int N = d.n_modes;
  double a2w = d.alpha * d.alpha * d.w;
  double sdev = 1.0 / std::sqrt(2.0 * a2w);
  // the Gaussian-normalization prefactor cancels against the sampler weight;
  // what remains is geometric * exponential * E[indicator * (1 + |l|^2)]
  std::vector<double> vals(samples);
  parallel_for(samples, [&](std::size_t sidx) {
    Rng rng = Rng::stream(seed, sidx);
    DVec lam(N);
    for (int i = 0; i < N; ++i) lam[i] = sdev * rng.normal();
    double t = (q.A * lam).norm();
    vals[sidx] = (t >= q.eps) ? (1.0 + lam.squaredNorm()) : 0.0;
  });
  double mean = 0, var = 0;
  for (double v : vals) mean += v;
  mean /= samples;
  for (double v : vals) var += (v - mean) * (v - mean);
  var /= std::max(1, samples - 1);
  double scale = std::exp(d.log_geometric + d.log_exponential);
  return {scale * mean, scale * std::sqrt(var / samples)};
}

double gaussian_tail_rank1(const DVec& zeta, double eps, const GaussianDiagonal& d) {
  int N = d.n_modes;
  double c = d.alpha * d.alpha * d.w;
  double a = eps / zeta.norm();
  // marginal along zeta: sqrt(c/pi) e^{-c u^2}; orthogonal modes contribute
  // (N-1)/(2c) to the expected |lambda|^2
  double erfc_term = std::erfc(std::sqrt(c) * a);
  double I2 = a * std::exp(-c * a * a) / std::sqrt(M_PI * c) + erfc_term / (2.0 * c);
  double integral = erfc_term * (1.0 + (N - 1) / (2.0 * c)) + I2;
  return std::exp(d.log_geometric + d.log_exponential) * integral;
}

CondensationTailReport condensation_tail_experiment(const CondensationTailConfig& cfg) {
  CondensationTailReport rep;
  int N = cfg.n_modes;

  // normalized Hermite-function recurrence h_n(u), orthonormal on du
  auto hermite_sq = [](int n, double u) {
    double h0 = std::pow(M_PI, -0.25) * std::exp(-0.5 * u * u);
    if (n == 0) return h0 * h0;
    double h1 = std::sqrt(2.0) * u * h0;
    for (int k = 2; k <= n; ++k) {
      double h2 = std::sqrt(2.0 / k) * u * h1 - std::sqrt((k - 1.0) / k) * h0;
      h0 = h1;
      h1 = h2;
    }
    return h1 * h1;
  };

  for (double alpha : cfg.alphas) {
    int K = static_cast<int>(std::floor(std::pow(alpha, 2.0 - cfg.h)));
    double scale = std::sqrt(2.0) * alpha;  // u = scale * lambda
    double p_geo = cfg.thermal_mean / (1.0 + cfg.thermal_mean);

    double te = 0, td = 0, tz = 0, mass = 0;
    int exceed = 0;
    std::vector<double> acc_e(cfg.trials), acc_d(cfg.trials), acc_z(cfg.trials);
    parallel_for(cfg.trials, [&, K](std::size_t t) {
      Rng rng = Rng::stream(cfg.seed ^ static_cast<uint64_t>(alpha * 1000), t);
      // occupations: per-mode geometric conditioned on the number cutoff
      std::vector<int> occ(N);
      for (;;) {
        int tot = 0;
        for (int i = 0; i < N; ++i) {
          int n = 0;
          while (rng.uniform() < p_geo) ++n;
          occ[i] = n;
          tot += n;
        }
        if (tot <= K) break;
      }
      // lambda_i sampled from |h_{n_i}|^2 by rejection from a wide Gaussian;
      // the envelope M covers sup|h_n|^2 <= 0.6 over the oscillatory window
      DVec lam(N);
      for (int i = 0; i < N; ++i) {
        int n = occ[i];
        double s2 = 2.0 * n + 2.0;
        double M = 8.0 * std::sqrt(s2);
        for (;;) {
          double u = std::sqrt(s2) * rng.normal();
          double q = std::exp(-u * u / (2 * s2)) / std::sqrt(2 * M_PI * s2);
          double p = hermite_sq(n, u);
          if (p > M * q) throw ComputeError("condensation experiment: envelope breach");
          if (rng.uniform() < p / (M * q)) {
            lam[i] = u / scale;
            break;
          }
        }
      }
      double weight = 1.0 + lam.squaredNorm();
      double ne = lam.norm();
      double nd = 0.0;
      for (const auto& A : cfg.gram_ops) nd = std::max(nd, (A * lam).norm());
      double nz = cfg.zeta.size() == N ? std::abs(cfg.zeta.dot(lam)) : 0.0;
      acc_e[t] = ne >= cfg.eps ? weight : 0.0;
      acc_d[t] = (!cfg.gram_ops.empty() && nd >= cfg.eps) ? weight : 0.0;
      acc_z[t] = (cfg.zeta.size() == N && nz >= cfg.eps) ? weight : 0.0;
    });
    for (int t = 0; t < cfg.trials; ++t) {
      te += acc_e[t];
      td += acc_d[t];
      tz += acc_z[t];
      mass += 1.0;
      if (acc_d[t] > 0 && acc_e[t] == 0) ++exceed;
    }
    rep.alphas.push_back(alpha);
    rep.tail_euclid.push_back(te / mass);
    rep.tail_diamond.push_back(td / mass);
    rep.tail_zeta.push_back(tz / mass);
    rep.diamond_exceeds_euclid += exceed;
  }

  auto fit_against_alpha2 = [&](const std::vector<double>& tails) {
    std::vector<double> x, y;
    for (std::size_t i = 0; i < tails.size(); ++i) {
      if (tails[i] <= 0) continue;
      x.push_back(rep.alphas[i] * rep.alphas[i]);
      y.push_back(std::log(tails[i]));
    }
    return fit_line(x, y);
  };
  rep.fit_euclid = fit_against_alpha2(rep.tail_euclid);
  rep.fit_diamond = fit_against_alpha2(rep.tail_diamond);
  rep.fit_zeta = fit_against_alpha2(rep.tail_zeta);
  return rep;
}

}  // namespace pekar
