#include "dipasm/spectrum.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

namespace dipasm {

namespace {

constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double normal_pdf(double x, double mu, double s) {
  double z = (x - mu) / s;
  return kInvSqrt2Pi / s * std::exp(-0.5 * z * z);
}

using Vec5 = Eigen::Matrix<double, 5, 1>;
using Mat5 = Eigen::Matrix<double, 5, 5>;

// Parameter order: d, sigma_full, sigma_half, amp_full, amp_half.
double model(const Vec5& p, double x) {
  return p[3] * normal_pdf(x, p[0], p[1]) + p[4] * normal_pdf(x, 0.5 * p[0], p[2]);
}

Vec5 gradient(const Vec5& p, double x) {
  const double d = p[0], sf = p[1], sh = p[2], af = p[3], ah = p[4];
  const double p1 = normal_pdf(x, d, sf);
  const double p2 = normal_pdf(x, 0.5 * d, sh);
  const double u1 = x - d, u2 = x - 0.5 * d;
  Vec5 g;
  g[0] = af * p1 * u1 / (sf * sf) + 0.5 * ah * p2 * u2 / (sh * sh);
  g[1] = af * p1 * (u1 * u1 / (sf * sf * sf) - 1.0 / sf);
  g[2] = ah * p2 * (u2 * u2 / (sh * sh * sh) - 1.0 / sh);
  g[3] = p1;
  g[4] = p2;
  return g;
}

void clamp_params(Vec5& p, double lo, double hi) {
  p[0] = std::clamp(p[0], lo, hi);
  p[1] = std::clamp(p[1], 0.3, std::max(0.6, p[0]));
  p[2] = std::clamp(p[2], 0.3, std::max(0.6, p[0]));
  p[3] = std::max(p[3], 0.0);
  p[4] = std::max(p[4], 0.0);
}

}  // namespace

void KmerHistogram::merge(const KmerHistogram& other) {
  if (k == 0) k = other.k;
  for (const auto& [f, n] : other.counts_at_freq) counts_at_freq[f] += n;
}

std::uint64_t KmerHistogram::distinct_kmers() const {
  std::uint64_t s = 0;
  for (const auto& [f, n] : counts_at_freq) s += n;
  return s;
}

std::uint64_t KmerHistogram::total_kmers_with_multiplicity() const {
  std::uint64_t s = 0;
  for (const auto& [f, n] : counts_at_freq) s += f * n;
  return s;
}

std::uint64_t error_floor(const KmerHistogram& hist) {
  if (hist.empty()) return 0;
  std::uint64_t max_f = hist.counts_at_freq.rbegin()->first;
  for (std::uint64_t x = 1; x < max_f; ++x) {
    if (hist.at(x + 1) > hist.at(x)) return x;
  }
  return max_f;
}

SpectrumFit fit_two_gaussians(const KmerHistogram& hist) {
  if (hist.empty()) throw FitError("empty histogram");
  const std::uint64_t floor = error_floor(hist);
  std::uint64_t peak = 0, peak_count = 0;
  for (auto it = hist.counts_at_freq.upper_bound(floor); it != hist.counts_at_freq.end(); ++it) {
    if (it->second > peak_count) {
      peak = it->first;
      peak_count = it->second;
    }
  }
  if (peak == 0 || peak < 2) throw FitError("no peak above the error floor");

  const double d0 = static_cast<double>(peak);
  const auto x_lo = static_cast<std::uint64_t>(std::floor(d0 / 4.0)) + 1;
  const auto x_hi = static_cast<std::uint64_t>(std::ceil(2.0 * d0));
  // Residuals are weighted by the Poisson noise of each count.
  std::vector<double> xs, ys, ws;
  for (std::uint64_t x = x_lo; x <= x_hi; ++x) {
    xs.push_back(static_cast<double>(x));
    ys.push_back(static_cast<double>(hist.at(x)));
    ws.push_back(1.0 / std::max(ys.back(), 1.0));
  }
  if (xs.size() < 6) throw FitError("too few histogram points above the error floor");

  Vec5 p;
  p[0] = d0;
  p[1] = std::sqrt(d0);
  p[2] = std::sqrt(d0 / 2.0);
  p[3] = static_cast<double>(peak_count) * p[1] / kInvSqrt2Pi;
  double half_obs = static_cast<double>(hist.at(static_cast<std::uint64_t>(std::llround(d0 / 2.0))));
  double half_excess = std::max(0.0, half_obs - p[3] * normal_pdf(d0 / 2.0, d0, p[1]));
  p[4] = half_excess * p[2] / kInvSqrt2Pi;
  const double d_lo = static_cast<double>(x_lo), d_hi = static_cast<double>(x_hi);
  clamp_params(p, d_lo, d_hi);

  auto sse = [&](const Vec5& q) {
    double s = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      double r = ys[i] - model(q, xs[i]);
      s += ws[i] * r * r;
    }
    return s;
  };

  double lambda = 1e-3;
  double cur = sse(p);
  int iter = 0;
  bool converged = false;
  for (; iter < 1000; ++iter) {
    Mat5 jtj = Mat5::Zero();
    Vec5 jtr = Vec5::Zero();
    for (std::size_t i = 0; i < xs.size(); ++i) {
      Vec5 g = gradient(p, xs[i]);
      double r = ys[i] - model(p, xs[i]);
      jtj += ws[i] * g * g.transpose();
      jtr += ws[i] * g * r;
    }
    bool improved = false;
    for (int attempt = 0; attempt < 30 && !improved; ++attempt) {
      Mat5 a = jtj;
      for (int j = 0; j < 5; ++j) a(j, j) += lambda * std::max(jtj(j, j), 1e-12);
      Vec5 step = a.ldlt().solve(jtr);
      if (!step.allFinite()) {
        lambda *= 10;
        continue;
      }
      Vec5 cand = p + step;
      clamp_params(cand, d_lo, d_hi);
      double next = sse(cand);
      if (next <= cur) {
        double rel = (cur - next) / std::max(cur, 1e-300);
        double move = ((cand - p).array().abs() / (p.array().abs() + 1e-9)).maxCoeff();
        p = cand;
        cur = next;
        lambda = std::max(lambda / 10, 1e-12);
        improved = true;
        if (rel < 1e-14 || move < 1e-12) converged = true;
      } else {
        lambda *= 10;
      }
    }
    if (!improved) {
      // No descent direction left: at a (local) minimum.
      converged = true;
    }
    if (converged) break;
  }
  if (!converged || !p.allFinite()) throw FitError("two-Gaussian fit did not converge");
  if (p[0] <= 0) throw FitError("fitted peak is not positive");

  SpectrumFit fit;
  fit.d_max = p[0];
  fit.sigma_full = p[1];
  fit.sigma_half = p[2];
  fit.amp_full = p[3];
  fit.amp_half = p[4];
  double plain = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) plain += std::pow(ys[i] - model(p, xs[i]), 2);
  fit.residual_rms = std::sqrt(plain / static_cast<double>(xs.size()));
  fit.iterations = iter;
  return fit;
}

double two_gaussian_model(const SpectrumFit& fit, double x, bool full, bool half) {
  double v = 0;
  if (full) v += fit.amp_full * normal_pdf(x, fit.d_max, fit.sigma_full);
  if (half) v += fit.amp_half * normal_pdf(x, 0.5 * fit.d_max, fit.sigma_half);
  return v;
}

double estimate_heterozygosity(const SpectrumFit& fit, int k, double genome_size) {
  if (genome_size <= 0 || k <= 0) return 0.0;
  return fit.amp_half / (2.0 * k * genome_size);
}

double estimate_genome_size(const KmerHistogram& hist, double d_max) {
  if (d_max <= 0) return 0.0;
  double mass = 0;
  for (const auto& [f, n] : hist.counts_at_freq) {
    if (static_cast<double>(f) > d_max / 4.0) mass += static_cast<double>(f) * static_cast<double>(n);
  }
  return mass / d_max;
}

double cumulative_unique_fraction(const KmerHistogram& hist, double d_max, double threshold_ratio) {
  double retained = 0, below = 0;
  for (const auto& [f, n] : hist.counts_at_freq) {
    double x = static_cast<double>(f);
    if (x <= d_max / 4.0) continue;
    retained += static_cast<double>(n);
    if (x <= threshold_ratio * d_max) below += static_cast<double>(n);
  }
  return retained > 0 ? below / retained : 0.0;
}

double nominal_depth(std::uint64_t num_reads, int read_length, int k, double genome_size) {
  if (genome_size <= 0 || read_length < k) return 0.0;
  return static_cast<double>(num_reads) * (read_length - k + 1) / genome_size;
}

SpectrumFit analyze_spectrum(const KmerHistogram& hist, const SpectrumOptions& opts) {
  SpectrumFit fit = fit_two_gaussians(hist);
  fit.genome_size_est = estimate_genome_size(hist, fit.d_max);
  double g = opts.genome_size.value_or(fit.genome_size_est);
  fit.het_rate = estimate_heterozygosity(fit, hist.k, g);
  fit.unique_fraction = cumulative_unique_fraction(hist, fit.d_max, opts.unique_ratio);
  if (opts.num_reads > 0 && opts.read_length > 0) fit.d0_nominal = nominal_depth(opts.num_reads, opts.read_length, hist.k, g);
  return fit;
}

void write_histogram(std::ostream& out, const KmerHistogram& hist) {
  for (const auto& [f, n] : hist.counts_at_freq) out << f << '\t' << n << '\n';
}

KmerHistogram read_histogram(std::istream& in) {
  KmerHistogram h;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::uint64_t f = 0, n = 0;
    if (!(ss >> f >> n)) throw std::runtime_error("malformed histogram line: " + line);
    h.add(f, n);
  }
  return h;
}

void write_spectrum_report(std::ostream& out, const KmerHistogram& hist, const SpectrumFit& fit) {
  out << "k=" << hist.k << '\n'
      << "distinct_kmers=" << hist.distinct_kmers() << '\n'
      << "total_kmers=" << hist.total_kmers_with_multiplicity() << '\n'
      << "d_max=" << fit.d_max << '\n'
      << "sigma_full=" << fit.sigma_full << '\n'
      << "sigma_half=" << fit.sigma_half << '\n'
      << "amp_full=" << fit.amp_full << '\n'
      << "amp_half=" << fit.amp_half << '\n'
      << "het_rate=" << fit.het_rate << '\n'
      << "genome_size_est=" << fit.genome_size_est << '\n'
      << "unique_fraction=" << fit.unique_fraction << '\n'
      << "d0_nominal=" << fit.d0_nominal << '\n'
      << "fit_residual_rms=" << fit.residual_rms << '\n';
}

void write_spectrum_panel(std::ostream& out, const KmerHistogram& hist) {
  out << "# k=" << hist.k << "\nfrequency\tdistinct_kmers\n";
  write_histogram(out, hist);
}

void write_fit_panel(std::ostream& out, const KmerHistogram& hist, const SpectrumFit& fit) {
  out << "frequency\tobserved\tfull_component\thalf_component\tmodel\n";
  auto hi = static_cast<std::uint64_t>(std::ceil(2.5 * fit.d_max));
  for (std::uint64_t x = 1; x <= hi; ++x) {
    double xd = static_cast<double>(x);
    out << x << '\t' << hist.at(x) << '\t' << two_gaussian_model(fit, xd, true, false) << '\t'
        << two_gaussian_model(fit, xd, false, true) << '\t' << two_gaussian_model(fit, xd, true, true) << '\n';
  }
}

void write_cumulative_panel(std::ostream& out, const KmerHistogram& hist, double d_max) {
  out << "scaled_depth\tcumulative_distinct_fraction\tcumulative_kmer_fraction\n";
  double retained = 0, mass = 0;
  for (const auto& [f, n] : hist.counts_at_freq) {
    if (static_cast<double>(f) <= d_max / 4.0) continue;
    retained += static_cast<double>(n);
    mass += static_cast<double>(f) * static_cast<double>(n);
  }
  if (retained == 0) return;
  double cd = 0, cm = 0;
  for (const auto& [f, n] : hist.counts_at_freq) {
    if (static_cast<double>(f) <= d_max / 4.0) continue;
    cd += static_cast<double>(n);
    cm += static_cast<double>(f) * static_cast<double>(n);
    out << static_cast<double>(f) / d_max << '\t' << cd / retained << '\t' << cm / mass << '\n';
  }
}

}  // namespace dipasm
