#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <utility>

#include "dipasm/kmer.hpp"

namespace dipasm {

/// Number of distinct k-mers observed exactly x times, for each x >= 1.
struct KmerHistogram {
  int k = 0;
  std::map<std::uint64_t, std::uint64_t> counts_at_freq;

  void add(std::uint64_t freq, std::uint64_t distinct = 1) {
    if (freq > 0 && distinct > 0) counts_at_freq[freq] += distinct;
  }
  void merge(const KmerHistogram& other);

  std::uint64_t at(std::uint64_t freq) const {
    auto it = counts_at_freq.find(freq);
    return it == counts_at_freq.end() ? 0 : it->second;
  }
  std::uint64_t distinct_kmers() const;
  std::uint64_t total_kmers_with_multiplicity() const;
  bool empty() const { return counts_at_freq.empty(); }

  bool operator==(const KmerHistogram&) const = default;
};

template <typename Range>
KmerHistogram build_histogram(const Range& kmer_counts, int k = 0) {
  KmerHistogram h;
  h.k = k;
  for (const auto& [kmer, count] : kmer_counts) h.add(static_cast<std::uint64_t>(count));
  return h;
}

class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SpectrumFit {
  double d_max = 0;
  double sigma_full = 0;
  double sigma_half = 0;
  double amp_full = 0;  // distinct k-mers under the full-depth component
  double amp_half = 0;  // distinct k-mers under the half-depth component
  double residual_rms = 0;
  int iterations = 0;

  // Filled by analyze_spectrum.
  double het_rate = 0;
  double genome_size_est = 0;
  double unique_fraction = 0;
  double d0_nominal = 0;
};

/// Least-squares fit of A_full*N(d, s_full) + A_half*N(d/2, s_half) to the
/// histogram above the error floor. Throws FitError when no peak is found
/// or the optimizer fails to converge.
SpectrumFit fit_two_gaussians(const KmerHistogram& hist);

/// First local minimum of the histogram starting at frequency 1; frequencies
/// at or below it are treated as error k-mers for peak initialization.
std::uint64_t error_floor(const KmerHistogram& hist);

double two_gaussian_model(const SpectrumFit& fit, double x, bool full, bool half);

/// Heterozygous sites per base: amp_half / (2k * genome_size).
double estimate_heterozygosity(const SpectrumFit& fit, int k, double genome_size);

/// Multiplicity-weighted k-mer mass above d_max/4, divided by d_max.
double estimate_genome_size(const KmerHistogram& hist, double d_max);

/// Fraction of retained distinct k-mers (frequency > d_max/4) whose
/// frequency is at most threshold_ratio * d_max.
double cumulative_unique_fraction(const KmerHistogram& hist, double d_max, double threshold_ratio);

/// Nominal full depth N(L-k+1)/G.
double nominal_depth(std::uint64_t num_reads, int read_length, int k, double genome_size);

struct SpectrumOptions {
  double unique_ratio = 1.5;
  std::optional<double> genome_size;  // when known; otherwise the estimate is used
  std::uint64_t num_reads = 0;
  int read_length = 0;
};

/// Runs the fit and fills the derived quantities.
SpectrumFit analyze_spectrum(const KmerHistogram& hist, const SpectrumOptions& opts = {});

void write_histogram(std::ostream& out, const KmerHistogram& hist);
KmerHistogram read_histogram(std::istream& in);
void write_spectrum_report(std::ostream& out, const KmerHistogram& hist, const SpectrumFit& fit);
/// Plot-ready tables: raw spectrum, fit components, cumulative distribution.
void write_spectrum_panel(std::ostream& out, const KmerHistogram& hist);
void write_fit_panel(std::ostream& out, const KmerHistogram& hist, const SpectrumFit& fit);
void write_cumulative_panel(std::ostream& out, const KmerHistogram& hist, double d_max);

}  // namespace dipasm
