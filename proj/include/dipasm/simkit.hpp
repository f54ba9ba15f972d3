#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "dipasm/kmer.hpp"
#include "dipasm/seqio.hpp"

namespace dipasm::sim {

struct RepeatUnit {
  std::size_t length = 0;
  int copies = 2;
  double divergence = 0;  // per-base substitution rate between copies
};

struct GenomeSpec {
  std::size_t length = 0;  // per chromosome
  int chromosomes = 1;
  double gc = 0.5;
  std::vector<RepeatUnit> repeats;
  std::uint64_t seed = 1;
};

struct RepeatPlacement {
  int unit = 0;
  int copy = 0;
  int chrom = 0;
  std::size_t pos = 0;
  std::size_t length = 0;
};

struct Genome {
  std::vector<FastaRecord> chromosomes;
  std::vector<RepeatPlacement> repeats;

  std::size_t total_length() const;
};

Genome generate_genome(const GenomeSpec& spec);

struct DiploidSpec {
  double snv_rate = 0;
  double indel_rate = 0;
  int max_indel = 4;            // indel sizes uniform in [1, max_indel]
  std::size_t min_spacing = 0;  // also kept clear of chromosome ends
  std::uint64_t seed = 1;
};

/// A difference of haplotype B relative to A; `pos` is in A coordinates.
struct Variant {
  int chrom = 0;
  std::size_t pos = 0;
  std::string ref;
  std::string alt;

  bool is_snv() const { return ref.size() == 1 && alt.size() == 1; }
  bool operator==(const Variant&) const = default;
};

struct Diploid {
  std::vector<FastaRecord> hap_a;
  std::vector<FastaRecord> hap_b;
  std::vector<Variant> variants;
};

Diploid diploidize(const std::vector<FastaRecord>& genome, const DiploidSpec& spec);
/// Applies a hand-built variant list (sorted, non-overlapping) to produce haplotype B.
Diploid apply_variants(const std::vector<FastaRecord>& genome, std::vector<Variant> variants);

struct ReadSpec {
  int read_length = 100;
  double insert_mean = 300;
  double insert_sd = 30;
  double coverage = 30;  // total over all haplotypes
  double error_rate = 0;
  int q_min_good = 25, q_max_good = 40;
  int q_min_error = 2, q_max_error = 12;
  std::string prefix = "r";
  std::uint64_t seed = 1;
};

struct ReadOrigin {
  std::string id;
  std::uint8_t pair_slot = 0;
  int hap = 0;
  int chrom = 0;
  std::size_t pos = 0;  // leftmost base on the forward haplotype
  bool reverse = false;
  std::size_t fragment_start = 0;
  std::size_t fragment_length = 0;
};

struct ReadSet {
  std::vector<QualSeq> reads;  // mates adjacent: /1 then /2
  std::vector<ReadOrigin> origins;
};

/// FR pairs: fragments drawn uniformly over all haplotypes (weighted by
/// length), read 1 from the fragment start, read 2 reverse-complemented
/// from its end, fragment strand chosen at random.
ReadSet simulate_reads(const std::vector<std::vector<FastaRecord>>& haplotypes, const ReadSpec& spec);

void write_repeat_truth(std::ostream& out, const Genome& g);
void write_variant_truth(std::ostream& out, const Diploid& d);
void write_read_truth(std::ostream& out, const ReadSet& rs);

}  // namespace dipasm::sim
