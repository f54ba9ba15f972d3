#include "dipasm/kmer.hpp"

#include <algorithm>

namespace dipasm {

std::string reverse_complement(std::string_view seq) {
  std::string out(seq.size(), 'N');
  for (std::size_t i = 0; i < seq.size(); ++i) out[seq.size() - 1 - i] = complement(seq[i]);
  return out;
}

std::string canonical_string(std::string_view seq) {
  std::string rc = reverse_complement(seq);
  return rc < seq ? rc : std::string(seq);
}

int check_k(int k) {
  if (k < 1 || k > Kmer::kMaxK) throw KmerError("k must be between 1 and " + std::to_string(Kmer::kMaxK));
  if (k % 2 == 0) throw KmerError("k must be odd");
  return k;
}

Kmer canonicalize(std::string_view seq, bool* flipped) {
  check_k(static_cast<int>(seq.size()));
  return Kmer::from_string(seq).canonical(flipped);
}

QualSeq QualSeq::reverse_complement() const {
  QualSeq out;
  out.id = id;
  out.pair_slot = pair_slot;
  out.bases = dipasm::reverse_complement(bases);
  out.quals.assign(quals.rbegin(), quals.rend());
  return out;
}

std::vector<KmerOccurrence> enumerate_kmers(const QualSeq& read, int k) {
  std::vector<KmerOccurrence> out;
  if (static_cast<int>(read.size()) >= k) out.reserve(read.size() - k + 1);
  for_each_kmer(read, k, [&](const KmerOccurrence& occ) { out.push_back(occ); });
  return out;
}

std::size_t prefix_partition(const Kmer& kmer, std::size_t num_buckets) {
  if (num_buckets <= 1) return 0;
  int nbases = std::min(8, kmer.k());
  std::uint64_t p = kmer.prefix(2 * nbases);
  std::uint64_t h = p * 0x9E3779B97F4A7C15ull;
  return static_cast<std::size_t>((static_cast<unsigned __int128>(h) * num_buckets) >> 64);
}

}  // namespace dipasm
