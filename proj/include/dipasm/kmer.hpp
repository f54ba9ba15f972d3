#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dipasm {

// 2-bit nucleotide codes. Lexicographic order of packed words equals string
// order under this mapping.
inline constexpr char kBases[4] = {'A', 'C', 'G', 'T'};

inline constexpr std::array<std::int8_t, 256> kBaseCode = [] {
  std::array<std::int8_t, 256> t{};
  for (auto& v : t) v = -1;
  t['A'] = 0; t['C'] = 1; t['G'] = 2; t['T'] = 3;
  t['a'] = 0; t['c'] = 1; t['g'] = 2; t['t'] = 3;
  return t;
}();

inline int base_code(char c) { return kBaseCode[static_cast<unsigned char>(c)]; }
inline char complement(char c) {
  switch (c) {
    case 'A': return 'T';
    case 'C': return 'G';
    case 'G': return 'C';
    case 'T': return 'A';
    case 'a': return 't';
    case 'c': return 'g';
    case 'g': return 'c';
    case 't': return 'a';
    default: return 'N';
  }
}
std::string reverse_complement(std::string_view seq);
// Canonical form of a plain string: min(seq, revcomp(seq)).
std::string canonical_string(std::string_view seq);

class KmerError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Fixed-length nucleotide word packed two bits per base into `Words`
/// 64-bit limbs. The first base occupies the most significant bits, so the
/// defaulted ordering is lexicographic for words of equal length.
template <std::size_t Words>
class BasicKmer {
 public:
  static constexpr int kMaxK = static_cast<int>(Words * 32) - 1;

  BasicKmer() = default;
  explicit BasicKmer(int k) : k_(static_cast<std::uint8_t>(k)) {}

  static BasicKmer from_string(std::string_view s) {
    if (s.size() > static_cast<std::size_t>(kMaxK)) throw KmerError("k-mer too long: " + std::to_string(s.size()));
    BasicKmer out(static_cast<int>(s.size()));
    for (char c : s) {
      int b = base_code(c);
      if (b < 0) throw KmerError("k-mer contains non-ACGT base: " + std::string(s));
      out.push_back(b);
    }
    return out;
  }

  int k() const { return k_; }

  int base(int i) const {
    int shift = 2 * (k_ - 1 - i);
    return static_cast<int>((w_[Words - 1 - shift / 64] >> (shift % 64)) & 3u);
  }

  std::string to_string() const {
    std::string s(k_, 'A');
    for (int i = 0; i < k_; ++i) s[i] = kBases[base(i)];
    return s;
  }

  // Drop the first base, append `b` at the end.
  void push_back(int b) {
    for (std::size_t i = 0; i + 1 < Words; ++i) w_[i] = (w_[i] << 2) | (w_[i + 1] >> 62);
    w_[Words - 1] = (w_[Words - 1] << 2) | static_cast<std::uint64_t>(b);
    mask();
  }

  // Drop the last base, prepend `b` at the front.
  void push_front(int b) {
    for (std::size_t i = Words - 1; i > 0; --i) w_[i] = (w_[i] >> 2) | (w_[i - 1] << 62);
    w_[0] >>= 2;
    int shift = 2 * (k_ - 1);
    w_[Words - 1 - shift / 64] |= static_cast<std::uint64_t>(b) << (shift % 64);
  }

  BasicKmer reverse_complement() const {
    BasicKmer out(k_);
    for (std::size_t i = 0; i < Words; ++i) out.w_[Words - 1 - i] = revcomp_word(w_[i]);
    // The reversed word holds the k bases in its top 2k bits.
    out.shift_right(static_cast<int>(Words * 64) - 2 * k_);
    return out;
  }

  /// min(this, revcomp(this)); `flipped` reports whether the complement won.
  BasicKmer canonical(bool* flipped = nullptr) const {
    BasicKmer rc = reverse_complement();
    bool f = rc < *this;
    if (flipped) *flipped = f;
    return f ? rc : *this;
  }

  // Leading `bits` bits of the sequence (bits <= 2k, bits <= 64).
  std::uint64_t prefix(int bits) const {
    std::uint64_t out = 0;
    int nbases = bits / 2;
    for (int i = 0; i < nbases; ++i) out = (out << 2) | static_cast<std::uint64_t>(base(i));
    return out;
  }

  const std::array<std::uint64_t, Words>& words() const { return w_; }
  std::array<std::uint64_t, Words>& words() { return w_; }

  auto operator<=>(const BasicKmer&) const = default;
  bool operator==(const BasicKmer&) const = default;

  template <typename H>
  friend H AbslHashValue(H h, const BasicKmer& km) {
    return H::combine(std::move(h), km.w_, km.k_);
  }

  std::uint64_t hash() const {
    std::uint64_t h = 0x9E3779B97F4A7C15ull ^ k_;
    for (auto w : w_) {
      h ^= w + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
      h *= 0xBF58476D1CE4E5B9ull;
      h ^= h >> 31;
    }
    return h;
  }

 private:
  static std::uint64_t revcomp_word(std::uint64_t x) {
    x = ~x;
    x = ((x >> 2) & 0x3333333333333333ull) | ((x & 0x3333333333333333ull) << 2);
    x = ((x >> 4) & 0x0F0F0F0F0F0F0F0Full) | ((x & 0x0F0F0F0F0F0F0F0Full) << 4);
    x = ((x >> 8) & 0x00FF00FF00FF00FFull) | ((x & 0x00FF00FF00FF00FFull) << 8);
    x = ((x >> 16) & 0x0000FFFF0000FFFFull) | ((x & 0x0000FFFF0000FFFFull) << 16);
    x = (x >> 32) | (x << 32);
    return x;
  }

  void shift_right(int s) {
    while (s >= 64) {
      for (std::size_t i = Words - 1; i > 0; --i) w_[i] = w_[i - 1];
      w_[0] = 0;
      s -= 64;
    }
    if (s == 0) return;
    for (std::size_t i = Words - 1; i > 0; --i) w_[i] = (w_[i] >> s) | (w_[i - 1] << (64 - s));
    w_[0] >>= s;
  }

  void mask() {
    int bits = 2 * k_;
    for (std::size_t i = 0; i < Words; ++i) {
      int lo = static_cast<int>((Words - 1 - i) * 64);  // bit index of this limb's LSB
      if (bits <= lo) {
        w_[i] = 0;
      } else if (bits < lo + 64) {
        w_[i] &= (std::uint64_t{1} << (bits - lo)) - 1;
      }
    }
  }

  std::array<std::uint64_t, Words> w_{};
  std::uint8_t k_ = 0;
};

/// Assembly k-mers: k <= 63.
using Kmer = BasicKmer<2>;
/// Evaluation markers: m <= 127.
using Marker = BasicKmer<4>;

struct KmerHash {
  template <std::size_t W>
  std::size_t operator()(const BasicKmer<W>& k) const { return k.hash(); }
};

/// Validates k for assembly use (odd, 1..63) and returns it; throws otherwise.
int check_k(int k);

/// Canonicalize a k-length word. Rejects even k and words containing N.
Kmer canonicalize(std::string_view seq, bool* flipped = nullptr);

struct QualSeq {
  std::string id;
  std::string bases;
  std::vector<std::uint8_t> quals;  // phred scores
  std::uint8_t pair_slot = 0;       // 0 unpaired, 1 or 2

  std::size_t size() const { return bases.size(); }
  QualSeq reverse_complement() const;
};

struct Extension {
  std::uint8_t base;  // 2-bit code
  std::uint8_t qual;
  bool operator==(const Extension&) const = default;
};

struct KmerOccurrence {
  Kmer kmer;  // canonical
  bool flipped = false;
  int pos = 0;  // window start in the read
  std::optional<Extension> left;   // canonical orientation
  std::optional<Extension> right;  // canonical orientation
};

/// Calls f(kmer_fwd, pos) for each N-free window of `seq`, rolling the packed word.
template <std::size_t W, typename F>
void for_each_window(std::string_view seq, int k, F&& f) {
  if (k <= 0 || static_cast<int>(seq.size()) < k) return;
  BasicKmer<W> fwd(k);
  int valid = 0;
  for (int i = 0; i < static_cast<int>(seq.size()); ++i) {
    int b = base_code(seq[i]);
    if (b < 0) {
      valid = 0;
      continue;
    }
    fwd.push_back(b);
    if (++valid >= k) f(fwd, i - k + 1);
  }
}

/// Calls f(canonical, flipped, pos) for each N-free window.
template <std::size_t W, typename F>
void for_each_canonical(std::string_view seq, int k, F&& f) {
  if (k <= 0 || static_cast<int>(seq.size()) < k) return;
  BasicKmer<W> fwd(k), rc(k);
  int valid = 0;
  for (int i = 0; i < static_cast<int>(seq.size()); ++i) {
    int b = base_code(seq[i]);
    if (b < 0) {
      valid = 0;
      continue;
    }
    fwd.push_back(b);
    rc.push_front(3 - b);
    if (++valid >= k) {
      bool flipped = rc < fwd;
      f(flipped ? rc : fwd, flipped, i - k + 1);
    }
  }
}

/// Visits every k-mer occurrence of a read with its flanking bases in
/// canonical orientation. Windows overlapping N are skipped.
template <typename F>
void for_each_kmer(const QualSeq& read, int k, F&& f) {
  const int n = static_cast<int>(read.bases.size());
  for_each_canonical<2>(read.bases, k, [&](const Kmer& km, bool flipped, int pos) {
    KmerOccurrence occ;
    occ.kmer = km;
    occ.flipped = flipped;
    occ.pos = pos;
    std::optional<Extension> before, after;
    if (pos > 0) {
      int b = base_code(read.bases[pos - 1]);
      if (b >= 0) before = Extension{static_cast<std::uint8_t>(b), read.quals[pos - 1]};
    }
    if (pos + k < n) {
      int b = base_code(read.bases[pos + k]);
      if (b >= 0) after = Extension{static_cast<std::uint8_t>(b), read.quals[pos + k]};
    }
    if (flipped) {
      if (after) occ.left = Extension{static_cast<std::uint8_t>(3 - after->base), after->qual};
      if (before) occ.right = Extension{static_cast<std::uint8_t>(3 - before->base), before->qual};
    } else {
      occ.left = before;
      occ.right = after;
    }
    f(occ);
  });
}

std::vector<KmerOccurrence> enumerate_kmers(const QualSeq& read, int k);

/// Bucket for load-balanced partitioned counting. Uses the leading (up to
/// eight) bases of the canonical word, scattered by Fibonacci hashing so a
/// zero prefix always lands in bucket 0.
std::size_t prefix_partition(const Kmer& kmer, std::size_t num_buckets);

}  // namespace dipasm
