#include "dipasm/mer_aligner.hpp"

#include <absl/strings/str_split.h>

#include <algorithm>
#include <istream>
#include <ostream>
#include <string>
#include <thread>
#include <tuple>

namespace dipasm {

SeedIndex::SeedIndex(std::vector<std::string> seqs, int k) : k_(check_k(k)), seqs_(std::move(seqs)) {
  for (std::uint32_t s = 0; s < seqs_.size(); ++s) {
    for_each_canonical<2>(seqs_[s], k, [&](const Kmer& km, bool flipped, int pos) {
      auto [it, inserted] = index_.try_emplace(km, SeedLocation{s, static_cast<std::uint32_t>(pos), flipped});
      if (!inserted) throw DuplicateKmerError(km.to_string(), it->second.seq, s);
    });
  }
}

std::optional<SeedLocation> SeedIndex::lookup(const Kmer& canonical) const {
  auto it = index_.find(canonical);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const char* align_class_name(AlignClass c) {
  switch (c) {
    case AlignClass::Full: return "full";
    case AlignClass::EndExtended: return "end-extended";
    case AlignClass::InnerScan: return "inner-scan";
  }
  return "?";
}

int extend_exact(std::string_view read, std::string_view seq) {
  const std::size_t n = std::min(read.size(), seq.size());
  std::size_t i = 0;
  while (i < n && read[i] == seq[i] && read[i] != 'N') ++i;
  return static_cast<int>(i);
}

EndExtension extend_tolerant(std::string_view read, std::string_view seq) {
  const int lr = static_cast<int>(read.size()), ls = static_cast<int>(seq.size());
  const int j = extend_exact(read, seq);
  if (j == lr || j == ls) return {j, j, 0, 0, true};
  struct Option {
    int dr, ds;
    bool indel;
  };
  // Mismatch, then extra read base, then missing read base.
  for (Option o : {Option{1, 1, false}, Option{1, 0, true}, Option{0, 1, true}}) {
    int r = j + o.dr, s = j + o.ds;
    if (r > lr || s > ls) continue;
    int e = extend_exact(read.substr(r), seq.substr(s));
    if (r + e == lr || s + e == ls) return {r + e, s + e, o.indel ? 0 : 1, o.indel ? 1 : 0, true};
  }
  return {j, j, 0, 0, false};
}

namespace {

struct Seed {
  int pos;  // window start on the read as given
  SeedLocation loc;
  bool reversed;  // read maps to the reverse strand
};

struct Oriented {
  const std::string* read;  // read or its reverse complement
  const std::string* seq;
  int L;
};

std::string reversed_copy(std::string_view s) { return std::string(s.rbegin(), s.rend()); }

// Extends an oriented seed [p, p+k) ~ [o, o+k) toward the low and high ends.
struct Span {
  int r0, r1, s0, s1, mm, indels;
  bool complete;
};

Span extend_seed(const Oriented& ctx, int p, int o, int k, bool tol_low, bool tol_high) {
  const std::string& R = *ctx.read;
  const std::string& S = *ctx.seq;
  Span sp{p, p + k, o, o + k, 0, 0, true};
  std::string rl = reversed_copy(std::string_view(R).substr(0, p));
  std::string sl = reversed_copy(std::string_view(S).substr(0, o));
  if (tol_low) {
    auto e = extend_tolerant(rl, sl);
    sp.r0 -= e.read_used;
    sp.s0 -= e.seq_used;
    sp.mm += e.mismatches;
    sp.indels += e.indels;
    sp.complete &= e.complete;
  } else {
    int e = extend_exact(rl, sl);
    sp.r0 -= e;
    sp.s0 -= e;
  }
  std::string_view rh = std::string_view(R).substr(p + k), sh = std::string_view(S).substr(o + k);
  if (tol_high) {
    auto e = extend_tolerant(rh, sh);
    sp.r1 += e.read_used;
    sp.s1 += e.seq_used;
    sp.mm += e.mismatches;
    sp.indels += e.indels;
    sp.complete &= e.complete;
  } else {
    int e = extend_exact(rh, sh);
    sp.r1 += e;
    sp.s1 += e;
  }
  return sp;
}

ReadAlignment to_alignment(const QualSeq& read, std::uint32_t read_index, const Seed& seed, const Span& sp, int L,
                           AlignClass cls) {
  ReadAlignment a;
  a.read_id = read.id;
  a.pair_slot = read.pair_slot;
  a.read_index = read_index;
  a.read_len = L;
  a.seq = seed.loc.seq;
  a.reversed = seed.reversed;
  a.rstart = seed.reversed ? L - sp.r1 : sp.r0;
  a.rend = seed.reversed ? L - sp.r0 : sp.r1;
  a.sstart = sp.s0;
  a.send = sp.s1;
  a.mismatches = sp.mm;
  a.indels = sp.indels;
  a.cls = cls;
  return a;
}

}  // namespace

std::vector<ReadAlignment> align_read(const QualSeq& read, const SeedIndex& index, std::uint32_t read_index) {
  const int k = index.k();
  const int L = static_cast<int>(read.bases.size());
  std::vector<Seed> seeds;
  for_each_canonical<2>(read.bases, k, [&](const Kmer& km, bool flipped, int pos) {
    if (auto loc = index.lookup(km)) seeds.push_back({pos, *loc, flipped != loc->flipped});
  });
  if (seeds.empty()) return {};

  const std::string rc = reverse_complement(read.bases);
  auto ctx_for = [&](const Seed& s) { return Oriented{s.reversed ? &rc : &read.bases, &index.seqs()[s.loc.seq], L}; };
  auto opos = [&](const Seed& s) { return s.reversed ? L - k - s.pos : s.pos; };
  auto diag = [&](const Seed& s) { return static_cast<long>(s.loc.offset) - opos(s); };
  auto same_place = [&](const Seed& a, const Seed& b) {
    return a.loc.seq == b.loc.seq && a.reversed == b.reversed && diag(a) == diag(b);
  };

  const Seed& left = seeds.front();
  const Seed& right = seeds.back();
  std::vector<ReadAlignment> out;

  if (same_place(left, right)) {
    Oriented ctx = ctx_for(left);
    const Seed& lo = opos(left) <= opos(right) ? left : right;
    const Seed& hi = opos(left) <= opos(right) ? right : left;
    Span a = extend_seed(ctx, opos(lo), static_cast<int>(lo.loc.offset), k, true, false);
    Span b = extend_seed(ctx, opos(hi), static_cast<int>(hi.loc.offset), k, false, true);
    // Join along the shared diagonal, counting any interior differences.
    int mid_mm = 0;
    for (int x = opos(lo); x < opos(hi) + k; ++x) {
      int s = x + static_cast<int>(diag(lo));
      mid_mm += (*ctx.read)[x] != (*ctx.seq)[s];
    }
    Span joined{a.r0, b.r1, a.s0, b.s1, a.mm + b.mm + mid_mm, a.indels + b.indels, a.complete && b.complete};
    out.push_back(to_alignment(read, read_index, left, joined, L, joined.complete ? AlignClass::Full : AlignClass::EndExtended));
    return out;
  }

  // Separate placements: tolerant toward the read end each seed faces,
  // exact inward.
  auto seed_alignment = [&](const Seed& s, bool outward_is_left, AlignClass cls) {
    bool low_is_outward = outward_is_left != s.reversed;
    Span sp = extend_seed(ctx_for(s), opos(s), static_cast<int>(s.loc.offset), k, low_is_outward, !low_is_outward);
    return to_alignment(read, read_index, s, sp, L, cls);
  };
  ReadAlignment la = seed_alignment(left, true, AlignClass::EndExtended);
  ReadAlignment ra = seed_alignment(right, false, AlignClass::EndExtended);
  out.push_back(la);

  // Remaining seeds strictly between the two end alignments, exact only.
  std::optional<ReadAlignment> last;
  std::optional<Seed> last_seed;
  for (const auto& s : seeds) {
    if (s.pos < la.rend || s.pos + k > ra.rstart) continue;
    if (last && same_place(*last_seed, s) && s.pos + k <= last->rend) continue;
    Span sp = extend_seed(ctx_for(s), opos(s), static_cast<int>(s.loc.offset), k, false, false);
    last = to_alignment(read, read_index, s, sp, L, AlignClass::InnerScan);
    last_seed = s;
    out.push_back(*last);
  }
  out.push_back(ra);
  return out;
}

std::vector<ReadAlignment> align_reads(std::span<const QualSeq> reads, const SeedIndex& index, unsigned threads) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(1, reads.size()))));
  std::vector<std::vector<ReadAlignment>> parts(threads);
  auto work = [&](unsigned t) {
    std::size_t lo = reads.size() * t / threads, hi = reads.size() * (t + 1) / threads;
    for (std::size_t i = lo; i < hi; ++i) {
      auto a = align_read(reads[i], index, static_cast<std::uint32_t>(i));
      parts[t].insert(parts[t].end(), std::make_move_iterator(a.begin()), std::make_move_iterator(a.end()));
    }
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t);
  }
  std::vector<ReadAlignment> out;
  for (auto& p : parts) out.insert(out.end(), std::make_move_iterator(p.begin()), std::make_move_iterator(p.end()));
  return out;
}

ReadAlignment project_alignment(const ReadAlignment& aln, const PlacementMap& layout) {
  auto it = layout.find(aln.seq);
  if (it == layout.end()) throw PlacementError("sequence " + std::to_string(aln.seq) + " is not in the layout");
  const ContigPlacement& p = it->second;
  ReadAlignment out = aln;
  out.seq = p.scaffold;
  if (!p.reversed) {
    out.sstart = static_cast<int>(p.offset + aln.sstart);
    out.send = static_cast<int>(p.offset + aln.send);
  } else {
    out.sstart = static_cast<int>(p.offset + p.length - aln.send);
    out.send = static_cast<int>(p.offset + p.length - aln.sstart);
    out.reversed = !aln.reversed;
  }
  return out;
}

ReadAlignment unproject_alignment(const ReadAlignment& aln, std::uint32_t seq, const ContigPlacement& p) {
  ReadAlignment out = aln;
  out.seq = seq;
  if (!p.reversed) {
    out.sstart = static_cast<int>(aln.sstart - p.offset);
    out.send = static_cast<int>(aln.send - p.offset);
  } else {
    out.sstart = static_cast<int>(p.offset + p.length - aln.send);
    out.send = static_cast<int>(p.offset + p.length - aln.sstart);
    out.reversed = !aln.reversed;
  }
  return out;
}

void write_alignments(std::ostream& out, std::span<const ReadAlignment> alns, const std::vector<std::string>& names) {
  out << "#read\tslot\tread_start\tread_end\tseq\tseq_start\tseq_end\tstrand\tmismatches\tindels\tclass\tread_len\tread_index\n";
  for (const auto& a : alns) {
    out << a.read_id << '\t' << int(a.pair_slot) << '\t' << a.rstart << '\t' << a.rend << '\t' << names.at(a.seq) << '\t'
        << a.sstart << '\t' << a.send << '\t' << (a.reversed ? '-' : '+') << '\t' << a.mismatches << '\t' << a.indels
        << '\t' << align_class_name(a.cls) << '\t' << a.read_len << '\t' << a.read_index << '\n';
  }
}

std::vector<ReadAlignment> read_alignments(std::istream& in, const absl::flat_hash_map<std::string, std::uint32_t>& ids) {
  std::vector<ReadAlignment> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> f = absl::StrSplit(line, '\t');
    if (f.size() < 13) throw std::runtime_error("malformed alignment line: " + line);
    ReadAlignment a;
    a.read_id = f[0];
    a.pair_slot = static_cast<std::uint8_t>(std::stoi(f[1]));
    a.rstart = std::stoi(f[2]);
    a.rend = std::stoi(f[3]);
    auto it = ids.find(f[4]);
    if (it == ids.end()) throw std::runtime_error("unknown sequence in alignment file: " + f[4]);
    a.seq = it->second;
    a.sstart = std::stoi(f[5]);
    a.send = std::stoi(f[6]);
    a.reversed = f[7] == "-";
    a.mismatches = std::stoi(f[8]);
    a.indels = std::stoi(f[9]);
    a.cls = f[10] == "full" ? AlignClass::Full : f[10] == "end-extended" ? AlignClass::EndExtended : AlignClass::InnerScan;
    a.read_len = std::stoi(f[11]);
    a.read_index = static_cast<std::uint32_t>(std::stoul(f[12]));
    out.push_back(std::move(a));
  }
  return out;
}

}  // namespace dipasm
