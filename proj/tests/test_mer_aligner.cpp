#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "align_oracle.hpp"
#include "dipasm/mer_aligner.hpp"
#include "dipasm/simkit.hpp"

using namespace dipasm;

namespace {

std::string random_seq(std::mt19937_64& rng, std::size_t n) {
  std::string s(n, 'A');
  for (auto& c : s) c = kBases[rng() & 3];
  return s;
}

QualSeq make_read(std::string bases, std::string id = "q") {
  QualSeq r;
  r.id = std::move(id);
  r.quals.assign(bases.size(), 30);
  r.bases = std::move(bases);
  return r;
}

char other(char c) { return c == 'A' ? 'C' : 'A'; }

}  // namespace

TEST(ExtendTolerant, Cases) {
  auto e = extend_tolerant("ACGTACGT", "ACGTACGT");
  EXPECT_TRUE(e.complete);
  EXPECT_EQ(e.read_used, 8);
  EXPECT_EQ(e.mismatches + e.indels, 0);

  e = extend_tolerant("ACGTTCGT", "ACGTACGT");
  EXPECT_TRUE(e.complete);
  EXPECT_EQ(e.read_used, 8);
  EXPECT_EQ(e.mismatches, 1);

  // Extra read base.
  e = extend_tolerant("ACGTGACGT", "ACGTACGTCC");
  EXPECT_TRUE(e.complete);
  EXPECT_EQ(e.read_used, 9);
  EXPECT_EQ(e.seq_used, 8);
  EXPECT_EQ(e.indels, 1);

  // Missing read base.
  e = extend_tolerant("ACGTCGT", "ACGTACGTCC");
  EXPECT_TRUE(e.complete);
  EXPECT_EQ(e.read_used, 7);
  EXPECT_EQ(e.seq_used, 8);
  EXPECT_EQ(e.indels, 1);

  // Two differences: fall back to the exact run.
  e = extend_tolerant("ACGTTCGTTT", "ACGTACGTAA");
  EXPECT_FALSE(e.complete);
  EXPECT_EQ(e.read_used, 4);
  EXPECT_EQ(e.seq_used, 4);
  EXPECT_EQ(e.mismatches + e.indels, 0);

  // Read overhangs the sequence end: clipped, still complete.
  e = extend_tolerant("ACGTACGTAAAA", "ACGTAC");
  EXPECT_TRUE(e.complete);
  EXPECT_EQ(e.read_used, 6);

  // Last base differs: a mismatch beats an indel.
  e = extend_tolerant("ACGTA", "ACGTC");
  EXPECT_EQ(e.mismatches, 1);
  EXPECT_EQ(e.indels, 0);
}

TEST(ExtendTolerant, MatchesDynamicProgramming) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 20000; ++t) {
    std::string s = random_seq(rng, 1 + rng() % 30);
    std::string r = s.substr(0, 1 + rng() % s.size()) + random_seq(rng, rng() % 4);
    int edits = rng() % 3;
    for (int e = 0; e < edits && !r.empty(); ++e) {
      std::size_t p = rng() % r.size();
      switch (rng() % 3) {
        case 0: r[p] = other(r[p]); break;
        case 1: r.insert(r.begin() + p, kBases[rng() & 3]); break;
        default: r.erase(r.begin() + p);
      }
    }
    if (t % 7 == 0) s = random_seq(rng, 1 + rng() % 8);  // short, low-identity pairs too
    auto got = extend_tolerant(r, s);
    auto want = oracle::dp_flank(r, s);
    ASSERT_EQ(got.complete, want.complete) << r << " " << s;
    ASSERT_EQ(got.read_used, want.read_used) << r << " " << s;
    ASSERT_EQ(got.seq_used, want.seq_used) << r << " " << s;
    ASSERT_EQ(got.mismatches, want.mm) << r << " " << s;
    ASSERT_EQ(got.indels, want.indels) << r << " " << s;
  }
}

TEST(SeedIndex, RejectsRepeatedKmers) {
  std::mt19937_64 rng(1);
  std::string a = random_seq(rng, 200), b = random_seq(rng, 200);
  EXPECT_NO_THROW(SeedIndex({a, b}, 21));
  std::string c = b + reverse_complement(a.substr(50, 21));
  try {
    SeedIndex idx({a, c}, 21);
    FAIL() << "expected a duplicate";
  } catch (const DuplicateKmerError& e) {
    EXPECT_EQ(e.first_seq, 0u);
    EXPECT_EQ(e.second_seq, 1u);
  }
  EXPECT_THROW(SeedIndex({a + a.substr(0, 30)}, 21), DuplicateKmerError);
}

TEST(AlignRead, ExactForwardAndReverse) {
  std::mt19937_64 rng(2);
  std::string s = random_seq(rng, 500);
  SeedIndex idx({s}, 21);
  auto fwd = align_read(make_read(s.substr(100, 100)), idx);
  ASSERT_EQ(fwd.size(), 1u);
  EXPECT_EQ(fwd[0].cls, AlignClass::Full);
  EXPECT_EQ(fwd[0].sstart, 100);
  EXPECT_EQ(fwd[0].send, 200);
  EXPECT_EQ(fwd[0].rstart, 0);
  EXPECT_EQ(fwd[0].rend, 100);
  EXPECT_FALSE(fwd[0].reversed);

  auto rev = align_read(make_read(reverse_complement(s.substr(100, 100))), idx);
  ASSERT_EQ(rev.size(), 1u);
  EXPECT_TRUE(rev[0].reversed);
  EXPECT_EQ(rev[0].sstart, 100);
  EXPECT_EQ(rev[0].send, 200);
  EXPECT_EQ(rev[0].rstart, 0);
  EXPECT_EQ(rev[0].rend, 100);
}

TEST(AlignRead, ErrorsInMiddleAndNearEnds) {
  std::mt19937_64 rng(3);
  std::string s = random_seq(rng, 500);
  SeedIndex idx({s}, 21);
  std::string r = s.substr(100, 100);
  r[50] = other(r[50]);
  auto a = align_read(make_read(r), idx);
  ASSERT_EQ(a.size(), 1u);
  EXPECT_EQ(a[0].cls, AlignClass::Full);
  EXPECT_EQ(a[0].mismatches, 1);

  r = s.substr(100, 100);
  r[3] = other(r[3]);
  r.erase(r.begin() + 95);
  a = align_read(make_read(r), idx);
  ASSERT_EQ(a.size(), 1u);
  EXPECT_EQ(a[0].cls, AlignClass::Full);
  EXPECT_EQ(a[0].mismatches, 1);
  EXPECT_EQ(a[0].indels, 1);
  EXPECT_EQ(a[0].rstart, 0);
  EXPECT_EQ(a[0].rend, 99);
  EXPECT_EQ(a[0].sstart, 100);
  EXPECT_EQ(a[0].send, 200);

  // Two close errors near an end leave an unaligned overhang.
  r = s.substr(100, 100);
  r[2] = other(r[2]);
  r[5] = other(r[5]);
  a = align_read(make_read(r), idx);
  ASSERT_EQ(a.size(), 1u);
  EXPECT_EQ(a[0].cls, AlignClass::EndExtended);
  EXPECT_EQ(a[0].rstart, 6);
}

TEST(AlignRead, SpanningReadsSplitPerSequence) {
  std::mt19937_64 rng(4);
  std::string g = random_seq(rng, 1000);
  // Three pieces; the middle one stored reverse-complemented.
  std::vector<std::string> seqs{g.substr(0, 400), reverse_complement(g.substr(400, 40)), g.substr(440)};
  SeedIndex idx(seqs, 21);
  auto a = align_read(make_read(g.substr(350, 150)), idx);
  ASSERT_EQ(a.size(), 3u);
  EXPECT_EQ(a[0].seq, 0u);
  EXPECT_EQ(a[0].cls, AlignClass::EndExtended);
  EXPECT_EQ(a[0].rstart, 0);
  EXPECT_EQ(a[0].rend, 50);
  EXPECT_EQ(a[1].seq, 1u);
  EXPECT_EQ(a[1].cls, AlignClass::InnerScan);
  EXPECT_TRUE(a[1].reversed);
  EXPECT_EQ(a[1].rstart, 50);
  EXPECT_EQ(a[1].rend, 90);
  EXPECT_EQ(a[1].sstart, 0);
  EXPECT_EQ(a[1].send, 40);
  EXPECT_EQ(a[2].seq, 2u);
  EXPECT_EQ(a[2].rstart, 90);
  EXPECT_EQ(a[2].rend, 150);
  EXPECT_EQ(a[2].sstart, 0);
  EXPECT_EQ(a[2].send, 60);
}

TEST(AlignRead, ReverseComplementReadMirrorsCoordinates) {
  std::mt19937_64 rng(6);
  std::string g = random_seq(rng, 3000);
  std::vector<std::string> seqs{g.substr(0, 1000), g.substr(1000, 1000), g.substr(2000)};
  SeedIndex idx(seqs, 21);
  for (int t = 0; t < 300; ++t) {
    std::string r = g.substr(rng() % 2900, 100);
    if (rng() & 1) r[rng() % 100] = other(r[rng() % 100]);
    auto f = align_read(make_read(r), idx);
    auto b = align_read(make_read(reverse_complement(r)), idx);
    ASSERT_EQ(f.size(), b.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
      const auto& x = f[i];
      const auto& y = b[b.size() - 1 - i];
      EXPECT_EQ(x.seq, y.seq);
      EXPECT_EQ(x.reversed, !y.reversed);
      EXPECT_EQ(x.sstart, y.sstart);
      EXPECT_EQ(x.send, y.send);
      EXPECT_EQ(x.rstart, 100 - y.rend);
    }
  }
}

TEST(AlignReads, SimulationMatchesOracleAndThreadCount) {
  const int k = 31;
  auto g = sim::generate_genome({.length = 10000, .seed = 81});
  const std::string& chr = g.chromosomes[0].seq;
  // Long pieces alternate with short ones a read can span, every other
  // piece stored reverse-complemented.
  std::vector<std::string> seqs;
  for (std::size_t p = 0, i = 0; p < chr.size(); ++i) {
    std::size_t len = std::min(chr.size() - p, i % 2 ? std::size_t{36} : std::size_t{500});
    std::string piece = chr.substr(p, len);
    seqs.push_back(i % 4 == 1 || i % 4 == 2 ? reverse_complement(piece) : piece);
    p += len;
  }
  SeedIndex idx(seqs, k);
  sim::ReadSpec rs;
  rs.coverage = 20;
  rs.error_rate = 0.01;
  rs.seed = 82;
  auto reads = sim::simulate_reads({g.chromosomes}, rs).reads;
  std::mt19937_64 rng(83);
  for (auto& r : reads) {
    if (rng() % 5 != 0) continue;
    std::size_t p = rng() % r.bases.size();
    if (rng() & 1) {
      r.bases.insert(r.bases.begin() + p, kBases[rng() & 3]);
      r.quals.insert(r.quals.begin() + p, 30);
    } else {
      r.bases.erase(r.bases.begin() + p);
      r.quals.erase(r.quals.begin() + p);
    }
  }
  auto got = align_reads(reads, idx, 1);
  std::vector<ReadAlignment> want;
  for (std::uint32_t i = 0; i < reads.size(); ++i) {
    auto a = oracle::align(reads[i], seqs, k, i);
    want.insert(want.end(), a.begin(), a.end());
  }
  ASSERT_EQ(got.size(), want.size());
  std::size_t classes[3] = {0, 0, 0};
  for (std::size_t i = 0; i < got.size(); ++i) {
    ASSERT_EQ(got[i], want[i]) << "alignment " << i << " of read " << got[i].read_id;
    ++classes[static_cast<int>(got[i].cls)];
  }
  EXPECT_GT(classes[0], 0u);
  EXPECT_GT(classes[1], 0u);
  EXPECT_GT(classes[2], 0u);
  EXPECT_EQ(align_reads(reads, idx, 4), got);
}

TEST(Projection, RoundTripsBothOrientations) {
  ReadAlignment a;
  a.seq = 7;
  a.sstart = 10;
  a.send = 60;
  PlacementMap layout;
  layout[7] = {.scaffold = 2, .offset = 1000, .reversed = true, .length = 200};
  auto p = project_alignment(a, layout);
  EXPECT_EQ(p.seq, 2u);
  EXPECT_EQ(p.sstart, 1140);
  EXPECT_EQ(p.send, 1190);
  EXPECT_TRUE(p.reversed);
  EXPECT_EQ(unproject_alignment(p, 7, layout[7]), a);
  layout[7].reversed = false;
  p = project_alignment(a, layout);
  EXPECT_EQ(p.sstart, 1010);
  EXPECT_FALSE(p.reversed);
  EXPECT_EQ(unproject_alignment(p, 7, layout[7]), a);
  a.seq = 8;
  EXPECT_THROW(project_alignment(a, layout), PlacementError);
}

TEST(AlignmentFile, RoundTrip) {
  std::mt19937_64 rng(9);
  std::string s = random_seq(rng, 400);
  SeedIndex idx({s, random_seq(rng, 300)}, 21);
  std::vector<QualSeq> reads;
  for (int i = 0; i < 20; ++i) {
    auto r = make_read(s.substr(rng() % 300, 100), "read" + std::to_string(i));
    r.pair_slot = 1 + (i & 1);
    reads.push_back(r);
  }
  auto alns = align_reads(reads, idx);
  std::ostringstream out;
  write_alignments(out, alns, {"contig_a", "contig_b"});
  std::istringstream in(out.str());
  EXPECT_EQ(read_alignments(in, {{"contig_a", 0}, {"contig_b", 1}}), alns);
}
